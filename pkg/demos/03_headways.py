# %% [markdown]
# # How close can AVs follow?
#
# With every vehicle automated, the AV headway alone sets road capacity.
# Here we try 0.5, 0.75 and 1.0 s on the benchmark grid.

# %%
from avlane import Scenario, SweepConfig, grid_benchmark, run_sweep

net, od, acfg = grid_benchmark()
cfg = SweepConfig(network=net, od=od, agents=10_000, seed=0, assignment=acfg,
                  av_percents=(0.0, 100.0), headways=(0.5, 0.75, 1.0),
                  scenarios=(Scenario.NO_AV_LANE,))
rep = run_sweep(cfg)

# %%
base = rep.cell(Scenario.NO_AV_LANE, 0.0, 1.0).metrics.avg_time_all
for h in cfg.headways:
    t = rep.cell(Scenario.NO_AV_LANE, 100.0, h).metrics.avg_time_all
    print(f"h_av={h:.2f} s: {t:6.1f} s per trip, {1 - t / base:.1%} faster than all-CV traffic")

# %% [markdown]
# Shorter headways keep helping, but the gains flatten as the network
# approaches free flow.
