# %% [markdown]
# # Sweeping AV penetration on a grid
#
# An 8x8 street grid with a four-lane highway through the middle row. We
# compare the grid as it is with a version where every highway link gives
# up one lane to AVs, for AV shares from 0 to 100 %.
#
# Takes about 20 seconds.

# %%
import numpy as np

from avlane import RoadClass, Scenario, SweepConfig, grid_benchmark, run_sweep

net, od, acfg = grid_benchmark()
cfg = SweepConfig(network=net, od=od, agents=10_000, seed=0, assignment=acfg)
rep = run_sweep(cfg)

W, N = Scenario.WITH_AV_LANE, Scenario.NO_AV_LANE
pct = np.array(cfg.av_percents)

# %% [markdown]
# Average travel time. Reserving a lane hurts at low shares, when the lane
# sits mostly empty, and the two curves merge as AVs take over.

# %%
w, b = rep.series(W, "avg_time_all"), rep.series(N, "avg_time_all")
for p, x, y in zip(pct, w, b):
    print(f"{p:5.0f}%  with lane {x:6.1f} s   without {y:6.1f} s   {x / y - 1:+6.2%}")

# %% [markdown]
# Where the demand goes. A negative highway delta means fewer trips use the
# highway when it has an AV lane; those trips move to the major roads.

# %%
for p in pct:
    d = rep.demand_deltas[(float(p), 1.0)]
    print(f"{p:5.0f}%  highway {d[RoadClass.HIGHWAY]:+.3f}  major {d[RoadClass.MAJOR]:+.3f}  "
          f"other {d[RoadClass.OTHER]:+.3f}")

# %% [markdown]
# Fuel falls steadily with more AVs under either policy.

# %%
print(np.round(rep.series(W, "fuel_total_all") / 1000, 3), "kL with lane")
print(np.round(rep.series(N, "fuel_total_all") / 1000, 3), "kL without")
