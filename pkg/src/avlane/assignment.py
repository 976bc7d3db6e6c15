"""Incremental user-equilibrium assignment of atomic agents with class-restricted routing.

Each agent is one unit of flow. The first pass loads the population in
batches, every batch routed all-or-nothing on the link times left by the
previous ones. Further passes refresh the shortest paths of one batch at a
time and add them to the set of routes known for each (origin, destination,
class); every agent of the batch is then taken off the network and put back
on the cheapest known route given all other agents. Passes stop once the
relative gap drops to the tolerance.

CVs never see AV-only links: routing walks a class-filtered adjacency, so no
infinite weight ever enters the arithmetic. Equal-cost paths are broken by
the lexicographically smallest sequence of link ids.
"""

from __future__ import annotations

import csv
import heapq
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cost import HeadwayConfig, bpr, mixed_capacity
from .demand import Population
from .network import LanePolicy, RoadNetwork


class RoutingError(RuntimeError):
    def __init__(self, message, agent=None):
        super().__init__(message)
        self.agent = agent


@dataclass(frozen=True)
class AssignmentConfig:
    batch_count: int = 20
    max_passes: int = 5
    gap_tolerance: float = 1e-3
    period_h: float = 1.0
    headways: HeadwayConfig = HeadwayConfig()
    seed: int = 0
    # "link": capacity from each link's measured AV share; "system": from the population share
    capacity_mode: str = "link"

    def __post_init__(self):
        if self.batch_count < 1 or self.max_passes < 1:
            raise ValueError("batch_count and max_passes must be >= 1")
        if not self.gap_tolerance > 0 or not self.period_h > 0:
            raise ValueError("gap_tolerance and period_h must be positive")
        if self.capacity_mode not in ("link", "system"):
            raise ValueError(f"unknown capacity_mode {self.capacity_mode!r}")


def shortest_paths(net: RoadNetwork, times: Sequence[float], origin: int, av: bool,
                   targets=None, with_paths: bool = True) -> dict:
    """Dijkstra from ``origin``; maps node -> (time, link-id tuple).

    Stops early once every node in ``targets`` is settled. Ties in time go to
    the lexicographically smallest link sequence, which the heap order gives
    for free since paths are compared after times.
    """
    adj = net.adjacency(av)
    head = _heads(net)
    remaining = None if targets is None else set(targets) - {origin}
    settled = {}
    best = {origin: 0.0}
    heap = [(0.0, (), origin)]
    while heap:
        d, path, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled[u] = (d, path)
        if remaining is not None:
            remaining.discard(u)
            if not remaining:
                break
        for lid in adj[u]:
            v = head[lid]
            if v in settled:
                continue
            nd = d + times[lid]
            if nd <= best.get(v, math.inf):
                best[v] = nd
                heapq.heappush(heap, (nd, path + (lid,) if with_paths else (), v))
    return settled


def _heads(net: RoadNetwork) -> tuple:
    heads = net.__dict__.get("_heads")
    if heads is None:
        heads = tuple(l.to_node for l in net.links)
        object.__setattr__(net, "_heads", heads)
    return heads


def restricted_shortest_path(net: RoadNetwork, times: Sequence[float], origin: int, dest: int,
                             av: bool, agent: Optional[int] = None) -> tuple[int, ...]:
    """Minimum-time route for one vehicle class; AV-only links are closed to CVs."""
    tree = shortest_paths(net, times, origin, av, targets=(dest,))
    if dest not in tree:
        who = f"agent {agent}: " if agent is not None else ""
        raise RoutingError(f"{who}node {dest} unreachable from {origin} for "
                           f"{'AV' if av else 'CV'}", agent=agent)
    return tree[dest][1]


@dataclass(frozen=True, eq=False)
class RouteAssignment:
    network: RoadNetwork
    routes: tuple[tuple[int, ...], ...]
    agent_is_av: np.ndarray
    flow_av: np.ndarray
    flow_cv: np.ndarray
    p_av: np.ndarray
    capacity: np.ndarray
    travel_time: np.ndarray
    iteration_count: int
    relative_gap: float
    converged: bool
    population_fingerprint: str
    gap_history: tuple[float, ...] = ()
    config: Optional[AssignmentConfig] = field(default=None, repr=False)

    @property
    def flow(self) -> np.ndarray:
        return self.flow_av + self.flow_cv

    def agent_times(self) -> np.ndarray:
        t = self.travel_time.tolist()
        return np.array([math.fsum(t[l] for l in r) for r in self.routes])

    def agent_distances(self) -> np.ndarray:
        length = [0.0 if l.policy is LanePolicy.CONNECTOR else l.length_m for l in self.network.links]
        return np.array([math.fsum(length[l] for l in r) for r in self.routes])

    def link_state(self, link_id: int):
        from .cost import LinkState
        return LinkState(int(self.flow_av[link_id]), int(self.flow_cv[link_id]),
                         float(self.p_av[link_id]), float(self.capacity[link_id]),
                         float(self.travel_time[link_id]))

    def recount_flows(self) -> tuple[np.ndarray, np.ndarray]:
        """Class flows recounted from the agent routes."""
        fa = np.zeros(self.network.n_links, dtype=np.int64)
        fc = np.zeros(self.network.n_links, dtype=np.int64)
        for r, av in zip(self.routes, self.agent_is_av):
            target = fa if av else fc
            for l in r:
                target[l] += 1
        return fa, fc

    def link_demand(self) -> np.ndarray:
        """Number of agents whose route contains each link."""
        d = np.zeros(self.network.n_links, dtype=np.int64)
        for r in self.routes:
            for l in set(r):
                d[l] += 1
        return d


class _LinkCosts:
    """Mutable per-link flow and time state used while assigning."""

    def __init__(self, net: RoadNetwork, cfg: AssignmentConfig, global_p: float):
        self.net = net
        self.hw = cfg.headways
        self.period = cfg.period_h
        self.system = cfg.capacity_mode == "system"
        self.global_p = global_p
        links = net.links
        self.t0 = [l.free_flow_time for l in links]
        self.conn = [l.policy is LanePolicy.CONNECTOR for l in links]
        self.av_only = [l.policy is LanePolicy.AV_ONLY for l in links]
        self.params = [(l.lanes, l.alpha, l.beta) for l in links]
        n = len(links)
        self.fa = [0] * n
        self.fc = [0] * n
        self.times = list(self.t0)

    def share(self, i: int) -> float:
        fa, fc = self.fa[i], self.fc[i]
        if self.av_only[i]:
            return 1.0
        if self.system or fa + fc == 0:
            return self.global_p
        return fa / (fa + fc)

    def refresh(self, i: int):
        if self.conn[i]:
            self.times[i] = 0.0
            return
        lanes, alpha, beta = self.params[i]
        self.times[i] = bpr(self.t0[i], self.fa[i] + self.fc[i], mixed_capacity(self.share(i), self.hw),
                            lanes, self.period, alpha, beta)

    def add(self, route, av: bool, sign: int = 1):
        f = self.fa if av else self.fc
        for l in route:
            f[l] += sign
        for l in route:
            self.refresh(l)

    def route_time(self, route) -> float:
        t = self.times
        return sum(t[l] for l in route)


def _agent_groups(pop: Population, members) -> dict:
    """(origin, is_av) -> destinations needed, for the agents in ``members``."""
    groups: dict = {}
    for a in members:
        groups.setdefault((int(pop.origins[a]), bool(pop.is_av[a])), set()).add(int(pop.destinations[a]))
    return groups


def check_routable(net: RoadNetwork, pop: Population):
    reach = {}
    for a in range(len(pop)):
        key = (int(pop.origins[a]), bool(pop.is_av[a]))
        if key not in reach:
            reach[key] = net.reachable(*key)
        if int(pop.destinations[a]) not in reach[key]:
            raise RoutingError(f"agent {a}: destination {pop.destinations[a]} unreachable from "
                               f"{pop.origins[a]} for {'AV' if key[1] else 'CV'}", agent=a)


def _gap(net: RoadNetwork, pop: Population, times, routes) -> float:
    groups = _agent_groups(pop, range(len(pop)))
    trees = {k: shortest_paths(net, times, k[0], k[1], targets=d, with_paths=False)
             for k, d in groups.items()}
    current = shortest = 0.0
    for a, r in enumerate(routes):
        current += sum(times[l] for l in r)
        shortest += trees[(int(pop.origins[a]), bool(pop.is_av[a]))][int(pop.destinations[a])][0]
    if shortest <= 0:
        return 0.0
    return max(0.0, (current - shortest) / shortest)


def relative_gap(assign: RouteAssignment, net: Optional[RoadNetwork] = None,
                 pop: Optional[Population] = None) -> float:
    """(total assigned route time - total shortest route time) / total shortest route time."""
    net = net or assign.network
    times = assign.travel_time.tolist()
    current = shortest = 0.0
    trees = {}
    heads = _heads(net)
    for a, r in enumerate(assign.routes):
        av = bool(assign.agent_is_av[a])
        if pop is not None:
            o, d = int(pop.origins[a]), int(pop.destinations[a])
        else:
            o, d = net.links[r[0]].from_node, heads[r[-1]]
        if (o, av) not in trees:
            trees[(o, av)] = shortest_paths(net, times, o, av, with_paths=False)
        current += sum(times[l] for l in r)
        shortest += trees[(o, av)][d][0]
    if shortest <= 0:
        return 0.0
    return max(0.0, (current - shortest) / shortest)


def assign_incremental(net: RoadNetwork, pop: Population,
                       cfg: AssignmentConfig = AssignmentConfig()) -> RouteAssignment:
    """Load ``pop`` onto ``net`` and iterate towards user equilibrium.

    Non-convergence within ``cfg.max_passes`` is reported through the
    ``converged`` flag of the result rather than raised.
    """
    n = len(pop)
    check_routable(net, pop)
    costs = _LinkCosts(net, cfg, pop.av_fraction)
    origins = pop.origins.tolist()
    dests = pop.destinations.tolist()
    is_av = pop.is_av.tolist()
    routes: list = [None] * n
    columns: dict = {}

    def batches(pass_no):
        order = np.random.default_rng([cfg.seed, pass_no]).permutation(n)
        return [np.sort(b).tolist() for b in np.array_split(order, min(cfg.batch_count, n))]

    def route_trees(members):
        trees = {}
        for key, needed in sorted(_agent_groups(pop, members).items()):
            trees[key] = shortest_paths(net, costs.times, key[0], key[1], targets=needed)
        return trees

    def remember(key, route):
        cols = columns.setdefault(key, [])
        if route not in cols:
            cols.append(route)

    # first pass: plain incremental loading
    for batch in batches(0):
        trees = route_trees(batch)
        for a in batch:
            key = (origins[a], is_av[a])
            routes[a] = trees[key][dests[a]][1]
            remember((origins[a], dests[a], is_av[a]), routes[a])
        for a in batch:
            costs.add(routes[a], is_av[a])

    history = [_gap(net, pop, costs.times, routes)]
    passes = 1
    while history[-1] > cfg.gap_tolerance and passes < cfg.max_passes:
        for batch in batches(passes):
            trees = route_trees(batch)
            for a in batch:
                key = (origins[a], dests[a], is_av[a])
                remember(key, trees[(origins[a], is_av[a])][dests[a]][1])
                costs.add(routes[a], is_av[a], -1)
                best, best_t = routes[a], costs.route_time(routes[a])
                for r in columns[key]:
                    t = costs.route_time(r)
                    if t < best_t:
                        best, best_t = r, t
                routes[a] = best
                costs.add(best, is_av[a])
        passes += 1
        history.append(_gap(net, pop, costs.times, routes))

    m = net.n_links
    shares = np.array([costs.share(i) for i in range(m)])
    return RouteAssignment(
        network=net,
        routes=tuple(routes),
        agent_is_av=pop.is_av.copy(),
        flow_av=np.array(costs.fa, dtype=np.int64),
        flow_cv=np.array(costs.fc, dtype=np.int64),
        p_av=shares,
        capacity=np.array([mixed_capacity(p, cfg.headways) for p in shares]),
        travel_time=np.array(costs.times),
        iteration_count=passes,
        relative_gap=history[-1],
        converged=history[-1] <= cfg.gap_tolerance,
        population_fingerprint=pop.fingerprint(),
        gap_history=tuple(history),
        config=cfg,
    )


def write_link_csv(assign: RouteAssignment, path) -> None:
    """``link_id,flow_av,flow_cv,p_av,capacity,travel_time``, one row per link."""
    net = assign.network
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["link_id", "flow_av", "flow_cv", "p_av", "capacity", "travel_time"])
        for i, link in enumerate(net.links):
            w.writerow([link.label or i, int(assign.flow_av[i]), int(assign.flow_cv[i]),
                        repr(float(assign.p_av[i])), repr(float(assign.capacity[i])),
                        repr(float(assign.travel_time[i]))])


def write_agent_csv(assign: RouteAssignment, path) -> None:
    """``agent_id,class,travel_time_s,distance_m,route``; routes are space-separated link labels."""
    net = assign.network
    times = assign.agent_times()
    dist = assign.agent_distances()
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent_id", "class", "travel_time_s", "distance_m", "route"])
        for a, r in enumerate(assign.routes):
            w.writerow([a, "AV" if assign.agent_is_av[a] else "CV", repr(float(times[a])),
                        repr(float(dist[a])), " ".join(net.links[l].label or str(l) for l in r)])
