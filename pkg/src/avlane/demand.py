"""Seeded agent populations drawn from an origin-destination matrix."""

from __future__ import annotations

import csv
import enum
import hashlib
import logging
import math
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional

import numpy as np

log = logging.getLogger(__name__)


class VehicleClass(enum.Enum):
    AV = "AV"
    CV = "CV"


class DemandError(ValueError):
    pass


@dataclass(frozen=True)
class ODMatrix:
    """Demand weights per (origin, destination) pair, node ids of some network."""

    entries: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        for o, d, w in self.entries:
            if not (w >= 0 and math.isfinite(w)):
                raise DemandError(f"bad weight {w} for pair ({o}, {d})")

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "ODMatrix":
        return cls(tuple((int(o), int(d), float(w)) for o, d, w in pairs))

    def check_nodes(self, n_nodes: int):
        for o, d, _ in self.entries:
            if not (0 <= o < n_nodes and 0 <= d < n_nodes):
                raise DemandError(f"OD pair ({o}, {d}) refers to a node outside the network")


@dataclass(frozen=True)
class Agent:
    id: int
    origin: int
    destination: int
    vclass: VehicleClass

    @property
    def is_av(self) -> bool:
        return self.vclass is VehicleClass.AV


def av_count(fraction: float, n: int) -> int:
    """Number of AVs for ``fraction`` of ``n`` agents, rounding halves up.

    The fraction is taken at its shortest decimal representation so that
    e.g. 0.35 of 10 gives 4 rather than 3.
    """
    if not 0.0 <= fraction <= 1.0:
        raise DemandError(f"AV fraction must lie in [0, 1], got {fraction}")
    k = (Decimal(repr(float(fraction))) * n).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return int(k)


@dataclass(frozen=True, eq=False)
class Population:
    """Agents stored column-wise.

    ``priority`` is a seed-derived permutation of agent indices; the first
    ``av_count(f, n)`` agents in that order are AVs, so AV sets are nested
    across increasing fractions.
    """

    origins: np.ndarray
    destinations: np.ndarray
    is_av: np.ndarray
    priority: np.ndarray
    av_fraction: float
    seed: int
    _agents: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("origins", "destinations", "is_av", "priority"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.origins)

    @property
    def agents(self) -> tuple[Agent, ...]:
        if self._agents is None:
            agents = tuple(
                Agent(i, int(o), int(d), VehicleClass.AV if a else VehicleClass.CV)
                for i, (o, d, a) in enumerate(zip(self.origins, self.destinations, self.is_av)))
            object.__setattr__(self, "_agents", agents)
        return self._agents

    @property
    def n_av(self) -> int:
        return int(self.is_av.sum())

    def fingerprint(self) -> str:
        """Hash of the OD pairs and class labels, identifies a demand instance."""
        h = hashlib.sha256()
        for arr in (self.origins, self.destinations, self.is_av):
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]

    def demand_fingerprint(self) -> str:
        """Hash of the OD pairs only, shared by every reclassification."""
        h = hashlib.sha256()
        for arr in (self.origins, self.destinations):
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def _av_mask(priority: np.ndarray, fraction: float) -> np.ndarray:
    mask = np.zeros(len(priority), dtype=bool)
    mask[priority[:av_count(fraction, len(priority))]] = True
    return mask


def generate_population(od: ODMatrix, n: int, av_fraction: float, seed: int) -> Population:
    """Draw ``n`` agents with OD pairs proportional to the matrix weights."""
    if n < 1:
        raise DemandError("need at least one agent")
    av_count(av_fraction, n)
    pairs = []
    for o, d, w in od.entries:
        if o == d:
            log.warning("skipping OD entry with origin == destination (%d)", o)
            continue
        if w > 0:
            pairs.append((o, d, w))
    if not pairs:
        raise DemandError("OD matrix has no usable entries")
    weights = np.array([w for _, _, w in pairs], dtype=float)
    od_rng, class_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    idx = od_rng.choice(len(pairs), size=n, p=weights / weights.sum())
    origins = np.array([pairs[i][0] for i in range(len(pairs))], dtype=np.int64)[idx]
    dests = np.array([pairs[i][1] for i in range(len(pairs))], dtype=np.int64)[idx]
    priority = class_rng.permutation(n)
    return Population(origins, dests, _av_mask(priority, av_fraction), priority,
                      float(av_fraction), int(seed))


def reclass_population(pop: Population, new_av_fraction: float) -> Population:
    """Same agents and OD pairs, relabelled to ``new_av_fraction`` AVs."""
    return Population(pop.origins, pop.destinations, _av_mask(pop.priority, new_av_fraction),
                      pop.priority, float(new_av_fraction), pop.seed)


def load_od(path, net=None) -> ODMatrix:
    """Read ``origin,destination,weight`` CSV; node ids are mapped through ``net`` labels."""
    entries = []
    with open(os.fspath(path), encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"origin", "destination", "weight"} - set(reader.fieldnames or ())
        if missing:
            raise DemandError(f"OD file lacks columns: {', '.join(sorted(missing))}")
        for lineno, row in enumerate(reader, start=2):
            try:
                if net is not None:
                    o, d = net.node_id(row["origin"]), net.node_id(row["destination"])
                else:
                    o, d = int(row["origin"]), int(row["destination"])
                entries.append((o, d, float(row["weight"])))
            except (KeyError, ValueError) as exc:
                raise DemandError(f"line {lineno}: {exc}") from None
    od = ODMatrix(tuple(entries))
    if not od.entries:
        raise DemandError("OD matrix is empty")
    if net is not None:
        od.check_nodes(net.n_nodes)
    return od


def save_od(od: ODMatrix, path, net=None) -> None:
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin", "destination", "weight"])
        for o, d, wt in od.entries:
            if net is not None:
                o, d = net.node_labels[o], net.node_labels[d]
            w.writerow([o, d, repr(wt)])


def dump_population(pop: Population, path, net=None) -> None:
    """Debug dump: ``agent_id,origin,destination,class``."""
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent_id", "origin", "destination", "class"])
        for a in pop.agents:
            o, d = (net.node_labels[a.origin], net.node_labels[a.destination]) if net else (a.origin, a.destination)
            w.writerow([a.id, o, d, a.vclass.value])
