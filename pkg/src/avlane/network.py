"""Road network graph, road classes and the dedicated AV-lane transformation.

Networks are immutable once built. Node and link ids are dense integers
assigned at load time; ids found in input files are kept as labels.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.15
DEFAULT_BETA = 4.0


class NetworkError(ValueError):
    """Base class for network construction problems."""


class NetworkParseError(NetworkError):
    def __init__(self, message, record=None):
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)
        self.record = record


class NetworkValidationError(NetworkError):
    pass


class TransformError(NetworkError):
    pass


class RoadClass(enum.Enum):
    HIGHWAY = "highway"
    MAJOR = "major"
    OTHER = "other"


class LanePolicy(enum.Enum):
    MIXED = "mixed"
    AV_ONLY = "av_only"
    CONNECTOR = "connector"


@dataclass(frozen=True)
class Link:
    id: int
    from_node: int
    to_node: int
    length_m: float
    lanes: int
    speed_mps: float
    road_class: RoadClass
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    policy: LanePolicy = LanePolicy.MIXED
    # id of the physical segment this link was derived from (AV lanes, connectors)
    source_link: Optional[int] = None
    label: str = ""

    @property
    def free_flow_time(self) -> float:
        if self.policy is LanePolicy.CONNECTOR:
            return 0.0
        return self.length_m / self.speed_mps

    @property
    def segment(self) -> int:
        """Id of the physical road segment the link belongs to."""
        return self.id if self.source_link is None else self.source_link


def _check_link(link: Link):
    if link.lanes < 1:
        raise NetworkValidationError(f"link {link.label or link.id}: lanes must be >= 1")
    if link.policy is LanePolicy.CONNECTOR:
        if link.length_m < 0:
            raise NetworkValidationError(f"link {link.label or link.id}: negative length")
    else:
        if not link.length_m > 0:
            raise NetworkValidationError(f"link {link.label or link.id}: length_m must be > 0")
        if not link.speed_mps > 0:
            raise NetworkValidationError(f"link {link.label or link.id}: speed_mps must be > 0")
    if not (math.isfinite(link.alpha) and math.isfinite(link.beta)):
        raise NetworkValidationError(f"link {link.label or link.id}: alpha/beta must be finite")
    if link.alpha < 0 or link.beta < 1:
        raise NetworkValidationError(f"link {link.label or link.id}: need alpha >= 0 and beta >= 1")
    if link.policy is LanePolicy.AV_ONLY and link.lanes != 1:
        raise NetworkValidationError(f"link {link.label or link.id}: AV-only links have exactly one lane")


@dataclass(frozen=True)
class RoadNetwork:
    """Directed multigraph of road segments.

    ``node_source[n]`` is the node that ``n`` was duplicated from, or -1 for
    original nodes.
    """

    node_labels: tuple[str, ...]
    links: tuple[Link, ...]
    node_source: tuple[int, ...] = ()
    outgoing: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    outgoing_cv: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.node_labels)
        if not self.node_source:
            object.__setattr__(self, "node_source", (-1,) * n)
        if len(self.node_source) != n:
            raise NetworkValidationError("node_source length does not match node count")
        if len(set(self.node_labels)) != n:
            raise NetworkValidationError("duplicate node label")
        out = [[] for _ in range(n)]
        out_cv = [[] for _ in range(n)]
        for i, link in enumerate(self.links):
            if link.id != i:
                raise NetworkValidationError(f"link ids must be dense, got {link.id} at position {i}")
            for end in (link.from_node, link.to_node):
                if not 0 <= end < n:
                    raise NetworkValidationError(
                        f"link {link.label or link.id} references unknown node {end}")
            _check_link(link)
            out[link.from_node].append(i)
            if link.policy is not LanePolicy.AV_ONLY:
                out_cv[link.from_node].append(i)
        object.__setattr__(self, "outgoing", tuple(tuple(o) for o in out))
        object.__setattr__(self, "outgoing_cv", tuple(tuple(o) for o in out_cv))

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    def node_id(self, label) -> int:
        try:
            return self._label_index[str(label)]
        except KeyError:
            raise KeyError(f"unknown node {label!r}") from None

    @property
    def _label_index(self) -> dict:
        idx = self.__dict__.get("_label_cache")
        if idx is None:
            idx = {lab: i for i, lab in enumerate(self.node_labels)}
            object.__setattr__(self, "_label_cache", idx)
        return idx

    def adjacency(self, av: bool = True) -> tuple[tuple[int, ...], ...]:
        """Outgoing link ids per node; AV-only links are dropped when ``av`` is False."""
        return self.outgoing if av else self.outgoing_cv

    def segment_count(self) -> int:
        """Number of physical segments (links that are not derived from another)."""
        return sum(1 for l in self.links if l.source_link is None)

    def reachable(self, origin: int, av: bool = True) -> set[int]:
        adj = self.adjacency(av)
        seen = {origin}
        stack = [origin]
        while stack:
            u = stack.pop()
            for lid in adj[u]:
                v = self.links[lid].to_node
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def is_strongly_connected(self, av: bool = True) -> bool:
        if self.n_nodes == 0:
            return True
        if len(self.reachable(0, av)) != self.n_nodes:
            return False
        rev = replace(self, links=tuple(
            replace(l, from_node=l.to_node, to_node=l.from_node) for l in self.links))
        return len(rev.reachable(0, av)) == self.n_nodes


def build_network(node_labels: Sequence, links: Iterable[dict]) -> RoadNetwork:
    """Build a network from external node ids and link records.

    Link records use the file field names (``from``, ``to``, ``length_m``,
    ``lanes``, ``speed_mps``, ``class``, optional ``alpha``/``beta``/``policy``).
    """
    labels = tuple(str(x) for x in node_labels)
    index = {lab: i for i, lab in enumerate(labels)}
    if len(index) != len(labels):
        raise NetworkValidationError("duplicate node id")
    built = []
    for i, rec in enumerate(links):
        label = str(rec.get("id", i))
        try:
            u = index[str(rec["from"])]
            v = index[str(rec["to"])]
        except KeyError as exc:
            raise NetworkValidationError(
                f"link {label} references undeclared node {exc.args[0]}") from None
        built.append(Link(
            id=i, from_node=u, to_node=v,
            length_m=float(rec["length_m"]),
            lanes=int(rec["lanes"]),
            speed_mps=float(rec["speed_mps"]),
            road_class=RoadClass(rec["class"]),
            alpha=DEFAULT_ALPHA if rec.get("alpha") in (None, "") else float(rec["alpha"]),
            beta=DEFAULT_BETA if rec.get("beta") in (None, "") else float(rec["beta"]),
            policy=LanePolicy(rec.get("policy") or "mixed"),
            source_link=None if rec.get("source") in (None, "") else int(rec["source"]),
            label=label,
        ))
    return RoadNetwork(node_labels=labels, links=tuple(built))


_LINK_FIELDS = ["id", "from", "to", "length_m", "lanes", "speed_mps", "class", "alpha", "beta"]


def _parse_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise NetworkParseError("empty network file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] not in ("record", "type", "kind"):
        raise NetworkParseError("missing header row", record=1)
    nodes, node_sources, links = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        kind = row[0].strip()
        if kind == "node":
            if len(row) < 2 or not row[1].strip():
                raise NetworkParseError("node record needs an id", record=lineno)
            nodes.append(row[1].strip())
            node_sources.append(row[2].strip() if len(row) > 2 else "")
        elif kind == "link":
            if len(row) < 8:
                raise NetworkParseError(
                    f"link record has {len(row) - 1} fields, expected at least 7", record=lineno)
            rec = dict(zip(_LINK_FIELDS, (c.strip() for c in row[1:10])))
            # optional provenance columns written by save_network
            if len(row) > 10:
                rec["policy"] = row[10].strip()
            if len(row) > 11:
                rec["source"] = row[11].strip()
            try:
                float(rec["length_m"]), int(rec["lanes"]), float(rec["speed_mps"])
                RoadClass(rec["class"])
                for key in ("alpha", "beta"):
                    if rec.get(key):
                        float(rec[key])
                if rec.get("policy"):
                    LanePolicy(rec["policy"])
            except ValueError as exc:
                raise NetworkParseError(str(exc), record=lineno) from None
            links.append(rec)
        else:
            raise NetworkParseError(f"unknown record type {kind!r}", record=lineno)
    return nodes, node_sources, links


def _parse_json(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkParseError(f"invalid JSON: {exc}") from None
    nodes, node_sources = [], []
    for i, rec in enumerate(doc.get("nodes", [])):
        if isinstance(rec, dict):
            if "id" not in rec:
                raise NetworkParseError("node record needs an id", record=i)
            nodes.append(str(rec["id"]))
            node_sources.append(str(rec.get("source", "")))
        else:
            nodes.append(str(rec))
            node_sources.append("")
    links = []
    for i, rec in enumerate(doc.get("links", [])):
        missing = [k for k in ("from", "to", "length_m", "lanes", "speed_mps", "class") if k not in rec]
        if missing:
            raise NetworkParseError(f"link record missing {', '.join(missing)}", record=i)
        links.append(rec)
    return nodes, node_sources, links


def load_network(source, fmt: Optional[str] = None) -> RoadNetwork:
    """Load a network from a path or from raw bytes/str.

    The format is taken from the file extension (``.json`` or ``.csv``) unless
    ``fmt`` is given; raw content defaults to CSV.
    """
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        path = os.fspath(source)
        if fmt is None:
            fmt = "json" if path.lower().endswith(".json") else "csv"
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.decode("utf-8") if isinstance(source, bytes) else str(source)
        if fmt is None:
            fmt = "json" if text.lstrip().startswith("{") else "csv"
    nodes, node_sources, links = _parse_json(text) if fmt == "json" else _parse_csv(text)
    net = build_network(nodes, links)
    if any(node_sources):
        index = {lab: i for i, lab in enumerate(net.node_labels)}
        src = tuple(index[s] if s else -1 for s in node_sources)
        net = RoadNetwork(node_labels=net.node_labels, links=net.links, node_source=src)
    return net


def network_records(net: RoadNetwork):
    nodes = [{"id": lab, **({"source": net.node_labels[s]} if s >= 0 else {})}
             for lab, s in zip(net.node_labels, net.node_source)]
    links = []
    for l in net.links:
        rec = {
            "id": l.label or str(l.id),
            "from": net.node_labels[l.from_node],
            "to": net.node_labels[l.to_node],
            "length_m": l.length_m,
            "lanes": l.lanes,
            "speed_mps": l.speed_mps,
            "class": l.road_class.value,
            "alpha": l.alpha,
            "beta": l.beta,
        }
        if l.policy is not LanePolicy.MIXED or l.source_link is not None:
            rec["policy"] = l.policy.value
            rec["source"] = "" if l.source_link is None else l.source_link
        links.append(rec)
    return nodes, links


def save_network(net: RoadNetwork, path) -> None:
    """Write ``net`` as CSV or JSON, chosen by the extension of ``path``."""
    nodes, links = network_records(net)
    path = os.fspath(path)
    if path.lower().endswith(".json"):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"nodes": nodes, "links": links}, fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record"] + _LINK_FIELDS + ["policy", "source"])
        for n in nodes:
            w.writerow(["node", n["id"]] + ([n["source"]] if "source" in n else []))
        for rec in links:
            row = ["link"] + [rec[k] for k in _LINK_FIELDS]
            if "policy" in rec:
                row += [rec["policy"], rec["source"]]
            w.writerow(row)


def default_eligible(min_length_m: float = 0.0) -> Callable[[Link], bool]:
    """Default AV-lane predicate: multi-lane highway segments of at least ``min_length_m``."""

    def pred(link: Link) -> bool:
        return (link.road_class is RoadClass.HIGHWAY
                and link.policy is LanePolicy.MIXED
                and link.source_link is None
                and link.lanes >= 2
                and link.length_m >= min_length_m)

    pred.is_default = True
    return pred


def transform_av_lane(net: RoadNetwork, eligible: Optional[Callable[[Link], bool]] = None) -> RoadNetwork:
    """Reserve one lane of every eligible link for AVs.

    Each eligible link loses a lane and gets a parallel single-lane AV-only
    twin between fresh copies of its endpoints. Zero-cost connectors run from
    the original start node to its copy and from the end copy back to the
    original end node. Link ids of the input are preserved, new nodes and
    links are appended.

    With the default predicate, single-lane highway links are skipped with a
    warning; a custom predicate selecting one raises :class:`TransformError`.
    """
    if eligible is None:
        eligible = default_eligible()
    lenient = getattr(eligible, "is_default", False)

    twinned = {l.source_link for l in net.links if l.policy is LanePolicy.AV_ONLY}
    selected = []
    for link in net.links:
        if lenient and link.id in twinned:
            continue
        if lenient and link.road_class is RoadClass.HIGHWAY and link.policy is LanePolicy.MIXED \
                and link.source_link is None and link.lanes < 2:
            log.warning("skipping single-lane highway link %s", link.label or link.id)
            continue
        if not eligible(link):
            continue
        if link.policy is not LanePolicy.MIXED or link.source_link is not None \
                or link.id in twinned:
            raise TransformError(f"link {link.label or link.id} is already an AV lane or connector")
        if link.road_class is not RoadClass.HIGHWAY:
            raise TransformError(f"link {link.label or link.id} is not a highway")
        if link.lanes < 2:
            raise TransformError(f"link {link.label or link.id} has a single lane, cannot reserve it")
        selected.append(link)

    labels = list(net.node_labels)
    sources = list(net.node_source)
    links = list(net.links)
    taken = set(labels)

    def fresh(base: int, tag: str) -> int:
        lab = f"{net.node_labels[base]}#{tag}"
        k = 1
        while lab in taken:
            k += 1
            lab = f"{net.node_labels[base]}#{tag}{k}"
        taken.add(lab)
        labels.append(lab)
        sources.append(base)
        return len(labels) - 1

    for link in selected:
        tag = f"av{link.label or link.id}"
        u2 = fresh(link.from_node, tag + "a")
        v2 = fresh(link.to_node, tag + "b")
        links[link.id] = replace(link, lanes=link.lanes - 1)
        n = len(links)
        links.append(replace(link, id=n, from_node=u2, to_node=v2, lanes=1,
                             policy=LanePolicy.AV_ONLY, source_link=link.id,
                             label=f"{link.label or link.id}#av"))
        links.append(replace(link, id=n + 1, from_node=link.from_node, to_node=u2, lanes=1,
                             length_m=0.0, policy=LanePolicy.CONNECTOR, source_link=link.id,
                             label=f"{link.label or link.id}#in"))
        links.append(replace(link, id=n + 2, from_node=v2, to_node=link.to_node, lanes=1,
                             length_m=0.0, policy=LanePolicy.CONNECTOR, source_link=link.id,
                             label=f"{link.label or link.id}#out"))
    return RoadNetwork(node_labels=tuple(labels), links=tuple(links), node_source=tuple(sources))


def classify_links(net: RoadNetwork) -> dict[RoadClass, tuple[int, ...]]:
    """Partition non-connector link ids by road class."""
    groups: dict[RoadClass, list[int]] = {}
    for link in net.links:
        if link.policy is LanePolicy.CONNECTOR:
            continue
        groups.setdefault(link.road_class, []).append(link.id)
    return {k: tuple(v) for k, v in groups.items()}
