"""Synthetic test networks: a single multi-lane road and a grid with a highway corridor."""

from __future__ import annotations

from .assignment import AssignmentConfig
from .demand import ODMatrix
from .network import RoadNetwork, build_network

# (lanes, speed m/s) per road class on the grid
GRID_HIGHWAY = (4, 25.0)
GRID_MAJOR = (2, 70 / 3.6)
GRID_OTHER = (1, 50 / 3.6)

# demand period (hours) that loads the default 8x8 grid to moderate congestion
GRID_PERIOD_H = 0.25
# equilibria on the grid need a tighter gap than the generic default to compare scenarios at 0.5 %
GRID_GAP = 1e-4
GRID_MAX_PASSES = 15


def single_road(length_m: float = 10_000.0, speed_mps: float = 25.0, lanes: int = 2,
                alpha: float = 0.15, beta: float = 4.0) -> RoadNetwork:
    """Two nodes joined by one highway link, the setting of the closed-form analysis."""
    return build_network(["A", "B"], [dict(
        id="road", **{"from": "A", "to": "B"}, length_m=length_m, lanes=lanes,
        speed_mps=speed_mps, alpha=alpha, beta=beta, **{"class": "highway"})])


def grid_node(r: int, c: int) -> str:
    return f"r{r}c{c}"


def grid_network(rows: int = 8, cols: int = 8, spacing_m: float = 500.0,
                 highway_corridor: bool = True, major_every: int = 3,
                 alpha: float = 0.15, beta: float = 4.0) -> RoadNetwork:
    """Bidirectional ``rows x cols`` street grid.

    With ``highway_corridor`` the middle row becomes a four-lane highway.
    Every ``major_every``-th row and column (counting from 0) is a two-lane
    major road; everything else is a single-lane local street.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    hw_row = rows // 2 if highway_corridor else -1

    def kind(horizontal: bool, index: int):
        if horizontal and index == hw_row:
            return "highway", GRID_HIGHWAY
        if index % major_every == 0:
            return "major", GRID_MAJOR
        return "other", GRID_OTHER

    nodes = [grid_node(r, c) for r in range(rows) for c in range(cols)]
    links = []

    def add(a, b, cls, lanes, speed):
        links.append({"id": f"{a}-{b}", "from": a, "to": b, "length_m": spacing_m,
                      "lanes": lanes, "speed_mps": speed, "class": cls,
                      "alpha": alpha, "beta": beta})

    for r in range(rows):
        cls, (lanes, speed) = kind(True, r)
        for c in range(cols - 1):
            add(grid_node(r, c), grid_node(r, c + 1), cls, lanes, speed)
            add(grid_node(r, c + 1), grid_node(r, c), cls, lanes, speed)
    for c in range(cols):
        cls, (lanes, speed) = kind(False, c)
        for r in range(rows - 1):
            add(grid_node(r, c), grid_node(r + 1, c), cls, lanes, speed)
            add(grid_node(r + 1, c), grid_node(r, c), cls, lanes, speed)
    return build_network(nodes, links)


def grid_od(net: RoadNetwork, rows: int, cols: int, through_share: float = 0.7,
            min_hops: int = 3) -> ODMatrix:
    """Demand on a grid built by :func:`grid_network`.

    ``through_share`` of the weight goes to trips between the west and east
    edges (both directions); the rest is spread evenly over all ordered node
    pairs at least ``min_hops`` apart.
    """
    nid = lambda r, c: net.node_id(grid_node(r, c))
    west = [nid(r, 0) for r in range(rows)]
    east = [nid(r, cols - 1) for r in range(rows)]
    through = [(o, d) for o in west for d in east] + [(o, d) for o in east for d in west]
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    background = [(nid(*a), nid(*b)) for a in cells for b in cells
                  if abs(a[0] - b[0]) + abs(a[1] - b[1]) >= min_hops]
    entries = [(o, d, through_share / len(through)) for o, d in through]
    if background and through_share < 1:
        entries += [(o, d, (1 - through_share) / len(background)) for o, d in background]
    return ODMatrix(tuple(entries))


def single_road_od(net: RoadNetwork) -> ODMatrix:
    return ODMatrix(((net.node_id("A"), net.node_id("B"), 1.0),))


def grid_benchmark(rows: int = 8, cols: int = 8) -> tuple[RoadNetwork, ODMatrix, AssignmentConfig]:
    """Grid network, OD matrix and assignment settings used for the sweep benchmarks."""
    net = grid_network(rows, cols)
    cfg = AssignmentConfig(period_h=GRID_PERIOD_H, gap_tolerance=GRID_GAP, max_passes=GRID_MAX_PASSES)
    return net, grid_od(net, rows, cols), cfg
