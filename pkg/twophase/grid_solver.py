"""Geodesic distances on weighted grid graphs.

The solver works in unfolded coordinates, where the medium has unit period. Grid
nodes carry the exact coefficient at their position; edges join nodes within the
stencil and endpoints attach to the corners of their grid cell. Paths found on the
graph are shortened against the exact length functional, and the reported distance
is always the exact length of the reported path.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from . import geometry
from .coefficient import MetricParams, eval_contrast_array
from .curves import Path, length_functional, push_to_walls, segment_cost
from .errors import (
    DisconnectedError,
    ObstacleEndpointError,
    ParameterError,
    ResourceLimitError,
    WindowError,
)
from .geometry import BOUNDARY_TOL, InclusionShape
from .types import Point2, PointLike, as_point

__all__ = [
    "DistanceResult",
    "GridField",
    "GridGraph",
    "GridSpec",
    "SolverStats",
    "Stencil",
    "build_field",
    "build_graph",
    "distance_folded",
    "distance_on_field",
    "graph_distances",
    "local_shorten",
    "shortest_path",
    "shortest_paths",
]

logger = logging.getLogger(__name__)

# Points this close to a node (in grid units) are attached to the node itself.
_NODE_SNAP = 1e-9


class Stencil(enum.Enum):
    """Grid neighbourhoods.

    Attributes:
        N8: Axis and diagonal neighbours.
        N16: N8 plus knight moves.
    """

    N8 = "N8"
    N16 = "N16"

    def __str__(self):
        return self.value

    @property
    def half_offsets(self) -> Tuple[Tuple[int, int], ...]:
        """One offset of every neighbour pair ``{o, -o}``."""
        offsets = ((1, 0), (0, 1), (1, 1), (1, -1))
        if self is Stencil.N16:
            offsets += ((1, 2), (2, 1), (2, -1), (1, -2))
        return offsets


@dataclass(frozen=True)
class GridSpec:
    """Grid discretization settings.

    Attributes:
        nodes_per_cell: Grid points per unit-cell side; spacing is its inverse.
        stencil: Node neighbourhood.
        padding_cells: Margin around the query endpoints when a window is derived.
        window: ``(xmin, ymin, xmax, ymax)`` in unfolded coordinates, snapped
            outward to the grid. `None` until derived from endpoints.
        shorten_rounds: Maximum passes of `local_shorten`.
        max_cells: Largest allowed window side, in unit cells.
        max_nodes: Largest allowed number of grid nodes.
    """

    nodes_per_cell: int = 64
    stencil: Stencil = Stencil.N16
    padding_cells: float = 1.0
    window: Optional[Tuple[float, float, float, float]] = None
    shorten_rounds: int = 64
    max_cells: int = 10_000
    max_nodes: int = 40_000_000

    def __post_init__(self):
        if isinstance(self.stencil, str):
            try:
                object.__setattr__(self, "stencil", Stencil(self.stencil.upper()))
            except ValueError:
                raise ParameterError(f"Unknown stencil {self.stencil!r}") from None
        if int(self.nodes_per_cell) != self.nodes_per_cell or self.nodes_per_cell < 16:
            raise ParameterError(
                f"nodes_per_cell must be an integer >= 16, got {self.nodes_per_cell}"
            )
        if not self.padding_cells >= 0:
            raise ParameterError(
                f"padding_cells must be non-negative, got {self.padding_cells}"
            )
        if self.shorten_rounds < 0:
            raise ParameterError("shorten_rounds must be non-negative")
        if self.window is not None:
            self._snap_window()

    def _snap_window(self) -> None:
        xmin, ymin, xmax, ymax = (float(v) for v in self.window)  # type: ignore
        if not (xmin < xmax and ymin < ymax):
            raise WindowError(f"Empty grid window {self.window}")
        cells = max(xmax - xmin, ymax - ymin)
        if cells > self.max_cells:
            raise ResourceLimitError(
                f"Grid window spans {cells:.0f} cells per side "
                f"(limit {self.max_cells})"
            )
        n = self.nodes_per_cell
        i0 = math.floor(xmin * n + _NODE_SNAP)
        j0 = math.floor(ymin * n + _NODE_SNAP)
        i1 = math.ceil(xmax * n - _NODE_SNAP)
        j1 = math.ceil(ymax * n - _NODE_SNAP)
        nodes = (i1 - i0 + 1) * (j1 - j0 + 1)
        if nodes > self.max_nodes:
            raise ResourceLimitError(
                f"Grid window needs {nodes} nodes (limit {self.max_nodes})"
            )
        object.__setattr__(self, "window", (i0 / n, j0 / n, i1 / n, j1 / n))

    @property
    def h(self) -> float:
        return 1.0 / self.nodes_per_cell

    @property
    def node_bounds(self) -> Tuple[int, int, int, int]:
        """Integer node coordinates ``(i0, j0, i1, j1)`` of the window corners."""
        if self.window is None:
            raise WindowError("Grid spec has no window")
        n = self.nodes_per_cell
        return tuple(int(round(v * n)) for v in self.window)  # type: ignore

    @property
    def grid_shape(self) -> Tuple[int, int]:
        """Node counts ``(ny, nx)``."""
        i0, j0, i1, j1 = self.node_bounds
        return (j1 - j0 + 1, i1 - i0 + 1)

    def around(self, *points: PointLike) -> GridSpec:
        """Spec with a window covering `points` plus the padding."""
        xy = np.array([as_point(p) for p in points], dtype=float)
        pad = self.padding_cells
        lo = xy.min(axis=0) - pad
        hi = xy.max(axis=0) + pad
        return dataclasses.replace(self, window=(lo[0], lo[1], hi[0], hi[1]))

    def covers(self, point: PointLike, padding: float = 0.0) -> bool:
        if self.window is None:
            return False
        x, y = as_point(point)
        xmin, ymin, xmax, ymax = self.window
        tol = 1e-9
        return (
            xmin + padding - tol <= x <= xmax - padding + tol
            and ymin + padding - tol <= y <= ymax - padding + tol
        )


@dataclass(frozen=True)
class GridField:
    """Coefficient values sampled on the nodes of a grid window.

    Arrays are indexed ``[row, column]`` with rows along y; the flat node index is
    ``row * nx + column``.
    """

    spec: GridSpec
    shape: InclusionShape
    params: MetricParams
    node_weight: np.ndarray = dataclasses.field(repr=False)
    obstacle_mask: np.ndarray = dataclasses.field(repr=False)

    @property
    def unit_params(self) -> MetricParams:
        return self.params.unfolded()

    @property
    def n_nodes(self) -> int:
        return int(self.node_weight.size)

    def node_points(self, index: np.ndarray) -> np.ndarray:
        """Unfolded coordinates of flat node indices."""
        i0, j0, _, _ = self.spec.node_bounds
        nx = self.node_weight.shape[1]
        n = self.spec.nodes_per_cell
        index = np.asarray(index)
        return np.stack([(i0 + index % nx) / n, (j0 + index // nx) / n], axis=-1)


class SolverStats(NamedTuple):
    nodes_expanded: int
    runtime_ms: float
    graph_value: float


class DistanceResult(NamedTuple):
    value: float
    path: Path
    stats: SolverStats


def build_field(
    shape: InclusionShape,
    params: MetricParams,
    spec: GridSpec,
    endpoints: Sequence[PointLike] = (),
) -> GridField:
    """Sample the contrast coefficient on the grid nodes of a window.

    Args:
        shape: Inclusion shape.
        params: Metric parameters.
        spec: Grid settings. Without a window, one is derived from `endpoints`.
        endpoints: Unfolded points the window must contain with padding.

    Raises:
        WindowError: If the window does not contain the endpoints and padding.
    """
    if spec.window is None:
        if not endpoints:
            raise WindowError("Grid spec has no window and no endpoints were given")
        spec = spec.around(*endpoints)
    for p in endpoints:
        if not spec.covers(p, spec.padding_cells):
            raise WindowError(
                f"Window {spec.window} is too small to contain {tuple(as_point(p))} "
                f"with {spec.padding_cells} cells of padding"
            )
    i0, j0, i1, j1 = spec.node_bounds
    n = spec.nodes_per_cell
    xs = np.arange(i0, i1 + 1) / n
    ys = np.arange(j0, j1 + 1) / n
    X, Y = np.meshgrid(xs, ys)
    weight = eval_contrast_array(shape, params, np.stack([X, Y], axis=-1))
    mask = np.isinf(weight)
    weight.setflags(write=False)
    mask.setflags(write=False)
    logger.debug(
        "Built %dx%d grid field, %d inclusion nodes",
        weight.shape[1],
        weight.shape[0],
        np.count_nonzero(weight != 1.0),
    )
    return GridField(
        spec=spec, shape=shape, params=params, node_weight=weight, obstacle_mask=mask
    )


@dataclass
class GridGraph:
    """Weighted graph of a grid field plus endpoint stubs.

    Grid edges are stored in both directions. The source stub only has edges out
    of it and target stubs only have edges into them.

    Attributes:
        matrix: Edge weights, shape ``(n, n)``.
        n_grid: Number of grid nodes; stub indices follow them.
        source: Source node index.
        targets: Node index of every target.
        source_stubs: Cost from a stub source to each attached grid node.
        target_stubs: Per target, cost from each attached grid node into it.
    """

    matrix: sparse.csr_matrix
    n_grid: int
    source: int
    targets: List[int]
    source_stubs: Dict[int, float]
    target_stubs: List[Dict[int, float]]


def _grid_edges(field: GridField) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite grid edges in one direction each, as (from, to, cost) arrays."""
    W = field.node_weight
    ny, nx = W.shape
    i0, j0, _, _ = field.spec.node_bounds
    n = field.spec.nodes_per_cell
    rows, cols, costs = [], [], []
    for dx, dy in field.spec.stencil.half_offsets:
        i_lo, i_hi = max(0, -dx), nx - max(0, dx)
        j_lo, j_hi = max(0, -dy), ny - max(0, dy)
        if i_hi <= i_lo or j_hi <= j_lo:
            continue
        wa = W[j_lo:j_hi, i_lo:i_hi]
        wb = W[j_lo + dy : j_hi + dy, i_lo + dx : i_hi + dx]
        ii = np.arange(i_lo, i_hi)
        jj = np.arange(j_lo, j_hi)
        mid = np.stack(
            np.meshgrid((i0 + ii + dx / 2) / n, (j0 + jj + dy / 2) / n), axis=-1
        )
        wm = eval_contrast_array(field.shape, field.params, mid)
        # Midpoint guard: an edge costs at least the average over either half.
        cost = (math.hypot(dx, dy) / n) * (
            np.maximum(np.maximum(wa + wb, wa + wm), wm + wb) / 2
        )
        src = (jj[:, None] * nx + ii[None, :]).astype(np.int32)
        ok = np.isfinite(cost)
        rows.append(src[ok])
        cols.append(src[ok] + np.int32(dy * nx + dx))
        costs.append(cost[ok])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(costs)


def _attach(field: GridField, p: Point2) -> Tuple[Optional[int], Dict[int, float]]:
    """Node index coinciding with `p`, or exact-cost stubs to its cell corners."""
    i0, j0, _, _ = field.spec.node_bounds
    ny, nx = field.node_weight.shape
    n = field.spec.nodes_per_cell
    gx = p.x * n - i0
    gy = p.y * n - j0
    rx, ry = round(gx), round(gy)
    if abs(gx - rx) <= _NODE_SNAP and abs(gy - ry) <= _NODE_SNAP:
        return int(ry * nx + rx), {}
    ci = min(max(math.floor(gx), 0), nx - 2)
    cj = min(max(math.floor(gy), 0), ny - 2)
    stubs = {}
    params = field.unit_params
    for ii, jj in ((ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)):
        if field.obstacle_mask[jj, ii]:
            continue
        corner = ((i0 + ii) / n, (j0 + jj) / n)
        cost = segment_cost(field.shape, params, p, corner)
        if math.isfinite(cost) and cost > 0:
            stubs[int(jj * nx + ii)] = cost
    return None, stubs


def build_graph(
    field: GridField, source: PointLike, targets: Sequence[PointLike]
) -> GridGraph:
    """Assemble the graph searched for paths from `source` to each target."""
    source = as_point(source)
    n_grid = field.n_nodes
    rows, cols, costs = _grid_edges(field)
    extra_rows, extra_cols, extra_costs = [], [], []
    next_index = n_grid

    source_node, source_stubs = _attach(field, source)
    if source_node is None:
        source_node = next_index
        next_index += 1
        for node, cost in source_stubs.items():
            extra_rows.append(source_node)
            extra_cols.append(node)
            extra_costs.append(cost)

    target_nodes, target_stubs = [], []
    for t in targets:
        node, stubs = _attach(field, as_point(t))
        if node is None:
            node = next_index
            next_index += 1
            for corner, cost in stubs.items():
                extra_rows.append(corner)
                extra_cols.append(node)
                extra_costs.append(cost)
        target_nodes.append(node)
        target_stubs.append(stubs)

    all_rows = np.concatenate([rows, cols, np.asarray(extra_rows, dtype=np.int32)])
    all_cols = np.concatenate([cols, rows, np.asarray(extra_cols, dtype=np.int32)])
    all_costs = np.concatenate([costs, costs, np.asarray(extra_costs, dtype=float)])
    matrix = sparse.csr_matrix(
        (all_costs, (all_rows, all_cols)), shape=(next_index, next_index)
    )
    return GridGraph(
        matrix=matrix,
        n_grid=n_grid,
        source=source_node,
        targets=target_nodes,
        source_stubs=source_stubs,
        target_stubs=target_stubs,
    )


def graph_distances(graph: GridGraph, method: str = "dijkstra") -> np.ndarray:
    """Shortest graph distances from the source to every node.

    Args:
        graph: Graph to search.
        method: ``dijkstra`` or ``bellman_ford``.
    """
    if method == "dijkstra":
        return csgraph.dijkstra(graph.matrix, directed=True, indices=graph.source)
    if method == "bellman_ford":
        return csgraph.bellman_ford(graph.matrix, directed=True, indices=graph.source)
    raise ValueError(f"Unknown shortest path method {method!r}")


def _trace(graph: GridGraph, dist: np.ndarray, k: int) -> List[int]:
    """Node sequence of a shortest path from the source to target `k`.

    Among tight predecessors the smallest node index is taken.
    """
    indptr = graph.matrix.indptr
    indices = graph.matrix.indices
    data = graph.matrix.data
    current = graph.targets[k]
    nodes = [current]
    stubs = graph.target_stubs[k]
    if current >= graph.n_grid:
        current = min(c for c, w in stubs.items() if dist[c] + w == dist[current])
        nodes.append(current)
    while current != graph.source:
        lo, hi = indptr[current], indptr[current + 1]
        neighbours = indices[lo:hi]
        tight = neighbours[(dist[neighbours] + data[lo:hi] == dist[current])]
        candidates = [int(c) for c in tight if c < graph.n_grid]
        cost = graph.source_stubs.get(current)
        if cost is not None and dist[graph.source] + cost == dist[current]:
            candidates.append(graph.source)
        assert candidates, f"No predecessor for node {current}"
        current = min(candidates)
        nodes.append(current)
    return nodes[::-1]


def _check_endpoints(
    shape: InclusionShape, params: MetricParams, points: Sequence[Point2]
) -> None:
    if not params.is_obstacle:
        return
    for p in points:
        if geometry.periodic_signed_distance(shape, p) < -BOUNDARY_TOL:
            raise ObstacleEndpointError(f"Endpoint {tuple(p)} lies inside an obstacle")


def local_shorten(field: GridField, path: Path, rounds: Optional[int] = None) -> Path:
    """Drop path vertices whose removal does not increase the exact length.

    Every pass walks the path once and replaces each two-segment corner
    ``a -> b -> c`` by ``a -> c`` when the exact length functional of the straight
    segment is not larger. Passes stop once nothing changes.
    """
    if rounds is None:
        rounds = field.spec.shorten_rounds
    shape = field.shape
    params = field.unit_params
    vertices = list(path.vertices)
    for _ in range(rounds):
        if len(vertices) <= 2:
            break
        kept = [vertices[0]]
        cost_ab = segment_cost(shape, params, vertices[0], vertices[1])
        changed = False
        for i in range(1, len(vertices) - 1):
            b, c = vertices[i], vertices[i + 1]
            cost_bc = segment_cost(shape, params, b, c)
            cost_ac = segment_cost(shape, params, kept[-1], c)
            if math.isfinite(cost_ac) and cost_ac <= cost_ab + cost_bc:
                cost_ab = cost_ac
                changed = True
            else:
                kept.append(b)
                cost_ab = cost_bc
        kept.append(vertices[-1])
        vertices = kept
        if not changed:
            break
    return Path(vertices)


def shortest_paths(
    field: GridField, s: PointLike, targets: Sequence[PointLike]
) -> List[DistanceResult]:
    """Geodesics from `s` to several targets from one graph search.

    Args:
        field: Grid field in unfolded coordinates.
        s: Source point.
        targets: Target points.

    Raises:
        ObstacleEndpointError: If an endpoint lies inside a hard obstacle.
        DisconnectedError: If a target cannot be reached.
        WindowError: If an endpoint lies outside the window.
    """
    start = time.perf_counter()
    s = as_point(s)
    targets = [as_point(t) for t in targets]
    _check_endpoints(field.shape, field.params, [s] + targets)
    for p in [s] + targets:
        if not field.spec.covers(p):
            raise WindowError(f"Point {tuple(p)} lies outside window {field.spec.window}")

    graph = build_graph(field, s, targets)
    dist = graph_distances(graph)
    grid_dist = dist[: graph.n_grid]
    params = field.unit_params

    results = []
    for k, t in enumerate(targets):
        if t == s:
            results.append(DistanceResult(0.0, Path([s, s]), SolverStats(0, 0.0, 0.0)))
            continue
        target = graph.targets[k]
        if not math.isfinite(dist[target]):
            raise DisconnectedError(f"No path from {tuple(s)} to {tuple(t)}")
        nodes = np.asarray(_trace(graph, dist, k))
        points = field.node_points(np.minimum(nodes, graph.n_grid - 1))
        points[0] = s
        points[-1] = t
        path = Path(points)
        if params.is_obstacle:
            path = push_to_walls(field.shape, 1.0, path)
        path = local_shorten(field, path)
        value = length_functional(field.shape, params, path)
        if not math.isfinite(value):
            raise DisconnectedError(f"No finite-length path from {tuple(s)} to {tuple(t)}")
        stats = SolverStats(
            nodes_expanded=int(np.count_nonzero(grid_dist <= dist[target])),
            runtime_ms=(time.perf_counter() - start) * 1000,
            graph_value=float(dist[target]),
        )
        logger.debug(
            "Geodesic %s -> %s: value %.6g, graph %.6g, %d vertices",
            tuple(s),
            tuple(t),
            value,
            stats.graph_value,
            len(path),
        )
        results.append(DistanceResult(value, path, stats))
    return results


def shortest_path(field: GridField, s: PointLike, t: PointLike) -> DistanceResult:
    """Geodesic between two points of an unfolded grid field.

    The search always runs from the lexicographically smaller endpoint, so swapping
    the endpoints gives the same value and the reversed path.
    """
    s, t = as_point(s), as_point(t)
    if t < s:
        (result,) = shortest_paths(field, t, [s])
        return result._replace(path=result.path.reversed())
    (result,) = shortest_paths(field, s, [t])
    return result


def distance_on_field(field: GridField, xi1: PointLike, xi2: PointLike) -> DistanceResult:
    """Folded distance using a prebuilt unfolded field of the same medium."""
    xi1, xi2 = as_point(xi1), as_point(xi2)
    eps = field.params.epsilon
    if xi1 == xi2:
        return DistanceResult(0.0, Path([xi1, xi1]), SolverStats(0, 0.0, 0.0))
    result = shortest_path(field, xi1.scaled(1 / eps), xi2.scaled(1 / eps))
    vertices = result.path.vertices * eps
    vertices[0] = xi1
    vertices[-1] = xi2
    return DistanceResult(result.value * eps, Path(vertices), result.stats)


def distance_folded(
    shape: InclusionShape,
    params: MetricParams,
    xi1: PointLike,
    xi2: PointLike,
    spec: Optional[GridSpec] = None,
) -> DistanceResult:
    """Distance between folded points in the medium of period ``params.epsilon``.

    The query is unfolded by the period, solved on a grid window around the
    unfolded endpoints, and scaled back.

    Raises:
        ResourceLimitError: If the unfolded window is too large.
    """
    if spec is None:
        spec = GridSpec()
    xi1, xi2 = as_point(xi1), as_point(xi2)
    if xi1 == xi2:
        return DistanceResult(0.0, Path([xi1, xi1]), SolverStats(0, 0.0, 0.0))
    eps = params.epsilon
    u1, u2 = xi1.scaled(1 / eps), xi2.scaled(1 / eps)
    _check_endpoints(shape, params, [u1, u2])
    field = build_field(shape, params, spec.around(u1, u2))
    return distance_on_field(field, xi1, xi2)
