"""Polyline curves, the length functional and curve surgeries.

Paths live in folded coordinates. The length functional and the surgeries unfold
by the period internally, so the same path can be measured against media of
different periods.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry
from .coefficient import MetricParams
from .errors import CurveError
from .geometry import BOUNDARY_TOL, InclusionShape
from .types import Point2, PointLike, Table, as_point, format_float
from .utils import parallel_map

if TYPE_CHECKING:
    from .grid_solver import GridSpec

__all__ = [
    "CONTACT_TOL",
    "Path",
    "length_functional",
    "piecewise_geodesic_refine",
    "push_to_walls",
    "segment_cost",
    "snap_to_matrix",
]

logger = logging.getLogger(__name__)

# Inclusion pieces no longer than this (in unfolded units) are boundary contact.
CONTACT_TOL = 1e-9

_SQRT2 = math.sqrt(2)


class Path:
    """Piecewise-linear curve given by its vertices.

    Consecutive duplicate vertices are dropped. A path whose vertices all coincide
    is kept as the constant curve ``[p, p]``.
    """

    __slots__ = ("_vertices",)

    def __init__(self, vertices: Iterable[PointLike]):
        if not isinstance(vertices, np.ndarray):
            vertices = list(vertices)
        arr = np.array(vertices, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
            raise CurveError(f"A path needs vertices of shape (n, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise CurveError("Path vertices must be finite")
        keep = np.ones(len(arr), dtype=bool)
        keep[1:] = np.any(np.diff(arr, axis=0) != 0, axis=1)
        arr = arr[keep]
        if len(arr) == 1:
            arr = np.vstack([arr, arr])
        arr.setflags(write=False)
        self._vertices = arr

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    def __len__(self) -> int:
        return len(self._vertices)

    def __iter__(self) -> Iterator[Point2]:
        return (Point2(float(x), float(y)) for x, y in self._vertices)

    def __eq__(self, other) -> bool:
        if isinstance(other, Path):
            return np.array_equal(self._vertices, other._vertices)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Path({len(self)} vertices, {tuple(self.start)} -> {tuple(self.end)})"

    @property
    def start(self) -> Point2:
        return Point2(*map(float, self._vertices[0]))

    @property
    def end(self) -> Point2:
        return Point2(*map(float, self._vertices[-1]))

    @property
    def is_degenerate(self) -> bool:
        return len(self) == 2 and self.start == self.end

    @property
    def segment_lengths(self) -> np.ndarray:
        d = np.diff(self._vertices, axis=0)
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def euclidean_length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def arclength(self) -> np.ndarray:
        """Arc-length parameter of every vertex."""
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    def points_at(self, s: Sequence[float]) -> np.ndarray:
        """Points at arc-length parameters `s`, clipped to the path."""
        cum = self.arclength
        s = np.clip(np.asarray(s, dtype=float), 0.0, cum[-1])
        if cum[-1] == 0:
            return np.repeat(self._vertices[:1], len(s), axis=0)
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(self) - 2)
        lengths = self.segment_lengths
        frac = np.where(lengths[i] > 0, (s - cum[i]) / lengths[i], 0.0)
        v = self._vertices
        return v[i] + frac[:, None] * (v[i + 1] - v[i])

    def scaled(self, factor: float) -> Path:
        return Path(self._vertices * factor)

    def reversed(self) -> Path:
        return Path(self._vertices[::-1])

    @classmethod
    def concatenate(cls, paths: Iterable[Path]) -> Path:
        """Join paths end to start; shared junction vertices appear once."""
        return cls(np.vstack([p.vertices for p in paths]))

    def distances_from(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to this polyline."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        a = self._vertices[:-1]
        d = self._vertices[1:] - a
        dd = np.einsum("ij,ij->i", d, d)
        rel = points[:, None, :] - a[None, :, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dd > 0, np.einsum("psj,sj->ps", rel, d) / dd, 0.0)
        t = np.clip(t, 0.0, 1.0)
        gap = rel - t[..., None] * d[None, :, :]
        return np.hypot(gap[..., 0], gap[..., 1]).min(axis=1)

    def deviation_from(self, other: Path) -> float:
        """Largest distance from this path to `other`.

        Evaluated at the vertices and segment midpoints of this path.
        """
        v = self._vertices
        samples = np.vstack([v, (v[:-1] + v[1:]) / 2])
        return float(other.distances_from(samples).max())

    def hausdorff_distance(self, other: Path) -> float:
        return max(self.deviation_from(other), other.deviation_from(self))

    def records(self) -> Table:
        return Table(
            fields=["x", "y"],
            records=[{"x": format_float(x), "y": format_float(y)} for x, y in self],
        )


def _inclusion_fraction(shape: InclusionShape, a: np.ndarray, b: np.ndarray) -> float:
    """Fraction of the unfolded segment from `a` to `b` inside inclusions."""
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    fraction = 0.0
    for t0, t1, _ in geometry.segment_inclusion_intervals(shape, a, b):
        if (t1 - t0) * length > CONTACT_TOL:
            fraction += t1 - t0
    return fraction


def segment_cost(
    shape: InclusionShape, params: MetricParams, a: PointLike, b: PointLike
) -> float:
    """Length functional of the single segment from `a` to `b`."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    if length == 0:
        return 0.0
    fraction = _inclusion_fraction(shape, a / params.epsilon, b / params.epsilon)
    if fraction == 0:
        return length
    weight = params.inclusion_weight
    if math.isinf(weight):
        return math.inf
    return length * ((1 - fraction) + weight * fraction)


def length_functional(shape: InclusionShape, params: MetricParams, path: Path) -> float:
    """Integral of the contrast coefficient along `path`.

    Every segment is split exactly at its crossings with the tiled inclusion
    boundaries and each piece is charged its length times its phase coefficient.
    Returns ``math.inf`` for obstacles crossed along a piece of positive length.
    """
    v = path.vertices
    total = 0.0
    for a, b in zip(v[:-1], v[1:]):
        total += segment_cost(shape, params, a, b)
        if math.isinf(total):
            break
    return total


def _in_matrix(shape: InclusionShape, u: PointLike) -> bool:
    return geometry.periodic_signed_distance(shape, u) >= -BOUNDARY_TOL


def snap_to_matrix(shape: InclusionShape, epsilon: float, xi: PointLike) -> Point2:
    """Nearest point of the scaled matrix phase to `xi`.

    Points already in the matrix phase (boundary included) are returned unchanged.
    """
    if not epsilon > 0:
        raise CurveError(f"epsilon must be positive, got {epsilon}")
    xi = as_point(xi)
    u = xi.scaled(1 / epsilon)
    if _in_matrix(shape, u):
        return xi
    cell = Point2(math.floor(u.x), math.floor(u.y))
    boundary = shape.boundary_point_toward(u - cell) + cell
    snapped = boundary.scaled(epsilon)
    assert snapped.distance(xi) <= _SQRT2 * epsilon * (1 + 1e-9)
    return snapped


def _boundary_detour(
    shape: InclusionShape, cell: Tuple[int, int], entry: np.ndarray, exit_: np.ndarray
) -> np.ndarray:
    """Unfolded boundary walk around the inclusion in `cell` from entry to exit."""
    offset = np.asarray(cell, dtype=float)
    a = shape.boundary_point_toward(entry - offset)
    b = shape.boundary_point_toward(exit_ - offset)
    walk = shape.boundary_walk(a, b)
    return np.vstack([np.array([a], dtype=float), walk]) + offset


def push_to_walls(shape: InclusionShape, epsilon: float, path: Path) -> Path:
    """Replace every inclusion crossing of `path` by a walk along the inclusion wall.

    Each maximal piece of the path inside a scaled inclusion is replaced by the
    shorter boundary walk between its entry and exit points. The result lies in
    the closure of the scaled matrix phase.

    Raises:
        CurveError: If an endpoint of `path` lies inside an inclusion.
    """
    if not epsilon > 0:
        raise CurveError(f"epsilon must be positive, got {epsilon}")
    folded = path.vertices
    u = folded / epsilon
    for end in (u[0], u[-1]):
        if not _in_matrix(shape, end):
            raise CurveError(
                f"Path endpoint {tuple(end * epsilon)} lies inside an inclusion"
            )

    out: List[np.ndarray] = [folded[:1]]
    pending: Optional[Tuple[Tuple[int, int], np.ndarray]] = None
    changed = False
    for i in range(len(u) - 1):
        a, b = u[i], u[i + 1]
        d = b - a
        length = math.hypot(d[0], d[1])
        pieces = [
            piece
            for piece in geometry.segment_inclusion_intervals(shape, a, b)
            if (piece[1] - piece[0]) * length > CONTACT_TOL
        ]
        if pending is not None and not (
            pieces and pieces[0][0] <= 1e-9 and pieces[0][2] == pending[0]
        ):
            # The previous piece ended exactly at vertex a.
            out.append(_boundary_detour(shape, pending[0], pending[1], a) * epsilon)
            pending = None
        for t0, t1, cell in pieces:
            changed = True
            if pending is None:
                pending = (cell, a + t0 * d)
            if t1 < 1.0:
                out.append(
                    _boundary_detour(shape, pending[0], pending[1], a + t1 * d)
                    * epsilon
                )
                pending = None
        if pending is None:
            out.append(folded[i + 1 : i + 2])
    if pending is not None:
        out.append(_boundary_detour(shape, pending[0], pending[1], u[-1]) * epsilon)
        out.append(folded[-1:])

    if not changed:
        return path
    result = Path(np.vstack(out))
    assert result.deviation_from(path) <= _SQRT2 * epsilon * (1 + 1e-6)
    return result


def _refine_piece(args) -> Path:
    # Local import: the solver itself depends on this module.
    from .grid_solver import distance_folded

    shape, params, a, b, spec = args
    return distance_folded(shape, params, a, b, spec).path


def piecewise_geodesic_refine(
    shape: InclusionShape,
    params: MetricParams,
    path: Path,
    M: int,
    spec: Optional[GridSpec] = None,
    workers: int = 1,
) -> Path:
    """Replace `path` by a chain of geodesics through `M + 1` waypoints.

    Waypoints are equally spaced in arc length along `path`. For hard obstacles,
    interior waypoints are moved onto the nearest obstacle wall first.

    Args:
        shape: Inclusion shape.
        params: Metric parameters; the path is in folded coordinates.
        path: Curve to refine.
        M: Number of geodesic pieces.
        spec: Grid settings for the piece solves.
        workers: Number of worker processes for the piece solves.
    """
    from .grid_solver import GridSpec

    if M < 1:
        raise CurveError(f"Refinement needs at least one piece, got M={M}")
    if spec is None:
        spec = GridSpec()
    waypoints = path.points_at(np.linspace(0.0, path.euclidean_length, M + 1))
    waypoints[0] = path.vertices[0]
    waypoints[-1] = path.vertices[-1]
    points = [Point2(float(x), float(y)) for x, y in waypoints]
    if params.is_obstacle:
        points[1:-1] = [snap_to_matrix(shape, params.epsilon, p) for p in points[1:-1]]
    logger.debug("Refining path with %d geodesic pieces", M)
    pieces = parallel_map(
        _refine_piece,
        [(shape, params, a, b, spec) for a, b in zip(points[:-1], points[1:])],
        workers=workers,
    )
    return Path.concatenate(pieces)
