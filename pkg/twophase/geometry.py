"""Inclusion shapes, their periodic tiling and boundary operations.

A shape describes the inclusion phase inside the unit cell ``(0, 1)²``. Tiling it by
the integer lattice gives the inclusion set; its complement is the matrix phase.
Shapes are open, so boundary points belong to the matrix phase.
"""

from __future__ import annotations

import abc
import math
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np

from .errors import GeometryError
from .types import Point2, PointLike, as_point

__all__ = [
    "ConvexPolygon",
    "Disk",
    "InclusionShape",
    "Square",
    "boundary_geodesic_length",
    "boundary_point_toward",
    "cell_translates",
    "contains",
    "fold",
    "periodic_contains",
    "periodic_signed_distance",
    "periodic_signed_distance_array",
    "segment_inclusion_intervals",
    "shape_from_config",
    "signed_distance",
]

# Points within this distance of the boundary are treated as boundary points.
BOUNDARY_TOL = 1e-9
# Projection candidates closer than this to the minimum are ties.
_TIE_TOL = 1e-9
# Segment clipping works against the shape shrunk by this amount so that
# curves running along the boundary are not charged as inclusion pieces.
_CLIP_SHRINK = 1e-12

BOUNDARY_WALK_SEGMENTS = 64


class InclusionShape(abc.ABC):
    """An open convex inclusion strictly inside the unit cell."""

    kind: str = ""

    def _validate(self) -> None:
        margin = self.margin
        if not margin > 0:
            raise GeometryError(
                f"{self.kind} must lie strictly inside the unit cell (margin {margin})"
            )

    @abc.abstractmethod
    def _key(self) -> Tuple:
        pass

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, InclusionShape):
            return type(self) is type(other) and self._key() == other._key()
        return NotImplemented

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._key()))

    @property
    @abc.abstractmethod
    def margin(self) -> float:
        """Distance from the shape's closure to the unit-cell boundary."""

    @property
    @abc.abstractmethod
    def perimeter(self) -> float:
        pass

    @property
    @abc.abstractmethod
    def centroid(self) -> Point2:
        pass

    @property
    @abc.abstractmethod
    def centrally_symmetric(self) -> bool:
        pass

    @abc.abstractmethod
    def to_config(self) -> Dict[str, Any]:
        """The shape as config-file key-value pairs."""

    @abc.abstractmethod
    def signed_distance_array(self, xy: np.ndarray) -> np.ndarray:
        """Signed distance for an array of points with trailing dimension 2."""

    def signed_distance(self, x: PointLike) -> float:
        return float(self.signed_distance_array(np.asarray(as_point(x), dtype=float)))

    def contains(self, x: PointLike) -> bool:
        return self.signed_distance(x) < 0

    def inradius_at(self, x: PointLike) -> float:
        """Radius of the largest ball centred at `x` that lies in the shape."""
        return max(0.0, -self.signed_distance(x))

    @abc.abstractmethod
    def boundary_point_toward(self, x: PointLike) -> Point2:
        """Nearest boundary point to `x`.

        Ties between equidistant boundary points are broken by the smallest polar
        angle of the direction from `x` to the candidate.
        """

    @abc.abstractmethod
    def boundary_point_at(self, s: np.ndarray) -> np.ndarray:
        """Boundary points at arc-length parameters `s` (taken modulo perimeter)."""

    @abc.abstractmethod
    def boundary_parameter(self, x: PointLike) -> float:
        """Arc-length parameter in ``[0, perimeter)`` of a boundary point."""

    @abc.abstractmethod
    def boundary_walk(
        self, a: PointLike, b: PointLike, segments: int = BOUNDARY_WALK_SEGMENTS
    ) -> np.ndarray:
        """Polyline from boundary point `a` to boundary point `b`.

        The polyline follows the shorter way around the boundary and stays in the
        closure of the matrix phase. The returned vertices exclude `a` and end
        with `b`.
        """

    @abc.abstractmethod
    def segment_intervals(
        self, starts: np.ndarray, direction: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Parameter intervals of segments lying inside the shape.

        Args:
            starts: Segment start points, shape ``(m, 2)``.
            direction: Common segment direction ``end - start``, shape ``(2,)``.

        Returns:
            ``(t0, t1, hit)`` arrays of shape ``(m,)``. Where `hit` is true the
            open segment piece ``start + t * direction`` for ``t0 < t < t1`` lies
            inside the shape, with ``0 <= t0 < t1 <= 1``.
        """

    def _check_on_boundary(self, *points: Point2) -> None:
        for p in points:
            sd = self.signed_distance(p)
            if abs(sd) > BOUNDARY_TOL:
                raise GeometryError(
                    f"Point {tuple(p)} is not on the {self.kind} boundary "
                    f"(signed distance {sd:g})"
                )

    def boundary_geodesic_length(self, a: PointLike, b: PointLike) -> float:
        """Length of the shorter boundary path between two boundary points."""
        a, b = as_point(a), as_point(b)
        self._check_on_boundary(a, b)
        delta = abs(self.boundary_parameter(a) - self.boundary_parameter(b))
        return min(delta, self.perimeter - delta)


class Disk(InclusionShape):
    kind = "disk"

    def __init__(self, center: PointLike, radius: float):
        self.center = as_point(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise GeometryError(f"Disk radius must be positive, got {radius}")
        self._validate()

    def __repr__(self) -> str:
        return f"Disk(center={tuple(self.center)}, radius={self.radius})"

    def _key(self) -> Tuple:
        return (self.center, self.radius)

    @property
    def margin(self) -> float:
        cx, cy = self.center
        r = self.radius
        return min(cx - r, cy - r, 1 - cx - r, 1 - cy - r)

    @property
    def perimeter(self) -> float:
        return 2 * math.pi * self.radius

    @property
    def centroid(self) -> Point2:
        return self.center

    @property
    def centrally_symmetric(self) -> bool:
        return True

    def to_config(self) -> Dict[str, Any]:
        return {"shape": self.kind, "center": list(self.center), "radius": self.radius}

    def signed_distance_array(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return (
            np.hypot(xy[..., 0] - self.center.x, xy[..., 1] - self.center.y)
            - self.radius
        )

    def boundary_point_toward(self, x: PointLike) -> Point2:
        v = as_point(x) - self.center
        n = v.norm()
        if n <= _TIE_TOL:
            return Point2(self.center.x + self.radius, self.center.y)
        return self.center + v.scaled(self.radius / n)

    def _angle(self, x: Point2) -> float:
        return math.atan2(x.y - self.center.y, x.x - self.center.x) % (2 * math.pi)

    def boundary_point_at(self, s: np.ndarray) -> np.ndarray:
        theta = np.asarray(s, dtype=float) / self.radius
        return np.stack(
            [
                self.center.x + self.radius * np.cos(theta),
                self.center.y + self.radius * np.sin(theta),
            ],
            axis=-1,
        )

    def boundary_parameter(self, x: PointLike) -> float:
        return self.radius * self._angle(as_point(x))

    def boundary_walk(
        self, a: PointLike, b: PointLike, segments: int = BOUNDARY_WALK_SEGMENTS
    ) -> np.ndarray:
        a, b = as_point(a), as_point(b)
        theta_a = self._angle(a)
        delta = (self._angle(b) - theta_a) % (2 * math.pi)
        if delta > math.pi:
            delta -= 2 * math.pi
        if delta == 0:
            return np.array([b], dtype=float)
        # Circumscribed polygon: each step is tangent to the circle at its
        # midpoint, so it touches the disk without entering it.
        steps = max(1, math.ceil(abs(delta) / (2 * math.pi / segments) - 1e-9))
        step = delta / steps
        outer = self.radius / math.cos(step / 2)
        angles = theta_a + (np.arange(steps) + 0.5) * step
        vertices = np.stack(
            [
                self.center.x + outer * np.cos(angles),
                self.center.y + outer * np.sin(angles),
            ],
            axis=-1,
        )
        return np.vstack([vertices, np.array([b], dtype=float)])

    def segment_intervals(
        self, starts: np.ndarray, direction: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        d = np.asarray(direction, dtype=float)
        r = self.radius - _CLIP_SHRINK
        w = starts - np.asarray(self.center)
        dd = float(d @ d)
        b = 2 * (w @ d)
        c = np.einsum("ij,ij->i", w, w) - r * r
        disc = b * b - 4 * dd * c
        hit = disc > 0
        root = np.sqrt(np.where(hit, disc, 0.0))
        t0 = np.maximum((-b - root) / (2 * dd), 0.0)
        t1 = np.minimum((-b + root) / (2 * dd), 1.0)
        hit &= t1 > t0
        return t0, t1, hit


class ConvexPolygon(InclusionShape):
    """Convex polygon given by its vertices in counterclockwise order."""

    kind = "polygon"

    def __init__(self, vertices: Iterable[PointLike]):
        self.vertices = tuple(as_point(v) for v in vertices)
        n = len(self.vertices)
        if n < 3:
            raise GeometryError(f"A polygon needs at least 3 vertices, got {n}")
        v = np.array(self.vertices, dtype=float)
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not np.all(cross > 0):
            raise GeometryError(
                "Polygon vertices must be strictly convex and counterclockwise"
            )
        lengths = np.hypot(e[:, 0], e[:, 1])
        self._v = v
        self._e = e
        self._lengths = lengths
        self._cum = np.concatenate([[0.0], np.cumsum(lengths)])
        self._normals = np.stack([e[:, 1], -e[:, 0]], axis=-1) / lengths[:, None]
        self._offsets = np.einsum("ij,ij->i", self._normals, v)
        self._validate()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(vertices={[tuple(p) for p in self.vertices]})"

    def _key(self) -> Tuple:
        return self.vertices

    @property
    def margin(self) -> float:
        v = self._v
        return float(min(v.min(), (1 - v).min()))

    @property
    def perimeter(self) -> float:
        return float(self._cum[-1])

    @property
    def centroid(self) -> Point2:
        v = self._v
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        area = cross.sum() / 2
        c = ((v + w) * cross[:, None]).sum(axis=0) / (6 * area)
        return Point2(float(c[0]), float(c[1]))

    @property
    def centrally_symmetric(self) -> bool:
        c = np.asarray(self.centroid)
        mirrored = 2 * c - self._v
        gaps = np.linalg.norm(mirrored[:, None, :] - self._v[None, :, :], axis=-1)
        return bool(np.all(gaps.min(axis=1) < 1e-12))

    def to_config(self) -> Dict[str, Any]:
        return {"shape": self.kind, "vertices": [list(p) for p in self.vertices]}

    def _edge_projections(self, xy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Nearest points on each edge and their distances, shapes (N, E, 2), (N, E)."""
        rel = xy[:, None, :] - self._v[None, :, :]
        t = np.einsum("nej,ej->ne", rel, self._e) / (self._lengths**2)
        t = np.clip(t, 0.0, 1.0)
        nearest = self._v[None, :, :] + t[..., None] * self._e[None, :, :]
        dist = np.linalg.norm(xy[:, None, :] - nearest, axis=-1)
        return nearest, dist

    def signed_distance_array(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        flat = xy.reshape(-1, 2)
        _, dist = self._edge_projections(flat)
        dmin = dist.min(axis=1)
        inside = np.all(flat @ self._normals.T - self._offsets < 0, axis=1)
        return np.where(inside, -dmin, dmin).reshape(xy.shape[:-1])

    def boundary_point_toward(self, x: PointLike) -> Point2:
        x = as_point(x)
        nearest, dist = self._edge_projections(np.array([x], dtype=float))
        nearest, dist = nearest[0], dist[0]
        candidates = nearest[dist <= dist.min() + _TIE_TOL]
        offsets = candidates - np.asarray(x)
        if np.any(np.hypot(offsets[:, 0], offsets[:, 1]) == 0):
            return x
        angles = np.arctan2(offsets[:, 1], offsets[:, 0]) % (2 * math.pi)
        best = candidates[int(np.argmin(angles))]
        return Point2(float(best[0]), float(best[1]))

    def boundary_point_at(self, s: np.ndarray) -> np.ndarray:
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        i = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self._v) - 1)
        frac = (s - self._cum[i]) / self._lengths[i]
        return self._v[i] + frac[..., None] * self._e[i]

    def boundary_parameter(self, x: PointLike) -> float:
        x = as_point(x)
        _, dist = self._edge_projections(np.array([x], dtype=float))
        i = int(np.argmin(dist[0]))
        along = min(x.distance(self.vertices[i]), float(self._lengths[i]))
        return float((self._cum[i] + along) % self.perimeter)

    def boundary_walk(
        self, a: PointLike, b: PointLike, segments: int = BOUNDARY_WALK_SEGMENTS
    ) -> np.ndarray:
        a, b = as_point(a), as_point(b)
        perimeter = self.perimeter
        sa = self.boundary_parameter(a)
        forward = (self.boundary_parameter(b) - sa) % perimeter
        vertex_params = self._cum[:-1]
        if forward <= perimeter - forward:
            offsets = (vertex_params - sa) % perimeter
            span = forward
        else:
            offsets = (sa - vertex_params) % perimeter
            span = perimeter - forward
        between = np.flatnonzero((offsets > 1e-12) & (offsets < span - 1e-12))
        between = between[np.argsort(offsets[between], kind="stable")]
        return np.vstack([self._v[between], np.array([b], dtype=float)])

    def segment_intervals(
        self, starts: np.ndarray, direction: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        d = np.asarray(direction, dtype=float)
        # Inside iff t * den < num for every edge.
        num = (self._offsets - _CLIP_SHRINK)[None, :] - starts @ self._normals.T
        den = self._normals @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / den
        lower = np.where(den < 0, ratio, -np.inf).max(axis=1)
        upper = np.where(den > 0, ratio, np.inf).min(axis=1)
        parallel_ok = np.all(np.where(den == 0, num > 0, True), axis=1)
        t0 = np.maximum(lower, 0.0)
        t1 = np.minimum(upper, 1.0)
        hit = parallel_ok & (t1 > t0)
        return t0, t1, hit


class Square(ConvexPolygon):
    """Axis-aligned square."""

    kind = "square"

    def __init__(self, center: PointLike, half_side: float):
        self.center = as_point(center)
        self.half_side = float(half_side)
        if not self.half_side > 0:
            raise GeometryError(f"Square half side must be positive, got {half_side}")
        cx, cy = self.center
        h = self.half_side
        super().__init__([(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)])

    def __repr__(self) -> str:
        return f"Square(center={tuple(self.center)}, half_side={self.half_side})"

    def _key(self) -> Tuple:
        return (self.center, self.half_side)

    def to_config(self) -> Dict[str, Any]:
        return {
            "shape": self.kind,
            "center": list(self.center),
            "half_side": self.half_side,
        }


def contains(shape: InclusionShape, x: PointLike) -> bool:
    """Membership in the shape within a single cell."""
    return shape.contains(x)


def signed_distance(shape: InclusionShape, x: PointLike) -> float:
    return shape.signed_distance(x)


def boundary_point_toward(shape: InclusionShape, x: PointLike) -> Point2:
    return shape.boundary_point_toward(x)


def boundary_geodesic_length(shape: InclusionShape, a: PointLike, b: PointLike) -> float:
    return shape.boundary_geodesic_length(a, b)


def fold(xy: np.ndarray) -> np.ndarray:
    """Map points componentwise into the unit cell ``[0, 1)²``."""
    xy = np.asarray(xy, dtype=float)
    return xy - np.floor(xy)


def periodic_signed_distance_array(shape: InclusionShape, xy: np.ndarray) -> np.ndarray:
    """Signed distance to the tiled inclusion set.

    Exact inside the inclusions; outside it is the distance to the inclusion of the
    point's own cell, which bounds the true distance from above.
    """
    return shape.signed_distance_array(fold(xy))


def periodic_signed_distance(shape: InclusionShape, x: PointLike) -> float:
    return float(periodic_signed_distance_array(shape, np.asarray(as_point(x))))


def periodic_contains(shape: InclusionShape, x: PointLike) -> bool:
    """Membership in the tiled inclusion set."""
    return periodic_signed_distance(shape, x) < 0


def cell_translates(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Integer cells overlapping the box ``[lo, hi]``, shape ``(m, 2)``."""
    lo = np.floor(np.asarray(lo, dtype=float)).astype(np.int64)
    hi = np.floor(np.asarray(hi, dtype=float)).astype(np.int64)
    kx = np.arange(lo[0], hi[0] + 1)
    ky = np.arange(lo[1], hi[1] + 1)
    return np.stack(np.meshgrid(kx, ky, indexing="ij"), axis=-1).reshape(-1, 2)


def segment_inclusion_intervals(
    shape: InclusionShape, a: PointLike, b: PointLike
) -> List[Tuple[float, float, Tuple[int, int]]]:
    """Pieces of the segment from `a` to `b` inside the tiled inclusion set.

    Returns:
        ``(t0, t1, cell)`` triples sorted by `t0`, where the segment parameter
        range ``(t0, t1)`` lies in the inclusion translated to integer `cell`.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    if not d.any():
        return []
    # Inclusions lie strictly inside their cells, so only cells the segment's
    # bounding box overlaps can be hit.
    cells = cell_translates(np.minimum(a, b), np.maximum(a, b))
    t0, t1, hit = shape.segment_intervals(a[None, :] - cells, d)
    idx = np.flatnonzero(hit)
    idx = idx[np.argsort(t0[idx], kind="stable")]
    return [
        (float(t0[i]), float(t1[i]), (int(cells[i, 0]), int(cells[i, 1]))) for i in idx
    ]


def shape_from_config(config: Dict[str, Any]) -> InclusionShape:
    """Build a shape from the mapping produced by `InclusionShape.to_config`."""
    kind = config.get("shape", Disk.kind)
    try:
        if kind == Disk.kind:
            return Disk(config["center"], config["radius"])
        if kind == Square.kind:
            return Square(config["center"], config["half_side"])
        if kind == ConvexPolygon.kind:
            return ConvexPolygon(config["vertices"])
    except GeometryError:
        raise
    except KeyError as e:
        raise GeometryError(f"Shape {kind!r} needs {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise GeometryError(f"Malformed {kind} parameters: {e}") from None
    raise GeometryError(f"Unknown shape {kind!r}")
