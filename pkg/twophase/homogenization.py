"""Estimates of the homogenized norm.

The homogenized norm of a direction is the limit of unit-period distances
``d(0, R * xi) / R`` as the separation `R` grows. Estimates use the single-scale
coefficient, which has the same limit as the contrast-scaled one for ``p < 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .coefficient import MetricParams
from .curves import snap_to_matrix
from .errors import ParameterError
from .geometry import InclusionShape
from .grid_solver import GridSpec, build_field, shortest_paths
from .types import Point2, PointLike, Table, as_point, format_float
from .utils import parallel_map

__all__ = [
    "NormReport",
    "NormTable",
    "PsiEstimate",
    "check_norm_properties",
    "estimate_psi",
    "psi_table",
]

logger = logging.getLogger(__name__)

DEFAULT_R_LIST = (4.0, 8.0, 16.0, 32.0)
CONVERGENCE_TOL = 0.01


@dataclass(frozen=True)
class PsiEstimate:
    """Homogenized norm estimate for one unit direction.

    Attributes:
        direction: Unit direction.
        value: Estimate at the largest separation.
        window_sizes: Endpoint separations used.
        sequence: Per-separation estimates ``d(0, R * direction) / R``.
        cauchy_tail: Largest change between consecutive estimates over the tail.
        converged: Whether `cauchy_tail` is below the convergence tolerance.
    """

    direction: Point2
    value: float
    window_sizes: Tuple[float, ...]
    sequence: Tuple[float, ...]
    cauchy_tail: float
    converged: bool


def _check_r_list(R_list: Sequence[float]) -> Tuple[float, ...]:
    R = tuple(float(r) for r in R_list)
    if len(R) < 4:
        raise ParameterError(f"R_list needs at least 4 entries, got {len(R)}")
    if any(b <= a for a, b in zip(R, R[1:])) or R[0] <= 0:
        raise ParameterError(f"R_list must be positive and increasing, got {R}")
    if R[-1] < 16:
        raise ParameterError(f"The largest separation must be at least 16, got {R[-1]}")
    return R


def estimate_psi(
    shape: InclusionShape,
    beta: float,
    xi: PointLike,
    R_list: Sequence[float] = DEFAULT_R_LIST,
    spec: Optional[GridSpec] = None,
) -> PsiEstimate:
    """Estimate the homogenized norm of direction `xi`.

    All separations are served by one graph search from the origin. Endpoints are
    snapped to the matrix phase at unit scale and every distance is divided by the
    separation of the snapped endpoints.

    Args:
        shape: Inclusion shape.
        beta: Inclusion contrast of the single-scale coefficient.
        xi: Direction; normalized before use.
        R_list: Increasing endpoint separations.
        spec: Grid settings.
    """
    if spec is None:
        spec = GridSpec()
    R = _check_r_list(R_list)
    xi = as_point(xi)
    norm = xi.norm()
    if norm == 0:
        raise ParameterError("Direction must be non-zero")
    direction = xi.scaled(1 / norm)
    params = MetricParams.single_scale(beta)

    source = snap_to_matrix(shape, 1.0, (0.0, 0.0))
    targets = [snap_to_matrix(shape, 1.0, direction.scaled(r)) for r in R]
    field_ = build_field(shape, params, spec.around(source, *targets))
    results = shortest_paths(field_, source, targets)
    sequence = tuple(
        res.value / (t - source).norm() for res, t in zip(results, targets)
    )

    steps = [abs(b - a) for a, b in zip(sequence, sequence[1:])]
    tail = max(steps[-2:])
    estimate = PsiEstimate(
        direction=direction,
        value=sequence[-1],
        window_sizes=R,
        sequence=sequence,
        cauchy_tail=tail,
        converged=tail < CONVERGENCE_TOL,
    )
    logger.info(
        "psi(%.4f, %.4f) = %.6f (tail %.2g)",
        direction.x,
        direction.y,
        estimate.value,
        estimate.cauchy_tail,
    )
    return estimate


@dataclass(frozen=True)
class NormTable:
    """Homogenized norm sampled over equally spaced directions."""

    beta: float
    angles: Tuple[float, ...]
    estimates: Tuple[PsiEstimate, ...] = field(repr=False)

    @property
    def directions(self) -> List[Point2]:
        return [e.direction for e in self.estimates]

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.estimates])

    @property
    def window_sizes(self) -> Tuple[float, ...]:
        return self.estimates[0].window_sizes

    @property
    def converged(self) -> List[bool]:
        return [e.converged for e in self.estimates]

    def psi(self, v: PointLike) -> float:
        """1-homogeneous extension of the sampled values, linear in angle."""
        v = as_point(v)
        r = v.norm()
        if r == 0:
            return 0.0
        theta = math.atan2(v.y, v.x) % (2 * math.pi)
        angles = np.asarray(self.angles)
        values = self.values
        order = np.argsort(angles)
        angles = angles[order]
        values = values[order]
        # Close the circle for interpolation across the 0 / 2π seam.
        angles = np.concatenate([angles[-1:] - 2 * math.pi, angles, angles[:1] + 2 * math.pi])
        values = np.concatenate([values[-1:], values, values[:1]])
        return r * float(np.interp(theta, angles, values))

    def records(self) -> Table:
        return Table(
            fields=["angle", "psi", "R_last", "cauchy_tail", "converged"],
            records=[
                {
                    "angle": format_float(angle),
                    "psi": format_float(e.value),
                    "R_last": format_float(e.window_sizes[-1]),
                    "cauchy_tail": format_float(e.cauchy_tail),
                    "converged": str(e.converged).lower(),
                }
                for angle, e in zip(self.angles, self.estimates)
            ],
        )


def _estimate_direction(args) -> PsiEstimate:
    shape, beta, direction, R_list, spec = args
    return estimate_psi(shape, beta, direction, R_list, spec)


def psi_table(
    shape: InclusionShape,
    beta: float,
    n_directions: int = 8,
    R_list: Sequence[float] = DEFAULT_R_LIST,
    spec: Optional[GridSpec] = None,
    workers: int = 1,
) -> NormTable:
    """Estimate the homogenized norm at `n_directions` equally spaced angles."""
    if n_directions < 8:
        raise ParameterError("n_directions ≥ 8 required")
    R = _check_r_list(R_list)
    angles = tuple(2 * math.pi * j / n_directions for j in range(n_directions))
    jobs = [
        (shape, beta, Point2(math.cos(a), math.sin(a)), R, spec) for a in angles
    ]
    estimates = parallel_map(_estimate_direction, jobs, workers=workers)
    return NormTable(beta=beta, angles=angles, estimates=tuple(estimates))


@dataclass
class NormReport:
    """Sampled checks of the norm axioms on a `NormTable`.

    Attributes:
        tolerance: Relative tolerance of every check.
        homogeneity_residuals: Per direction, the largest relative change between
            the estimates at separations `R` and `2R`.
        homogeneity_violations: Converged directions whose residual exceeds the
            tolerance.
        triangle_violations: ``(i, j, psi(xi_i + xi_j), psi_i + psi_j)`` for
            direction pairs breaking the triangle inequality.
        bound_violations: Directions with values outside ``[1, beta]``.
    """

    tolerance: float
    homogeneity_residuals: List[float]
    homogeneity_violations: List[int]
    triangle_violations: List[Tuple[int, int, float, float]]
    bound_violations: List[int]
    pairs_checked: int

    @property
    def passed(self) -> bool:
        return not (
            self.homogeneity_violations
            or self.triangle_violations
            or self.bound_violations
        )


def _doubling_pairs(R: Sequence[float]) -> List[Tuple[int, int]]:
    # Only the last three separations; endpoint snapping dominates below them.
    tail = len(R) - 3
    pairs = [
        (i, j)
        for i, a in enumerate(R)
        for j, b in enumerate(R)
        if i >= tail and math.isclose(b, 2 * a, rel_tol=1e-9)
    ]
    return pairs or [(len(R) - 2, len(R) - 1)]


def check_norm_properties(table: NormTable, tol: float = 0.02) -> NormReport:
    """Check homogeneity, the triangle inequality and the growth bounds."""
    pairs = _doubling_pairs(table.window_sizes)
    residuals = []
    homogeneity_violations = []
    for k, e in enumerate(table.estimates):
        residual = max(abs(e.sequence[j] - e.sequence[i]) / e.sequence[i] for i, j in pairs)
        residuals.append(residual)
        if e.converged and residual > tol:
            homogeneity_violations.append(k)

    values = table.values
    directions = table.directions
    triangle_violations = []
    checked = 0
    for i in range(len(directions)):
        for j in range(i + 1, len(directions)):
            total = directions[i] + directions[j]
            if total.norm() < 1e-9:
                continue
            checked += 1
            lhs = table.psi(total)
            rhs = float(values[i] + values[j])
            if lhs > rhs * (1 + tol):
                triangle_violations.append((i, j, lhs, rhs))

    lower, upper = min(1.0, table.beta), max(1.0, table.beta)
    bound_violations = [
        k
        for k, v in enumerate(values)
        if v < lower * (1 - tol) or v > upper * (1 + tol)
    ]
    report = NormReport(
        tolerance=tol,
        homogeneity_residuals=residuals,
        homogeneity_violations=homogeneity_violations,
        triangle_violations=triangle_violations,
        bound_violations=bound_violations,
        pairs_checked=checked,
    )
    if not report.passed:
        logger.warning(
            "Norm checks failed: %d homogeneity, %d triangle, %d bound violations",
            len(homogeneity_violations),
            len(triangle_violations),
            len(bound_violations),
        )
    return report
