"""High opacity coefficient of an inclusion and the avoidance check.

Above the high opacity coefficient, walking around an inclusion is always cheaper
than crossing it, so geodesics between matrix points stay in the matrix. The
estimate used here is the largest ratio of boundary distance to chord length over
pairs of boundary points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import optimize

from .coefficient import MetricParams
from .curves import Path
from .errors import ParameterError
from .geometry import BOUNDARY_TOL, InclusionShape, periodic_signed_distance_array
from .grid_solver import GridSpec, build_field, shortest_path
from .types import Point2, Table, format_float
from .utils import parallel_map

__all__ = [
    "AvoidanceReport",
    "AvoidanceTrial",
    "OpacityEstimate",
    "estimate_lambda",
    "incursion_depth",
    "verify_avoidance",
]

logger = logging.getLogger(__name__)

_REFINE_SWEEPS = 3


class OpacityEstimate(NamedTuple):
    lambda_hat: float
    worst_pair: Tuple[Point2, Point2]
    n_samples: int


def _ratio(shape: InclusionShape, sa: float, sb: float) -> float:
    perimeter = shape.perimeter
    a, b = shape.boundary_point_at(np.array([sa, sb]))
    chord = math.hypot(*(a - b))
    if chord <= 1e-12 * perimeter:
        return 1.0
    delta = abs(sa - sb) % perimeter
    return min(delta, perimeter - delta) / chord


def _refine(shape: InclusionShape, fixed: float, x: float, step: float) -> Optional[Tuple[float, float]]:
    try:
        res = optimize.minimize_scalar(
            lambda v: -_ratio(shape, v, fixed),
            bracket=(x - step, x, x + step),
            method="golden",
            tol=1e-10,
        )
    except (ValueError, RuntimeError):
        # Flat or non-bracketing neighbourhood: the sample is already locally best.
        return None
    return float(res.x), float(-res.fun)


def estimate_lambda(shape: InclusionShape, n_samples: int = 256) -> OpacityEstimate:
    """Estimate the high opacity coefficient of `shape`.

    Evaluates the boundary-distance to chord ratio over all pairs of `n_samples`
    boundary points equally spaced in arc length, then refines the best pair by
    golden-section search on each parameter in turn.
    """
    if n_samples < 64:
        raise ParameterError(f"n_samples must be at least 64, got {n_samples}")
    perimeter = shape.perimeter
    s = perimeter * np.arange(n_samples) / n_samples
    points = shape.boundary_point_at(s)
    chord = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    delta = np.abs(s[:, None] - s[None, :])
    arc = np.minimum(delta, perimeter - delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(chord > 1e-12 * perimeter, arc / chord, 1.0)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    best = float(ratio[i, j])
    sa, sb = float(s[i]), float(s[j])

    step = perimeter / n_samples
    for _ in range(_REFINE_SWEEPS):
        improved = False
        refined = _refine(shape, sb, sa, step)
        if refined is not None and refined[1] > best:
            sa, best, improved = refined[0], refined[1], True
        refined = _refine(shape, sa, sb, step)
        if refined is not None and refined[1] > best:
            sb, best, improved = refined[0], refined[1], True
        if not improved:
            break

    a, b = shape.boundary_point_at(np.array([sa, sb]))
    estimate = OpacityEstimate(
        lambda_hat=max(best, 1.0),
        worst_pair=(Point2(float(a[0]), float(a[1])), Point2(float(b[0]), float(b[1]))),
        n_samples=n_samples,
    )
    logger.info("High opacity coefficient of %r: %.8f", shape, estimate.lambda_hat)
    return estimate


def incursion_depth(shape: InclusionShape, path: Path, spacing: float) -> float:
    """Deepest point of `path` inside the tiled inclusions (unfolded coordinates).

    The path is sampled every quarter `spacing` along each segment.
    """
    v = path.vertices
    samples = [v]
    for a, b in zip(v[:-1], v[1:]):
        count = max(2, int(math.ceil(math.hypot(*(b - a)) / (spacing / 4))) + 1)
        t = np.linspace(0.0, 1.0, count)[:, None]
        samples.append(a + t * (b - a))
    sd = periodic_signed_distance_array(shape, np.vstack(samples))
    return max(0.0, float(-sd.min()))


class AvoidanceTrial(NamedTuple):
    start: Point2
    end: Point2
    distance: float
    depth: float
    violation: bool


@dataclass
class AvoidanceReport:
    """Incursion depths of single-scale geodesics between random matrix points.

    Attributes:
        beta: Inclusion contrast.
        lambda_hat: High opacity coefficient estimate of the shape.
        spacing: Grid spacing, the allowed incursion depth.
        asserted: Whether ``beta > lambda_hat``, so that avoidance is expected.
        trials: One entry per endpoint pair.
    """

    beta: float
    lambda_hat: float
    spacing: float
    asserted: bool
    trials: List[AvoidanceTrial]

    @property
    def violations(self) -> List[AvoidanceTrial]:
        return [t for t in self.trials if t.violation]

    @property
    def max_depth(self) -> float:
        return max((t.depth for t in self.trials), default=0.0)

    def records(self) -> Table:
        return Table(
            fields=["trial", "sx", "sy", "tx", "ty", "distance", "depth", "violation"],
            records=[
                {
                    "trial": str(k),
                    "sx": format_float(t.start.x),
                    "sy": format_float(t.start.y),
                    "tx": format_float(t.end.x),
                    "ty": format_float(t.end.y),
                    "distance": format_float(t.distance),
                    "depth": format_float(t.depth),
                    "violation": str(t.violation).lower(),
                }
                for k, t in enumerate(self.trials)
            ],
        )


def _random_matrix_points(
    shape: InclusionShape, rng: np.random.Generator, count: int, size: float
) -> np.ndarray:
    points = np.empty((0, 2))
    while len(points) < count:
        draw = rng.uniform(0.0, size, size=(2 * count, 2))
        keep = periodic_signed_distance_array(shape, draw) > BOUNDARY_TOL
        points = np.vstack([points, draw[keep]])
    return points[:count]


def _run_trial(args) -> AvoidanceTrial:
    field_, s, t = args
    h = field_.spec.h
    result = shortest_path(field_, s, t)
    depth = incursion_depth(field_.shape, result.path, h)
    return AvoidanceTrial(s, t, result.value, depth, depth > h)


def verify_avoidance(
    shape: InclusionShape,
    beta: float,
    n_trials: int = 50,
    spec: Optional[GridSpec] = None,
    seed: int = 0,
    lambda_hat: Optional[float] = None,
    cells: float = 3.0,
    workers: int = 1,
) -> AvoidanceReport:
    """Measure how deep single-scale geodesics enter the inclusions.

    Endpoint pairs are drawn uniformly from the matrix phase of a square window of
    `cells` unit cells per side. A trial is a violation when its geodesic enters an
    inclusion deeper than one grid spacing. Violations are only expected to be
    absent when `beta` exceeds the high opacity coefficient; the report records
    whether that holds. Trials run in `workers` processes.
    """
    if spec is None:
        spec = GridSpec()
    if lambda_hat is None:
        lambda_hat = estimate_lambda(shape).lambda_hat
    asserted = beta > lambda_hat
    if not asserted:
        logger.warning(
            "beta = %g does not exceed lambda = %.6g; geodesics may cross inclusions",
            beta,
            lambda_hat,
        )
    rng = np.random.default_rng(seed)
    ends = _random_matrix_points(shape, rng, 2 * n_trials, cells)
    params = MetricParams.single_scale(beta)
    field_ = build_field(shape, params, spec.around((0.0, 0.0), (cells, cells)))
    h = spec.h

    pairs = [
        (
            Point2(float(ends[2 * k, 0]), float(ends[2 * k, 1])),
            Point2(float(ends[2 * k + 1, 0]), float(ends[2 * k + 1, 1])),
        )
        for k in range(n_trials)
    ]
    trials = parallel_map(_run_trial, [(field_, s, t) for s, t in pairs], workers=workers)
    report = AvoidanceReport(
        beta=beta, lambda_hat=lambda_hat, spacing=h, asserted=asserted, trials=trials
    )
    logger.info(
        "Avoidance: %d trials, %d violations, max depth %.3g",
        n_trials,
        len(report.violations),
        report.max_depth,
    )
    return report
