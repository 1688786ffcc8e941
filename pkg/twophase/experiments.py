"""Numerical experiments on the contrast exponent.

`run_critical` compares the distance between a matrix point and an inclusion
centre along two sequences of periods: ``1/(2k)``, for which the inclusion centre
is a lattice point of the scaled matrix phase, and ``1/(2k+1)``, for which it is an
inclusion centre. Below the critical exponent ``p = 1`` both sequences approach
the homogenized distance; from ``p = 1`` on the odd sequence keeps a gap.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import geometry
from .coefficient import (
    INFINITE,
    Exponent,
    MetricParams,
    check_admissible,
    format_exponent,
    parse_exponent,
)
from .curves import Path, length_functional, piecewise_geodesic_refine, push_to_walls, snap_to_matrix
from .errors import (
    DegenerateEndpointsError,
    Error,
    InfeasibleError,
    InsufficientSamplesError,
    ParameterError,
)
from .geometry import InclusionShape
from .grid_solver import GridSpec, build_field, distance_folded, distance_on_field
from .homogenization import DEFAULT_R_LIST, estimate_psi
from .opacity import estimate_lambda
from .types import Point2, PointLike, Table, as_point, format_float
from .utils import parallel_map

__all__ = [
    "BoundsReport",
    "CriticalResult",
    "CriticalRunConfig",
    "PairMargin",
    "RateReport",
    "RateSample",
    "RecoveryRecord",
    "SequenceRecord",
    "Verdict",
    "recovery_table",
    "reference_distance",
    "run_bounds_suite",
    "run_critical",
    "run_rate",
    "run_recovery",
]

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2)


def _blank_or(x: Optional[float]) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format_float(x)


def _blank_or_bool(x: Optional[bool]) -> str:
    return "" if x is None else str(x).lower()


def reference_distance(
    shape: InclusionShape,
    beta: float,
    xi1: PointLike,
    xi2: PointLike,
    R_list: Sequence[float] = DEFAULT_R_LIST,
    spec: Optional[GridSpec] = None,
) -> float:
    """Homogenized distance between two points."""
    delta = as_point(xi2) - as_point(xi1)
    norm = delta.norm()
    if norm == 0:
        return 0.0
    return norm * estimate_psi(shape, beta, delta, R_list, spec).value


def _solve(args) -> Tuple[float, str, float]:
    """Distance, status and runtime in milliseconds of one query."""
    shape, params, xi1, xi2, spec = args
    start = time.perf_counter()
    try:
        value = distance_folded(shape, params, xi1, xi2, spec).value
        status = "ok"
    except InfeasibleError as e:
        logger.info("eps = %.6g: %s", params.epsilon, e)
        value, status = math.inf, "disconnected"
    except Error as e:
        logger.warning("eps = %.6g: %s", params.epsilon, e)
        value, status = math.nan, "error"
    return value, status, (time.perf_counter() - start) * 1000


@dataclass
class CriticalRunConfig:
    """Settings of the two-sequence experiment.

    Attributes:
        shape: Inclusion shape.
        beta: Contrast at unit scale.
        p_list: Exponents to sweep.
        k_range: Sequence indices; periods are ``1/(2k)`` and ``1/(2k+1)``.
        xi1: Matrix-phase endpoint.
        xi2: Inclusion-phase endpoint.
        spec: Grid settings of every row.
        R_list: Separations of the homogenized norm estimate.
        tol_grid: Relative discretization tolerance.
        gap_tolerance: Relative tolerance of the gap floor at ``p = 1``.
        workers: Worker processes for the rows.
        psi_ref: Homogenized distance between the endpoints; estimated when unset.
        lambda_hat: High opacity coefficient; estimated when unset.
    """

    shape: InclusionShape
    beta: float = 2.0
    p_list: Sequence[Exponent] = (0.5, 1.0, 2.0, INFINITE)
    k_range: Sequence[int] = tuple(range(1, 13))
    xi1: Point2 = Point2(0.0, 0.0)
    xi2: Point2 = Point2(0.5, 0.5)
    spec: GridSpec = field(default_factory=GridSpec)
    R_list: Sequence[float] = DEFAULT_R_LIST
    tol_grid: float = 0.02
    gap_tolerance: float = 0.05
    workers: int = 1
    psi_ref: Optional[float] = None
    lambda_hat: Optional[float] = None

    def __post_init__(self):
        self.p_list = tuple(parse_exponent(p) for p in self.p_list)
        self.k_range = tuple(int(k) for k in self.k_range)
        self.xi1 = as_point(self.xi1)
        self.xi2 = as_point(self.xi2)
        if not self.k_range:
            raise ParameterError("k_range is empty")
        if any(k < 1 for k in self.k_range):
            raise ParameterError(f"k_range entries must be positive, got {self.k_range}")
        if not self.p_list:
            raise ParameterError("p_list is empty")
        if not geometry.periodic_contains(self.shape, self.xi2):
            raise ParameterError(f"xi2 = {tuple(self.xi2)} must lie in the inclusion")
        if geometry.periodic_contains(self.shape, self.xi1):
            raise ParameterError(f"xi1 = {tuple(self.xi1)} must lie in the matrix")

    @property
    def rho(self) -> float:
        """Radius of the largest ball around `xi2` inside the inclusion."""
        return max(0.0, -geometry.periodic_signed_distance(self.shape, self.xi2))


@dataclass
class SequenceRecord:
    p: Exponent
    parity: str
    k: int
    epsilon: float
    distance: float = math.nan
    status: str = "ok"
    runtime_ms: float = math.nan
    psi_ref: float = math.nan
    gap: float = math.nan
    envelope: float = math.nan
    within_envelope: Optional[bool] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class Verdict:
    p: Exponent
    label: str
    passed: bool
    detail: str

    def __str__(self) -> str:
        state = "passed" if self.passed else "failed"
        return f"p={format_exponent(self.p)}: {self.label} ({state}) {self.detail}".rstrip()


@dataclass
class CriticalResult:
    records: List[SequenceRecord]
    verdicts: Dict[str, Verdict]
    psi_ref: float
    lambda_hat: float
    rho: float

    def records_table(self, timings: bool = False) -> Table:
        fields = [
            "p",
            "parity",
            "k",
            "epsilon",
            "distance",
            "psi_ref",
            "gap",
            "envelope",
            "within_envelope",
            "runtime_ms",
            "status",
        ]
        return Table(
            fields=fields,
            records=[
                {
                    "p": format_exponent(r.p),
                    "parity": r.parity,
                    "k": str(r.k),
                    "epsilon": format_float(r.epsilon),
                    "distance": _blank_or(r.distance),
                    "psi_ref": format_float(r.psi_ref),
                    "gap": _blank_or(r.gap),
                    "envelope": _blank_or(r.envelope),
                    "within_envelope": _blank_or_bool(r.within_envelope),
                    "runtime_ms": _blank_or(r.runtime_ms) if timings else "",
                    "status": r.status,
                }
                for r in self.records
            ],
        )


def _parity_epsilon(parity: str, k: int) -> float:
    return 1.0 / (2 * k) if parity == "even" else 1.0 / (2 * k + 1)


def _growth_violations(
    records: Sequence[SequenceRecord], beta: float, norm: float, tol: float
) -> int:
    count = 0
    for r in records:
        if not (r.ok and math.isfinite(r.distance)):
            continue
        weight = MetricParams(beta, r.p, r.epsilon).inclusion_weight
        upper = max(1.0, weight) * norm * (1 + tol)
        lower = min(1.0, weight) * norm * (1 - tol)
        if not lower <= r.distance <= upper:
            count += 1
    return count


def _pairs_by_k(records: Sequence[SequenceRecord]) -> Dict[int, Dict[str, SequenceRecord]]:
    out: Dict[int, Dict[str, SequenceRecord]] = {}
    for r in records:
        out.setdefault(r.k, {})[r.parity] = r
    return out


def _verdict_subcritical(
    p: float, rows: List[SequenceRecord], config: CriticalRunConfig, psi: float
) -> Verdict:
    pairs = _pairs_by_k(rows)
    gaps = [
        (k, pairs[k]["odd"])
        for k in sorted(pairs)
        if math.isfinite(pairs[k]["odd"].gap)
    ]
    if not gaps:
        return Verdict(p, "inconclusive", False, "no admissible k")
    slack = config.tol_grid * psi / 2
    tail = [(k, r.gap) for k, r in gaps if k >= 2] or [(gaps[0][0], gaps[0][1].gap)]
    monotone = all(b <= a + slack for (_, a), (_, b) in zip(tail, tail[1:]))
    last_k, last = gaps[-1]
    within = bool(last.within_envelope)
    passed = monotone and within
    detail = (
        f"gap {last.gap:.4g} at k={last_k} "
        f"(envelope {last.envelope:.4g}, monotone {str(monotone).lower()})"
    )
    return Verdict(p, "converges" if passed else "inconclusive", passed, detail)


def _verdict_critical(
    p: float, rows: List[SequenceRecord], config: CriticalRunConfig, psi: float
) -> Verdict:
    pairs = _pairs_by_k(rows)
    complete = [k for k in sorted(pairs) if math.isfinite(pairs[k]["odd"].gap)]
    tail = complete[-3:]
    if not tail:
        return Verdict(p, "inconclusive", False, "no admissible k")
    beta_rho = config.beta * config.rho
    floor = beta_rho * (1 - config.gap_tolerance)
    min_gap = min(pairs[k]["odd"].gap for k in tail)
    even_error = max(abs(pairs[k]["even"].distance - psi) / psi for k in tail)
    odd_limit = psi + beta_rho
    odd_residual = max(abs(pairs[k]["odd"].distance - odd_limit) / odd_limit for k in tail)
    passed = min_gap >= floor and even_error <= config.tol_grid
    detail = (
        f"gap ≥ {min_gap:.4g} over k={tail} (floor {floor:.4g}), "
        f"even vs psi {even_error:.2%}, odd vs psi+beta*rho {odd_residual:.2%} "
        "(upper competitor is a constructed path)"
    )
    return Verdict(p, "gap", passed, detail)


def _verdict_supercritical(
    p: Exponent, rows: List[SequenceRecord], config: CriticalRunConfig, psi: float
) -> Verdict:
    odd = {r.k: r for r in rows if r.parity == "odd"}
    if p is INFINITE:
        disconnected = all(r.status == "disconnected" for r in odd.values())
        return Verdict(
            p,
            "disconnected-odd",
            disconnected and bool(odd),
            f"{sum(r.status == 'disconnected' for r in odd.values())}/{len(odd)} odd rows disconnected",
        )
    excess = {
        k: r.distance - psi for k, r in odd.items() if r.ok and math.isfinite(r.distance)
    }
    ks = sorted(excess)
    if len(ks) < 2:
        return Verdict(p, "inconclusive", False, "too few odd rows")
    slack = config.tol_grid * psi
    growing = all(excess[b] >= excess[a] - slack for a, b in zip(ks, ks[1:]))
    target = 2 ** (p - 1)
    ratios = [
        (k, excess[2 * k] / excess[k]) for k in ks if 2 * k in excess and excess[k] > 0
    ]
    ratios_ok = all(0.7 * target <= ratio <= 1.3 * target for _, ratio in ratios)
    passed = growing and ratios_ok
    ratio_text = ", ".join(f"{k}->{2 * k}: {ratio:.3g}" for k, ratio in ratios) or "none"
    detail = f"excess {excess[ks[-1]]:.4g} at k={ks[-1]}, doubling ratios {ratio_text} (target {target:.3g})"
    return Verdict(p, "diverges", passed, detail)


def run_critical(config: CriticalRunConfig) -> CriticalResult:
    """Run the two-sequence experiment for every exponent of `config`.

    Rows whose parameters are not admissible are kept as flagged rows without a
    distance. Solver failures are recorded per row.
    """
    shape, beta = config.shape, config.beta
    lam = config.lambda_hat
    if lam is None:
        lam = estimate_lambda(shape).lambda_hat
    psi = config.psi_ref
    if psi is None:
        psi = reference_distance(shape, beta, config.xi1, config.xi2, config.R_list, config.spec)
    logger.info("Reference distance %.6f, lambda %.6f, rho %.6f", psi, lam, config.rho)

    records: List[SequenceRecord] = []
    jobs = []
    for p in config.p_list:
        for parity in ("even", "odd"):
            for k in config.k_range:
                eps = _parity_epsilon(parity, k)
                record = SequenceRecord(p=p, parity=parity, k=k, epsilon=eps, psi_ref=psi)
                params = MetricParams(beta, p, eps)
                admissible = check_admissible(params, lam)
                if not admissible:
                    record.status = "inadmissible"
                    logger.info(
                        "Skipping p=%s %s k=%d: %s",
                        format_exponent(p),
                        parity,
                        k,
                        admissible.diagnostic,
                    )
                else:
                    jobs.append((len(records), (shape, params, config.xi1, config.xi2, config.spec)))
                records.append(record)

    outcomes = parallel_map(_solve, [args for _, args in jobs], workers=config.workers)
    for (index, _), (value, status, runtime) in zip(jobs, outcomes):
        records[index].distance = value
        records[index].status = status
        records[index].runtime_ms = runtime

    verdicts: Dict[str, Verdict] = {}
    norm = (config.xi2 - config.xi1).norm()
    for p in config.p_list:
        rows = [r for r in records if r.p == p]
        for k, pair in _pairs_by_k(rows).items():
            even, odd = pair["even"], pair["odd"]
            if not (even.ok and odd.ok and math.isfinite(odd.distance)):
                continue
            gap = odd.distance - even.distance
            envelope, within = math.nan, None
            if p is not INFINITE and p < 1:
                envelope = 2 * beta * _SQRT2 * odd.epsilon ** (1 - p) + 2 * config.tol_grid * psi
                within = abs(gap) <= envelope
            for r in (even, odd):
                r.gap, r.envelope, r.within_envelope = gap, envelope, within

        if p is INFINITE or p > 1:
            verdict = _verdict_supercritical(p, rows, config, psi)
        elif p == 1:
            verdict = _verdict_critical(p, rows, config, psi)
        else:
            verdict = _verdict_subcritical(p, rows, config, psi)
        violations = _growth_violations(rows, beta, norm, config.tol_grid)
        if violations:
            verdict.passed = False
            verdict.detail += f"; {violations} growth-bound violations"
        logger.info("%s", verdict)
        verdicts[format_exponent(p)] = verdict

    return CriticalResult(records=records, verdicts=verdicts, psi_ref=psi, lambda_hat=lam, rho=config.rho)


@dataclass
class RateSample:
    epsilon: float
    distance: float
    deviation: float
    lower: float
    upper: float
    within_envelope: bool


@dataclass
class RateReport:
    """Convergence rate of distances towards the homogenized distance.

    Attributes:
        p: Contrast exponent.
        psi_ref: Homogenized distance between the endpoints.
        exponent: Fitted slope of ``log |d - psi_ref|`` against ``log epsilon``.
        intercept: Fitted intercept.
        envelope_exponent: Exponent ``1 - p`` of the certified envelope.
        samples: One entry per admissible period.
        skipped: Periods dropped as inadmissible.
    """

    p: float
    beta: float
    psi_ref: float
    exponent: float
    intercept: float
    envelope_exponent: float
    samples: List[RateSample]
    skipped: List[float]

    @property
    def all_within(self) -> bool:
        return all(s.within_envelope for s in self.samples)

    def consistent(self, tolerance: float) -> bool:
        """Whether the fitted exponent is at least the envelope exponent, up to `tolerance`."""
        return self.exponent >= self.envelope_exponent - tolerance

    def records(self) -> Table:
        return Table(
            fields=["epsilon", "distance", "psi_ref", "deviation", "lower", "upper", "within_envelope"],
            records=[
                {
                    "epsilon": format_float(s.epsilon),
                    "distance": format_float(s.distance),
                    "psi_ref": format_float(self.psi_ref),
                    "deviation": format_float(s.deviation),
                    "lower": format_float(s.lower),
                    "upper": format_float(s.upper),
                    "within_envelope": str(s.within_envelope).lower(),
                }
                for s in self.samples
            ],
        )


def run_rate(
    shape: InclusionShape,
    beta: float,
    p: Exponent,
    xi1: PointLike,
    xi2: PointLike,
    eps_list: Sequence[float],
    spec: Optional[GridSpec] = None,
    psi_ref: Optional[float] = None,
    lambda_hat: Optional[float] = None,
    tol_grid: float = 0.02,
    R_list: Sequence[float] = DEFAULT_R_LIST,
    workers: int = 1,
) -> RateReport:
    """Fit the rate at which distances approach the homogenized distance for ``p < 1``.

    Every sample is also checked against the envelope
    ``|xi2 - xi1| - C1 eps <= d <= beta |xi2 - xi1| + C2 eps^(1-p)`` with
    ``C1 = 2 beta sqrt(2)`` and ``C2 = 4 beta sqrt(2)``, widened by `tol_grid`.

    Raises:
        DegenerateEndpointsError: If the endpoints coincide.
        InsufficientSamplesError: If fewer than 4 periods are admissible.
    """
    p = parse_exponent(p)
    if p is INFINITE or p >= 1:
        raise ParameterError(f"Rates are defined for p < 1, got p={format_exponent(p)}")
    if spec is None:
        spec = GridSpec()
    xi1, xi2 = as_point(xi1), as_point(xi2)
    norm = (xi2 - xi1).norm()
    if norm == 0:
        raise DegenerateEndpointsError("degenerate endpoints: xi1 = xi2, rate undefined")
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError(f"eps_list must be decreasing, got {eps_list}")
    if lambda_hat is None:
        lambda_hat = estimate_lambda(shape).lambda_hat
    admissible = [e for e in eps_list if check_admissible(MetricParams(beta, p, e), lambda_hat)]
    skipped = [e for e in eps_list if e not in admissible]
    if len(admissible) < 4:
        raise InsufficientSamplesError(
            f"Need at least 4 admissible periods, got {len(admissible)}"
        )
    if psi_ref is None:
        psi_ref = reference_distance(shape, beta, xi1, xi2, R_list, spec)

    outcomes = parallel_map(
        _solve,
        [(shape, MetricParams(beta, p, e), xi1, xi2, spec) for e in admissible],
        workers=workers,
    )
    c1, c2 = 2 * beta * _SQRT2, 4 * beta * _SQRT2
    samples = []
    for eps, (value, status, _) in zip(admissible, outcomes):
        lower = norm - c1 * eps
        upper = beta * norm + c2 * eps ** (1 - p)
        within = (
            status == "ok"
            and lower - tol_grid * norm <= value <= upper * (1 + tol_grid)
        )
        samples.append(
            RateSample(eps, value, abs(value - psi_ref), lower, upper, bool(within))
        )

    fit = [(s.epsilon, s.deviation) for s in samples if s.deviation > 0 and math.isfinite(s.deviation)]
    exponent = intercept = math.nan
    if len(fit) >= 2:
        x = np.log([e for e, _ in fit])
        y = np.log([d for _, d in fit])
        exponent, intercept = (float(c) for c in np.polyfit(x, y, 1))
    report = RateReport(
        p=p,
        beta=beta,
        psi_ref=psi_ref,
        exponent=exponent,
        intercept=intercept,
        envelope_exponent=1 - p,
        samples=samples,
        skipped=skipped,
    )
    logger.info(
        "Rate for p=%g: exponent %.4g (envelope %.4g)", p, exponent, report.envelope_exponent
    )
    return report


@dataclass
class PairMargin:
    """Bound checks for one random endpoint pair.

    Margins are non-negative when the bound holds.
    """

    xi1: Point2
    xi2: Point2
    distance: float = math.nan
    lower_margin: float = math.nan
    upper_margin: float = math.nan
    snapped_distance: float = math.nan
    cc_gap: float = math.nan
    cc_envelope: float = math.nan
    flags: List[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return ";".join(self.flags) or "ok"


_SKIP_FLAGS = {"inadmissible", "disconnected", "error"}


@dataclass
class BoundsReport:
    params: MetricParams
    tol_grid: float
    pairs: List[PairMargin]

    @property
    def violations(self) -> List[PairMargin]:
        return [m for m in self.pairs if set(m.flags) - _SKIP_FLAGS]

    @property
    def skipped(self) -> List[PairMargin]:
        return [m for m in self.pairs if set(m.flags) & _SKIP_FLAGS]

    def records(self) -> Table:
        return Table(
            fields=[
                "pair",
                "x1",
                "y1",
                "x2",
                "y2",
                "distance",
                "lower_margin",
                "upper_margin",
                "snapped_distance",
                "cc_gap",
                "cc_envelope",
                "status",
            ],
            records=[
                {
                    "pair": str(k),
                    "x1": format_float(m.xi1.x),
                    "y1": format_float(m.xi1.y),
                    "x2": format_float(m.xi2.x),
                    "y2": format_float(m.xi2.y),
                    "distance": _blank_or(m.distance),
                    "lower_margin": _blank_or(m.lower_margin),
                    "upper_margin": _blank_or(m.upper_margin),
                    "snapped_distance": _blank_or(m.snapped_distance),
                    "cc_gap": _blank_or(m.cc_gap),
                    "cc_envelope": _blank_or(m.cc_envelope),
                    "status": m.status,
                }
                for k, m in enumerate(self.pairs)
            ],
        )


def run_bounds_suite(
    shape: InclusionShape,
    beta: float,
    p: Exponent,
    eps: float,
    n_pairs: int = 100,
    spec: Optional[GridSpec] = None,
    seed: int = 0,
    lambda_hat: Optional[float] = None,
    tol_grid: float = 0.02,
) -> BoundsReport:
    """Check the growth bounds and the endpoint-snapping bound on random pairs.

    For each pair of uniform random points of the unit square this checks
    ``|xi1 - xi2| <= d <= (beta / eps^p) |xi1 - xi2|`` and that snapping both
    endpoints to the matrix phase changes the distance by at most
    ``2 beta sqrt(2) eps^(1-p)``, each widened by `tol_grid`. All pairs share one
    grid field.
    """
    if spec is None:
        spec = GridSpec()
    params = MetricParams(beta, p, eps)
    if lambda_hat is None:
        lambda_hat = estimate_lambda(shape).lambda_hat
    rng = np.random.default_rng(seed)
    ends = rng.uniform(0.0, 1.0, size=(n_pairs, 2, 2))
    pairs = [
        PairMargin(Point2(*map(float, e[0])), Point2(*map(float, e[1]))) for e in ends
    ]
    admissible = check_admissible(params, lambda_hat)
    if not admissible:
        logger.warning("Parameters not admissible (%s); all pairs skipped", admissible.diagnostic)
        for m in pairs:
            m.flags.append("inadmissible")
        return BoundsReport(params=params, tol_grid=tol_grid, pairs=pairs)

    snapped = [
        (snap_to_matrix(shape, eps, m.xi1), snap_to_matrix(shape, eps, m.xi2)) for m in pairs
    ]
    unfolded = [pt.scaled(1 / eps) for m, s in zip(pairs, snapped) for pt in (m.xi1, m.xi2, *s)]
    field_ = build_field(shape, params, spec.around(*unfolded))
    weight = params.inclusion_weight
    envelope_base = (
        math.inf if params.is_obstacle else 2 * beta * _SQRT2 * eps ** (1 - params.p)
    )

    for m, (s1, s2) in zip(pairs, snapped):
        try:
            m.distance = distance_on_field(field_, m.xi1, m.xi2).value
            if (s1, s2) == (m.xi1, m.xi2):
                m.snapped_distance = m.distance
            else:
                m.snapped_distance = distance_on_field(field_, s1, s2).value
        except InfeasibleError:
            m.flags.append("disconnected")
            continue
        except Error as e:
            logger.warning("Pair %s -> %s: %s", tuple(m.xi1), tuple(m.xi2), e)
            m.flags.append("error")
            continue
        norm = (m.xi2 - m.xi1).norm()
        m.lower_margin = m.distance - min(1.0, weight) * norm * (1 - tol_grid)
        m.upper_margin = max(1.0, weight) * norm * (1 + tol_grid) - m.distance
        m.cc_gap = abs(m.distance - m.snapped_distance)
        m.cc_envelope = envelope_base + tol_grid * max(m.distance, m.snapped_distance)
        if m.lower_margin < 0:
            m.flags.append("growth-lower")
        if m.upper_margin < 0:
            m.flags.append("growth-upper")
        if m.cc_gap > m.cc_envelope:
            m.flags.append("snap-gap")

    report = BoundsReport(params=params, tol_grid=tol_grid, pairs=pairs)
    logger.info(
        "Bounds suite: %d pairs, %d violations, %d skipped",
        n_pairs,
        len(report.violations),
        len(report.skipped),
    )
    return report


@dataclass
class RecoveryRecord:
    """Recovery curves for one period and number of pieces.

    Attributes:
        epsilon: Period.
        pieces: Number of geodesic pieces.
        wall_length: Length functional of the wall-pushed straight curve.
        refined_length: Length functional of the piecewise-geodesic curve.
        psi_ref: Homogenized distance, the limit of the refined lengths.
        wall_deviation: Hausdorff distance of the wall-pushed curve to the
            straight curve.
        refined_deviation: Hausdorff distance of the refined curve to the
            straight curve.
    """

    epsilon: float
    pieces: int
    wall_length: float
    refined_length: float
    psi_ref: float
    wall_deviation: float
    refined_deviation: float


def recovery_table(records: Sequence[RecoveryRecord]) -> Table:
    return Table(
        fields=[
            "epsilon",
            "pieces",
            "wall_length",
            "refined_length",
            "psi_ref",
            "wall_deviation",
            "refined_deviation",
        ],
        records=[
            {
                "epsilon": format_float(r.epsilon),
                "pieces": str(r.pieces),
                "wall_length": format_float(r.wall_length),
                "refined_length": format_float(r.refined_length),
                "psi_ref": format_float(r.psi_ref),
                "wall_deviation": format_float(r.wall_deviation),
                "refined_deviation": format_float(r.refined_deviation),
            }
            for r in records
        ],
    )


def run_recovery(
    shape: InclusionShape,
    beta: float,
    p: Exponent,
    xi1: PointLike,
    xi2: PointLike,
    eps_list: Sequence[float],
    M_list: Sequence[int] = (1, 2, 4),
    spec: Optional[GridSpec] = None,
    psi_ref: Optional[float] = None,
    R_list: Sequence[float] = DEFAULT_R_LIST,
    workers: int = 1,
) -> List[RecoveryRecord]:
    """Build recovery curves for the straight segment from `xi1` to `xi2`.

    For each period the endpoints are snapped to the matrix phase, the straight
    segment between them is pushed to the inclusion walls, and the result is
    refined into `M` geodesic pieces for each `M` in `M_list`.
    """
    if spec is None:
        spec = GridSpec()
    xi1, xi2 = as_point(xi1), as_point(xi2)
    if xi1 == xi2:
        raise DegenerateEndpointsError("degenerate endpoints: xi1 = xi2")
    if psi_ref is None:
        psi_ref = reference_distance(shape, beta, xi1, xi2, R_list, spec)
    straight = Path([xi1, xi2])
    records = []
    for eps in eps_list:
        params = MetricParams(beta, p, eps)
        a, b = snap_to_matrix(shape, eps, xi1), snap_to_matrix(shape, eps, xi2)
        wall = push_to_walls(shape, eps, Path([a, b]))
        wall_length = length_functional(shape, params, wall)
        for M in M_list:
            refined = piecewise_geodesic_refine(shape, params, wall, M, spec, workers)
            records.append(
                RecoveryRecord(
                    epsilon=eps,
                    pieces=M,
                    wall_length=wall_length,
                    refined_length=length_functional(shape, params, refined),
                    psi_ref=psi_ref,
                    wall_deviation=wall.hausdorff_distance(straight),
                    refined_deviation=refined.hausdorff_distance(straight),
                )
            )
            logger.info(
                "Recovery eps=%.4g M=%d: %.6g (wall %.6g, limit %.6g)",
                eps,
                M,
                records[-1].refined_length,
                wall_length,
                psi_ref,
            )
    return records
