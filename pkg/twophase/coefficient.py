"""Two-phase metric coefficients.

All coefficients are evaluated in unfolded coordinates: callers divide folded
positions by the period before evaluating.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import ParameterError
from .geometry import InclusionShape, periodic_contains, periodic_signed_distance_array
from .types import PointLike

__all__ = [
    "Admissibility",
    "Exponent",
    "INFINITE",
    "MetricParams",
    "check_admissible",
    "eval_contrast",
    "eval_contrast_array",
    "eval_single_scale",
    "format_exponent",
    "parse_exponent",
]


class Infinite(enum.Enum):
    """Exponent of a hard-obstacle inclusion phase."""

    INFINITE = "inf"

    def __str__(self):
        return self.value


INFINITE = Infinite.INFINITE

Exponent = Union[float, Infinite]


def parse_exponent(value: Union[str, float, int, Infinite]) -> Exponent:
    """Read an exponent from a number or the word ``inf``."""
    if value is INFINITE:
        return INFINITE
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinite", "infinity"):
            return INFINITE
        try:
            value = float(value)
        except ValueError:
            raise ParameterError(f"Invalid exponent {value!r}") from None
    p = float(value)
    if math.isinf(p):
        return INFINITE
    if math.isnan(p) or p < 0:
        raise ParameterError(f"Exponent must be non-negative, got {value!r}")
    return p


def format_exponent(p: Exponent) -> str:
    if p is INFINITE:
        return "inf"
    return format(p, "g")


@dataclass(frozen=True)
class MetricParams:
    """Contrast parameters of the coefficient ``beta * epsilon**-p``.

    Attributes:
        beta: Inclusion-to-matrix contrast at unit scale.
        p: Contrast growth exponent or `INFINITE` for hard obstacles. ``p = 0``
            gives the single-scale coefficient with constant contrast `beta`.
        epsilon: Period of the medium.
    """

    beta: float
    p: Exponent
    epsilon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", parse_exponent(self.p))
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ParameterError(f"beta must be positive and finite, got {self.beta}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ParameterError(
                f"epsilon must be positive and finite, got {self.epsilon}"
            )

    @classmethod
    def single_scale(cls, beta: float, epsilon: float = 1.0) -> MetricParams:
        return cls(beta=beta, p=0.0, epsilon=epsilon)

    @property
    def is_obstacle(self) -> bool:
        return self.p is INFINITE

    @property
    def inclusion_weight(self) -> float:
        """Coefficient value on the inclusion phase."""
        if self.p is INFINITE:
            return math.inf
        return self.beta * self.epsilon ** (-self.p)

    def with_epsilon(self, epsilon: float) -> MetricParams:
        return MetricParams(beta=self.beta, p=self.p, epsilon=epsilon)

    def unfolded(self) -> MetricParams:
        """Parameters with the same inclusion weight and unit period."""
        if self.p is INFINITE:
            return MetricParams(beta=self.beta, p=INFINITE, epsilon=1.0)
        return MetricParams(beta=self.inclusion_weight, p=self.p, epsilon=1.0)


def eval_single_scale(shape: InclusionShape, beta: float, x: PointLike) -> float:
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    return beta if periodic_contains(shape, x) else 1.0


def eval_contrast(shape: InclusionShape, params: MetricParams, x: PointLike) -> float:
    """Contrast coefficient at unfolded position `x`; ``math.inf`` on obstacles."""
    return params.inclusion_weight if periodic_contains(shape, x) else 1.0


def eval_contrast_array(
    shape: InclusionShape, params: MetricParams, xy: np.ndarray
) -> np.ndarray:
    inside = periodic_signed_distance_array(shape, xy) < 0
    return np.where(inside, params.inclusion_weight, 1.0)


class Admissibility(NamedTuple):
    ok: bool
    diagnostic: str

    def __bool__(self) -> bool:
        return self.ok


def check_admissible(params: MetricParams, lambda_: float) -> Admissibility:
    """Check that the contrast exceeds the high opacity coefficient `lambda_`."""
    if not lambda_ > 0:
        raise ParameterError(f"lambda must be positive, got {lambda_}")
    if not params.beta > lambda_:
        return Admissibility(False, "beta ≤ lambda")
    if params.p is INFINITE:
        return Admissibility(True, "")
    if not params.epsilon**params.p < params.beta / lambda_:
        return Admissibility(False, "epsilon^p ≥ beta/lambda")
    return Admissibility(True, "")
