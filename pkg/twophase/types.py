"""Data types used by the twophase python package."""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, NamedTuple, Sequence, Union

import numpy as np

__all__ = [
    "Point2",
    "PointLike",
    "Record",
    "Table",
    "as_point",
    "format_float",
]

Record = Dict[str, str]


class Table(NamedTuple):
    fields: List[str]
    records: Iterable[Record]


class Point2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Point2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point2(self.x - other[0], self.y - other[1])

    def scaled(self, factor: float) -> Point2:
        return Point2(self.x * factor, self.y * factor)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance(self, other: PointLike) -> float:
        return math.hypot(self.x - other[0], self.y - other[1])


PointLike = Union[Point2, Sequence[float], np.ndarray]


def as_point(p: PointLike) -> Point2:
    """Convert a point-like value to a `Point2`.

    Raises:
        ValueError: If `p` does not have two finite components.
    """
    if len(p) != 2:
        raise ValueError(f"Expected a 2D point but got {p!r}")
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"Point components must be finite: {p!r}")
    return Point2(x, y)


def format_float(x: float) -> str:
    """Format a float with round-trip precision."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")
