"""Utilities."""

from __future__ import annotations

import concurrent.futures
import logging
from typing import Callable, Iterable, List, TypeVar

__all__ = ["parallel_map"]

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply `fn` to every item, in worker processes when `workers > 1`.

    Results are returned in input order regardless of completion order. `fn` and
    the items must be picklable when running with workers.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("Running %d tasks on %d workers", len(items), workers)
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
