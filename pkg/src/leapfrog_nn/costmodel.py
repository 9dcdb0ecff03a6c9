"""Analytical per-layer cost model for leapfrogging.

With ``f1``, ``f2``, ``f3`` the per-layer costs of the weighted input, the
error recurrence and the weight-gradient outer product, a full pass costs
``f = f1 + f2 + f3`` sequentially and ``f' = f1 + f2 + f3/k`` with ``k``
leapfrogging threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhaseCosts:
    f1: float
    f2: float
    f3: float
    units: str = "s"

    def __post_init__(self):
        for name in ("f1", "f2", "f3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if self.f1 + self.f2 + self.f3 <= 0:
            raise ValueError("at least one of f1, f2, f3 must be positive")


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"thread count must be >= 1, got {k}")


def total_cost(c: PhaseCosts) -> float:
    return c.f1 + c.f2 + c.f3


def threaded_cost(c: PhaseCosts, k: int) -> float:
    _check_k(k)
    return c.f1 + c.f2 + c.f3 / k


def relative_speedup(c: PhaseCosts, k: int) -> float:
    """``(f - f') / f``, evaluated as ``(1 - 1/k) * (f3 / f)``.

    This form is monotone in ``k`` under rounding, avoids the cancellation in
    ``f - f'``, and gives exactly ``1 - 1/k`` when ``f3`` is the whole cost.
    """
    _check_k(k)
    return (1.0 - 1.0 / k) * (c.f3 / total_cost(c))


def threads_for_speedup(epsilon: float) -> int:
    """Thread count ``ceil(1/epsilon)``.

    Note that ``k = 1/epsilon`` only reaches ``1 - 1/k = 1 - epsilon`` with
    equality when ``1/epsilon`` is an integer.
    """
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return math.ceil(1.0 / epsilon)
