"""Ground truth that does not go through the backward pass.

``finite_diff_gradients`` differentiates the cost numerically, one parameter
at a time, and ``check_schedule_coverage`` counts emissions directly. Neither
trusts the code it is used to check.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .backprop import GradientSet, quadratic_cost
from .leapfrog import LeapfrogSchedule
from .linalg import ShapeError, as_vector
from .network import Network, forward

DEFAULT_H = 1e-5
DEFAULT_REL_TOL = 1e-6
DEFAULT_ABS_FLOOR = 1e-8


@dataclass(frozen=True)
class GradLocation:
    layer: int
    param: str  # "w" or "b"
    index: tuple[int, ...]

    def __str__(self):
        return f"layer {self.layer} {self.param}{list(self.index)}"


@dataclass(frozen=True)
class GradCheckReport:
    max_relative_error: float
    max_absolute_error: float
    worst_location: GradLocation | None
    passed: bool
    rel_tol: float
    abs_floor: float

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}: max_rel={self.max_relative_error:.3e} "
            f"max_abs={self.max_absolute_error:.3e} worst={self.worst_location} "
            f"(rel_tol={self.rel_tol:g}, abs_floor={self.abs_floor:g})"
        )


def finite_diff_gradients(net: Network, x, y, h: float = DEFAULT_H) -> GradientSet:
    """Central differences ``(C(theta+h) - C(theta-h)) / 2h`` for every parameter.

    Works on private copies of the parameters, so ``net`` is never touched.
    """
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = as_vector(x, "input")
    y = as_vector(y, "target")
    if y.shape[0] != net.layer_sizes[-1]:
        raise ShapeError(f"target has length {y.shape[0]}, output layer has {net.layer_sizes[-1]}")
    weights = [w.copy() for w in net.weights]
    biases = [b.copy() for b in net.biases]

    def cost() -> float:
        trace = forward(Network(net.layer_sizes, tuple(weights), tuple(biases)), x)
        return quadratic_cost(trace.activations[-1], y)

    def central(arr: np.ndarray, idx) -> float:
        orig = arr[idx]
        arr[idx] = orig + h
        c_plus = cost()
        arr[idx] = orig - h
        c_minus = cost()
        arr[idx] = orig
        return (c_plus - c_minus) / (2.0 * h)

    grads = GradientSet.for_network(net)
    for l in range(2, net.num_layers + 1):
        w, b = weights[l - 2], biases[l - 2]
        gw = np.empty_like(w)
        gb = np.empty_like(b)
        for idx in np.ndindex(*w.shape):
            gw[idx] = central(w, idx)
        for i in range(b.shape[0]):
            gb[i] = central(b, i)
        grads.store(l, gw, gb)
    return grads


def compare_gradients(
    g1: GradientSet,
    g2: GradientSet,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_floor: float = DEFAULT_ABS_FLOOR,
) -> GradCheckReport:
    """Elementwise comparison; an element passes if either its relative error
    ``|a-b| / max(|a|,|b|)`` is within ``rel_tol`` or its absolute error is
    within ``abs_floor``.

    The worst location is the element furthest outside its tolerance (the
    one maximising ``min(rel/rel_tol, abs/abs_floor)``).
    """
    if g1.layer_sizes != g2.layer_sizes:
        raise ShapeError(f"gradient sets have layer sizes {g1.layer_sizes} and {g2.layer_sizes}")
    max_rel = max_abs = 0.0
    worst, worst_score = None, -1.0
    passed = True
    for l in g1.layers():
        for param, a, b in (
            ("w", g1.nabla_w(l), g2.nabla_w(l)),
            ("b", g1.nabla_b(l), g2.nabla_b(l)),
        ):
            abs_err = np.abs(a - b)
            scale = np.maximum(np.abs(a), np.abs(b))
            with np.errstate(invalid="ignore", divide="ignore"):
                rel_err = np.where(abs_err == 0.0, 0.0, abs_err / scale)
            ok = (rel_err <= rel_tol) | (abs_err <= abs_floor)
            passed = passed and bool(ok.all())
            max_rel = max(max_rel, float(rel_err.max()))
            max_abs = max(max_abs, float(abs_err.max()))
            with np.errstate(invalid="ignore", divide="ignore"):
                score = np.minimum(
                    np.where(rel_err == 0.0, 0.0, rel_err / rel_tol),
                    np.where(abs_err == 0.0, 0.0, abs_err / abs_floor),
                )
            flat = int(np.argmax(score))
            if score.flat[flat] > worst_score:
                worst_score = float(score.flat[flat])
                worst = GradLocation(l, param, tuple(int(i) for i in np.unravel_index(flat, a.shape)))
    return GradCheckReport(max_rel, max_abs, worst, passed, rel_tol, abs_floor)


def check_schedule_coverage(schedule: LeapfrogSchedule) -> bool:
    """True iff parent and threads emit every layer ``2..L`` exactly once."""
    counts = Counter(schedule.emission_layers())
    return counts == Counter(range(2, schedule.L + 1))
