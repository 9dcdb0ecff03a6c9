"""Sequential backward pass and the per-layer kernels it is built from.

The cost is quadratic, ``C = 0.5 * ||a^L - y||^2``, so ``dC/da^L = a^L - y``.
``output_delta``, ``delta_step`` and ``layer_gradients`` are shared verbatim
with the leapfrog executor, which is what makes the two passes bit-identical.
"""

from __future__ import annotations

import threading

import numpy as np

from .linalg import ShapeError, as_vector, hadamard, matvec_transpose, outer, sigmoid_prime
from .network import ForwardTrace, Network


class GradientSet:
    """Preallocated per-layer ``nabla_w`` / ``nabla_b`` slots for ``l = 2..L``.

    Each slot may be filled exactly once between resets; ``filled`` records
    which slots have been written. Distinct slots can be filled from
    different threads without further synchronisation.
    """

    def __init__(self, layer_sizes):
        self.layer_sizes = tuple(layer_sizes)
        pairs = list(zip(self.layer_sizes[1:], self.layer_sizes[:-1]))
        self._w = [np.empty((rows, cols)) for rows, cols in pairs]
        self._b = [np.empty(rows) for rows, _ in pairs]
        self.filled = [False] * len(pairs)
        self._lock = threading.Lock()

    @classmethod
    def for_network(cls, net: Network) -> "GradientSet":
        return cls(net.layer_sizes)

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes)

    def _slot(self, l: int) -> int:
        if not 2 <= l <= self.num_layers:
            raise IndexError(f"layer {l} outside 2..{self.num_layers}")
        return l - 2

    def claim(self, l: int) -> tuple[np.ndarray, np.ndarray]:
        """Mark layer ``l`` filled and return its buffers for the caller to write.

        Raises if the slot was already claimed, before anything is overwritten.
        """
        i = self._slot(l)
        # The lock only guards the write-once check; layers never share a slot.
        with self._lock:
            if self.filled[i]:
                raise RuntimeError(f"gradient slot for layer {l} written twice")
            self.filled[i] = True
        return self._w[i], self._b[i]

    def store(self, l: int, nabla_w: np.ndarray, nabla_b: np.ndarray) -> None:
        """Copy finished gradients into layer ``l``'s slot."""
        i = self._slot(l)
        if nabla_w.shape != self._w[i].shape or nabla_b.shape != self._b[i].shape:
            raise ShapeError(
                f"layer {l}: gradient shapes {nabla_w.shape}/{nabla_b.shape}, "
                f"expected {self._w[i].shape}/{self._b[i].shape}"
            )
        w_buf, b_buf = self.claim(l)
        w_buf[...] = nabla_w
        b_buf[...] = nabla_b

    def reset(self) -> None:
        """Clear the filled flags so the buffers can be reused for another pass."""
        self.filled = [False] * len(self.filled)

    @property
    def complete(self) -> bool:
        return all(self.filled)

    def nabla_w(self, l: int) -> np.ndarray:
        i = self._slot(l)
        if not self.filled[i]:
            raise KeyError(f"no gradient stored for layer {l}")
        return self._w[i]

    def nabla_b(self, l: int) -> np.ndarray:
        i = self._slot(l)
        if not self.filled[i]:
            raise KeyError(f"no gradient stored for layer {l}")
        return self._b[i]

    def layers(self) -> range:
        return range(2, self.num_layers + 1)

    def identical_to(self, other: "GradientSet") -> bool:
        """Bitwise equality of every stored gradient (both sets must be complete)."""
        if self.layer_sizes != other.layer_sizes or not (self.complete and other.complete):
            return False
        return all(
            self.nabla_w(l).tobytes() == other.nabla_w(l).tobytes()
            and self.nabla_b(l).tobytes() == other.nabla_b(l).tobytes()
            for l in self.layers()
        )


def quadratic_cost(a, y) -> float:
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if a.shape != y.shape:
        raise ShapeError(f"cost: output length {a.shape[0]} but target length {y.shape[0]}")
    total = 0.0
    for ai, yi in zip(a.tolist(), y.tolist()):
        d = ai - yi
        total += d * d
    return 0.5 * total


def _check_layer(trace: ForwardTrace, l: int, lo: int, hi: int) -> None:
    if not lo <= l <= hi:
        raise IndexError(f"layer {l} outside {lo}..{hi} for a {trace.num_layers}-layer network")


def output_delta(trace: ForwardTrace, y) -> np.ndarray:
    """``delta^L = (a^L - y) * sigmoid'(z^L)``."""
    y = as_vector(y, "target")
    a_out = trace.activations[-1]
    if y.shape != a_out.shape:
        raise ShapeError(f"target has length {y.shape[0]}, output layer has {a_out.shape[0]}")
    return hadamard(a_out - y, sigmoid_prime(trace.zs[-1]))


def delta_step(net: Network, trace: ForwardTrace, l: int, delta_next: np.ndarray) -> np.ndarray:
    """``delta^l = (w^{l+1}.T delta^{l+1}) * sigmoid'(z^l)`` for ``2 <= l <= L-1``."""
    _check_layer(trace, l, 2, net.num_layers - 1)
    if delta_next.shape[0] != net.size(l + 1):
        raise ShapeError(
            f"layer {l}: delta for layer {l + 1} has length {delta_next.shape[0]}, "
            f"expected {net.size(l + 1)}"
        )
    return hadamard(matvec_transpose(net.w(l + 1), delta_next), sigmoid_prime(trace.z(l)))


def layer_gradients(
    trace: ForwardTrace, l: int, delta: np.ndarray, out=None
) -> tuple[np.ndarray, np.ndarray]:
    """``(nabla_w^l, nabla_b^l) = (outer(delta, a^{l-1}), delta)``.

    ``out`` is an optional ``(w_buf, b_buf)`` pair to write into.
    """
    _check_layer(trace, l, 2, trace.num_layers)
    if delta.shape != trace.z(l).shape:
        raise ShapeError(f"layer {l}: delta has length {delta.shape[0]}, expected {trace.z(l).shape[0]}")
    if out is None:
        return outer(delta, trace.a(l - 1)), delta.copy()
    w_buf, b_buf = out
    outer(delta, trace.a(l - 1), out=w_buf)
    b_buf[...] = delta
    return w_buf, b_buf


def emit_gradients(grads: "GradientSet", trace: ForwardTrace, l: int, delta: np.ndarray) -> None:
    """Compute layer ``l``'s gradients straight into ``grads``' slot."""
    layer_gradients(trace, l, delta, out=grads.claim(l))


def prepare_output(net: Network, out: "GradientSet | None") -> "GradientSet":
    if out is None:
        return GradientSet.for_network(net)
    if out.layer_sizes != net.layer_sizes:
        raise ShapeError(f"output gradient set has layer sizes {out.layer_sizes}, network {net.layer_sizes}")
    if any(out.filled):
        raise ValueError("output gradient set already holds gradients; call reset() first")
    return out


def _check_trace(net: Network, trace: ForwardTrace) -> None:
    if trace.num_layers != net.num_layers or len(trace.zs) != net.num_layers - 1:
        raise ValueError(
            f"trace covers {trace.num_layers} layers but the network has {net.num_layers}"
        )
    for l in range(2, net.num_layers + 1):
        if trace.z(l).shape != (net.size(l),) or trace.a(l).shape != (net.size(l),):
            raise ValueError(f"trace layer {l} does not match the network's width {net.size(l)}")


def sequential_deltas(net: Network, trace: ForwardTrace, y) -> dict[int, np.ndarray]:
    """All error vectors ``{l: delta^l}`` for ``l = 2..L``."""
    _check_trace(net, trace)
    L = net.num_layers
    deltas = {L: output_delta(trace, y)}
    for l in range(L - 1, 1, -1):
        deltas[l] = delta_step(net, trace, l, deltas[l + 1])
    return deltas


def backprop_sequential(net: Network, trace: ForwardTrace, y, out: GradientSet | None = None) -> GradientSet:
    """Reference backward pass; fills ``out`` (reset) or a new GradientSet."""
    _check_trace(net, trace)
    grads = prepare_output(net, out)
    L = net.num_layers
    delta = output_delta(trace, y)
    emit_gradients(grads, trace, L, delta)
    for l in range(L - 1, 1, -1):
        delta = delta_step(net, trace, l, delta)
        emit_gradients(grads, trace, l, delta)
    return grads
