"""Leapfrogging backpropagation: a parent plus ``k`` interleaved worker threads.

The parent computes ``delta`` for the top ``k`` layers and emits their
gradients. Worker ``j`` starts from ``delta^{L-j}``, replays the error
recurrence all the way down, and emits gradients only at layers
``L-k-j, L-2k-j, ...`` (stopping at layer 2). Every worker repeats the
cheap recurrence but does ``1/k`` of the outer products, and the emission
sets of parent and workers partition ``{2..L}``.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass

import numpy as np

from .backprop import (
    GradientSet,
    _check_trace,
    delta_step,
    emit_gradients,
    output_delta,
    prepare_output,
)
from .network import ForwardTrace, Network


class LeapfrogError(RuntimeError):
    """A worker thread failed during a leapfrog pass."""


class OversubscriptionWarning(RuntimeWarning):
    """More threads were requested than there are layers to give them."""


@dataclass(frozen=True)
class LeapfrogSchedule:
    L: int
    k: int
    parent_layers: tuple[int, ...]
    thread_layers: tuple[tuple[int, ...], ...]
    thread_start_delta: tuple[int, ...]

    @property
    def active_threads(self) -> tuple[int, ...]:
        return tuple(j for j, layers in enumerate(self.thread_layers) if layers)

    def emission_layers(self) -> list[int]:
        """Every emitted layer, with multiplicity, parent first."""
        out = list(self.parent_layers)
        for layers in self.thread_layers:
            out.extend(layers)
        return out


def build_schedule(L: int, k: int) -> LeapfrogSchedule:
    if L < 2:
        raise ValueError(f"need at least 2 layers, got L={L}")
    if k < 1:
        raise ValueError(f"need at least 1 thread, got k={k}")
    parent = tuple(range(max(2, L - k + 1), L + 1))
    threads = tuple(tuple(range(L - k - j, 1, -k)) for j in range(k))
    starts = tuple(L - j for j in range(k))
    return LeapfrogSchedule(L, k, parent, threads, starts)


def replay_thread(
    net: Network,
    trace: ForwardTrace,
    start_layer: int,
    start_delta: np.ndarray,
    emit_layers: tuple[int, ...],
    grads: GradientSet | None = None,
) -> dict[int, np.ndarray]:
    """Body of one worker.

    Steps the error recurrence down from ``start_layer`` to the lowest layer
    in ``emit_layers``, storing gradients into ``grads`` at the emission
    layers. Returns every ``delta`` it computed, keyed by layer.
    """
    deltas = {}
    if not emit_layers:
        return deltas
    emit = set(emit_layers)
    delta = start_delta
    for l in range(start_layer - 1, min(emit_layers) - 1, -1):
        delta = delta_step(net, trace, l, delta)
        deltas[l] = delta
        if l in emit and grads is not None:
            emit_gradients(grads, trace, l, delta)
    return deltas


def backprop_leapfrog(
    net: Network, trace: ForwardTrace, y, k: int, out: GradientSet | None = None
) -> GradientSet:
    """Leapfrog backward pass with ``k`` threads; same result as the sequential pass.

    Gradients land in ``out`` (which must be reset) or in a new GradientSet,
    the store that parent and workers share, each writing only its own layers.
    """
    _check_trace(net, trace)
    L = net.num_layers
    schedule = build_schedule(L, k)
    idle = k - len(schedule.active_threads)
    if idle:
        warnings.warn(
            f"{idle} of {k} threads have no layers to emit for L={L}; not spawning them",
            OversubscriptionWarning,
            stacklevel=2,
        )

    grads = prepare_output(net, out)
    deltas = {L: output_delta(trace, y)}
    for l in range(L - 1, schedule.parent_layers[0] - 1, -1):
        deltas[l] = delta_step(net, trace, l, deltas[l + 1])
    for l in schedule.parent_layers:
        emit_gradients(grads, trace, l, deltas[l])

    failures: dict[int, BaseException] = {}

    def work(j: int) -> None:
        start = schedule.thread_start_delta[j]
        try:
            replay_thread(net, trace, start, deltas[start].copy(), schedule.thread_layers[j], grads)
        except BaseException as exc:
            failures[j] = exc

    workers = [
        threading.Thread(target=work, args=(j,), name=f"leapfrog-{j}")
        for j in schedule.active_threads
    ]
    for t in workers:
        t.start()
    for t in workers:
        t.join()

    if failures:
        j = min(failures)
        raise LeapfrogError(
            f"leapfrog pass aborted: thread {j} failed with {failures[j]!r}"
            + (f" ({len(failures) - 1} other thread(s) also failed)" if len(failures) > 1 else "")
        ) from failures[j]
    if not grads.complete:
        missing = [l for l in grads.layers() if not grads.filled[l - 2]]
        raise LeapfrogError(f"leapfrog pass left layers {missing} without gradients")
    return grads
