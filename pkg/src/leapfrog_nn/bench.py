"""Timing harness: per-layer phase costs and sequential vs leapfrog passes.

All timings are medians over repetitions, taken with ``time.perf_counter``
after one untimed warmup. Every timed leapfrog pass is checked bit for bit
against the sequential pass of the same repetition before any number is
reported.
"""

from __future__ import annotations

import csv
import gc
import statistics
import time
import warnings
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .backprop import GradientSet, backprop_sequential, delta_step, layer_gradients, output_delta
from .costmodel import PhaseCosts, relative_speedup
from .leapfrog import backprop_leapfrog
from .network import ForwardTrace, Network, forward, layer_forward, new_random, random_sample

CSV_HEADER = (
    "L,N,k,reps,t_forward_s,t_backward_seq_s,t_backward_leap_s,"
    "f1_s,f2_s,f3_s,predicted_speedup,measured_speedup"
)


class GradientMismatchError(RuntimeError):
    """A leapfrog pass disagreed with the sequential pass during benchmarking."""


@dataclass(frozen=True)
class LayerCosts:
    """Raw kernel timings, ``f*[rep, i]`` for hidden layer ``layers[i]``."""

    layers: tuple[int, ...]
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    def per_layer_medians(self) -> dict[str, np.ndarray]:
        return {name: np.median(getattr(self, name), axis=0) for name in ("f1", "f2", "f3")}

    def phase_costs(self) -> PhaseCosts:
        med = self.per_layer_medians()
        return PhaseCosts(*(float(np.median(med[name])) for name in ("f1", "f2", "f3")))


@dataclass(frozen=True)
class BenchRow:
    L: int
    N: int
    k: int
    reps: int
    t_forward: float
    t_backward_seq: float
    t_backward_leap: float
    f1: float
    f2: float
    f3: float
    predicted_speedup: float
    measured_speedup: float


def _instrumented_pass(net: Network, x: np.ndarray, y: np.ndarray, L: int, grads: GradientSet):
    clock = time.perf_counter
    grads.reset()
    hidden = range(2, L)
    f1, f2, f3 = {}, {}, {}
    zs, acts = [], [x]
    for l in range(2, L + 1):
        t0 = clock()
        z, a = layer_forward(net.w(l), net.b(l), acts[-1])
        t1 = clock()
        if l in hidden:
            f1[l] = t1 - t0
        zs.append(z)
        acts.append(a)
    trace = ForwardTrace(tuple(zs), tuple(acts))
    delta = output_delta(trace, y)
    for l in range(L - 1, 1, -1):
        t0 = clock()
        delta = delta_step(net, trace, l, delta)
        t1 = clock()
        layer_gradients(trace, l, delta, out=grads.claim(l))
        t2 = clock()
        f2[l] = t1 - t0
        f3[l] = t2 - t1
    return [[f[l] for l in hidden] for f in (f1, f2, f3)]


def measure_layer_costs(net: Network, x, y, reps: int) -> LayerCosts:
    """Time each dominant kernel at every hidden layer over ``reps`` passes.

    f1 is ``matvec + bias + sigmoid``, f2 is ``matvec_transpose + hadamard``
    (with the sigmoid derivative) and f3 is ``outer + copy``.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if reps < 3:
        warnings.warn(f"reps={reps} is below the recommended minimum of 3", stacklevel=2)
    L = net.num_layers
    if L < 3:
        raise ValueError("phase costs are measured on hidden layers; need at least 3 layers")
    if len(set(net.layer_sizes[1:-1])) > 1:
        warnings.warn(
            "hidden layers have different widths; per-layer costs will not be uniform",
            stacklevel=2,
        )
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    grads = GradientSet.for_network(net)
    _instrumented_pass(net, x, y, L, grads)  # warmup, also faults in the buffers
    samples = [_instrumented_pass(net, x, y, L, grads) for _ in range(reps)]
    f1, f2, f3 = (np.array([s[i] for s in samples]) for i in range(3))
    return LayerCosts(tuple(range(2, L)), f1, f2, f3)


def measure_phase_costs(net: Network, x, y, reps: int) -> PhaseCosts:
    """Median over hidden layers of each kernel's per-layer median time."""
    return measure_layer_costs(net, x, y, reps).phase_costs()


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def bench_compare(
    layer_sizes: Sequence[int],
    seed: int,
    k_list: Sequence[int],
    reps: int,
) -> list[BenchRow]:
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if any(k < 1 for k in k_list):
        raise ValueError(f"thread counts must be >= 1, got {list(k_list)}")
    net = new_random(layer_sizes, seed)
    x, y = random_sample(net, seed)
    costs = measure_phase_costs(net, x, y, reps)
    L = net.num_layers
    N = max(net.layer_sizes[1:-1]) if L > 2 else net.layer_sizes[-1]

    # Both passes write into stores that are reused across repetitions, so
    # page faults on fresh gradient memory stay out of the timed regions.
    seq = GradientSet.for_network(net)
    leap = GradientSet.for_network(net)
    rows = []
    for k in k_list:
        # warmup, untimed
        trace = forward(net, x)
        for g in (seq, leap):
            g.reset()
        backprop_sequential(net, trace, y, seq)
        backprop_leapfrog(net, trace, y, k, leap)
        t_fwd, t_seq, t_leap = [], [], []
        for rep in range(reps):
            for g in (seq, leap):
                g.reset()
            gc.collect()
            dt, trace = _timed(forward, net, x)
            t_fwd.append(dt)
            dt, _ = _timed(backprop_sequential, net, trace, y, seq)
            t_seq.append(dt)
            dt, _ = _timed(backprop_leapfrog, net, trace, y, k, leap)
            t_leap.append(dt)
            if not leap.identical_to(seq):
                raise GradientMismatchError(
                    f"leapfrog gradients differ from sequential (k={k}, rep {rep}); "
                    "timings discarded"
                )
        tf, ts, tl = (statistics.median(t) for t in (t_fwd, t_seq, t_leap))
        rows.append(
            BenchRow(
                L=L,
                N=N,
                k=k,
                reps=reps,
                t_forward=tf,
                t_backward_seq=ts,
                t_backward_leap=tl,
                f1=costs.f1,
                f2=costs.f2,
                f3=costs.f3,
                predicted_speedup=relative_speedup(costs, k),
                measured_speedup=(ts + tf - tl - tf) / (tf + ts),
            )
        )
    return rows


def write_csv(rows: Sequence[BenchRow], destination) -> None:
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            # str(float) is the shortest round-trip repr
            writer.writerow([str(v) for v in astuple(row)])


def read_csv(source) -> list[BenchRow]:
    text = Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a benchmark CSV: header mismatch")
    types = [f.type for f in fields(BenchRow)]
    rows = []
    for record in csv.reader(lines[1:]):
        values = [int(v) if t in (int, "int") else float(v) for v, t in zip(record, types)]
        rows.append(BenchRow(*values))
    return rows


def format_table(rows: Sequence[BenchRow]) -> str:
    head = f"{'L':>4} {'N':>6} {'k':>4} {'fwd ms':>9} {'seq ms':>9} {'leap ms':>9} {'f3/f':>6} {'predicted':>10} {'measured':>10}"
    out = [head, "-" * len(head)]
    for r in rows:
        share = r.f3 / (r.f1 + r.f2 + r.f3)
        out.append(
            f"{r.L:>4} {r.N:>6} {r.k:>4} {r.t_forward * 1e3:>9.3f} {r.t_backward_seq * 1e3:>9.3f} "
            f"{r.t_backward_leap * 1e3:>9.3f} {share:>6.3f} {r.predicted_speedup:>10.4f} "
            f"{r.measured_speedup:>10.4f}"
        )
    return "\n".join(out)
