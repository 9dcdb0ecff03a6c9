"""Exit criteria for the package, one test per criterion.

Each test records a PASS/FAIL line that is printed in pytest's terminal
summary under "acceptance criteria".
"""

import contextlib
import math
import os

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS, make_case
from leapfrog_nn.backprop import backprop_sequential
from leapfrog_nn.bench import CSV_HEADER, bench_compare, write_csv
from leapfrog_nn.cli import run
from leapfrog_nn.costmodel import (
    PhaseCosts,
    relative_speedup,
    threaded_cost,
    threads_for_speedup,
    total_cost,
)
from leapfrog_nn.leapfrog import backprop_leapfrog, build_schedule
from leapfrog_nn.network import load, new_random, save
from leapfrog_nn.oracle import compare_gradients, finite_diff_gradients


@contextlib.contextmanager
def criterion(number, title):
    details = []
    try:
        yield details
    except BaseException as exc:
        ACCEPTANCE_RESULTS.append(f"[{number}] FAIL  {title}: {exc}".splitlines()[0])
        raise
    suffix = f" ({'; '.join(details)})" if details else ""
    ACCEPTANCE_RESULTS.append(f"[{number}] PASS  {title}{suffix}")


def _ulps_apart(a, b):
    return abs(a - b) / math.ulp(max(abs(a), abs(b)))


def test_1_bit_exact_equivalence():
    with criterion(1, "leapfrog == sequential, zero tolerance") as details:
        rng = np.random.default_rng(20240101)
        ks = (1, 2, 3, 4, 7, 64)
        passes = 0
        seen_L, seen_w = set(), set()
        for i in range(20):
            L = 2 + i % 11
            if i == 0:
                sizes = [1] * L
            elif i == 1:
                sizes = [64] * L
            else:
                sizes = rng.integers(1, 65, size=L).tolist()
            net, _, y, trace = make_case(sizes, 1000 + i)
            seen_L.add(L)
            seen_w.update(sizes)
            seq = backprop_sequential(net, trace, y)
            for k in ks:
                leap = backprop_leapfrog(net, trace, y, k)
                report = compare_gradients(seq, leap, rel_tol=0.0, abs_floor=0.0)
                assert leap.identical_to(seq) and report.max_absolute_error == 0.0, (
                    f"net {i} sizes={sizes} k={k}: {report.summary()}"
                )
                passes += 1
        assert seen_L == set(range(2, 13)) and {1, 64} <= seen_w
        details.append(f"20 nets x {len(ks)} thread counts = {passes} passes")


def test_2_gradient_correctness():
    with criterion(2, "sequential vs central differences (h=1e-5, rel 1e-6, abs 1e-8)") as details:
        rng = np.random.default_rng(77)
        worst = 0.0
        for i in range(10):
            L = int(rng.integers(2, 9))
            sizes = rng.integers(1, 17, size=L).tolist()
            net, x, y, trace = make_case(sizes, 500 + i)
            report = compare_gradients(
                backprop_sequential(net, trace, y),
                finite_diff_gradients(net, x, y, h=1e-5),
                rel_tol=1e-6,
                abs_floor=1e-8,
            )
            assert report.passed, f"net {i} sizes={sizes}: {report.summary()}"
            worst = max(worst, report.max_absolute_error)
        details.append(f"10 nets, max abs error {worst:.2e}")


def test_3_schedule_partition():
    with criterion(3, "schedules partition {2..L}, balanced to within 1") as details:
        count = 0
        for L in range(2, 51):
            for k in range(1, 51):
                s = build_schedule(L, k)
                owners = {}
                for layer in s.parent_layers:
                    owners.setdefault(layer, []).append("parent")
                for j, layers in enumerate(s.thread_layers):
                    for layer in layers:
                        owners.setdefault(layer, []).append(j)
                assert set(owners) == set(range(2, L + 1)), (L, k)
                assert all(len(v) == 1 for v in owners.values()), (L, k)
                sizes = [len(t) for t in s.thread_layers]
                assert max(sizes) - min(sizes) <= 1, (L, k)
                count += 1
        details.append(f"{count} (L, k) pairs")


def test_4_cost_model_exactness():
    with criterion(4, "cost model values exact (<= 1 ulp)"):
        assert total_cost(PhaseCosts(1, 1, 1)) == 3
        assert threaded_cost(PhaseCosts(1, 1, 6), 3) == 4
        assert relative_speedup(PhaseCosts(0, 0, 3.7), 4) == 0.75
        assert _ulps_apart(relative_speedup(PhaseCosts(1, 1, 1), 3), 2 / 9) <= 1
        assert threads_for_speedup(0.25) == 4


@pytest.mark.slow
def test_5_desk_scale_performance():
    with criterion(5, "L=32 N=1024 reps=5: leapfrog k=2 faster; measured speedup in [0.5, 1.5] x predicted") as details:
        cores = len(os.sched_getaffinity(0))
        details.append(f"{cores} cores")
        rows = bench_compare([1024] * 32, seed=0, k_list=[2, 4], reps=5)
        by_k = {r.k: r for r in rows}
        summary = ", ".join(
            f"k={r.k}: seq {r.t_backward_seq * 1e3:.1f} ms, leap {r.t_backward_leap * 1e3:.1f} ms, "
            f"measured {r.measured_speedup:.3f} vs predicted {r.predicted_speedup:.3f}"
            for r in rows
        )
        note = f"{cores} core(s) available, criterion assumes >= 4; {summary}"
        assert by_k[2].t_backward_leap < by_k[2].t_backward_seq, note
        for k in (2, 4):
            r = by_k[k]
            lo, hi = 0.5 * r.predicted_speedup, 1.5 * r.predicted_speedup
            assert lo <= r.measured_speedup <= hi, note
        details.append(summary)


def test_6_file_format_contracts(tmp_path, capsys):
    with criterion(6, "network round-trip, CSV header, verify exit codes"):
        net = new_random((5, 11, 7, 3), 123)
        path = tmp_path / "net.json"
        save(net, path)
        assert load(path).identical_to(net)

        csv_path = tmp_path / "rows.csv"
        write_csv(bench_compare([4] * 4, seed=1, k_list=[1, 2], reps=3), csv_path)
        header = csv_path.read_bytes().split(b"\n", 1)[0]
        assert header == (
            b"L,N,k,reps,t_forward_s,t_backward_seq_s,t_backward_leap_s,"
            b"f1_s,f2_s,f3_s,predicted_speedup,measured_speedup"
        )
        assert header == CSV_HEADER.encode()

        assert run(["verify", "--net", str(path), "--k", "3", "--seed", "4"]) == 0
        strict = ["--tol", "0", "--abs-floor", "0"]
        assert run(["verify", "--net", str(path), "--k", "3", "--seed", "4", *strict]) == 1
        data = bytearray(path.read_bytes())
        data[data.index(b'"weights"') + 14] ^= 0x01
        path.write_bytes(bytes(data))
        assert run(["verify", "--net", str(path), "--k", "3", "--seed", "4"]) == 1
        assert run(["verify", "--net", str(path), "--k", "3"]) == 2
        capsys.readouterr()
