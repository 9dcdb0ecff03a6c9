"""Command-line entry point.

Exit status: 0 on success, 1 when a check or the run itself fails, 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from . import bench, costmodel, network
from .backprop import backprop_sequential
from .leapfrog import OversubscriptionWarning, backprop_leapfrog
from .oracle import (
    DEFAULT_ABS_FLOOR,
    DEFAULT_H,
    DEFAULT_REL_TOL,
    compare_gradients,
    finite_diff_gradients,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value <= network.MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leapfrog-nn",
        description="Leapfrogging multi-threaded backpropagation: verify, benchmark, model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a seeded random network file")
    p.add_argument("--layers", type=_int_list, required=True, help="layer sizes, e.g. 4,8,8,2")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="check leapfrog vs sequential vs finite differences")
    p.add_argument("--net", required=True, help="network file written by gen")
    p.add_argument("--k", type=_positive_int, required=True, help="leapfrog thread count")
    p.add_argument("--seed", type=_seed, required=True, help="seed for the input and target")
    p.add_argument("--tol", type=float, default=DEFAULT_REL_TOL, help="relative tolerance vs finite differences")
    p.add_argument("--abs-floor", type=float, default=DEFAULT_ABS_FLOOR)
    p.add_argument("--h", type=float, default=DEFAULT_H, help="finite-difference step")

    p = sub.add_parser("bench", help="time sequential vs leapfrog backward passes")
    p.add_argument("--layers", type=_int_list, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--k", type=_int_list, default=[1, 2, 4], help="thread counts, e.g. 1,2,4")
    p.add_argument("--reps", type=_positive_int, default=5)
    p.add_argument("--csv", help="write rows to this CSV file")

    p = sub.add_parser("model", help="evaluate the analytical speedup model")
    p.add_argument("--f1", type=float)
    p.add_argument("--f2", type=float)
    p.add_argument("--f3", type=float)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--epsilon", type=float, help="print the thread count ceil(1/epsilon)")
    return parser


def _cmd_gen(args) -> int:
    net = network.new_random(args.layers, args.seed)
    network.save(net, args.out)
    print(f"wrote {args.out}: layers {list(net.layer_sizes)}, {net.num_parameters()} parameters")
    return EXIT_OK


def _cmd_verify(args) -> int:
    net = network.load(args.net)
    x, y = network.random_sample(net, args.seed)
    trace = network.forward(net, x)
    seq = backprop_sequential(net, trace, y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OversubscriptionWarning)
        leap = backprop_leapfrog(net, trace, y, args.k)
    exact = compare_gradients(leap, seq, rel_tol=0.0, abs_floor=0.0)
    fd = compare_gradients(
        seq, finite_diff_gradients(net, x, y, args.h), rel_tol=args.tol, abs_floor=args.abs_floor
    )
    print(f"network: layers {list(net.layer_sizes)}, k={args.k}, seed={args.seed}")
    print(f"leapfrog vs sequential (bit-exact):  {exact.summary()}")
    print(f"sequential vs finite differences:    {fd.summary()}")
    ok = exact.passed and fd.passed
    print("verify: PASS" if ok else "verify: FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_bench(args) -> int:
    rows = bench.bench_compare(args.layers, args.seed, args.k, args.reps)
    if args.csv:
        bench.write_csv(rows, args.csv)
    print(bench.format_table(rows))
    return EXIT_OK


def _cmd_model(args, parser) -> int:
    phase = [args.f1, args.f2, args.f3]
    if args.epsilon is not None:
        if any(v is not None for v in phase + [args.k]):
            parser.error("model: --epsilon cannot be combined with --f1/--f2/--f3/--k")
        print(f"k = {costmodel.threads_for_speedup(args.epsilon)}")
        return EXIT_OK
    if any(v is None for v in phase + [args.k]):
        parser.error("model: give either --epsilon, or all of --f1 --f2 --f3 --k")
    costs = costmodel.PhaseCosts(*phase, units="")
    print(f"f  = {costmodel.total_cost(costs)!r}")
    print(f"f' = {costmodel.threaded_cost(costs, args.k)!r}")
    print(f"relative speedup = {costmodel.relative_speedup(costs, args.k)!r}")
    return EXIT_OK


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "model":
            return _cmd_model(args, parser)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    handler = {"gen": _cmd_gen, "verify": _cmd_verify, "bench": _cmd_bench}[args.command]
    try:
        return handler(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run())
