"""Command-line interface: build, inspect, evaluate, verify, sweep and benchmark networks.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
import time
from typing import Sequence

import numpy as np

from . import fold, netfile
from .network import ReluNetwork, count_params, describe
from .sorter import GENERATOR, build_sorter, verify_sorter
from .sweep import TARGETS, error_sweep

CONSTRUCTORS = ("sorter",) + tuple(TARGETS)

SWEEP_EPILOG = """\
sweep CSV columns: L, [component,] x, [y,] err_net, err_oracle, net_vs_oracle
  err_net        |target - network|
  err_oracle     |target - oracle|
  net_vs_oracle  |network - oracle|
'component' appears only for multi-output constructors, 'y' only for mul.
"""

BENCH_EPILOG = """\
bench CSV columns: L, N, hidden_layers, width, params_dense, params_sparse, build_s, eval_s
"""


class UsageError(Exception):
    pass


def parse_range(text: str) -> range:
    """``"A..B"`` (inclusive) or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B or an integer, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return range(lo, hi + 1)


def _levels_from_n(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise UsageError(f"--n must be a power of two >= 2, got {n}")
    return n.bit_length() - 1


def build_named(name: str, L: int, init=None, degree: int = 10, folds: int = 1, dtype=np.float64) -> ReluNetwork:
    if name == "sorter":
        return build_sorter(L, dtype)
    t = TARGETS.get(name)
    if t is None:
        raise UsageError(f"unknown constructor {name!r}")
    mode = fold.InitMode.parse(init) if init is not None else t.default_init
    if mode not in t.inits:
        raise UsageError(f"{name} does not support --init {mode.value}")
    return t.build(L, mode, np.dtype(dtype), d=degree, s=folds)


# -- subcommands ---------------------------------------------------------------------


def cmd_build(args) -> int:
    if args.n is not None:
        if args.constructor != "sorter":
            raise UsageError("--n applies to the sorter only")
        L = _levels_from_n(args.n)
    elif args.levels is not None:
        L = args.levels
    else:
        raise UsageError("give --levels (or --n for the sorter)")
    net = build_named(args.constructor, L, args.init, args.degree, args.folds, args.dtype)
    netfile.save(net, args.out)
    print(f"wrote {args.out}: {net!r}")
    return 0


def cmd_info(args) -> int:
    net = netfile.load(args.file)
    s = describe(net)
    if args.json:
        print(json.dumps(s.to_dict(), sort_keys=True, indent=2))
        return 0
    print(f"constructor:    {net.metadata.get('constructor', '?')}")
    print(f"dtype:          {net.dtype.name}")
    print(f"input dim:      {s.input_dim}")
    print(f"output dim:     {s.output_dim}")
    print(f"depth:          {s.depth}")
    print(f"hidden layers:  {s.hidden_layers}")
    print(f"width:          {s.width}")
    print(f"params dense:   {s.params.dense}")
    print(f"params sparse:  {s.params.sparse}")
    return 0


def _read_inputs(path: str, dim: int) -> np.ndarray:
    src = contextlib.nullcontext(sys.stdin) if path == "-" else open(path, newline="")
    with src as f:
        rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]  # header
    if not rows:
        return np.zeros((0, dim))
    if any(len(r) != dim for r in rows):
        raise UsageError(f"every input row needs {dim} values")
    try:
        return np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as e:
        raise UsageError(f"bad input value: {e}") from None


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def cmd_eval(args) -> int:
    net = netfile.load(args.file)
    X = _read_inputs(args.input, net.input_dim)
    Y = net.forward(X) if len(X) else np.zeros((0, net.output_dim))
    with _open_out(args.output) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([f"y{k}" for k in range(net.output_dim)])
        for row in Y:
            w.writerow([repr(float(v)) for v in row])
    return 0


def cmd_verify(args) -> int:
    rep = verify_sorter(args.levels, args.trials, args.seed)
    print(f"# generator: {GENERATOR}, seed {rep.seed}")
    print(f"L={rep.L} N={rep.N} trials={rep.trials} failures={rep.failures}")
    print(f"max deviation: {rep.max_deviation:.3e} ({rep.max_deviation_ulps:.1f} ulps, tolerance {rep.tolerance_ulps:.0f})")
    print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 1


def cmd_sweep(args) -> int:
    params = {}
    if args.constructor == "monomials":
        params["d"] = args.degree
    if args.constructor == "periodic-cos":
        params["s"] = args.folds
    rep = error_sweep(args.constructor, args.levels, grid=args.grid, init=args.init,
                      dtype=np.dtype(args.dtype), **params)
    if args.out:
        with open(args.out, "w", newline="") as f:
            rep.write_csv(f)
    print(f"# {rep.constructor} init={rep.init.value} grid={rep.grid} dtype={rep.dtype}")
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["L", "component", "max_err_net", "max_err_oracle", "max_net_vs_oracle", "ulps"])
    for r in rep.summary_rows():
        w.writerow([r["L"], r["component"], f"{r['max_err_net']:.6e}", f"{r['max_err_oracle']:.6e}",
                    f"{r['max_net_vs_oracle']:.6e}", f"{r['ulps']:.1f}"])
    return 0


def cmd_bench(args) -> int:
    rng = np.random.Generator(np.random.Philox(args.seed))
    with _open_out(args.out) as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["L", "N", "hidden_layers", "width", "params_dense", "params_sparse", "build_s", "eval_s"])
        for L in args.levels:
            t0 = time.perf_counter()
            net = build_sorter(L)
            t_build = time.perf_counter() - t0
            x = rng.standard_normal(2**L)
            t_eval = min(_timed(net, x) for _ in range(args.repeat))
            p = count_params(net)
            w.writerow([L, 2**L, net.hidden_layers, net.width, p.dense, p.sparse, f"{t_build:.6f}", f"{t_eval:.6f}"])
            f.flush()
    return 0


def _timed(net: ReluNetwork, x) -> float:
    t0 = time.perf_counter()
    net.forward(x)
    return time.perf_counter() - t0


# -- parser --------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="algonet", description="ReLU networks built as algorithms.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a network and save it")
    b.add_argument("constructor", choices=CONSTRUCTORS)
    b.add_argument("-L", "--levels", type=int, help="recursion levels (sorter: N = 2**L)")
    b.add_argument("--n", type=int, help="sorter input size (power of two)")
    b.add_argument("--degree", type=int, default=10, help="monomials: highest degree (default 10)")
    b.add_argument("--folds", type=int, default=1, help="periodic-cos: sawtooth folds s (default 1)")
    b.add_argument("--init", choices=[m.value for m in fold.InitMode])
    b.add_argument("--dtype", choices=["float64", "float32"], default="float64")
    b.add_argument("-o", "--out", required=True)
    b.set_defaults(func=cmd_build)

    e = sub.add_parser("eval", help="evaluate a saved network on CSV rows",
                       epilog="input: one vector per row, optional header; output: header y0..y{m-1}")
    e.add_argument("file")
    e.add_argument("--input", required=True, help="CSV file or - for stdin")
    e.add_argument("--output", default="-", help="CSV file or - for stdout")
    e.set_defaults(func=cmd_eval)

    i = sub.add_parser("info", help="depth, width, dims and parameter counts")
    i.add_argument("file")
    i.add_argument("--json", action="store_true")
    i.set_defaults(func=cmd_info)

    v = sub.add_parser("verify", help="check the sorter on seeded random vectors")
    v.add_argument("what", choices=["sorter"])
    v.add_argument("-L", "--levels", type=int, required=True)
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="error sweep against oracle and target",
                       epilog=SWEEP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    s.add_argument("constructor", choices=tuple(TARGETS))
    s.add_argument("-L", "--levels", type=parse_range, required=True, help="A..B")
    s.add_argument("--grid", type=int, help="points per axis (default 10001, mul: 101)")
    s.add_argument("--init", choices=[m.value for m in fold.InitMode])
    s.add_argument("--degree", type=int, default=10)
    s.add_argument("--folds", type=int, default=1)
    s.add_argument("--dtype", choices=["float64", "float32"], default="float64")
    s.add_argument("--out", help="per-point CSV")
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("bench", help="sorter construction and evaluation timings",
                       epilog=BENCH_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    k.add_argument("what", choices=["sorter"])
    k.add_argument("-L", "--levels", type=parse_range, required=True, help="A..B")
    k.add_argument("--repeat", type=int, default=3, help="evaluation repeats; the minimum is reported")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", help="CSV file (default stdout)")
    k.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
