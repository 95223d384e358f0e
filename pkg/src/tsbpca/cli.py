"""Command-line interface.

Exit codes: 0 success, 1 bad input or flags, 2 numerical failure,
3 validation threshold not met.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import harness
from ._types import Counter, Pooling, RunConfig
from .exceptions import InputError, NumericalError
from .io import atomic_write_text, read_dataset, write_compact, write_csv
from .oracle import reconstruction_error, subspace_distance, top_eigenspace
from .streaming import compress

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_FAIL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return values


def _add_config_flags(p, *, grid=False, time_batch=1, components=1):
    if not grid:
        p.add_argument("-T", "--time-batch", type=int, default=time_batch,
                       help=f"time points per batch (default {time_batch})")
        p.add_argument("-K", "--components", type=int, default=components,
                       help=f"retained components (default {components})")
    p.add_argument("--tol", type=float, default=1e-6, help="inner convergence tolerance (default 1e-6)")
    p.add_argument("--max-inner-iters", type=int, default=100, help="power-iteration cap per time point (default 100)")
    p.add_argument("--pooling", choices=[m.value for m in Pooling], default="none")
    p.add_argument("--counter", choices=[m.value for m in Counter], default="global",
                   help="history weight counter: run-wide or reset per batch")
    p.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")


def _add_input_flags(p, required=True):
    p.add_argument("--input", required=required, help="dataset file")
    p.add_argument("--format", choices=["csv", "ts"], default=None,
                   help="input format (default: from the file extension)")


def _config(args, **overrides) -> RunConfig:
    fields = dict(
        time_batch=getattr(args, "time_batch", 1),
        components=getattr(args, "components", 1),
        tol=args.tol,
        max_inner_iters=args.max_inner_iters,
        seed=args.seed,
        pooling=args.pooling,
        counter=args.counter,
    )
    fields.update(overrides)
    return RunConfig(**fields)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsbpca", description="Temporal streaming batch PCA for time-series panels.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="compress a dataset and write the compact representation")
    _add_input_flags(p)
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="output CSV; the sidecar is written to OUT.meta.json")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("validate", help="compare the streaming basis with batch PCA")
    _add_input_flags(p)
    _add_config_flags(p)
    p.add_argument("--max-distance", type=float, default=0.1,
                   help="largest acceptable subspace distance (default 0.1)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="grid over time batch T and components K")
    _add_input_flags(p, required=False)
    p.add_argument("--preset", choices=sorted(harness.PRESETS), default="stationary-2class",
                   help="synthetic dataset used when --input is absent")
    p.add_argument("--t", type=_int_list, required=True, help="comma-separated T values")
    p.add_argument("--k", type=_int_list, required=True, help="comma-separated K values")
    _add_config_flags(p, grid=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", default="-", help="output CSV (default: standard output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="median wall time of compress across sequence lengths")
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated sequence lengths")
    p.add_argument("--preset", choices=sorted(harness.PRESETS), default="bench")
    _add_config_flags(p, time_batch=10, components=4)
    p.add_argument("--repeats", type=int, default=3, help="timed runs per length (default 3)")
    p.add_argument("--out", default="-", help="output CSV (default: standard output)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a synthetic dataset as long-form CSV")
    p.add_argument("--preset", choices=sorted(harness.PRESETS), required=True)
    p.add_argument("--n", type=int, default=None, help="override the sequence length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def cmd_compress(args) -> int:
    config = _config(args)
    ds = read_dataset(args.input, args.format)
    config.check_against(ds.n_times, ds.n_vars)
    start = time.perf_counter()
    rep = compress(ds, config)
    elapsed = time.perf_counter() - start
    write_compact(rep, args.out)
    B, N, d = ds.shape
    print(
        f"input (B={B}, N={N}, d={d}) -> output {tuple(rep.values.shape)}; "
        f"batches={len(rep.eigen_trajectory)}; converged={rep.converged_fraction:.3f}; "
        f"wall={elapsed:.3f}s"
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _config(args)
    ds = read_dataset(args.input, args.format)
    config.check_against(ds.n_times, ds.n_vars)
    rep = compress(ds, config)
    oracle_q = top_eigenspace(ds, config.components)
    dist = subspace_distance(rep.final_q, oracle_q)
    err_stream = reconstruction_error(ds, rep.final_q)
    err_oracle = reconstruction_error(ds, oracle_q)
    ok = dist <= args.max_distance
    print(f"subspace_distance={dist:.6g}")
    print(f"reconstruction_error_streaming={err_stream:.6g}")
    print(f"reconstruction_error_oracle={err_oracle:.6g}")
    print(f"{'PASS' if ok else 'FAIL'} (max distance {args.max_distance:g})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    template = _config(args)
    if args.input:
        ds = read_dataset(args.input, args.format)
    else:
        ds = harness.generate(harness.PRESETS[args.preset], args.seed)
    result = harness.sweep(ds, args.t, args.k, template, jobs=args.jobs)
    _emit(result.to_csv(), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _config(args)
    spec = harness.PRESETS[args.preset]
    family = [spec.with_n(n) for n in sorted(args.n)]
    for s in family:
        config.check_against(s.N, s.d)
    rows = harness.bench_scaling(family, config, repeats=args.repeats, seed=args.seed)
    _emit(harness.bench_csv(rows), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = harness.PRESETS[args.preset]
    if args.n is not None:
        spec = spec.with_n(args.n)
    ds = harness.generate(spec, args.seed)
    write_csv(ds, args.out)
    print(f"wrote B={ds.n_instances} N={ds.n_times} d={ds.n_vars} to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, OSError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
