"""Command-line front end.

    ebr fit --data data.csv [--response-column y] [--n-presv 35] [--rows 3]
    ebr bench --cases 1-16 [--n-presv N] [--output report.jsonl]
    ebr decode "1,1,2;3,3,2;12,3,1" --dimension 2

Exit status: 0 on success, 2 for bad input (files, flags, case ids, codes),
3 for a degenerate fit, 1 if any benchmark case errored.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time

from . import __version__
from .bench import parse_case_ids, render_table, run_suite
from .codec import MappingRules, decode, parse_matrix_literal, to_infix
from .errors import CodeRangeError, DatasetError, DegenerateFitError
from .glm import FitOptions, format_formula
from .pipeline import regress
from .sampling import DEFAULT_SEED, grid, load_csv, parse_domain

FIT_SCHEMA = "ebr-fit/1"


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n-presv", type=_positive_int, default=None,
                        help="elite pool size (default 35; bench uses each case's setting)")
    common.add_argument("--rows", type=_positive_int, default=3,
                        help="parse-matrix rows per basis (default 3)")
    common.add_argument("--max-terms", type=_positive_int, default=None,
                        help="cap on model terms (default: pool size)")
    common.add_argument("--nmse-target", type=_positive_float, default=1e-10,
                        help="stop adding terms once training NMSE reaches this (default 1e-10)")
    common.add_argument("--min-improvement", type=_positive_float, default=1e-8,
                        help="minimum relative NMSE decrease per added term (default 1e-8)")
    common.add_argument("--workers", type=_positive_int, default=1,
                        help="worker processes: search partitions for fit, "
                             "concurrent cases for bench (default 1)")
    common.add_argument("--output", default=None, help="write the structured report here")
    common.add_argument("--format", choices=("text", "json-lines"), default="text",
                        help="standard output format (default text)")

    parser = argparse.ArgumentParser(prog="ebr", description="Elite bases symbolic regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit a CSV data set")
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--response-column", default="y", help="response column name (default y)")
    p.add_argument("--samples", type=_positive_int, default=30,
                   help="grid points per axis for --dump-grid (default 30)")
    p.add_argument("--domain", default=None,
                   help="'a,b[;a,b...]' box for --dump-grid (default: data range)")
    p.add_argument("--dump-grid", default=None, metavar="CSV",
                   help="write (x, f*(x)) on a grid for plotting")

    p = sub.add_parser("bench", parents=[common], help="run built-in benchmark cases")
    p.add_argument("--cases", default="all", help="ids such as '1-6,11' or 'all'")
    p.add_argument("--samples", type=_positive_int, default=None,
                   help="grid points per axis, or total points with --sampling lhs")
    p.add_argument("--sampling", choices=("grid", "lhs"), default="grid")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"LHS seed (default {DEFAULT_SEED})")
    p.add_argument("--random-seed", action="store_true", help="draw a fresh LHS seed")
    p.add_argument("--domain", default=None, help="override box 'a,b[;a,b...]'")
    p.add_argument("--full", action="store_true",
                   help="published sample counts for the 3-D cases (10^3 instead of 7^3)")

    p = sub.add_parser("decode", help="print the formula encoded by a parse matrix")
    p.add_argument("matrix", help="rows separated by ';', entries by ','")
    p.add_argument("--dimension", "-d", type=_positive_int, default=None,
                   help="number of input variables (default: inferred from the codes)")
    return parser


def _fit_options(args) -> FitOptions:
    return FitOptions(max_terms=args.max_terms, nmse_target=args.nmse_target,
                      min_improvement=args.min_improvement)


def cmd_fit(args) -> int:
    try:
        data = load_csv(args.data, args.response_column)
    except (OSError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        result = regress(data, n_presv=args.n_presv or 35, row_count=args.rows,
                         options=_fit_options(args), workers=args.workers)
    except DegenerateFitError as exc:
        print(f"error: degenerate fit: {exc}", file=sys.stderr)
        return 3
    elapsed = time.perf_counter() - t0
    model, search = result.model, result.search
    report = {
        "schema": FIT_SCHEMA,
        "data": str(args.data),
        "variables": list(data.names),
        "samples": data.m,
        "n_presv": search.config.n_presv,
        "rows": search.config.row_count,
        "formula": format_formula(model),
        "intercept": model.intercept,
        "terms": [
            {"basis": to_infix(t.basis.tree), "matrix": [list(r) for r in t.basis.matrix],
             "abs_corr": t.basis.abs_corr, "coefficient": t.coefficient}
            for t in model.terms
        ],
        "nmse": model.nmse,
        "total_valid": search.total_valid,
        "total_enumerated": search.total_enumerated,
        "elapsed_ms": round(elapsed * 1000.0, 3),
    }
    if args.format == "json-lines":
        print(json.dumps(report, sort_keys=True))
    else:
        names = ", ".join(f"x{i}={n}" for i, n in enumerate(data.names, start=1))
        print(f"f* = {format_formula(model, 10)}")
        print(f"variables: {names}")
        print(f"intercept: {model.intercept:.10g}")
        for t in model.terms:
            print(f"  {t.coefficient:+.10g} * {to_infix(t.basis.tree)}   |rho|={t.basis.abs_corr:.8f}")
        print(f"NMSE: {model.nmse:.6g}")
        print(f"total valid bases: {search.total_valid} of {search.total_enumerated} matrices")
        print(f"elapsed: {elapsed:.3f} s")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report, sort_keys=True) + "\n")
    if args.dump_grid:
        try:
            box = parse_domain(args.domain, data.dimension) if args.domain else data.domain
            pts = grid(args.samples, box)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        _dump_grid(args.dump_grid, pts, model.predict(pts), data.names)
    return 0


def _dump_grid(path, pts, values, names):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(list(names) + ["f"]) + "\n")
        for p, v in zip(pts, values):
            fh.write(",".join(repr(float(c)) for c in p) + f",{float(v)!r}\n")


def cmd_bench(args) -> int:
    try:
        ids = parse_case_ids(args.cases)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 2
    seed = secrets.randbits(63) if args.random_seed else args.seed
    kwargs = dict(row_count=args.rows, full=args.full, sampling=args.sampling, seed=seed,
                  fit_options=_fit_options(args))
    if args.n_presv:
        kwargs["n_presv"] = args.n_presv
    if args.samples:
        if args.sampling == "grid":
            kwargs["points_per_axis"] = args.samples
        else:
            kwargs["samples"] = args.samples
    if args.domain:
        try:
            kwargs["domain"] = parse_domain(args.domain)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    rows = run_suite(ids, args.output, workers=args.workers, **kwargs)
    if args.format == "json-lines":
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    else:
        print(render_table(rows))
    return 1 if any(r.get("error") for r in rows) else 0


def cmd_decode(args) -> int:
    try:
        matrix = parse_matrix_literal(args.matrix)
        d = args.dimension or max(1, max(max(r[1:]) for r in matrix) - 1)
        tree = decode(matrix, MappingRules(d))
    except CodeRangeError as exc:
        print(f"error: range error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(to_infix(tree))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"fit": cmd_fit, "bench": cmd_bench, "decode": cmd_decode}[args.mode]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
