"""Command line entry point: ``mcdist <command> ...``.

Data goes to files or stdout, diagnostics to stderr. Exit status is 0 when
the command's contract holds, 1 when it does not (or an output cannot be
written) and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import grid
from ._accel import backend_name, python_impl
from .evaluation import aggregate, cells_csv, per_k_csv, run_experiment, summary_csv, summary_table
from .ingest import load_directory, minmax_rescale
from .metrics import (
    DEFAULT_REFERENCE,
    SURVEY_SPECS,
    DistanceSpec,
    Family,
    ParameterError,
    check_metric_axioms,
    uniform_sampler,
)

log = logging.getLogger("mcdist")

FAMILY_NAMES = [f.value for f in grid.RING_FAMILIES]


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _fold_count(text):
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("need at least 2 folds")
    return value


def _spec(text):
    try:
        return DistanceSpec.parse(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _write(path, text: str) -> bool:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return False
    return True


# --- commands ---------------------------------------------------------------


def cmd_bench(args) -> int:
    families = [Family(f) for f in dict.fromkeys(args.families)]
    kernels = None
    if args.interpreted:
        kernels = {f: python_impl(k) for f, k in grid.KERNELS.items()}
    records = []
    for D in args.D:
        for fam in families:
            rec = grid.bench_rings(fam, D, args.reps, kernels=kernels)
            records.append(rec)
            log.info("%s D=%d mean %.6fs", fam.value, D, rec.mean_seconds)
    csv_text = grid.TimingRecord.CSV_HEADER + "\n" + "".join(r.csv_row() + "\n" for r in records)
    table = _bench_table(records, "interpreted" if args.interpreted else backend_name())
    if args.out:
        if not _write(args.out, csv_text):
            return 1
        sys.stdout.write(table)
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(table)
    return 0


def _bench_table(records, backend) -> str:
    cheb = {r.D: r.mean_seconds for r in records if r.family is Family.CHEBYSHEV}
    head = f"{'family':<10} {'D':>6} {'reps':>5} {'mean s':>12} {'min s':>12} {'points':>11} {'ns/point':>9} {'x cheb':>8}"
    lines = [f"backend: {backend}", head, "-" * len(head)]
    for r in records:
        ratio = f"{r.mean_seconds / cheb[r.D]:8.2f}" if r.D in cheb else f"{'-':>8}"
        per_point = 1e9 * r.mean_seconds / r.points if r.points else float("nan")
        lines.append(
            f"{r.family.value:<10} {r.D:>6} {r.repetitions:>5} {r.mean_seconds:>12.6f} "
            f"{r.min_seconds:>12.6f} {r.points:>11} {per_point:>9.3f} {ratio}"
        )
    return "\n".join(lines) + "\n"


def cmd_rings(args) -> int:
    fam = Family(args.family)
    if args.format == "check":
        fast, oracle = grid.ring_run(fam, args.D), grid.oracle_rings(fam, args.D)
        bad = grid.compare_runs(fast, oracle)
        emitted = fast.n_points()
        distinct = len(set().union(*(b.point_set() for b in fast.buckets))) if fast.buckets else 0
        if bad is not None:
            f = sorted(fast.as_dict().get(bad, ()))
            o = sorted(oracle.as_dict().get(bad, ()))
            print(f"{fam.value} D={args.D}: bucket {bad} differs: iterator {f} vs oracle {o}", file=sys.stderr)
            return 1
        if distinct != emitted:
            print(f"{fam.value} D={args.D}: {emitted - distinct} duplicate offsets emitted", file=sys.stderr)
            return 1
        print(f"{fam.value} D={args.D}: {len(fast.buckets)} buckets, {emitted} offsets match the oracle")
        return 0
    lines = ["label,dx,dy"]
    for bucket in grid.iter_rings(fam, args.D):
        lines.extend(f"{bucket.label},{dx},{dy}" for dx, dy in bucket.points.tolist())
    text = "\n".join(lines) + "\n"
    if args.out:
        return 0 if _write(args.out, text) else 1
    sys.stdout.write(text)
    return 0


def cmd_render(args) -> int:
    gray = grid.render_distance_field(args.spec, args.half_size)
    try:
        with open(args.out, "w") as fh:
            grid.write_pgm(fh, gray)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {gray.shape[1]}x{gray.shape[0]} field for {args.spec.name} to {args.out}")
    return 0


def cmd_metric_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    report = check_metric_axioms(
        args.spec, uniform_sampler(rng, args.dim, -args.bound, args.bound), args.trials, args.tolerance
    )
    print(report.summary())
    expected = "metric" if args.spec.is_metric else "not a metric"
    print(f"declared: {expected}; observed: {'no violations' if report.ok else 'violations found'}")
    return 0 if report.ok else 1


def cmd_eval(args) -> int:
    datasets, skipped = load_directory(args.data_dir)
    for fname, reason in skipped:
        print(f"warning: skipped {fname}: {reason}", file=sys.stderr)
    if not datasets:
        print(f"error: no parseable datasets in {args.data_dir}", file=sys.stderr)
        return 1
    if args.rescale:
        datasets = [minmax_rescale(d) for d in datasets]
    specs = list(dict.fromkeys(args.specs or SURVEY_SPECS))
    reference = args.reference
    if reference not in specs:
        specs.append(reference)
    result = run_experiment(datasets, specs, args.k_max, args.folds, args.seed)
    for name, reason in result.skipped:
        print(f"warning: skipped {name}: {reason}", file=sys.stderr)
    if not result.datasets:
        print("error: every dataset failed evaluation", file=sys.stderr)
        return 1
    summaries = aggregate(result, reference)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return 1
    table = summary_table(summaries, len(result.datasets))
    outputs = {
        "cells.csv": cells_csv(result),
        "per_k.csv": per_k_csv(result),
        "summary.csv": summary_csv(summaries),
        "summary.txt": table,
    }
    for fname, text in outputs.items():
        if not _write(out / fname, text):
            return 1
    sys.stdout.write(table)
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcdist", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="time the ring iterators")
    p.add_argument("--families", nargs="+", choices=FAMILY_NAMES, default=FAMILY_NAMES)
    p.add_argument("--D", nargs="+", type=_positive_int, default=[2500], help="maximal distance(s)")
    p.add_argument("--reps", type=_positive_int, default=20)
    p.add_argument("--out", help="timing CSV path (default: stdout)")
    p.add_argument("--interpreted", action="store_true", help="time the uncompiled kernels")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rings", help="dump or verify ring buckets")
    p.add_argument("family", choices=FAMILY_NAMES)
    p.add_argument("--D", type=_positive_int, required=True)
    p.add_argument("--format", choices=("csv", "check"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rings)

    p = sub.add_parser("render", help="write a distance field as a plain PGM")
    p.add_argument("spec", type=_spec)
    p.add_argument("--half-size", type=_positive_int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("metric-check", help="fuzz the metric axioms")
    p.add_argument("spec", type=_spec)
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dim", type=_positive_int, default=5)
    p.add_argument("--bound", type=float, default=1e3, help="coordinates drawn from [-bound, bound)")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_metric_check)

    p = sub.add_parser("eval", help="k-sweep survey over a directory of datasets")
    p.add_argument("data_dir")
    p.add_argument("--specs", nargs="+", type=_spec, help="distances (default: the 15 survey rows)")
    p.add_argument("--k-max", type=_positive_int, default=200)
    p.add_argument("--folds", type=_fold_count, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--reference", type=_spec, default=DEFAULT_REFERENCE)
    p.add_argument("--rescale", action="store_true", help="min-max rescale features first")
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
