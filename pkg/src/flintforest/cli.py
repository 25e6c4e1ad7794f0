"""Command-line entry point.

Exit codes are stable: 0 success, 1 a check ran and failed (theorem
counterexample, prediction divergence, structural violation), 2 bad command
line (argparse), 3 unreadable or invalid input.  Data goes to stdout,
diagnostics to stderr.  ``FLINTFOREST_SEED`` overrides the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from .errors import FlintForestError
from .codegen import emit_harness, emit_ifelse, source_file_names, verify_source
from .flint import FloatWidth
from .forest import load_dataset, load_forest, save_forest, synth_forest
from .formats import MiniFloatFormat
from .inference import (
    ComparisonStrategy,
    forest_leaves,
    predict_dataset,
    prepare,
    write_predictions,
)
from .sampling import DEFAULT_SEED, check_ge_agreement, check_split_agreement
from .theorems import STATEMENTS, check_theorem

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BAD_INPUT = 3


def _default_seed() -> int:
    env = os.environ.get("FLINTFOREST_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"FLINTFOREST_SEED must be an integer, got {env!r}")


def _parse_format(text: str) -> MiniFloatFormat:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("--format expects three comma-separated integers: k,j,x")
    total, exponent, mantissa = (int(p) for p in parts)
    return MiniFloatFormat(total, exponent, mantissa)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(","))


def cmd_verify(args) -> int:
    if args.fmt is None and args.width is None:
        print("verify needs --format k,j,x or --width f32|f64", file=sys.stderr)
        return EXIT_USAGE

    if args.fmt is not None:
        try:
            fmt = _parse_format(args.fmt)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
        names = STATEMENTS if args.theorem == "all" else (args.theorem,)
        failed = False
        pairs = 0
        for name in names:
            result = check_theorem(fmt, name, max_total_bits=args.max_bits)
            pairs = max(pairs, result.pairs_checked)
            print(result.describe())
            failed = failed or not result.passed
        if failed:
            return EXIT_CHECK_FAILED
        print(f"all checks passed ({pairs} pairs × {len(names)} statements)")
        return EXIT_OK

    width = FloatWidth.from_name(args.width)
    ge = check_ge_agreement(width, args.samples, args.seed)
    split = check_split_agreement(width, args.samples, args.seed)
    print(
        f">= agreement: {ge.pairs_checked} pairs, {ge.disagreements} disagreements, "
        f"zero convention {'ok' if ge.zero_convention_ok else 'VIOLATED'}"
    )
    print(
        f"split-path agreement: {split.pairs_checked} pairs, "
        f"{split.disagreements} disagreements"
    )
    if ge.passed and split.passed:
        print(f"all checks passed (width {width.value}, seed {args.seed})")
        return EXIT_OK
    for label, report in (("ge", ge), ("split", split)):
        if report.first_disagreement is not None:
            print(
                f"first {label} disagreement at patterns "
                f"({report.first_disagreement[0]:#x}, {report.first_disagreement[1]:#x})",
                file=sys.stderr,
            )
    return EXIT_CHECK_FAILED


def cmd_validate(args) -> int:
    forest = load_forest(args.model)
    print(
        f"ok: {len(forest.trees)} tree(s), {forest.n_nodes} node(s), "
        f"width {forest.width.value}, {forest.n_features} feature(s), "
        f"{forest.n_classes} class(es)"
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    forest = synth_forest(
        args.trees,
        args.depth,
        args.features,
        args.classes,
        args.seed,
        FloatWidth.from_name(args.width),
    )
    save_forest(forest, args.out)
    print(args.out)
    return EXIT_OK


def cmd_codegen(args) -> int:
    forest = load_forest(args.model)
    flavor = ComparisonStrategy.from_name(args.flavor)
    generated = emit_ifelse(forest, flavor)
    report = verify_source(generated)
    if not report.passed:
        print(report.describe(), file=sys.stderr)
        return EXIT_CHECK_FAILED
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_name = Path(args.model).stem
    source_name, harness_name = source_file_names(model_name, flavor)
    source_path = out_dir / source_name
    source_path.write_text(generated.text, encoding="utf-8")
    written = [source_path]
    if args.with_harness:
        harness_path = out_dir / harness_name
        harness_path.write_text(
            emit_harness(forest, flavor, source_name), encoding="utf-8"
        )
        written.append(harness_path)
    for path in written:
        print(path)
    print(
        f"nodes={generated.stats.nodes_emitted} "
        f"max_depth={generated.stats.max_nesting_depth} "
        f"negative_splits={generated.stats.negative_splits}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    forest = load_forest(args.model)
    dataset = load_dataset(args.data, forest.width)

    if args.mode in ("float", "flint"):
        pf = prepare(forest, ComparisonStrategy.from_name(args.mode))
        predictions = predict_dataset(pf, dataset)
        _write_predictions_out(args.out, predictions)
        if predictions.accuracy is not None:
            print(f"accuracy: {predictions.accuracy:.6f}", file=sys.stderr)
        return EXIT_OK

    host = prepare(forest, ComparisonStrategy.HOST_FLOAT)
    flint = prepare(forest, ComparisonStrategy.FLINT)
    divergent = 0
    first = None
    for r in range(dataset.n_rows):
        row = dataset.features[r].tolist()
        if forest_leaves(host, row) != forest_leaves(flint, row):
            divergent += 1
            if first is None:
                first = r
    host_pred = predict_dataset(host, dataset)
    flint_pred = predict_dataset(flint, dataset)
    if host_pred.classes != flint_pred.classes or host_pred.scores != flint_pred.scores:
        divergent = max(divergent, 1)
    print(f"{divergent} divergent rows")
    if divergent:
        print(f"first divergent row: {first}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    _write_predictions_out(args.out, flint_pred)
    if flint_pred.accuracy is not None:
        print(f"accuracy: {flint_pred.accuracy:.6f}", file=sys.stderr)
    return EXIT_OK


def _write_predictions_out(out, predictions) -> None:
    if out is None or out == "-":
        write_predictions(sys.stdout, predictions)
        return
    with open(out, "w", encoding="utf-8") as fp:
        write_predictions(fp, predictions)


def cmd_bench(args) -> int:
    if args.inject is not None:
        rows, strategies = bench_mod.load_injected_cells(args.inject)
        report = bench_mod.report_from_cells(rows, strategies, host={"injected": True})
    else:
        cfg = bench_mod.BenchConfig(
            tree_counts=_int_list(args.trees),
            max_depths=_int_list(args.depths),
            seeds=_int_list(args.seeds),
            strategies=tuple(args.strategies.split(",")),
            repetitions=args.reps,
            warmup_rounds=args.warmup,
            dataset=args.data,
            rows=args.rows,
            row_seed=args.seed,
            width=FloatWidth.from_name(args.width),
            n_features=args.features,
            n_classes=args.classes,
        )
        report = bench_mod.run_bench(cfg)
    print(bench_mod.render_report(report, args.format))
    if args.json_out is not None:
        with open(args.json_out, "w", encoding="utf-8") as fp:
            fp.write(bench_mod.render_report(report, "json"))
            fp.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flintforest",
        description=(
            "Random-forest inference toolkit with integer-only float split "
            "comparisons: verification, model tooling, code generation, and "
            "benchmarking."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    seed_default = _default_seed()

    p = sub.add_parser("verify", help="check ordering statements or width agreement")
    p.add_argument("--format", dest="fmt", metavar="K,J,X", default=None,
                   help="exhaustive check of a small format (total,exponent,mantissa bits)")
    p.add_argument("--theorem", default="all", choices=STATEMENTS + ("all",))
    p.add_argument("--max-bits", type=int, default=12,
                   help="refuse exhaustive checks above this total bit width")
    p.add_argument("--width", choices=("f32", "f64"), default=None,
                   help="sampled agreement suite at a production width")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("validate", help="load a model file and run all invariants")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a deterministic random forest")
    p.add_argument("--trees", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--width", choices=("f32", "f64"), default="f64")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("codegen", help="emit if-else tree C source")
    p.add_argument("--model", required=True)
    p.add_argument("--flavor", choices=("float", "flint"), required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--with-harness", action="store_true")
    p.set_defaults(func=cmd_codegen)

    p = sub.add_parser("predict", help="run a model over a CSV dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("float", "flint", "both"), default="both")
    p.add_argument("--out", default=None, help="predictions CSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="float vs flint timing comparison")
    p.add_argument("--trees", default="1,5,10")
    p.add_argument("--depths", default="1,5,10,20")
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--strategies", default="float,flint")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--rows", type=int, default=256)
    p.add_argument("--data", default=None, help="CSV dataset (default: fuzz rows)")
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--width", choices=("f32", "f64"), default="f64")
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--inject", default=None,
                   help="JSON file of raw timings; skips real execution")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--json-out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FlintForestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
