"""export_forest: scikit-learn model -> flintforest JSON, with optional
fidelity verification against the source model via the primary CLI."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, ExportRequest, export, load_estimator
from .fidelity import check_fidelity


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="export_forest")
    parser.add_argument("--model", required=True, help="joblib/pickle model artifact")
    parser.add_argument("--width", choices=("f32", "f64"), default="f64")
    parser.add_argument("--out", required=True, help="output model JSON path")
    parser.add_argument(
        "--verify-data", default=None,
        help="CSV of rows to compare source-model and exported predictions on",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    req = ExportRequest(args.model, args.width, args.out, args.verify_data)
    try:
        export(req)
        print(args.out)
        if req.verify_data is not None:
            model = load_estimator(req.model_path)
            report = check_fidelity(model, args.out, req.verify_data, req.width)
            print(
                f"fidelity: {report.agreements}/{report.n_rows} rows agree "
                f"({report.agreement_rate:.2%})"
            )
            for cast in report.cast_divergences:
                print(
                    f"row {cast.row}: tree {cast.tree} node {cast.node} "
                    f"threshold {cast.original_threshold!r} cast to "
                    f"{cast.cast_threshold!r} flipped on feature value "
                    f"{cast.feature_value!r}",
                    file=sys.stderr,
                )
            if report.divergent_rows:
                return 1
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
