"""Agreement check between a source scikit-learn model and its export.

The exported JSON is run through the flintforest CLI (a subprocess; this
package never imports the inference engine) in ``--mode both`` so the check
simultaneously gates the float/flint equivalence and measures agreement with
the source model's own predictions.  Divergent rows are attributed to the
responsible threshold casts by replaying the paths with original and cast
thresholds.
"""

from __future__ import annotations

import csv
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from .export import ExportError, _split_value, _split_bits

__all__ = ["FidelityReport", "CastDivergence", "run_primary_cli", "check_fidelity"]


def _cli_command() -> list[str]:
    override = os.environ.get("FLINTFOREST_CLI")
    if override:
        return override.split()
    binary = shutil.which("flintforest")
    if binary is None:
        raise ExportError(
            "flintforest CLI binary not found (install the primary package "
            "or set FLINTFOREST_CLI)"
        )
    return [binary]


def run_primary_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        _cli_command() + list(args), capture_output=True, text=True
    )


@dataclass(frozen=True)
class CastDivergence:
    row: int
    tree: int
    node: int
    original_threshold: float
    cast_threshold: float
    feature_value: float


@dataclass(frozen=True)
class FidelityReport:
    n_rows: int
    agreements: int
    divergent_rows: tuple[int, ...]
    cast_divergences: tuple[CastDivergence, ...]

    @property
    def agreement_rate(self) -> float:
        if self.n_rows == 0:
            return 1.0  # vacuously perfect
        return self.agreements / self.n_rows


def load_features(csv_path: str) -> np.ndarray:
    with open(csv_path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader)
        has_label = bool(header) and header[-1].strip().lower() == "label"
        n_features = len(header) - (1 if has_label else 0)
        rows = [[float(c) for c in row[:n_features]] for row in reader if row]
    return np.array(rows, dtype=np.float64).reshape(len(rows), n_features)


def _first_cast_divergence(model, width, row_values, row_index):
    """Replay each tree with original vs cast thresholds; report the first
    node where the two traversals part ways."""
    for ti, estimator in enumerate(model.estimators_):
        tree = estimator.tree_
        i = 0
        while tree.children_left[i] != -1:
            original = float(tree.threshold[i])
            cast = _split_value(_split_bits(original, width), width)
            value = row_values[tree.feature[i]]
            left_original = value <= original
            left_cast = value <= cast
            if left_original != left_cast:
                return CastDivergence(
                    row=row_index,
                    tree=ti,
                    node=i,
                    original_threshold=original,
                    cast_threshold=cast,
                    feature_value=float(value),
                )
            i = int(tree.children_left[i] if left_original else tree.children_right[i])
    return None


def check_fidelity(model, exported_path: str, data_path: str, width: str) -> FidelityReport:
    features = load_features(data_path)
    source_predictions = (
        model.predict(features) if features.shape[0] else np.array([])
    )

    with tempfile.NamedTemporaryFile(
        mode="r", suffix=".csv", prefix="flint-fidelity-", delete=False
    ) as out:
        predictions_path = out.name
    try:
        proc = run_primary_cli(
            "predict",
            "--model", exported_path,
            "--data", data_path,
            "--mode", "both",
            "--out", predictions_path,
        )
        if proc.returncode != 0:
            raise ExportError(
                f"primary predict failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        with open(predictions_path, "r", encoding="utf-8", newline="") as fp:
            reader = csv.reader(fp)
            next(reader)
            exported_indices = [int(row[1]) for row in reader if row]
    finally:
        os.unlink(predictions_path)

    classes = np.asarray(model.classes_)
    divergent = []
    casts = []
    agreements = 0
    for r, idx in enumerate(exported_indices):
        if classes[idx] == source_predictions[r]:
            agreements += 1
        else:
            divergent.append(r)
            found = _first_cast_divergence(model, width, features[r], r)
            if found is not None:
                casts.append(found)
    return FidelityReport(
        n_rows=len(exported_indices),
        agreements=agreements,
        divergent_rows=tuple(divergent),
        cast_divergences=tuple(casts),
    )
