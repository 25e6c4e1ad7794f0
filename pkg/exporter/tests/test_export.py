import csv
import json
import shutil

import joblib
import numpy as np
import pytest
from sklearn.datasets import load_iris
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression

from forest_exporter.export import ExportError, ExportRequest, export, load_estimator
from forest_exporter.fidelity import check_fidelity, run_primary_cli

HAVE_CLI = shutil.which("flintforest") is not None
needs_cli = pytest.mark.skipif(not HAVE_CLI, reason="flintforest CLI not installed")


@pytest.fixture(scope="module")
def iris_model(tmp_path_factory):
    # 5-tree depth-5 classifier on the 4-feature iris set
    data = load_iris()
    model = RandomForestClassifier(n_estimators=5, max_depth=5, random_state=0)
    model.fit(data.data, data.target)
    path = tmp_path_factory.mktemp("model") / "iris.joblib"
    joblib.dump(model, path)
    return model, path, data


def write_csv(path, features, labels=None):
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        header = [f"f{i}" for i in range(features.shape[1])]
        if labels is not None:
            header.append("label")
        writer.writerow(header)
        for i, row in enumerate(features):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            writer.writerow(cells)


class TestExport:
    def test_document_shape(self, iris_model, tmp_path):
        model, model_path, _ = iris_model
        out = tmp_path / "iris.json"
        doc = export(ExportRequest(str(model_path), "f64", str(out)))
        assert doc["version"] == 1
        assert doc["width"] == "f64"
        assert doc["n_features"] == 4 and doc["n_classes"] == 3
        assert len(doc["trees"]) == 5
        assert json.loads(out.read_text()) == doc

    def test_split_hex_is_exact_f64_threshold(self, iris_model, tmp_path):
        import struct

        model, model_path, _ = iris_model
        doc = export(ExportRequest(str(model_path), "f64", str(tmp_path / "m.json")))
        tree = model.estimators_[0].tree_
        first_inner = next(
            n for n in doc["trees"][0]["nodes"] if "split_hex" in n
        )
        expected = struct.unpack("<Q", struct.pack("<d", float(tree.threshold[0])))[0]
        assert int(first_inner["split_hex"], 16) == expected

    def test_f32_width_casts_thresholds(self, iris_model, tmp_path):
        import struct

        model, model_path, _ = iris_model
        doc = export(ExportRequest(str(model_path), "f32", str(tmp_path / "m.json")))
        tree = model.estimators_[0].tree_
        first_inner = next(n for n in doc["trees"][0]["nodes"] if "split_hex" in n)
        cast = np.float32(tree.threshold[0])
        expected = struct.unpack("<I", struct.pack("<f", float(cast)))[0]
        assert int(first_inner["split_hex"], 16) == expected
        assert len(first_inner["split_hex"]) == 10  # 0x + 8 digits

    def test_leaf_rows_are_per_class_scores(self, iris_model, tmp_path):
        model, model_path, _ = iris_model
        doc = export(ExportRequest(str(model_path), "f64", str(tmp_path / "m.json")))
        leaves = [n["leaf"] for n in doc["trees"][0]["nodes"] if "leaf" in n]
        assert all(len(leaf) == 3 for leaf in leaves)
        assert all(all(v >= 0 for v in leaf) for leaf in leaves)

    def test_unsupported_estimator_rejected(self, tmp_path, iris_model):
        _, _, data = iris_model
        other = LogisticRegression(max_iter=200).fit(data.data, data.target)
        path = tmp_path / "lr.joblib"
        joblib.dump(other, path)
        with pytest.raises(ExportError, match="unsupported estimator type"):
            load_estimator(str(path))

    def test_unfitted_model_rejected(self, tmp_path):
        path = tmp_path / "unfitted.joblib"
        joblib.dump(RandomForestClassifier(), path)
        with pytest.raises(ExportError, match="not fitted"):
            load_estimator(str(path))

    def test_missing_model_rejected(self):
        with pytest.raises(ExportError, match="model not found"):
            load_estimator("/nonexistent.joblib")

    def test_bad_width_rejected(self):
        with pytest.raises(ExportError, match="width"):
            ExportRequest("m.joblib", "f16", "out.json")


@needs_cli
class TestPrimaryRoundTrip:
    def test_export_passes_primary_validator(self, iris_model, tmp_path):
        _, model_path, _ = iris_model
        out = tmp_path / "iris.json"
        export(ExportRequest(str(model_path), "f64", str(out)))
        proc = run_primary_cli("validate", "--model", str(out))
        assert proc.returncode == 0, proc.stderr
        assert "ok:" in proc.stdout

    @pytest.mark.parametrize("width", ["f32", "f64"])
    def test_predict_both_modes_no_divergence(self, iris_model, tmp_path, width):
        _, model_path, data = iris_model
        out = tmp_path / "iris.json"
        export(ExportRequest(str(model_path), width, str(out)))
        data_path = tmp_path / "rows.csv"
        write_csv(data_path, data.data)
        proc = run_primary_cli(
            "predict", "--model", str(out), "--data", str(data_path),
            "--mode", "both", "--out", str(tmp_path / "p.csv"),
        )
        assert proc.returncode == 0, proc.stderr
        assert "0 divergent rows" in proc.stdout

    def test_f64_export_matches_source_predictions_everywhere(
        self, iris_model, tmp_path
    ):
        model, model_path, data = iris_model
        out = tmp_path / "iris.json"
        export(ExportRequest(str(model_path), "f64", str(out)))
        data_path = tmp_path / "rows.csv"
        write_csv(data_path, data.data)
        report = check_fidelity(model, str(out), str(data_path), "f64")
        assert report.n_rows == len(data.data)
        assert report.agreement_rate == 1.0
        assert report.divergent_rows == ()

    def test_f32_export_divergences_attributed_to_casts(self, iris_model, tmp_path):
        model, model_path, data = iris_model
        out = tmp_path / "iris.json"
        export(ExportRequest(str(model_path), "f32", str(out)))
        data_path = tmp_path / "rows.csv"
        write_csv(data_path, data.data)
        report = check_fidelity(model, str(out), str(data_path), "f32")
        # flint-vs-float equivalence is gated by --mode both above; any
        # disagreement with the source model must trace to threshold rounding
        assert len(report.cast_divergences) >= len(report.divergent_rows) or (
            report.divergent_rows == ()
        )

    def test_empty_dataset_trivially_agrees(self, iris_model, tmp_path):
        model, model_path, _ = iris_model
        out = tmp_path / "iris.json"
        export(ExportRequest(str(model_path), "f64", str(out)))
        data_path = tmp_path / "empty.csv"
        data_path.write_text("f0,f1,f2,f3\n")
        report = check_fidelity(model, str(out), str(data_path), "f64")
        assert report.n_rows == 0
        assert report.agreement_rate == 1.0


@needs_cli
class TestExportCli:
    def test_end_to_end_with_verification(self, iris_model, tmp_path, capsys):
        from forest_exporter.cli import main

        _, model_path, data = iris_model
        data_path = tmp_path / "rows.csv"
        write_csv(data_path, data.data)
        out = tmp_path / "exported.json"
        code = main(
            ["--model", str(model_path), "--width", "f64", "--out", str(out),
             "--verify-data", str(data_path)]
        )
        captured = capsys.readouterr()
        assert code == 0, captured.err
        assert "100.00%" in captured.out

    def test_error_exit_code(self, tmp_path, capsys):
        from forest_exporter.cli import main

        code = main(["--model", "/nope.joblib", "--out", str(tmp_path / "x.json")])
        assert code == 3
        assert "model not found" in capsys.readouterr().err
