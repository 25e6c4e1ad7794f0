"""Convert a fitted scikit-learn random-forest classifier to the flintforest
JSON model format (version 1), preserving split bit patterns exactly.

Thresholds are cast to the target width once, here, and stored as
authoritative hex bit patterns; any accuracy delta from an f64 -> f32 cast is
the user's informed choice and is recorded in the model metadata.  Leaf value
rows are stored verbatim (argmax is invariant to per-leaf positive scaling);
rows that are not per-class fractions (older scikit-learn stores raw counts)
are normalized so every tree votes with equal weight, and that fallback is
recorded in the metadata too.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

import joblib
import numpy as np

__all__ = ["ExportError", "ExportRequest", "load_estimator", "export_to_dict", "export"]

MODEL_FORMAT_VERSION = 1

SUPPORTED_TYPES = ("RandomForestClassifier", "ExtraTreesClassifier")


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class ExportRequest:
    model_path: str
    width: str  # "f32" | "f64"
    out_path: str
    verify_data: Optional[str] = None

    def __post_init__(self):
        if self.width not in ("f32", "f64"):
            raise ExportError(f"width must be 'f32' or 'f64', got {self.width!r}")


def load_estimator(model_path: str):
    try:
        model = joblib.load(model_path)
    except FileNotFoundError:
        raise ExportError(f"model not found: {model_path}") from None
    kind = type(model).__name__
    if kind not in SUPPORTED_TYPES:
        raise ExportError(
            f"unsupported estimator type {kind}; expected one of {SUPPORTED_TYPES}"
        )
    if not hasattr(model, "estimators_"):
        raise ExportError("model is not fitted (no estimators_)")
    if getattr(model, "n_outputs_", 1) != 1:
        raise ExportError("multi-output classifiers are not supported")
    return model


def _split_bits(threshold: float, width: str) -> int:
    if threshold != threshold:
        raise ExportError("threshold is NaN")
    if width == "f32":
        cast = np.float32(threshold)
        if not np.isfinite(cast):
            raise ExportError(f"threshold {threshold!r} overflows f32")
        return struct.unpack("<I", struct.pack("<f", float(cast)))[0]
    return struct.unpack("<Q", struct.pack("<d", float(threshold)))[0]


def _split_value(bits: int, width: str) -> float:
    if width == "f32":
        return struct.unpack("<f", struct.pack("<I", bits))[0]
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


def _split_fields(threshold: float, width: str) -> dict:
    bits = _split_bits(threshold, width)
    digits = 8 if width == "f32" else 16
    value = _split_value(bits, width)
    dec = str(np.float32(value)) if width == "f32" else repr(value)
    return {"split_hex": f"0x{bits:0{digits}x}", "split_dec": dec}


def _export_tree(estimator, width: str, normalize: bool) -> dict:
    tree = estimator.tree_
    left = tree.children_left
    right = tree.children_right
    nodes = []
    for i in range(tree.node_count):
        if left[i] == -1 and right[i] == -1:
            row = np.asarray(tree.value[i][0], dtype=np.float64)
            if normalize:
                total = row.sum()
                if total > 0:
                    row = row / total
            nodes.append({"leaf": [float(v) for v in row]})
        else:
            node = {"feature": int(tree.feature[i])}
            node.update(_split_fields(float(tree.threshold[i]), width))
            node["left"] = int(left[i])
            node["right"] = int(right[i])
            nodes.append(node)
    return {"nodes": nodes}


def _values_are_fractions(model) -> bool:
    for estimator in model.estimators_:
        tree = estimator.tree_
        leaves = tree.children_left == -1
        sums = tree.value[leaves, 0, :].sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            return False
    return True


def export_to_dict(model, width: str) -> dict:
    fractions = _values_are_fractions(model)
    trees = [_export_tree(e, width, normalize=not fractions) for e in model.estimators_]
    metadata = {
        "source": f"scikit-learn {type(model).__name__}",
        "n_estimators": str(len(model.estimators_)),
        "classes": ",".join(str(c) for c in model.classes_),
        "threshold_cast": width,
        "leaf_values": "verbatim" if fractions else "normalized-from-counts",
    }
    return {
        "version": MODEL_FORMAT_VERSION,
        "width": width,
        "n_features": int(model.n_features_in_),
        "n_classes": int(model.n_classes_),
        "trees": trees,
        "metadata": metadata,
    }


def export(req: ExportRequest) -> dict:
    """Load, convert, and write the model; returns the document written."""
    import json

    model = load_estimator(req.model_path)
    doc = export_to_dict(model, req.width)
    with open(req.out_path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, indent=1)
        fp.write("\n")
    return doc
