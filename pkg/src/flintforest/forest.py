"""Forest and dataset model: validation, JSON/CSV serialization, synthesis.

The JSON model format stores every split value as its exact hex bit pattern;
a decimal mirror rides along for human readers but the hex is authoritative.
That rule is what keeps split constants bit-stable across save/load cycles.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DatasetError, ModelValidationError
from .flint import FloatWidth, bits_of, value_of_bits

__all__ = [
    "InnerNode",
    "LeafNode",
    "Tree",
    "Forest",
    "Dataset",
    "validate_forest",
    "load_forest",
    "save_forest",
    "forest_to_dict",
    "forest_from_dict",
    "load_dataset",
    "save_dataset",
    "synth_forest",
    "fuzz_rows",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class InnerNode:
    feature: int
    split: float
    left: int
    right: int


@dataclass(frozen=True)
class LeafNode:
    scores: tuple[float, ...]


TreeNode = Union[InnerNode, LeafNode]


@dataclass(frozen=True)
class Tree:
    """Array of nodes; index 0 is the root."""

    nodes: tuple[TreeNode, ...]

    @property
    def n_inner(self) -> int:
        return sum(1 for n in self.nodes if isinstance(n, InnerNode))

    @property
    def n_leaves(self) -> int:
        return len(self.nodes) - self.n_inner


@dataclass(frozen=True)
class Forest:
    width: FloatWidth
    n_features: int
    n_classes: int
    trees: tuple[Tree, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return sum(len(t.nodes) for t in self.trees)


@dataclass(frozen=True)
class Dataset:
    """Row-major feature matrix, dtype matching the forest width, no NaNs."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def _width_exact(value: float, width: FloatWidth) -> bool:
    return value_of_bits(bits_of(value, width), width) == value


def validate_forest(forest: Forest) -> None:
    """Raise :class:`ModelValidationError` at the first violated invariant."""
    if forest.n_features < 1:
        raise ModelValidationError("n_features must be >= 1")
    if forest.n_classes < 1:
        raise ModelValidationError("n_classes must be >= 1")
    if not forest.trees:
        raise ModelValidationError("forest must contain at least one tree")
    for ti, tree in enumerate(forest.trees):
        _validate_tree(tree, ti, forest)


def _validate_tree(tree: Tree, ti: int, forest: Forest) -> None:
    count = len(tree.nodes)
    if count == 0:
        raise ModelValidationError("tree has no nodes", ti)
    for ni, node in enumerate(tree.nodes):
        if isinstance(node, InnerNode):
            if not 0 <= node.feature < forest.n_features:
                raise ModelValidationError("feature index out of bounds", ti, ni)
            if math.isnan(node.split) or math.isinf(node.split):
                raise ModelValidationError("split value must be finite", ti, ni)
            if not _width_exact(node.split, forest.width):
                raise ModelValidationError(
                    f"split value not representable at width {forest.width.value}",
                    ti,
                    ni,
                )
            for child in (node.left, node.right):
                if not 0 <= child < count:
                    raise ModelValidationError("child index out of bounds", ti, ni)
        else:
            if len(node.scores) != forest.n_classes:
                raise ModelValidationError(
                    f"leaf has {len(node.scores)} scores, expected {forest.n_classes}",
                    ti,
                    ni,
                )
            for s in node.scores:
                if math.isnan(s) or math.isinf(s):
                    raise ModelValidationError("leaf scores must be finite", ti, ni)

    # one DFS settles acyclicity and reachability; shared (acyclic) subtrees
    # are allowed, so finished nodes are simply skipped on re-entry
    state = [0] * count  # 0 unvisited, 1 on stack, 2 done
    stack = [(0, False)]
    while stack:
        ni, leaving = stack.pop()
        if leaving:
            state[ni] = 2
            continue
        if state[ni] == 1:
            raise ModelValidationError("cycle detected", ti, ni)
        if state[ni] == 2:
            continue
        state[ni] = 1
        stack.append((ni, True))
        node = tree.nodes[ni]
        if isinstance(node, InnerNode):
            stack.append((node.right, False))
            stack.append((node.left, False))
    for ni, s in enumerate(state):
        if s != 2:
            raise ModelValidationError("unreachable node", ti, ni)


def _split_hex(value: float, width: FloatWidth) -> str:
    digits = width.total_bits // 4
    return f"0x{bits_of(value, width) & ((1 << width.total_bits) - 1):0{digits}x}"


def _split_dec(value: float, width: FloatWidth) -> str:
    if width is FloatWidth.SINGLE:
        return str(np.float32(value))
    return repr(value)


def forest_to_dict(forest: Forest) -> dict:
    trees = []
    for tree in forest.trees:
        nodes = []
        for node in tree.nodes:
            if isinstance(node, InnerNode):
                nodes.append(
                    {
                        "feature": node.feature,
                        "split_hex": _split_hex(node.split, forest.width),
                        "split_dec": _split_dec(node.split, forest.width),
                        "left": node.left,
                        "right": node.right,
                    }
                )
            else:
                nodes.append({"leaf": list(node.scores)})
        trees.append({"nodes": nodes})
    return {
        "version": MODEL_FORMAT_VERSION,
        "width": forest.width.value,
        "n_features": forest.n_features,
        "n_classes": forest.n_classes,
        "trees": trees,
        "metadata": dict(forest.metadata),
    }


def _require(mapping: dict, key: str, ti=None, ni=None):
    if key not in mapping:
        raise ModelValidationError(f"missing field '{key}'", ti, ni)
    return mapping[key]


def forest_from_dict(doc: dict) -> Forest:
    """Build and fully validate a forest from the JSON document structure."""
    if not isinstance(doc, dict):
        raise ModelValidationError("model document must be a JSON object")
    version = _require(doc, "version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelValidationError(
            f"unsupported model format version {version!r}; "
            f"expected {MODEL_FORMAT_VERSION}"
        )
    try:
        width = FloatWidth.from_name(_require(doc, "width"))
    except ValueError as exc:
        raise ModelValidationError(str(exc)) from None
    n_features = _require(doc, "n_features")
    n_classes = _require(doc, "n_classes")
    if not isinstance(n_features, int) or not isinstance(n_classes, int):
        raise ModelValidationError("n_features and n_classes must be integers")

    trees = []
    for ti, tree_doc in enumerate(_require(doc, "trees")):
        nodes: list[TreeNode] = []
        for ni, node_doc in enumerate(_require(tree_doc, "nodes", ti)):
            if not isinstance(node_doc, dict):
                raise ModelValidationError("node must be a JSON object", ti, ni)
            if "leaf" in node_doc:
                if "feature" in node_doc or "split_hex" in node_doc:
                    raise ModelValidationError(
                        "node is both leaf and inner", ti, ni
                    )
                scores = node_doc["leaf"]
                if not isinstance(scores, list):
                    raise ModelValidationError("leaf scores must be a list", ti, ni)
                nodes.append(LeafNode(tuple(float(s) for s in scores)))
            else:
                feature = _require(node_doc, "feature", ti, ni)
                hex_text = _require(node_doc, "split_hex", ti, ni)
                left = _require(node_doc, "left", ti, ni)
                right = _require(node_doc, "right", ti, ni)
                try:
                    bits = int(hex_text, 16)
                except (TypeError, ValueError):
                    raise ModelValidationError(
                        f"split_hex {hex_text!r} is not hexadecimal", ti, ni
                    ) from None
                if not 0 <= bits < (1 << width.total_bits):
                    raise ModelValidationError(
                        f"split_hex {hex_text!r} does not fit width {width.value}",
                        ti,
                        ni,
                    )
                split = value_of_bits(bits, width)
                if math.isnan(split):
                    raise ModelValidationError("split value must not be NaN", ti, ni)
                nodes.append(InnerNode(int(feature), split, int(left), int(right)))
        trees.append(Tree(tuple(nodes)))

    metadata = doc.get("metadata", {})
    forest = Forest(width, n_features, n_classes, tuple(trees), dict(metadata))
    validate_forest(forest)
    return forest


def load_forest(path) -> Forest:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            doc = json.load(fp)
    except FileNotFoundError:
        raise ModelValidationError(f"model not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelValidationError(f"model is not valid JSON: {exc}") from None
    return forest_from_dict(doc)


def save_forest(forest: Forest, path) -> None:
    validate_forest(forest)
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(forest_to_dict(forest), fp, indent=1)
        fp.write("\n")


def _parse_cell(cell: str, width: FloatWidth, row: int, col: int) -> float:
    try:
        if width is FloatWidth.SINGLE:
            value = float(np.float32(cell))
        else:
            value = float(cell)
    except ValueError:
        raise DatasetError(f"non-numeric cell {cell!r}", row, col) from None
    if math.isnan(value):
        raise DatasetError("NaN feature values are not allowed", row, col)
    return value


def load_dataset(path, width: FloatWidth = FloatWidth.DOUBLE) -> Dataset:
    """Read a header CSV of numeric features, decimal-parsed at ``width``.

    A final column named ``label`` is read as integer class labels.
    """
    import csv

    try:
        fp = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DatasetError(f"dataset not found: {path}") from None
    with fp:
        reader = csv.reader(fp)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("dataset has no header row") from None
        has_labels = bool(header) and header[-1].strip().lower() == "label"
        n_features = len(header) - (1 if has_labels else 0)
        if n_features < 1:
            raise DatasetError("dataset has no feature columns")

        rows: list[list[float]] = []
        labels: list[int] = []
        for r, row in enumerate(reader):
            if len(row) != len(header):
                raise DatasetError(
                    f"expected {len(header)} cells, found {len(row)}", r
                )
            rows.append(
                [_parse_cell(cell, width, r, c) for c, cell in enumerate(row[:n_features])]
            )
            if has_labels:
                try:
                    label = int(row[-1])
                except ValueError:
                    raise DatasetError(
                        f"non-integer label {row[-1]!r}", r, n_features
                    ) from None
                if label < 0:
                    raise DatasetError("labels must be non-negative", r, n_features)
                labels.append(label)

    dtype = np.float32 if width is FloatWidth.SINGLE else np.float64
    features = np.array(rows, dtype=dtype).reshape(len(rows), n_features)
    return Dataset(features, np.array(labels, dtype=np.int64) if has_labels else None)


def save_dataset(dataset: Dataset, path) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        header = [f"f{i}" for i in range(dataset.n_features)]
        if dataset.labels is not None:
            header.append("label")
        writer.writerow(header)
        for r in range(dataset.n_rows):
            row = [repr(float(v)) for v in dataset.features[r]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[r])))
            writer.writerow(row)


def _synth_split(rng: random.Random, width: FloatWidth, split_range: float) -> float:
    # exact zeros of both signs keep both encode paths exercised
    roll = rng.random()
    if roll < 0.04:
        return 0.0
    if roll < 0.08:
        return -0.0
    value = rng.uniform(-split_range, split_range)
    if width is FloatWidth.SINGLE:
        value = float(np.float32(value))
    return value


def synth_forest(
    n_trees: int,
    max_depth: int,
    n_features: int,
    n_classes: int,
    seed: int,
    width: FloatWidth = FloatWidth.DOUBLE,
    split_range: float = 100.0,
    leaf_probability: float = 0.3,
) -> Forest:
    """Deterministic pseudorandom forest; actual depth never exceeds ``max_depth``."""
    for name, value in (
        ("n_trees", n_trees),
        ("max_depth", max_depth),
        ("n_features", n_features),
        ("n_classes", n_classes),
    ):
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    rng = random.Random(seed)

    def build_tree() -> Tree:
        nodes: list[TreeNode] = []

        def grow(depth: int) -> int:
            index = len(nodes)
            nodes.append(None)  # reserve slot; children appended after
            if depth >= max_depth or (depth > 0 and rng.random() < leaf_probability):
                scores = tuple(round(rng.uniform(0.0, 10.0), 4) for _ in range(n_classes))
                nodes[index] = LeafNode(scores)
                return index
            feature = rng.randrange(n_features)
            split = _synth_split(rng, width, split_range)
            left = grow(depth + 1)
            right = grow(depth + 1)
            nodes[index] = InnerNode(feature, split, left, right)
            return index

        grow(0)
        return Tree(tuple(nodes))

    trees = tuple(build_tree() for _ in range(n_trees))
    forest = Forest(
        width,
        n_features,
        n_classes,
        trees,
        {
            "source": "synth",
            "n_trees": str(n_trees),
            "max_depth": str(max_depth),
            "seed": str(seed),
        },
    )
    validate_forest(forest)
    return forest


def fuzz_rows(
    n_rows: int,
    n_features: int,
    seed: int,
    width: FloatWidth = FloatWidth.DOUBLE,
    value_range: float = 150.0,
    special_probability: float = 0.12,
) -> Dataset:
    """Deterministic fuzz features mixing ordinary values with signed zeros,
    denormals, and infinities (never NaN)."""
    rng = random.Random(seed)
    if width is FloatWidth.SINGLE:
        tiny, huge = 1.401298464324817e-45, 3.4028234663852886e38
    else:
        tiny, huge = 5e-324, 1.7976931348623157e308
    specials = (
        0.0,
        -0.0,
        tiny,
        -tiny,
        huge,
        -huge,
        math.inf,
        -math.inf,
        1.0,
        -1.0,
    )

    def cell() -> float:
        if rng.random() < special_probability:
            return rng.choice(specials)
        value = rng.uniform(-value_range, value_range)
        return float(np.float32(value)) if width is FloatWidth.SINGLE else value

    rows = [[cell() for _ in range(n_features)] for _ in range(n_rows)]
    dtype = np.float32 if width is FloatWidth.SINGLE else np.float64
    return Dataset(np.array(rows, dtype=dtype).reshape(n_rows, n_features), None)
