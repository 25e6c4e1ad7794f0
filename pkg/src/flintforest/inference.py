"""Native-tree interpreter with pluggable comparison strategy.

The FLINT strategy encodes every split once during preparation; from then on
a prediction performs no floating-point comparison at all — feature values
are reinterpreted as integers once per row and every node test is an integer
comparison.  HOST_FLOAT keeps the splits verbatim and compares floats, which
makes it the reference the FLINT path is checked against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .forest import Dataset, Forest, InnerNode
from .flint import FlintSplit, FloatWidth, bits_of, encode_split, sign_mask

__all__ = [
    "ComparisonStrategy",
    "PreparedTree",
    "PreparedForest",
    "prepare",
    "split_of",
    "predict_tree",
    "tree_leaf",
    "forest_scores",
    "forest_leaves",
    "predict_forest",
    "predict_dataset",
    "DatasetPredictions",
    "write_predictions",
]


class ComparisonStrategy(enum.Enum):
    HOST_FLOAT = "float"
    FLINT = "flint"

    @classmethod
    def from_name(cls, name: str) -> "ComparisonStrategy":
        for strategy in cls:
            if strategy.value == name:
                return strategy
        raise ValueError(f"unknown strategy {name!r}; expected 'float' or 'flint'")


@dataclass(frozen=True)
class PreparedTree:
    """Flat arrays per node; ``feature[i] == -1`` marks a leaf."""

    feature: tuple[int, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    split_float: Optional[tuple[float, ...]]
    split_constant: Optional[tuple[int, ...]]
    split_negative: Optional[tuple[bool, ...]]
    scores: tuple[Optional[tuple[float, ...]], ...]


@dataclass(frozen=True)
class PreparedForest:
    strategy: ComparisonStrategy
    width: FloatWidth
    n_features: int
    n_classes: int
    trees: tuple[PreparedTree, ...]


def prepare(forest: Forest, strategy: ComparisonStrategy) -> PreparedForest:
    """Lay the forest out for traversal; FLINT resolves every split offline."""
    trees = []
    for tree in forest.trees:
        feature, left, right = [], [], []
        split_float: list[float] = []
        constants: list[int] = []
        negatives: list[bool] = []
        scores: list[Optional[tuple[float, ...]]] = []
        for node in tree.nodes:
            if isinstance(node, InnerNode):
                feature.append(node.feature)
                left.append(node.left)
                right.append(node.right)
                scores.append(None)
                if strategy is ComparisonStrategy.FLINT:
                    enc = encode_split(node.split, forest.width)
                    constants.append(enc.constant)
                    negatives.append(enc.negative_case)
                    split_float.append(node.split)
                else:
                    split_float.append(node.split)
                    constants.append(0)
                    negatives.append(False)
            else:
                feature.append(-1)
                left.append(-1)
                right.append(-1)
                split_float.append(0.0)
                constants.append(0)
                negatives.append(False)
                scores.append(node.scores)
        trees.append(
            PreparedTree(
                tuple(feature),
                tuple(left),
                tuple(right),
                tuple(split_float) if strategy is ComparisonStrategy.HOST_FLOAT else None,
                tuple(constants) if strategy is ComparisonStrategy.FLINT else None,
                tuple(negatives) if strategy is ComparisonStrategy.FLINT else None,
                tuple(scores),
            )
        )
    return PreparedForest(
        strategy, forest.width, forest.n_features, forest.n_classes, tuple(trees)
    )


def split_of(pf: PreparedForest, tree_index: int, node_index: int):
    """The prepared split of one inner node: a float or a :class:`FlintSplit`."""
    tree = pf.trees[tree_index]
    if tree.feature[node_index] < 0:
        raise ValueError(f"node {node_index} is a leaf")
    if pf.strategy is ComparisonStrategy.FLINT:
        return FlintSplit(
            tree.split_constant[node_index],
            tree.split_negative[node_index],
            pf.width,
            "",
        )
    return tree.split_float[node_index]


def _row_bits(pf: PreparedForest, row: Sequence[float]) -> tuple[list[int], list[int]]:
    """Reinterpret the row once: raw patterns and sign-flipped patterns."""
    width = pf.width
    mask = sign_mask(width)
    wrap = 1 << width.total_bits
    raw = [bits_of(v, width) for v in row]
    flipped = []
    for b in raw:
        u = (b ^ mask) & (wrap - 1)
        flipped.append(u - wrap if u >= mask else u)
    return raw, flipped


def _walk_host(tree: PreparedTree, row: Sequence[float]) -> int:
    feature, left, right = tree.feature, tree.left, tree.right
    split = tree.split_float
    i = 0
    steps = 0
    limit = len(feature)
    while feature[i] >= 0:
        i = left[i] if row[feature[i]] <= split[i] else right[i]
        steps += 1
        if steps > limit:
            raise RuntimeError("traversal exceeded node count; tree is cyclic")
    return i


def _walk_flint(tree: PreparedTree, raw: list[int], flipped: list[int]) -> int:
    feature, left, right = tree.feature, tree.left, tree.right
    constant, negative = tree.split_constant, tree.split_negative
    i = 0
    steps = 0
    limit = len(feature)
    while feature[i] >= 0:
        if negative[i]:
            take_left = constant[i] <= flipped[feature[i]]
        else:
            take_left = raw[feature[i]] <= constant[i]
        i = left[i] if take_left else right[i]
        steps += 1
        if steps > limit:
            raise RuntimeError("traversal exceeded node count; tree is cyclic")
    return i


def tree_leaf(pf: PreparedForest, tree_index: int, row: Sequence[float]) -> int:
    """Index of the leaf the row reaches in one tree."""
    if len(row) != pf.n_features:
        raise ValueError(f"row has {len(row)} features, expected {pf.n_features}")
    if pf.strategy is ComparisonStrategy.FLINT:
        raw, flipped = _row_bits(pf, row)
        return _walk_flint(pf.trees[tree_index], raw, flipped)
    return _walk_host(pf.trees[tree_index], row)


def predict_tree(
    pf: PreparedForest, tree_index: int, row: Sequence[float]
) -> tuple[float, ...]:
    """The per-class scores of the leaf the row reaches."""
    tree = pf.trees[tree_index]
    return tree.scores[tree_leaf(pf, tree_index, row)]


def forest_leaves(pf: PreparedForest, row: Sequence[float]) -> tuple[int, ...]:
    """Leaf index reached in every tree (the full decision path identity)."""
    if len(row) != pf.n_features:
        raise ValueError(f"row has {len(row)} features, expected {pf.n_features}")
    if pf.strategy is ComparisonStrategy.FLINT:
        raw, flipped = _row_bits(pf, row)
        return tuple(_walk_flint(t, raw, flipped) for t in pf.trees)
    return tuple(_walk_host(t, row) for t in pf.trees)


def forest_scores(pf: PreparedForest, row: Sequence[float]) -> tuple[float, ...]:
    """Sum of leaf score vectors across all trees."""
    totals = [0.0] * pf.n_classes
    for tree, leaf in zip(pf.trees, forest_leaves(pf, row)):
        for c, s in enumerate(tree.scores[leaf]):
            totals[c] += s
    return tuple(totals)


def _argmax(scores: Sequence[float]) -> int:
    best = 0
    for c in range(1, len(scores)):
        if scores[c] > scores[best]:
            best = c
    return best  # ties resolve to the lowest class index


def predict_forest(pf: PreparedForest, row: Sequence[float]) -> int:
    """Predicted class: argmax of summed scores, ties to the lowest index."""
    return _argmax(forest_scores(pf, row))


@dataclass(frozen=True)
class DatasetPredictions:
    classes: tuple[int, ...]
    scores: tuple[tuple[float, ...], ...]
    accuracy: Optional[float]


def predict_dataset(pf: PreparedForest, dataset: Dataset) -> DatasetPredictions:
    if dataset.n_features != pf.n_features:
        raise ValueError(
            f"dataset has {dataset.n_features} features, forest expects {pf.n_features}"
        )
    if dataset.labels is not None:
        bad = [int(l) for l in dataset.labels if l >= pf.n_classes]
        if bad:
            raise ValueError(f"label {bad[0]} out of range for {pf.n_classes} classes")
    classes = []
    scores = []
    for r in range(dataset.n_rows):
        row = dataset.features[r].tolist()
        s = forest_scores(pf, row)
        scores.append(s)
        classes.append(_argmax(s))
    accuracy = None
    if dataset.labels is not None and dataset.n_rows > 0:
        hits = sum(1 for c, l in zip(classes, dataset.labels) if c == int(l))
        accuracy = hits / dataset.n_rows
    return DatasetPredictions(tuple(classes), tuple(scores), accuracy)


def write_predictions(fp, predictions: DatasetPredictions) -> None:
    """Predictions CSV: row_index, predicted_class, then per-class scores."""
    n_classes = len(predictions.scores[0]) if predictions.scores else 0
    header = ["row_index", "predicted_class"] + [f"score_{c}" for c in range(n_classes)]
    fp.write(",".join(header) + "\n")
    for r, (cls, score_row) in enumerate(zip(predictions.classes, predictions.scores)):
        cells = [str(r), str(cls)] + [repr(s) for s in score_row]
        fp.write(",".join(cells) + "\n")
