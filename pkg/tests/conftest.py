import pytest

from flintforest.flint import FloatWidth, value_of_bits
from flintforest.forest import Forest, InnerNode, LeafNode, Tree, validate_forest

# The four split constants used as bit-exact fixtures throughout the suite.
# The decimal column is the 6-decimal display of the underlying threshold;
# the hex bit pattern is authoritative (displays do not round-trip, see
# tests/test_flint.py::test_display_decimals_do_not_round_trip).
SPLIT_CONSTANTS = (
    (0x41213087, "10.074347", False),
    (0x413F986E, "11.974715", False),
    (0x4622FA08, "10430.507324", False),
    (0x403BDDDE, "2.935417", True),  # encodes the negative split -2.935417
)


def make_stump(split: float, feature: int, n_features: int, width: FloatWidth) -> Forest:
    return Forest(
        width,
        n_features,
        2,
        (
            Tree(
                (
                    InnerNode(feature, split, 1, 2),
                    LeafNode((1.0, 0.0)),
                    LeafNode((0.0, 1.0)),
                )
            ),
        ),
        {"source": "fixture"},
    )


@pytest.fixture
def stump_f32() -> Forest:
    split = value_of_bits(0x41213087, FloatWidth.SINGLE)
    forest = make_stump(split, 3, 4, FloatWidth.SINGLE)
    validate_forest(forest)
    return forest


@pytest.fixture
def negstump_f32() -> Forest:
    split = -value_of_bits(0x403BDDDE, FloatWidth.SINGLE)
    forest = make_stump(split, 125, 126, FloatWidth.SINGLE)
    validate_forest(forest)
    return forest


@pytest.fixture
def stump_f64() -> Forest:
    forest = make_stump(10.0743473, 3, 4, FloatWidth.DOUBLE)
    validate_forest(forest)
    return forest
