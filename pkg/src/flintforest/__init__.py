"""Random-forest inference with integer-only floating-point split comparisons."""

from .errors import (
    BenchError,
    DatasetError,
    FlintForestError,
    FormatTooLargeError,
    ModelValidationError,
)
from .flint import (
    FlintSplit,
    FloatWidth,
    bits_of,
    encode_split,
    flint_ge,
    flint_le_split,
    sign_mask,
    value_of_bits,
)
from .forest import (
    Dataset,
    Forest,
    InnerNode,
    LeafNode,
    Tree,
    fuzz_rows,
    load_dataset,
    load_forest,
    save_dataset,
    save_forest,
    synth_forest,
    validate_forest,
)
from .formats import (
    BitVec,
    ExactValue,
    MiniFloatFormat,
    flint_ge_general,
    interpret_fp,
    interpret_fp_abs,
    interpret_si,
    interpret_ui,
)
from .inference import (
    ComparisonStrategy,
    PreparedForest,
    forest_leaves,
    forest_scores,
    predict_dataset,
    predict_forest,
    predict_tree,
    prepare,
)
from .theorems import STATEMENTS, CheckResult, check_theorem

__version__ = "0.1.0"
