"""If-else tree C source emission in two flavors.

``float`` flavor compares features against decimal literals; ``flint`` flavor
loads the feature's bit pattern through a pointer cast and compares it as a
signed integer against a hex constant (negative splits put the constant on the
left and XOR the loaded pattern with the sign mask).  Output is deterministic
text, one space of indentation per nesting level, suitable for golden-file
pinning; compiling it is an optional integration concern, never a build step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .forest import Forest, InnerNode
from .flint import FloatWidth, bits_of, encode_split
from .inference import ComparisonStrategy

__all__ = [
    "GeneratedSource",
    "SourceStats",
    "StructureReport",
    "emit_ifelse",
    "emit_harness",
    "verify_source",
    "source_file_names",
]


@dataclass(frozen=True)
class SourceStats:
    nodes_emitted: int
    max_nesting_depth: int
    negative_splits: int


@dataclass(frozen=True)
class GeneratedSource:
    flavor: ComparisonStrategy
    width: FloatWidth
    n_classes: int
    tree_functions: tuple[str, ...]
    ensemble_function: str
    helpers: str
    stats: SourceStats

    @property
    def text(self) -> str:
        parts = [self.helpers] if self.helpers else []
        parts.extend(self.tree_functions)
        parts.append(self.ensemble_function)
        return "\n".join(parts)


def _c_types(width: FloatWidth) -> tuple[str, str, str]:
    # feature type, integer view type, integer literal suffix
    if width is FloatWidth.SINGLE:
        return "float", "int", ""
    return "double", "long long", "LL"


def _mask_text(width: FloatWidth) -> str:
    return "(0b1 << 31)" if width is FloatWidth.SINGLE else "(0b1LL << 63)"


def _float_literal(value: float, width: FloatWidth) -> str:
    """Shortest decimal that parses back to the exact stored bit pattern."""
    if width is FloatWidth.SINGLE:
        text = str(np.float32(value))
        if np.float32(text) != np.float32(value):  # fall back to 9 significant digits
            text = f"{np.float32(value):.9g}"
        return text
    text = repr(value)
    if float(text) != value:
        text = f"{value:.17g}"
    return text


def _condition(node: InnerNode, flavor: ComparisonStrategy, width: FloatWidth) -> str:
    ftype, itype, suffix = _c_types(width)
    if flavor is ComparisonStrategy.HOST_FLOAT:
        literal = _float_literal(node.split, width)
        if width is FloatWidth.SINGLE:
            return f"pX[{node.feature}] <= (float) {literal}"
        return f"pX[{node.feature}] <= {literal}"
    enc = encode_split(node.split, width)
    digits = width.total_bits // 4
    constant = f"(({itype})(0x{enc.constant:0{digits}x}{suffix}))"
    load = f"*((({itype} *)(pX))+{node.feature})"
    if enc.negative_case:
        return f"{constant}<=({load}^{_mask_text(width)})"
    return f"({load})<={constant}"


def _emit_tree(
    forest: Forest, tree_index: int, flavor: ComparisonStrategy
) -> tuple[str, str, int, int, int]:
    """One tree: its static leaf table and its function returning a leaf row."""
    tree = forest.trees[tree_index]
    ftype, _, _ = _c_types(forest.width)
    name = f"tree_{tree_index}"

    leaf_rows: list[tuple[float, ...]] = []
    lines: list[str] = []
    emitted = 0
    max_depth = 0
    negatives = 0

    def emit(ni: int, depth: int) -> None:
        nonlocal emitted, max_depth, negatives
        emitted += 1
        max_depth = max(max_depth, depth)
        pad = " " * depth
        node = tree.nodes[ni]
        if isinstance(node, InnerNode):
            if node.split < 0.0:
                negatives += 1
            lines.append(f"{pad}if({_condition(node, flavor, forest.width)}){{")
            emit(node.left, depth + 1)
            lines.append(f"{pad}}} else {{")
            emit(node.right, depth + 1)
            lines.append(f"{pad}}}")
        else:
            leaf_rows.append(node.scores)
            lines.append(f"{pad}return {name}_leaves[{len(leaf_rows) - 1}];")

    emit(0, 0)

    table_lines = [
        f"static const double {name}_leaves[{len(leaf_rows)}][{forest.n_classes}] = {{"
    ]
    for row in leaf_rows:
        cells = ", ".join(_float_literal(s, FloatWidth.DOUBLE) for s in row)
        table_lines.append(f" {{{cells}}},")
    table_lines.append("};")

    body = [f"static const double *{name}(const {ftype} *pX) {{"]
    body.extend(lines)
    body.append("}")
    return "\n".join(table_lines) + "\n", "\n".join(body) + "\n", emitted, max_depth, negatives


def _flint_helpers(width: FloatWidth) -> str:
    _, itype, _ = _c_types(width)
    return (
        "#include <string.h>\n"
        "\n"
        "/* reinterpret an accumulated score; adding 0.0 rewrites -0 to +0 so the\n"
        " * integer ordering below matches IEEE comparison on every non-NaN value */\n"
        "static long long score_order_key(double v) {\n"
        " long long bits;\n"
        " double canon = v + 0.0;\n"
        " memcpy(&bits, &canon, sizeof bits);\n"
        " return bits;\n"
        "}\n"
        "\n"
        "static int score_order_ge(long long a, long long b) {\n"
        " return (a >= b) ^ (a < 0 && b < 0 && a != b);\n"
        "}\n"
    )


def _emit_ensemble(forest: Forest, flavor: ComparisonStrategy) -> str:
    ftype, _, _ = _c_types(forest.width)
    n = forest.n_classes
    lines = [f"int predict_ensemble(const {ftype} *pX, double *scores) {{"]
    lines.append(" const double *leaf;")
    lines.append(" int c;")
    lines.append(" int best;")
    lines.append(f" for (c = 0; c < {n}; c++) {{ scores[c] = 0.0; }}")
    for ti in range(len(forest.trees)):
        lines.append(f" leaf = tree_{ti}(pX);")
        lines.append(f" for (c = 0; c < {n}; c++) {{ scores[c] += leaf[c]; }}")
    lines.append(" best = 0;")
    if flavor is ComparisonStrategy.HOST_FLOAT:
        lines.append(
            f" for (c = 1; c < {n}; c++) {{ if (scores[c] > scores[best]) {{ best = c; }} }}"
        )
    else:
        lines.append(f" for (c = 1; c < {n}; c++) {{")
        lines.append(
            "  if (!score_order_ge(score_order_key(scores[best]),"
            " score_order_key(scores[c]))) { best = c; }"
        )
        lines.append(" }")
    lines.append(" return best;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_ifelse(forest: Forest, flavor: ComparisonStrategy) -> GeneratedSource:
    """Emit the whole ensemble as nested if-else functions plus an entry point."""
    tree_parts = []
    nodes = depth = negatives = 0
    for ti in range(len(forest.trees)):
        table, body, n, d, neg = _emit_tree(forest, ti, flavor)
        tree_parts.append(table + "\n" + body)
        nodes += n
        depth = max(depth, d)
        negatives += neg
    helpers = _flint_helpers(forest.width) if flavor is ComparisonStrategy.FLINT else ""
    ensemble = _emit_ensemble(forest, flavor)
    return GeneratedSource(
        flavor=flavor,
        width=forest.width,
        n_classes=forest.n_classes,
        tree_functions=tuple(tree_parts),
        ensemble_function=ensemble,
        helpers=helpers,
        stats=SourceStats(nodes, depth, negatives),
    )


def source_file_names(model_name: str, flavor: ComparisonStrategy) -> tuple[str, str]:
    """(tree source, harness source) file names for a model."""
    stem = f"{model_name}_{flavor.value}"
    return f"{stem}.c", f"{stem}_main.c"


def emit_harness(forest: Forest, flavor: ComparisonStrategy, source_name: str) -> str:
    """Standalone main(): reads a feature CSV, prints the predictions CSV.

    With a repetition-count argument it instead times full-dataset passes on
    the monotonic clock and prints one ``pass_ns,<n>`` line per repetition.
    """
    ftype, _, _ = _c_types(forest.width)
    n_features = forest.n_features
    n_classes = forest.n_classes
    parser = "strtof" if forest.width is FloatWidth.SINGLE else "strtod"
    score_fmt = ",%.17g" * n_classes
    score_args = "".join(f", scores[{c}]" for c in range(n_classes))
    return f"""#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#include "{source_name}"

#define N_FEATURES {n_features}
#define N_CLASSES {n_classes}
#define LINE_MAX_LEN 1048576

static long long elapsed_ns(struct timespec a, struct timespec b) {{
 return (b.tv_sec - a.tv_sec) * 1000000000LL + (b.tv_nsec - a.tv_nsec);
}}

int main(int argc, char **argv) {{
 if (argc < 2) {{
  fprintf(stderr, "usage: %s data.csv [repetitions [warmup]]\\n", argv[0]);
  return 2;
 }}
 FILE *fp = fopen(argv[1], "r");
 if (!fp) {{
  fprintf(stderr, "cannot open %s\\n", argv[1]);
  return 3;
 }}
 long repetitions = argc > 2 ? strtol(argv[2], NULL, 10) : 0;
 long warmup = argc > 3 ? strtol(argv[3], NULL, 10) : 1;

 static char line[LINE_MAX_LEN];
 if (!fgets(line, LINE_MAX_LEN, fp)) {{
  fprintf(stderr, "missing header\\n");
  return 3;
 }}
 size_t capacity = 1024, n_rows = 0;
 {ftype} *data = malloc(capacity * N_FEATURES * sizeof *data);
 while (fgets(line, LINE_MAX_LEN, fp)) {{
  if (line[0] == '\\n' || line[0] == '\\0') {{ continue; }}
  if (n_rows == capacity) {{
   capacity *= 2;
   data = realloc(data, capacity * N_FEATURES * sizeof *data);
  }}
  char *cursor = line;
  for (int c = 0; c < N_FEATURES; c++) {{
   char *end;
   data[n_rows * N_FEATURES + c] = {parser}(cursor, &end);
   if (end == cursor) {{
    fprintf(stderr, "bad cell in row %zu\\n", n_rows);
    return 3;
   }}
   cursor = end;
   if (*cursor == ',') {{ cursor++; }}
  }}
  n_rows++;
 }}
 fclose(fp);

 double scores[N_CLASSES];
 if (repetitions > 0) {{
  volatile long sink = 0;
  for (long w = 0; w < warmup; w++) {{
   for (size_t r = 0; r < n_rows; r++) {{
    sink += predict_ensemble(data + r * N_FEATURES, scores);
   }}
  }}
  for (long rep = 0; rep < repetitions; rep++) {{
   struct timespec t0, t1;
   clock_gettime(CLOCK_MONOTONIC, &t0);
   for (size_t r = 0; r < n_rows; r++) {{
    sink += predict_ensemble(data + r * N_FEATURES, scores);
   }}
   clock_gettime(CLOCK_MONOTONIC, &t1);
   printf("pass_ns,%lld\\n", elapsed_ns(t0, t1));
  }}
  free(data);
  return 0;
 }}

 printf("row_index,predicted_class");
 for (int c = 0; c < N_CLASSES; c++) {{ printf(",score_%d", c); }}
 printf("\\n");
 for (size_t r = 0; r < n_rows; r++) {{
  int cls = predict_ensemble(data + r * N_FEATURES, scores);
  printf("%zu,%d", r, cls);
  printf("{score_fmt}"{score_args});
  printf("\\n");
 }}
 free(data);
 return 0;
}}
"""


@dataclass(frozen=True)
class StructureReport:
    violations: tuple[tuple[int, str], ...]

    @property
    def passed(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.passed:
            return "structure ok"
        return "\n".join(f"line {line}: {msg}" for line, msg in self.violations)


_FLOAT_IN_CONDITION = re.compile(r"\d\.\d|\(float\)|\(double\)|\bpX\[|scores\[")
_IF_CONDITION = re.compile(r"\bif\s*\((.*)\)\s*\{")
# calls of this helper return integer keys, so their arguments are not comparands
_ORDER_KEY_CALL = re.compile(r"score_order_key\([^()]*\)")


def verify_source(gen: GeneratedSource) -> StructureReport:
    """Structural checks on emitted text, without compiling it."""
    violations: list[tuple[int, str]] = []
    text = gen.text
    lines = text.splitlines()

    depth = 0
    for lineno, line in enumerate(lines, start=1):
        for ch in line:
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth < 0:
                    violations.append((lineno, "unbalanced closing brace"))
                    depth = 0
    if depth != 0:
        violations.append((len(lines), f"{depth} unclosed brace(s)"))

    tree_text = "\n".join(gen.tree_functions)
    if_count = tree_text.count("if(")
    return_count = len(re.findall(r"return tree_\d+_leaves\[", tree_text))
    if if_count + return_count != gen.stats.nodes_emitted:
        violations.append(
            (
                1,
                f"node count mismatch: {if_count} tests + {return_count} leaf returns "
                f"!= {gen.stats.nodes_emitted} nodes emitted",
            )
        )
    if if_count != tree_text.count("} else {"):
        violations.append((1, "if/else pairing mismatch"))

    if gen.flavor is ComparisonStrategy.FLINT:
        for lineno, line in enumerate(lines, start=1):
            match = _IF_CONDITION.search(line)
            if match is None:
                continue
            condition = _ORDER_KEY_CALL.sub("KEY", match.group(1))
            if _FLOAT_IN_CONDITION.search(condition):
                violations.append(
                    (lineno, "float-typed expression in a flint comparison")
                )
    return StructureReport(tuple(violations))
