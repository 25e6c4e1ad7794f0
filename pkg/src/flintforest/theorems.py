"""Exhaustive pair-enumeration checks for the ordering statements.

Every statement relates the exact float reading of two bit patterns to a
predicate on their signed-integer readings.  The float side is evaluated once
per pattern with :mod:`flintforest.formats` (exact rationals, -0 < +0) and
condensed into dense ranks, so the pair grid itself reduces to integer
comparisons; the integer side is computed directly on the signed readings.
The two sides never share code paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import FormatTooLargeError
from .formats import BitVec, ExactValue, MiniFloatFormat, interpret_fp, interpret_fp_abs

__all__ = ["STATEMENTS", "CheckResult", "check_theorem", "DEFAULT_MAX_TOTAL_BITS"]

# 2**(2k) ordered pairs must stay enumerable at desk scale.
DEFAULT_MAX_TOTAL_BITS = 12

STATEMENTS = (
    "lemma1",
    "lemma2",
    "lemma3",
    "lemma4",
    "lemma5",
    "lemma6",
    "corollary1",
    "theorem1",
    "theorem2",
)

# Signature of an integer-side >= operator acting elementwise on signed readings.
GeOperator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one statement checked over all ordered pattern pairs."""

    statement: str
    fmt: MiniFloatFormat
    pairs_checked: int
    passed: bool
    counterexample: Optional[tuple[int, int]]

    def describe(self) -> str:
        if self.passed:
            return f"{self.statement}: pass ({self.pairs_checked} pairs)"
        x, y = self.counterexample
        width = (self.fmt.total_bits + 3) // 4
        return (
            f"{self.statement}: FAIL at pair "
            f"(0x{x:0{width}x}, 0x{y:0{width}x}) of {self.pairs_checked} pairs"
        )


class _FormatTables:
    """Per-format arrays: signed readings and exact-order ranks of all patterns."""

    def __init__(self, fmt: MiniFloatFormat):
        n = fmt.pattern_count
        self.fmt = fmt
        self.si = np.arange(n, dtype=np.int64)
        self.si[self.si >= n // 2] -= n

        values = [interpret_fp(BitVec(b, fmt)) for b in range(n)]
        abs_values = [interpret_fp_abs(BitVec(b, fmt)) for b in range(n)]
        self.rank = _dense_rank(values)
        self.rank_abs = _dense_rank(abs_values)
        self.sign = (np.arange(n) >> (fmt.total_bits - 1)).astype(bool)
        pos_zero = ExactValue(1, 0, 0)
        self.fp_negative = np.array([v < pos_zero for v in values], dtype=bool)
        # signed reading after flipping the sign bit, indexed by the original pattern
        self.si_flipped = self.si[np.arange(n) ^ fmt.sign_mask]


def _dense_rank(values: list[ExactValue]) -> np.ndarray:
    """Rank patterns by exact value; equal values (if any) share a rank."""
    order = sorted(range(len(values)), key=values.__getitem__)
    rank = np.zeros(len(values), dtype=np.int64)
    current = 0
    prev = values[order[0]]
    for i, b in enumerate(order):
        if i and values[b] != prev:
            current += 1
        rank[b] = current
        prev = values[b]
    return rank


@lru_cache(maxsize=8)
def _tables(fmt: MiniFloatFormat) -> _FormatTables:
    return _FormatTables(fmt)


def default_ge_operator(sx, sy):
    """The integer-only >= operator; works on scalars and arrays alike."""
    return (sx >= sy) ^ ((sx < 0) & (sy < 0) & (sx != sy))


def check_theorem(
    fmt: MiniFloatFormat,
    which: str,
    *,
    max_total_bits: int = DEFAULT_MAX_TOTAL_BITS,
    ge_operator: Optional[GeOperator] = None,
) -> CheckResult:
    """Check one statement over every ordered pair of patterns of ``fmt``.

    ``ge_operator`` substitutes the integer side of ``theorem1`` (used to
    prove the checker rejects corrupted operators); all other statements
    ignore it.  The reported counterexample is always the lexicographically
    smallest violating pair, independent of any evaluation partitioning.
    """
    if which not in STATEMENTS:
        raise ValueError(f"unknown statement {which!r}; expected one of {STATEMENTS}")
    if fmt.total_bits > max_total_bits:
        raise FormatTooLargeError(
            f"exhaustive check refused: total_bits {fmt.total_bits} exceeds "
            f"the pair-enumeration bound {max_total_bits}"
        )
    t = _tables(fmt)
    ge = ge_operator if ge_operator is not None else default_ge_operator

    rx, ry = t.rank[:, None], t.rank[None, :]
    sx, sy = t.si[:, None], t.si[None, :]
    sgx, sgy = t.sign[:, None], t.sign[None, :]

    if which == "lemma1":
        n = fmt.pattern_count
        bit_eq = np.eye(n, dtype=bool)
        violations = ((rx == ry) != bit_eq) | ((sx == sy) != bit_eq)
        domain = None
    elif which == "lemma2":
        ax, ay = t.rank_abs[:, None], t.rank_abs[None, :]
        domain = sgx == sgy
        violations = domain & ((ax > ay) != (sx > sy))
    elif which == "lemma3":
        domain = ~sgx & ~sgy
        violations = domain & ((rx > ry) != (sx > sy))
    elif which == "lemma4":
        domain = sgx & sgy
        violations = domain & ((rx >= ry) != (sx <= sy))
    elif which == "lemma5":
        domain = sgx != sgy
        violations = domain & ((rx > ry) != (sx > sy))
    elif which == "lemma6":
        domain = sgx & sgy
        violations = domain & ((rx > ry) != (sx < sy))
    elif which == "corollary1":
        nx, ny = t.fp_negative[:, None], t.fp_negative[None, :]
        both_negative_unequal = nx & ny & (rx != ry)
        claimed = np.where(both_negative_unequal, sx < sy, sx >= sy)
        violations = (rx >= ry) != claimed
        domain = None
    elif which == "theorem1":
        violations = (rx >= ry) != ge(sx, sy)
        domain = None
    else:  # theorem2: resolve the sign of x first, flip both signs and swap
        sfx, sfy = t.si_flipped[:, None], t.si_flipped[None, :]
        claimed = np.where(sx < 0, sfy >= sfx, sx >= sy)
        violations = (rx >= ry) != claimed
        domain = None

    pairs = fmt.pattern_count**2 if domain is None else int(domain.sum())
    if violations.any():
        flat = int(np.argmax(violations))
        counterexample = divmod(flat, fmt.pattern_count)
        return CheckResult(which, fmt, pairs, False, counterexample)
    return CheckResult(which, fmt, pairs, True, None)
