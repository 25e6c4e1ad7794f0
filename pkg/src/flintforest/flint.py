"""Production 32/64-bit integer-only float comparison and split encoding.

Split values are encoded once, at build time, into an integer constant plus a
negative-case flag; inference then needs a single signed-integer comparison
per node (plus one XOR for negative splits).
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

from .errors import ModelValidationError

__all__ = [
    "FloatWidth",
    "FlintSplit",
    "sign_mask",
    "bits_of",
    "value_of_bits",
    "flint_ge",
    "encode_split",
    "flint_le_split",
]


class FloatWidth(enum.Enum):
    """IEEE binary32 / binary64 layouts."""

    SINGLE = "f32"
    DOUBLE = "f64"

    @property
    def total_bits(self) -> int:
        return 32 if self is FloatWidth.SINGLE else 64

    @property
    def exponent_bits(self) -> int:
        return 8 if self is FloatWidth.SINGLE else 11

    @property
    def mantissa_bits(self) -> int:
        return 23 if self is FloatWidth.SINGLE else 52

    @property
    def _codes(self) -> tuple[str, str]:
        # (float, signed-int) struct codes of matching width
        return ("<f", "<i") if self is FloatWidth.SINGLE else ("<d", "<q")

    @classmethod
    def from_name(cls, name: str) -> "FloatWidth":
        for width in cls:
            if width.value == name:
                return width
        raise ValueError(f"unknown width {name!r}; expected 'f32' or 'f64'")


def sign_mask(width: FloatWidth) -> int:
    """The single bit at the MSB position of the width."""
    return 1 << (width.total_bits - 1)


def _wrap_signed(unsigned: int, width: FloatWidth) -> int:
    unsigned &= (1 << width.total_bits) - 1
    if unsigned >= sign_mask(width):
        return unsigned - (1 << width.total_bits)
    return unsigned


def bits_of(value: float, width: FloatWidth) -> int:
    """Reinterpret (not convert) a float's bit pattern as a signed integer.

    For ``SINGLE`` the value is first rounded to binary32; a magnitude beyond
    the binary32 range becomes the infinity pattern, mirroring a C ``(float)``
    cast.  NaN has no place in the ordering and is rejected.
    """
    if math.isnan(value):
        raise ValueError("NaN has no comparable bit pattern")
    fcode, icode = width._codes
    try:
        raw = struct.pack(fcode, value)
    except OverflowError:
        raw = struct.pack(fcode, math.copysign(math.inf, value))
    return struct.unpack(icode, raw)[0]


def value_of_bits(bits: int, width: FloatWidth) -> float:
    """Inverse of :func:`bits_of`; accepts signed or unsigned patterns."""
    fcode, icode = width._codes
    return struct.unpack(fcode, struct.pack(icode, _wrap_signed(bits, width)))[0]


def flint_ge(x_bits: int, y_bits: int, width: FloatWidth) -> bool:
    """Float ``>=`` on two reinterpreted bit patterns (-0 < +0 convention).

    Total on integers; the float-equivalence contract excludes NaN patterns.
    """
    limit = sign_mask(width)
    if not (-limit <= x_bits < limit and -limit <= y_bits < limit):
        raise ValueError(f"bit pattern out of range for {width.value}")
    return (x_bits >= y_bits) ^ (x_bits < 0 and y_bits < 0 and x_bits != y_bits)


@dataclass(frozen=True)
class FlintSplit:
    """A split value resolved at build time into one integer comparison.

    ``negative_case`` False: ``constant`` is the pattern of the (non-negative)
    split value and the node test is ``feature_bits <= constant``.  True:
    ``constant`` is the pattern of the negated split (sign bit cleared) and
    the test is ``constant <= (feature_bits XOR sign mask)``.
    """

    constant: int
    negative_case: bool
    width: FloatWidth
    original_value: str

    def __post_init__(self):
        if self.constant < 0 or self.constant >= sign_mask(self.width):
            raise ValueError("encoded split constant must have a clear sign bit")
        exp_mask = ((1 << self.width.exponent_bits) - 1) << self.width.mantissa_bits
        if self.constant & exp_mask == exp_mask:
            raise ValueError("encoded split constant must be a finite pattern")


def encode_split(value: float, width: FloatWidth) -> FlintSplit:
    """Encode a split threshold for integer-only ``<=`` tests.

    The value is cast to ``width`` first, then a -0 result is rewritten to +0
    (the one spot where the -0 < +0 convention would otherwise disagree with
    IEEE equality), and finally the sign decides the comparison direction.
    """
    if math.isnan(value):
        raise ModelValidationError("split value must not be NaN")
    if math.isinf(value):
        raise ModelValidationError("split value must be finite")
    original = repr(value)
    value = value_of_bits(bits_of(value, width), width)
    if math.isinf(value):
        raise ModelValidationError(
            f"split value {original} overflows width {width.value}"
        )
    if value == 0.0:
        value = 0.0  # rewrite -0 to +0
    if value >= 0.0:
        return FlintSplit(bits_of(value, width), False, width, original)
    return FlintSplit(bits_of(-value, width), True, width, original)


def flint_le_split(feature_bits: int, split: FlintSplit) -> bool:
    """``feature <= split`` using only integer operations on the patterns."""
    if not split.negative_case:
        return feature_bits <= split.constant
    flipped = _wrap_signed(feature_bits ^ sign_mask(split.width), split.width)
    return split.constant <= flipped
