"""Exact bit-level interpretations of parameterized binary float formats.

A bit vector of width ``total_bits`` can be read as an unsigned integer, a
two's-complement signed integer, or a sign/biased-exponent/mantissa float.
Decoding is done in exact dyadic-rational arithmetic (never host floats) so
these functions can serve as an independent oracle for the integer-only
comparison operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

__all__ = [
    "MiniFloatFormat",
    "BitVec",
    "ExactValue",
    "interpret_ui",
    "interpret_si",
    "interpret_fp",
    "interpret_fp_abs",
    "flint_ge_general",
]


@dataclass(frozen=True)
class MiniFloatFormat:
    """Bit layout: one sign bit, then ``exponent_bits``, then ``mantissa_bits``."""

    total_bits: int
    exponent_bits: int
    mantissa_bits: int

    def __post_init__(self):
        if not 3 <= self.total_bits <= 64:
            raise ValueError(f"total_bits must be in 3..64, got {self.total_bits}")
        if self.exponent_bits < 2:
            raise ValueError(f"exponent_bits must be >= 2, got {self.exponent_bits}")
        if self.mantissa_bits < 1:
            raise ValueError(f"mantissa_bits must be >= 1, got {self.mantissa_bits}")
        if self.total_bits != 1 + self.exponent_bits + self.mantissa_bits:
            raise ValueError(
                "total_bits must equal 1 + exponent_bits + mantissa_bits: "
                f"{self.total_bits} != 1 + {self.exponent_bits} + {self.mantissa_bits}"
            )

    @property
    def bias(self) -> int:
        return (1 << (self.exponent_bits - 1)) - 1

    @property
    def sign_mask(self) -> int:
        return 1 << (self.total_bits - 1)

    @property
    def mantissa_mask(self) -> int:
        return (1 << self.mantissa_bits) - 1

    @property
    def exponent_mask(self) -> int:
        return ((1 << self.exponent_bits) - 1) << self.mantissa_bits

    @property
    def pattern_count(self) -> int:
        return 1 << self.total_bits


@dataclass(frozen=True)
class BitVec:
    """A raw bit pattern of a given format's width."""

    bits: int
    fmt: MiniFloatFormat

    def __post_init__(self):
        if not 0 <= self.bits < self.fmt.pattern_count:
            raise ValueError(
                f"bits 0x{self.bits:x} does not fit in {self.fmt.total_bits} bits"
            )

    @property
    def sign_bit(self) -> int:
        return (self.bits >> (self.fmt.total_bits - 1)) & 1

    @property
    def exponent_field(self) -> int:
        return (self.bits >> self.fmt.mantissa_bits) & (
            (1 << self.fmt.exponent_bits) - 1
        )

    @property
    def mantissa_field(self) -> int:
        return self.bits & self.fmt.mantissa_mask


@total_ordering
@dataclass(frozen=True)
class ExactValue:
    """``sign * numerator * 2**exponent_of_two`` held exactly.

    Canonical form: ``numerator`` is odd or zero, and a zero numerator forces
    ``exponent_of_two == 0``.  The signed zeros stay distinct and order as
    ``-0 < +0``.
    """

    sign: int
    numerator: int
    exponent_of_two: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")
        if self.numerator < 0:
            raise ValueError("numerator carries no sign; it must be >= 0")
        if self.numerator == 0:
            if self.exponent_of_two != 0:
                raise ValueError("canonical zero has exponent_of_two == 0")
        elif self.numerator % 2 == 0:
            raise ValueError("canonical numerator must be odd")

    @classmethod
    def make(cls, sign: int, numerator: int, exponent_of_two: int) -> "ExactValue":
        """Build a canonical value from any ``numerator * 2**e`` decomposition."""
        if numerator == 0:
            return cls(sign, 0, 0)
        while numerator % 2 == 0:
            numerator //= 2
            exponent_of_two += 1
        return cls(sign, numerator, exponent_of_two)

    @property
    def is_zero(self) -> bool:
        return self.numerator == 0

    def magnitude(self) -> "ExactValue":
        return ExactValue(1, self.numerator, self.exponent_of_two)

    def to_fraction(self) -> Fraction:
        """The real number this value denotes (both zeros collapse to 0)."""
        scaled = self.sign * self.numerator
        if self.exponent_of_two >= 0:
            return Fraction(scaled * (1 << self.exponent_of_two))
        return Fraction(scaled, 1 << -self.exponent_of_two)

    def _compare(self, other: "ExactValue") -> int:
        if self.is_zero and other.is_zero:
            # -0 < +0 by convention
            return self.sign - other.sign
        if self.sign != other.sign:
            return 1 if self.sign > other.sign else -1
        d = self.exponent_of_two - other.exponent_of_two
        if d >= 0:
            lhs, rhs = self.numerator << d, other.numerator
        else:
            lhs, rhs = self.numerator, other.numerator << -d
        mag = (lhs > rhs) - (lhs < rhs)
        return mag if self.sign > 0 else -mag

    def __lt__(self, other):
        if not isinstance(other, ExactValue):
            return NotImplemented
        return self._compare(other) < 0


def interpret_ui(b: BitVec) -> int:
    """Unsigned-integer reading of the bit pattern."""
    return b.bits


def interpret_si(b: BitVec) -> int:
    """Two's-complement reading: the MSB carries weight ``-2**(k-1)``."""
    half = 1 << (b.fmt.total_bits - 1)
    return b.bits - (half << 1) if b.bits >= half else b.bits


def interpret_fp(b: BitVec) -> ExactValue:
    """Sign/exponent/mantissa reading as an exact dyadic rational.

    An all-zero exponent field selects the denormalized form (exponent value
    ``1 - bias``, no implicit leading one); the all-zero pattern is +0 and the
    sign-only pattern is -0.  An all-ones exponent field is decoded by the
    same normal formula as any other, which keeps the mapping bijective.
    """
    fmt = b.fmt
    sign = -1 if b.sign_bit else 1
    exp_field = b.exponent_field
    mantissa = b.mantissa_field
    if exp_field == 0:
        return ExactValue.make(sign, mantissa, 1 - fmt.bias - fmt.mantissa_bits)
    significand = (1 << fmt.mantissa_bits) | mantissa
    return ExactValue.make(sign, significand, exp_field - fmt.bias - fmt.mantissa_bits)


def interpret_fp_abs(b: BitVec) -> ExactValue:
    """Float reading with the sign bit ignored (the magnitude)."""
    return interpret_fp(b).magnitude()


def flint_ge_general(xb: BitVec, yb: BitVec) -> bool:
    """Float ``>=`` evaluated purely on the signed-integer readings.

    ``(SI(x) >= SI(y)) XOR (SI(x) < 0 and SI(y) < 0 and SI(x) != SI(y))``:
    the XOR term undoes the order inversion among negative patterns.
    """
    if xb.fmt != yb.fmt:
        raise ValueError("operands must share a format")
    sx = interpret_si(xb)
    sy = interpret_si(yb)
    return (sx >= sy) ^ (sx < 0 and sy < 0 and sx != sy)
