"""Sampled agreement suites for the production-width comparison operator.

Hardware float comparison is the oracle here.  Random finite patterns plus a
fixed, versioned edge set are checked pairwise: the integer-only ``>=`` must
agree with hardware everywhere except the mixed (-0, +0) pair, where the
documented -0 < +0 convention holds instead.  The split path (encode once,
compare many) must agree with hardware ``<=`` with no exception at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .flint import FloatWidth, encode_split, sign_mask

__all__ = [
    "DEFAULT_SEED",
    "edge_patterns",
    "AgreementReport",
    "check_ge_agreement",
    "check_split_agreement",
]

DEFAULT_SEED = 20240214


def _dtypes(width: FloatWidth):
    if width is FloatWidth.SINGLE:
        return np.uint32, np.int32, np.float32
    return np.uint64, np.int64, np.float64


def _exponent_all_ones(u: np.ndarray, width: FloatWidth) -> np.ndarray:
    mant = width.mantissa_bits
    exp_mask = (1 << width.exponent_bits) - 1
    return ((u >> mant) & exp_mask) == exp_mask


def edge_patterns(width: FloatWidth, include_infinities: bool = True) -> np.ndarray:
    """The fixed edge set as unsigned patterns: zeros, denormal and normal
    extremes, +-1, infinities, and every valid bit-space neighbour of those."""
    utype, _, _ = _dtypes(width)
    k = width.total_bits
    mant = width.mantissa_bits
    smask = 1 << (k - 1)
    bias = (1 << (width.exponent_bits - 1)) - 1
    min_normal = 1 << mant
    max_normal = (((1 << width.exponent_bits) - 1) << mant) - 1
    one = bias << mant
    half = (bias - 1) << mant
    two = (bias + 1) << mant
    mid_denormal = min_normal >> 1
    inf = ((1 << width.exponent_bits) - 1) << mant

    base = [0, 1, mid_denormal, min_normal - 1, min_normal, half, one, two, max_normal]
    if include_infinities:
        base.append(inf)
    base += [b | smask for b in base]

    limit = 1 << k
    candidates = set()
    for b in base:
        for delta in (-1, 0, 1):
            p = b + delta
            if 0 <= p < limit:
                candidates.add(p)
    arr = np.array(sorted(candidates), dtype=utype)
    special = _exponent_all_ones(arr, width)
    if not include_infinities:
        return arr[~special]
    nan = special & ((arr & ((1 << mant) - 1)) != 0)
    return arr[~nan]


def _random_finite(rng: np.random.Generator, n: int, width: FloatWidth) -> np.ndarray:
    utype, _, _ = _dtypes(width)
    u = rng.integers(0, 2**width.total_bits, size=n, dtype=utype)
    while True:
        bad = _exponent_all_ones(u, width)
        if not bad.any():
            return u
        u[bad] = rng.integers(0, 2**width.total_bits, size=int(bad.sum()), dtype=utype)


def _flint_ge_array(xu: np.ndarray, yu: np.ndarray, width: FloatWidth) -> np.ndarray:
    _, itype, _ = _dtypes(width)
    xi, yi = xu.view(itype), yu.view(itype)
    return (xi >= yi) ^ ((xi < 0) & (yi < 0) & (xi != yi))


def _mixed_zero_pairs(xu: np.ndarray, yu: np.ndarray, width: FloatWidth) -> np.ndarray:
    utype, _, _ = _dtypes(width)
    pz, nz = utype(0), utype(sign_mask(width))
    return ((xu == pz) & (yu == nz)) | ((xu == nz) & (yu == pz))


@dataclass(frozen=True)
class AgreementReport:
    width: FloatWidth
    seed: Optional[int]
    pairs_checked: int
    disagreements: int
    first_disagreement: Optional[tuple[int, int]]
    zero_convention_ok: bool

    @property
    def passed(self) -> bool:
        return self.disagreements == 0 and self.zero_convention_ok


def _zero_convention_holds(width: FloatWidth) -> bool:
    utype, _, _ = _dtypes(width)
    pz = np.array([0], dtype=utype)
    nz = np.array([sign_mask(width)], dtype=utype)
    ge_pn = bool(_flint_ge_array(pz, nz, width)[0])
    ge_np = bool(_flint_ge_array(nz, pz, width)[0])
    return ge_pn and not ge_np  # -0 < +0


def check_ge_agreement(
    width: FloatWidth, n_pairs: int, seed: int = DEFAULT_SEED
) -> AgreementReport:
    """Compare integer-only >= with hardware >= on random and edge pairs."""
    utype, _, ftype = _dtypes(width)
    rng = np.random.default_rng(seed)
    xs = _random_finite(rng, n_pairs, width)
    ys = _random_finite(rng, n_pairs, width)

    edges = edge_patterns(width)
    ex = np.repeat(edges, edges.size)
    ey = np.tile(edges, edges.size)
    xs = np.concatenate([xs, ex])
    ys = np.concatenate([ys, ey])

    flint_side = _flint_ge_array(xs, ys, width)
    hardware_side = xs.view(ftype) >= ys.view(ftype)
    excused = _mixed_zero_pairs(xs, ys, width)
    bad = (flint_side != hardware_side) & ~excused

    first = None
    if bad.any():
        i = int(np.argmax(bad))
        first = (int(xs[i]), int(ys[i]))
    return AgreementReport(
        width=width,
        seed=seed,
        pairs_checked=int(xs.size),
        disagreements=int(bad.sum()),
        first_disagreement=first,
        zero_convention_ok=_zero_convention_holds(width),
    )


def check_split_agreement(
    width: FloatWidth, n_features: int, seed: int = DEFAULT_SEED
) -> AgreementReport:
    """Compare the encoded split path with hardware <= for every finite edge
    split against random and edge feature values (zeros included)."""
    utype, itype, ftype = _dtypes(width)
    rng = np.random.default_rng(seed)
    features = np.concatenate(
        [_random_finite(rng, n_features, width), edge_patterns(width)]
    )
    fi = features.view(itype)
    f_float = features.view(ftype)
    flip_mask = utype(sign_mask(width))
    fi_flipped = (features ^ flip_mask).view(itype)

    splits = edge_patterns(width, include_infinities=False)
    pairs = 0
    disagreements = 0
    first = None
    for s in splits:
        s_float = float(np.array([s], dtype=utype).view(ftype)[0])
        enc = encode_split(s_float, width)
        if enc.negative_case:
            flint_side = itype(enc.constant) <= fi_flipped
        else:
            flint_side = fi <= itype(enc.constant)
        hardware_side = f_float <= ftype(s_float)
        bad = flint_side != hardware_side
        pairs += features.size
        if bad.any():
            disagreements += int(bad.sum())
            if first is None:
                i = int(np.argmax(bad))
                first = (int(features[i]), int(s))
    return AgreementReport(
        width=width,
        seed=seed,
        pairs_checked=pairs,
        disagreements=disagreements,
        first_disagreement=first,
        zero_convention_ok=_zero_convention_holds(width),
    )
