"""Bit-packed spin vectors, half-cube geometry, and the two automorphism actions.

A point of {-1,1}^n is stored as an n-bit integer code: bit j set means
component j+1 equals +1.  Unused high bits are always zero, so integer
equality of codes is vector equality and codes can live in hash sets.

The half-cube centered at x is H(x) = {y : x . y >= kappa * sqrt(n)} with the
inclusive inequality.  Membership is decided by an exact rational comparison
of the integer dot against kappa^2 * n (floats are rationals, so there is no
guard band to tune).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .bitops import (
    all_codes,
    code_to_components,
    components_to_code,
    dot_codes,
    mask_of,
)
from .errors import DimensionMismatchError, ExactRegimeError

#: Full-cube enumeration is allowed only up to this dimension.
EXACT_ENUM_CAP = 30


@lru_cache(maxsize=None)
def _min_dot(n: int, kappa_exact: Fraction) -> int:
    """Smallest integer d with d >= kappa*sqrt(n); n+1 when H(x) is empty.

    The comparison d >= kappa*sqrt(n) is decided exactly by comparing
    squares with the correct sign handling, so a tie (kappa*sqrt(n) an
    exact integer) stays inclusive.
    """
    target_sq = kappa_exact * kappa_exact * n

    def meets(d: int) -> bool:
        if kappa_exact <= 0:
            return d >= 0 or Fraction(d * d) <= target_sq
        return d > 0 and Fraction(d * d) >= target_sq

    lo, hi = -n, n + 1  # meets(n+1) treated as the empty-half-cube sentinel
    if meets(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if meets(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ModelParams:
    """Dimension n and margin kappa of the half-cube model."""

    n: int
    kappa: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    @property
    def min_dot(self) -> int:
        """Smallest integer dot admitted into a half-cube (n+1 = never)."""
        return _min_dot(self.n, Fraction(self.kappa))

    def require_exact_regime(self, what: str = "full-cube enumeration"):
        if self.n > EXACT_ENUM_CAP:
            raise ExactRegimeError(
                f"exact regime exceeded: {what} needs n <= {EXACT_ENUM_CAP}, got n={self.n}"
            )


@dataclass(frozen=True)
class SpinVector:
    """A point of {-1,1}^n, bit-packed (bit 1 <-> +1), canonical high bits zero."""

    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bits 0x{self.bits:X} not canonical for n={self.n}")

    @classmethod
    def from_components(cls, components: Sequence[int]) -> "SpinVector":
        return cls(len(components), components_to_code(components))

    @classmethod
    def random(cls, n: int, rng) -> "SpinVector":
        words = rng.integers(0, 1 << 32, size=(n + 31) // 32, dtype=np.uint64)
        bits = 0
        for i, w in enumerate(words):
            bits |= int(w) << (32 * i)
        return cls(n, bits & mask_of(n))

    def components(self) -> tuple[int, ...]:
        return code_to_components(self.bits, self.n)

    def component(self, j: int) -> int:
        """Component j (1-based)."""
        return 1 if (self.bits >> (j - 1)) & 1 else -1

    def to_str(self) -> str:
        """Serialized form used in all JSON/CSV output, e.g. "4:0xB"."""
        return f"{self.n}:0x{self.bits:X}"

    @classmethod
    def from_str(cls, s: str) -> "SpinVector":
        n_str, bits_str = s.split(":", 1)
        return cls(int(n_str), int(bits_str, 16))

    def __repr__(self):
        return f"SpinVector({self.to_str()!r})"


@dataclass(frozen=True)
class SignSwitch:
    """Sign-switching automorphism: (g o x)^j = g^j x^j.  An involution."""

    g: SpinVector


@dataclass(frozen=True)
class Permutation:
    """Label-exchanging automorphism: (sigma o x)^j = x^(sigma^-1(j)).

    `sigma` maps 0-based coordinate i to sigma[i]; the inverse is stored
    explicitly.  Bijectivity is checked at construction, never at apply time.
    """

    sigma: tuple[int, ...]
    inverse: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        n = len(self.sigma)
        inv = [-1] * n
        for i, img in enumerate(self.sigma):
            if not (0 <= img < n) or inv[img] != -1:
                raise ValueError(f"sigma is not a bijection on 0..{n - 1}")
            inv[img] = i
        object.__setattr__(self, "sigma", tuple(self.sigma))
        object.__setattr__(self, "inverse", tuple(inv))

    @property
    def n(self) -> int:
        return len(self.sigma)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng) -> "Permutation":
        return cls(tuple(int(i) for i in rng.permutation(n)))

    def inverted(self) -> "Permutation":
        return Permutation(self.inverse)


def _check_dims(a_n: int, b_n: int):
    if a_n != b_n:
        raise DimensionMismatchError(f"dimension mismatch: {a_n} != {b_n}")


def dot(x: SpinVector, y: SpinVector) -> int:
    """Bilinear form sum_j x^j y^j, computed as n - 2*popcount(x XOR y)."""
    _check_dims(x.n, y.n)
    return x.n - 2 * (x.bits ^ y.bits).bit_count()


def hamming(u: SpinVector, v: SpinVector) -> int:
    """Number of disagreeing coordinates; dot(u,v) = n - 2*hamming(u,v)."""
    _check_dims(u.n, v.n)
    return (u.bits ^ v.bits).bit_count()


def in_halfcube(y: SpinVector, center: SpinVector, params: ModelParams) -> bool:
    """Whether y lies in H(center), i.e. center . y >= kappa*sqrt(n) (inclusive)."""
    _check_dims(y.n, params.n)
    return dot(center, y) >= params.min_dot


def apply_sign_switch(g: SignSwitch, x: SpinVector) -> SpinVector:
    """Componentwise product g o x; XNOR on packed bits."""
    _check_dims(g.g.n, x.n)
    return SpinVector(x.n, x.bits ^ (g.g.bits ^ mask_of(x.n)))


def apply_permutation(sigma: Permutation, x: SpinVector) -> SpinVector:
    """Coordinate relabeling: component j of the result is x^(sigma^-1(j))."""
    _check_dims(sigma.n, x.n)
    bits = 0
    xb = x.bits
    for j, src in enumerate(sigma.inverse):
        bits |= ((xb >> src) & 1) << j
    return SpinVector(x.n, bits)


# -- vectorized actions on packed-code arrays (used by enumeration checks) --

def sign_switch_codes(codes: np.ndarray, g_code: int, n: int) -> np.ndarray:
    """Apply a sign switch to every packed code in the array."""
    return codes ^ np.uint32(g_code ^ mask_of(n))


def permute_codes(codes: np.ndarray, sigma: Permutation) -> np.ndarray:
    """Apply a coordinate permutation to every packed code in the array."""
    out = np.zeros_like(codes)
    for j, src in enumerate(sigma.inverse):
        out |= ((codes >> np.uint32(src)) & np.uint32(1)) << np.uint32(j)
    return out


def halfcube_codes(center: SpinVector, params: ModelParams) -> np.ndarray:
    """All packed codes of H(center), ascending.  Exact regime only."""
    _check_dims(center.n, params.n)
    params.require_exact_regime()
    m = params.min_dot
    chunks = []
    total = 1 << params.n
    step = min(total, 1 << 22)
    for start in range(0, total, step):
        block = np.arange(start, min(start + step, total), dtype=np.uint32)
        keep = dot_codes(block, center.bits, params.n) >= m
        chunks.append(block[keep])
    return np.concatenate(chunks) if len(chunks) > 1 else chunks[0]


def halfcube_size(center: SpinVector, params: ModelParams) -> int:
    return int(halfcube_codes(center, params).size)


def halfcube_diff_size(x: SpinVector, y: SpinVector, params: ModelParams) -> int:
    """Exact |H(x) \\ H(y)| by a Gray-code walk with incremental dot updates."""
    _check_dims(x.n, y.n)
    _check_dims(x.n, params.n)
    params.require_exact_regime("halfcube_diff_size")
    from .kernels import gray_diff_count

    return int(gray_diff_count(params.n, x.bits, y.bits, params.min_dot))


def enumerate_halfcube(center: SpinVector, params: ModelParams) -> set[SpinVector]:
    """H(center) as a set of SpinVectors (small n only)."""
    return {SpinVector(params.n, int(c)) for c in halfcube_codes(center, params)}
