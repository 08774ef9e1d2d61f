"""Bit-level helpers shared by the exact kernels.

Spin vectors are bit-packed integers: bit j set means component j+1 is +1,
clear means -1.  For two packed vectors u, v of dimension n,

    dot(u, v) = n - 2 * popcount(u XOR v).
"""

from __future__ import annotations

import numpy as np

# 16-bit popcount lookup table, used to vectorize popcount over code arrays.
_LUT16 = np.array([bin(i).count("1") for i in range(1 << 16)], dtype=np.uint8)


def popcount_codes(codes: np.ndarray) -> np.ndarray:
    """Vectorized popcount of an array of codes (< 2**32)."""
    c = codes.astype(np.uint32, copy=False)
    return (_LUT16[c & np.uint32(0xFFFF)].astype(np.int64)
            + _LUT16[c >> np.uint32(16)].astype(np.int64))


def dot_codes(codes: np.ndarray, center: int, n: int) -> np.ndarray:
    """dot(y, center) for every packed code y in `codes`."""
    return n - 2 * popcount_codes(codes ^ np.uint32(center))


def mask_of(n: int) -> int:
    """All-ones mask of width n."""
    return (1 << n) - 1


def components_to_code(components) -> int:
    """Pack a +-1 component list (index 0 = component 1) into an integer."""
    code = 0
    for j, c in enumerate(components):
        if c == 1:
            code |= 1 << j
        elif c != -1:
            raise ValueError(f"component {j + 1} is {c}, expected +1 or -1")
    return code


def code_to_components(code: int, n: int) -> tuple[int, ...]:
    """Unpack an integer code into a +-1 component tuple."""
    return tuple(1 if (code >> j) & 1 else -1 for j in range(n))


def all_codes(n: int) -> np.ndarray:
    """All 2**n packed codes, ascending.  Caller enforces the regime cap."""
    return np.arange(1 << n, dtype=np.uint32)
