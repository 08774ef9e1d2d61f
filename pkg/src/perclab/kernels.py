"""Numba kernels for full-cube enumeration.

Three independent routes compute half-cube membership:

  * naive    -- recompute every dot as a componentwise +-1 product sum;
  * graycode -- walk Sigma_n in reflected-binary order, updating each
                constraint's dot by +-2*x_b when bit b of y flips;
  * bit-parallel (numpy, in sat.py) -- dot = n - 2*popcount(XOR).

They must agree bit-exactly; the solver exposes all three for cross-checks.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def gray_diff_count(n, xbits, ybits, mindot):
    """|H(x) \\ H(y)| via a Gray-code walk with incremental dot updates."""
    # start at code 0 = all components -1
    dx = 0
    dy = 0
    for j in range(n):
        dx += -1 if (xbits >> j) & 1 else 1
        dy += -1 if (ybits >> j) & 1 else 1
    count = 0
    if dx >= mindot and dy < mindot:
        count += 1
    total = 1 << n
    for i in range(1, total):
        # bit flipped between gray(i-1) and gray(i) is ctz(i)
        b = 0
        while not (i >> b) & 1:
            b += 1
        newbit = (((i >> 1) ^ i) >> b) & 1
        step = 2 if newbit else -2
        dx += step if (xbits >> b) & 1 else -step
        dy += step if (ybits >> b) & 1 else -step
        if dx >= mindot and dy < mindot:
            count += 1
    return count


@njit(cache=True)
def cube_is_empty(n, active, mindot):
    """True iff no y survives every constraint; early exit both ways."""
    total = 1 << n
    for y in range(total):
        ok = True
        for t in range(active.shape[0]):
            v = y ^ active[t]
            v = v - ((v >> 1) & 0x5555555555555555)
            v = (v & 0x3333333333333333) + ((v >> 2) & 0x3333333333333333)
            v = (v + (v >> 4)) & 0x0F0F0F0F0F0F0F0F
            pc = (v * 0x0101010101010101) >> 56
            if n - 2 * pc < mindot:
                ok = False
                break
        if ok:
            return False
    return True


@njit(cache=True)
def naive_solve(n, active, mindot, out):
    """Survivors of all constraints, dots recomputed componentwise per point.

    Fills `out` (size >= 2**n) with surviving codes ascending; returns count.
    """
    count = 0
    total = 1 << n
    for y in range(total):
        ok = True
        for t in range(active.shape[0]):
            x = active[t]
            s = 0
            for j in range(n):
                xj = 1 if (x >> j) & 1 else -1
                yj = 1 if (y >> j) & 1 else -1
                s += xj * yj
            if s < mindot:
                ok = False
                break
        if ok:
            out[count] = y
            count += 1
    return count


@njit(cache=True)
def gray_solve(n, active, mindot, out):
    """Survivors via a Gray-code walk maintaining one incremental dot per constraint.

    Fills `out` with surviving codes in walk order (not sorted); returns count.
    """
    k = active.shape[0]
    dots = np.empty(k, dtype=np.int64)
    for t in range(k):
        s = 0
        for j in range(n):
            s += -1 if (active[t] >> j) & 1 else 1
        dots[t] = s
    count = 0
    ok = True
    for t in range(k):
        if dots[t] < mindot:
            ok = False
            break
    if ok:
        out[count] = 0
        count += 1
    total = 1 << n
    code = 0
    for i in range(1, total):
        b = 0
        while not (i >> b) & 1:
            b += 1
        code ^= 1 << b
        newbit = (code >> b) & 1
        step = 2 if newbit else -2
        ok = True
        for t in range(k):
            dots[t] += step if (active[t] >> b) & 1 else -step
            if dots[t] < mindot:
                ok = False
        if ok:
            out[count] = code
            count += 1
    return count
