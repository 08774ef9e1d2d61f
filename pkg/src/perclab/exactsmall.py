"""Full disorder enumeration for tiny dimensions (n <= 4).

With M = 2^n centers there are 2^M disorders; enumerating all of them gives
the emptiness indicator f as an exact table, the emptiness probability as an
exact polynomial in p, and the total influence exactly.  These are the
ground-truth oracles the Monte Carlo estimators are validated against.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .bitops import dot_codes, all_codes
from .errors import ExactRegimeError
from .hypercube import ModelParams

#: full-disorder enumeration cap: 2^(2^n) tables.
FULL_DISORDER_CAP = 4


def _require_tiny(params: ModelParams):
    if params.n > FULL_DISORDER_CAP:
        raise ExactRegimeError(
            f"full disorder enumeration needs n <= {FULL_DISORDER_CAP}, got n={params.n}"
        )


@lru_cache(maxsize=None)
def _tables(n: int, kappa_key: float):
    """(emptiness table f over all 2^M disorders, M) for the given model."""
    params = ModelParams(n, kappa_key)
    m_centers = 1 << n
    codes = all_codes(n)
    mindot = params.min_dot
    # membership mask of H(x) over all y codes, one integer per center
    hmask = []
    for x in range(m_centers):
        bits = 0
        for y in codes[dot_codes(codes, x, n) >= mindot]:
            bits |= 1 << int(y)
        hmask.append(bits)
    full = (1 << m_centers) - 1
    inter = [0] * (1 << m_centers)
    inter[0] = full
    f = bytearray(1 << m_centers)
    for w in range(1, 1 << m_centers):
        low = w & -w
        inter[w] = inter[w ^ low] & hmask[low.bit_length() - 1]
        if inter[w] == 0:
            f[w] = 1
    return bytes(f), m_centers


@lru_cache(maxsize=None)
def emptiness_weight_counts(n: int, kappa: float) -> tuple[int, ...]:
    """counts[w] = number of weight-w disorders whose intersection is empty."""
    f, m = _tables(n, kappa)
    counts = [0] * (m + 1)
    for w in range(1 << m):
        if f[w]:
            counts[w.bit_count()] += 1
    return tuple(counts)


@lru_cache(maxsize=None)
def pivotal_weight_counts(n: int, kappa: float) -> tuple[int, ...]:
    """counts[w] = over all centers x, number of weight-w configurations of
    the other centers at which x is pivotal."""
    f, m = _tables(n, kappa)
    counts = [0] * m
    for x in range(m):
        bit = 1 << x
        for w in range(1 << m):
            if w & bit:
                continue
            if f[w] != f[w | bit]:
                counts[w.bit_count()] += 1
    return tuple(counts)


def emptiness_prob_exact(params: ModelParams, p) -> Fraction:
    """E_p[f] as an exact rational (p coerced exactly from its float bits)."""
    _require_tiny(params)
    counts = emptiness_weight_counts(params.n, params.kappa)
    m = len(counts) - 1
    pf = Fraction(p)
    return sum(
        (Fraction(c) * pf ** w * (1 - pf) ** (m - w) for w, c in enumerate(counts) if c),
        Fraction(0),
    )


def total_pivotal_prob_exact(params: ModelParams, p) -> Fraction:
    """sum_x P_p(x pivotal), exactly; equals dE_p[f]/dp by Margulis-Russo."""
    _require_tiny(params)
    counts = pivotal_weight_counts(params.n, params.kappa)
    m = len(counts)
    pf = Fraction(p)
    return sum(
        (Fraction(c) * pf ** w * (1 - pf) ** (m - 1 - w) for w, c in enumerate(counts) if c),
        Fraction(0),
    )


def influence_exact_value(params: ModelParams, p) -> Fraction:
    """Total influence I_f(p) = 2p(1-p) * sum_x P(x pivotal), exactly."""
    pf = Fraction(p)
    return 2 * pf * (1 - pf) * total_pivotal_prob_exact(params, p)
