"""Realized disorders and exact emptiness decisions.

A disorder is the realized active-center set {x : omega_x = 1}, stored as a
sorted deduplicated tuple of packed codes.  The solver decides whether the
intersection of the active half-cubes is empty, counts the survivors exactly,
and can enumerate them.  Three backends (naive componentwise dots, Gray-code
incremental dots, bit-parallel popcount) must agree bit-exactly.

Convention: the intersection over an empty active set is all of Sigma_n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bitops import dot_codes
from .errors import ExactRegimeError, PerclabError
from .hypercube import ModelParams, SignSwitch, SpinVector, apply_sign_switch

BACKENDS = ("naive", "graycode", "bitparallel")

#: naive/graycode materialize a full survivor buffer; keep that bounded.
_KERNEL_CAP = 24
_CHUNK = 1 << 22


@dataclass(frozen=True)
class Disorder:
    """Active-center set of one Bernoulli realization.

    `p` records the selection probability the disorder was sampled at, when
    known; it is provenance only and never affects exact solving.
    """

    params: ModelParams
    active: tuple[int, ...]
    p: float | None = None

    def __post_init__(self):
        limit = 1 << self.params.n
        prev = -1
        for c in self.active:
            if not (prev < c < limit):
                raise PerclabError("active codes must be strictly increasing and < 2^n")
            prev = c

    @classmethod
    def from_codes(cls, params: ModelParams, codes, p: float | None = None) -> "Disorder":
        return cls(params, tuple(sorted({int(c) for c in codes})), p)

    def active_vectors(self) -> list[SpinVector]:
        return [SpinVector(self.params.n, c) for c in self.active]

    def with_center(self, code: int) -> "Disorder":
        return Disorder.from_codes(self.params, self.active + (int(code),), self.p)


@dataclass(frozen=True)
class SolveResult:
    empty: bool
    count: int
    witness: SpinVector | None
    backend: str

    def to_dict(self) -> dict:
        return {
            "empty": self.empty,
            "count": self.count,
            "witness": self.witness.to_str() if self.witness else None,
            "backend": self.backend,
        }


@dataclass(frozen=True)
class CouplingSample:
    """Monotone pair of disorders: low.active is a subset of high.active."""

    low: Disorder
    high: Disorder

    def __post_init__(self):
        if not set(self.low.active) <= set(self.high.active):
            raise PerclabError("coupling violated: low active set not within high")


def switch_disorder(g: SignSwitch, d: Disorder) -> Disorder:
    """Disorder with every active center sign-switched."""
    return Disorder.from_codes(
        d.params,
        (apply_sign_switch(g, v).bits for v in d.active_vectors()),
        d.p,
    )


def surviving_codes(n: int, mindot: int, active: tuple[int, ...]) -> np.ndarray:
    """Codes y with dot(y, x) >= mindot for every active x (chunked bit-parallel)."""
    total = 1 << n
    out = []
    for start in range(0, total, _CHUNK):
        block = np.arange(start, min(start + _CHUNK, total), dtype=np.uint32)
        for x in active:
            block = block[dot_codes(block, x, n) >= mindot]
            if block.size == 0:
                break
        if block.size:
            out.append(block)
    if not out:
        return np.empty(0, dtype=np.uint32)
    return out[0] if len(out) == 1 else np.concatenate(out)


def is_empty(params: ModelParams, active: tuple[int, ...]) -> bool:
    """Emptiness only, with early exit on the first survivor found."""
    params.require_exact_regime("emptiness decision")
    if not active:
        return False
    from .kernels import cube_is_empty

    return bool(cube_is_empty(params.n, np.array(active, dtype=np.int64),
                              params.min_dot))


def solution_codes(d: Disorder, backend: str = "bitparallel") -> np.ndarray:
    """Sorted codes of the exact solution set, by the requested backend."""
    params = d.params
    params.require_exact_regime("solution enumeration")
    if backend not in BACKENDS:
        raise PerclabError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    n = params.n
    if not d.active:
        if n > _KERNEL_CAP:
            raise ExactRegimeError(
                f"cannot materialize 2^{n} survivors; n <= {_KERNEL_CAP} required"
            )
        return np.arange(1 << n, dtype=np.uint32)
    if backend == "bitparallel":
        return surviving_codes(n, params.min_dot, d.active)
    if n > _KERNEL_CAP:
        raise ExactRegimeError(
            f"backend {backend!r} materializes 2^{n} codes; n <= {_KERNEL_CAP} required"
        )
    from .kernels import gray_solve, naive_solve

    active = np.array(d.active, dtype=np.int64)
    out = np.empty(1 << n, dtype=np.uint32)
    if backend == "naive":
        cnt = naive_solve(n, active, params.min_dot, out)
        return out[:cnt].copy()
    cnt = gray_solve(n, active, params.min_dot, out)
    return np.sort(out[:cnt])


def solve(d: Disorder, backend: str = "bitparallel") -> SolveResult:
    """Exact emptiness and survivor count over all 2^n candidates."""
    codes = solution_codes(d, backend)
    count = int(codes.size)
    witness = SpinVector(d.params.n, int(codes[0])) if count else None
    return SolveResult(count == 0, count, witness, backend)


def solution_set(d: Disorder) -> set[SpinVector]:
    """The exact solution set as SpinVectors."""
    n = d.params.n
    return {SpinVector(n, int(c)) for c in solution_codes(d)}


# -- disorder sampling -------------------------------------------------------

def _binomial_draw(m: int, p: float, rng) -> int:
    """K ~ Binomial(m, p).

    Uses single-uniform inversion whenever the pmf at zero is representable
    (m * |log1p(-p)| < 700); inversion makes draws at different p on a shared
    stream monotone couplable.  Otherwise falls back to numpy's rejection
    sampler (normal-tail safe) for large means.
    """
    log_pmf0 = m * math.log1p(-p)
    if log_pmf0 < -700.0:
        return int(rng.binomial(m, p))
    u = rng.random()
    pmf = math.exp(log_pmf0)
    cdf = pmf
    k = 0
    ratio = p / (1.0 - p)
    while cdf < u and k < m:
        pmf *= (m - k) / (k + 1) * ratio
        k += 1
        cdf += pmf
    return k


def _sample_distinct(rng, population: int, k: int) -> np.ndarray:
    """k distinct codes uniform without replacement; sparse partial Fisher-Yates."""
    if k == population:
        return np.arange(population, dtype=np.uint32)
    swapped: dict[int, int] = {}
    out = np.empty(k, dtype=np.uint32)
    for i in range(k):
        j = int(rng.integers(i, population))
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        out[i] = vj
        swapped[i] = vj
        swapped[j] = vi
    return np.sort(out)


def sample_disorder(params: ModelParams, p: float, rng) -> Disorder:
    """I.i.d. Bernoulli(p) marking of all 2^n centers, O(|active|) memory.

    Draws at p1 <= p2 from identically-seeded streams yield nested active
    sets (inversion binomial count + Fisher-Yates prefix), which makes
    emptiness monotone trial by trial.
    """
    if not 0.0 <= p <= 1.0:
        raise PerclabError(f"p={p} outside [0, 1]")
    params.require_exact_regime("disorder sampling")
    m = 1 << params.n
    if p == 0.0:
        return Disorder(params, (), p)
    if p == 1.0:
        return Disorder(params, tuple(range(m)), p)
    count = _binomial_draw(m, p, rng)
    codes = _sample_distinct(rng, m, count)
    return Disorder(params, tuple(int(c) for c in codes), p)


def sample_coupled(params: ModelParams, p: float, p_hi: float, rng) -> CouplingSample:
    """Coupled pair with Bernoulli(p) / Bernoulli(p_hi) marginals and low <= high.

    The low disorder is a p/p_hi Bernoulli thinning of the high one.
    """
    if not 0.0 <= p <= p_hi <= 1.0:
        raise PerclabError(f"need 0 <= p <= p_hi <= 1, got p={p}, p_hi={p_hi}")
    high = sample_disorder(params, p_hi, rng)
    if p == p_hi:
        low = Disorder(params, high.active, p)
    elif p == 0.0:
        low = Disorder(params, (), p)
    else:
        keep = rng.random(len(high.active)) <= p / p_hi
        low = Disorder(params, tuple(c for c, k in zip(high.active, keep) if k), p)
    return CouplingSample(low, high)


# -- instance files ----------------------------------------------------------

def disorder_to_json(d: Disorder) -> str:
    return json.dumps({
        "n": d.params.n,
        "kappa": d.params.kappa,
        "active": list(d.active),
    })


def disorder_from_json(s: str) -> Disorder:
    obj = json.loads(s)
    return Disorder.from_codes(ModelParams(obj["n"], obj["kappa"]), obj["active"])
