"""Monte Carlo estimators: emptiness curves, thresholds, sharpness windows,
influence, boosting-set search, and the geometric scans.

Every estimator derives one RNG stream per (master seed, trial path), so
results are bit-identical regardless of worker count.  Trials at different p
share trial keys, which couples them monotonically (nested disorders), making
empirical curves nondecreasing in p and threshold quantiles nested.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitops import dot_codes
from .errors import ExactRegimeError, PerclabError
from .exactsmall import (
    FULL_DISORDER_CAP,
    emptiness_prob_exact,
    influence_exact_value,
    total_pivotal_prob_exact,
)
from .hypercube import ModelParams, SpinVector, halfcube_diff_size
from .sat import Disorder, is_empty, sample_disorder, surviving_codes
from .seeding import substream
from .symmetry import GentleMap, SpinSequence, gentle_apply

#: influence_mc and the scans enumerate the cube; keep them well inside RAM.
MC_ENUM_CAP = 20

_Z95 = 1.959963984540054


def wilson_interval(hits: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson 95% score interval; well behaved near 0 and 1."""
    if trials <= 0:
        raise PerclabError("trials must be positive")
    phat = hits / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    # clamp so the interval always contains the point estimate despite
    # floating-point wobble at hits = 0 or hits = trials
    return min(phat, max(0.0, center - half)), max(phat, min(1.0, center + half))


@dataclass(frozen=True)
class CurvePoint:
    p: float
    trials: int
    empty_hits: int
    theta_hat: float
    ci_lo: float
    ci_hi: float

    @classmethod
    def from_hits(cls, p: float, hits: int, trials: int) -> "CurvePoint":
        lo, hi = wilson_interval(hits, trials)
        return cls(p, trials, hits, hits / trials, lo, hi)


@dataclass(frozen=True)
class ThresholdEstimate:
    theta: float
    p_hat: float
    bracket: tuple[float, float]
    trials_per_eval: int
    seed: int
    separated: bool  # Wilson intervals at the bracket endpoints separate theta


@dataclass(frozen=True)
class InfluenceEstimate:
    p: float
    i_hat: float
    method: str  # "exact_enumeration" or "pivotal_mc"
    stderr: float


@dataclass(frozen=True)
class BoostingCertificate:
    set: tuple[SpinVector, ...]
    delta: float
    confidence: float  # Wilson lower bound of the certified conditional probability
    trials: int


@dataclass(frozen=True)
class RemovalExperimentParams:
    k: int
    n_star: int
    q_threshold: float
    trials: int

    @classmethod
    def for_model(cls, params: ModelParams, k: int, trials: int) -> "RemovalExperimentParams":
        n = params.n
        n_star = max(1, int(n / math.sqrt(math.log(n))))
        return cls(k, n_star, math.log(n) ** (-1 / 3) if n > 1 else 1.0, trials)


# -- emptiness curve and thresholds -----------------------------------------

def _empty_trial(params: ModelParams, p: float, seed: int, trial: int) -> bool:
    d = sample_disorder(params, p, substream(seed, trial))
    return is_empty(params, d.active)


def _empty_hits(params: ModelParams, p: float, trials: int, seed: int,
                threads: int = 1) -> int:
    if threads <= 1:
        return sum(_empty_trial(params, p, seed, t) for t in range(trials))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = pool.map(lambda t: _empty_trial(params, p, seed, t), range(trials))
        return sum(results)


def estimate_curve(params: ModelParams, ps, trials: int, seed: int,
                   threads: int = 1) -> list[CurvePoint]:
    """Empirical emptiness probability at each p, with Wilson intervals.

    Trial keys are shared across the p grid, so the returned curve is
    monotone nondecreasing in p sample path by sample path.
    """
    params.require_exact_regime("curve estimation")
    return [
        CurvePoint.from_hits(p, _empty_hits(params, p, trials, seed, threads), trials)
        for p in ps
    ]


def find_threshold(params: ModelParams, theta: float, trials_per_eval: int,
                   seed: int, threads: int = 1, rel_width: float = 0.02,
                   max_boost: int = 256) -> ThresholdEstimate:
    """Monotone bisection for p with emptiness probability theta.

    Valid because coupled evaluations make the empirical curve nondecreasing
    in p.  Stops when the bracket's relative width is at most `rel_width`;
    the bracket endpoints are then re-evaluated with boosted trial counts
    until their Wilson intervals separate theta (best effort, capped at
    `max_boost` times the base trial count).
    """
    if not 0.0 < theta < 1.0:
        raise PerclabError(f"theta={theta} must lie strictly inside (0, 1)")
    params.require_exact_regime("threshold estimation")

    def theta_hat(p: float, trials: int) -> float:
        return _empty_hits(params, p, trials, seed, threads) / trials

    # establish a bracket around the empirical quantile
    p0 = min(0.25, max(params.n * 2.0 ** -params.n, 1e-9))
    lo = hi = p0
    v = theta_hat(p0, trials_per_eval)
    if v < theta:
        while v < theta:
            if hi >= 1.0:
                raise PerclabError(
                    f"cannot bracket theta={theta}: emptiness probability at p=1 "
                    f"is {v:.4f} (kappa may make the event unreachable)"
                )
            lo = hi
            hi = min(1.0, hi * 4.0)
            v = theta_hat(hi, trials_per_eval)
    else:
        while v >= theta:
            hi = lo
            lo = lo / 4.0
            if lo < 1e-15:
                raise PerclabError(f"cannot bracket theta={theta} from below")
            v = theta_hat(lo, trials_per_eval)

    def refine(lo: float, hi: float, trials: int, target: float) -> tuple[float, float]:
        while (hi - lo) / lo > target:
            mid = math.sqrt(lo * hi)
            if theta_hat(mid, trials) < theta:
                lo = mid
            else:
                hi = mid
        return lo, hi

    def repair(lo: float, hi: float, trials: int) -> tuple[float, float]:
        # at a higher trial count the empirical quantile can drift out of the
        # low-resolution bracket; walk the bracket until it straddles again
        while theta_hat(lo, trials) >= theta:
            hi = lo
            lo /= 1.05
        while theta_hat(hi, trials) < theta:
            lo = hi
            hi *= 1.05
        return lo, hi

    lo, hi = refine(lo, hi, trials_per_eval, max(rel_width, 0.08))
    # Center a bracket of the target width on the crossing, so both endpoints
    # carry statistical margin, then boost endpoint trials until their Wilson
    # intervals separate theta (best effort, up to max_boost x).
    half = 1.0 + rel_width / 2.01
    separated = False
    for boost in (b for b in (4, 16, 64, 256) if b <= max_boost):
        trials = trials_per_eval * boost
        lo, hi = repair(lo, hi, trials)
        lo, hi = refine(lo, hi, trials, rel_width)
        center = math.sqrt(lo * hi)
        c_lo, c_hi = center / half, center * half
        lo_hits = _empty_hits(params, c_lo, trials, seed, threads)
        hi_hits = _empty_hits(params, c_hi, trials, seed, threads)
        if wilson_interval(lo_hits, trials)[1] < theta < wilson_interval(hi_hits, trials)[0]:
            lo, hi = c_lo, c_hi
            separated = True
            break
    return ThresholdEstimate(theta, (lo + hi) / 2.0, (lo, hi), trials_per_eval,
                             seed, separated)


def sharpness_window(params: ModelParams, eps: float, trials_per_eval: int,
                     seed: int, threads: int = 1, max_boost: int = 256) -> float:
    """p_N(1-eps) / p_N(eps) on a shared seed schedule; >= 1 up to tolerance."""
    if not 0.0 < eps < 0.5:
        raise PerclabError(f"eps={eps} must lie in (0, 1/2)")
    upper = find_threshold(params, 1.0 - eps, trials_per_eval, seed, threads,
                           max_boost=max_boost)
    lower = find_threshold(params, eps, trials_per_eval, seed, threads,
                           max_boost=max_boost)
    return upper.p_hat / lower.p_hat


# -- influence and Margulis-Russo -------------------------------------------

def influence_exact(params: ModelParams, p: float) -> InfluenceEstimate:
    """Exact total influence by full disorder enumeration (n <= 4)."""
    if params.n > FULL_DISORDER_CAP:
        raise ExactRegimeError(
            f"influence_exact needs n <= {FULL_DISORDER_CAP}; use influence_mc"
        )
    return InfluenceEstimate(p, float(influence_exact_value(params, p)),
                             "exact_enumeration", 0.0)


def _count_excluders(params: ModelParams, sol_codes: np.ndarray, rng) -> int:
    """Number of centers x whose half-cube misses the whole solution set.

    Applies solution points as exclusion constraints in a shuffled order
    until the candidate pool is small, then finishes each candidate against
    the remaining points vectorized.
    """
    n, mindot = params.n, params.min_dot
    total = 1 << n
    order = rng.permutation(sol_codes.size)
    constraints = sol_codes[order]
    candidates = np.arange(total, dtype=np.uint32)
    used = 0
    while candidates.size > 1024 and used < constraints.size:
        y = int(constraints[used])
        candidates = candidates[dot_codes(candidates, y, n) < mindot]
        used += 1
    if candidates.size == 0 or used == constraints.size:
        return int(candidates.size)
    rest = constraints[used:]
    count = 0
    for x in candidates:
        if int(np.max(n - 2 * _pc(rest ^ x))) < mindot:
            count += 1
    return count


def _pc(arr: np.ndarray) -> np.ndarray:
    from .bitops import popcount_codes
    return popcount_codes(arr)


def influence_mc(params: ModelParams, p: float, trials: int, seed: int) -> InfluenceEstimate:
    """Unbiased influence estimate by exact pivotal counting per sampled disorder.

    An inactive center is pivotal iff the solution set is nonempty and its
    half-cube misses it entirely; an active center is pivotal iff the full
    solution set is empty but removing the center makes it nonempty.
    """
    if params.n > MC_ENUM_CAP:
        raise ExactRegimeError(f"influence_mc needs n <= {MC_ENUM_CAP}")
    counts = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        rng = substream(seed, t)
        d = sample_disorder(params, p, rng)
        codes = surviving_codes(params.n, params.min_dot, d.active) if d.active \
            else np.arange(1 << params.n, dtype=np.uint32)
        if codes.size:
            counts[t] = _count_excluders(params, codes, rng)
        else:
            piv = 0
            for x in d.active:
                rest = tuple(c for c in d.active if c != x)
                if not is_empty(params, rest):
                    piv += 1
            counts[t] = piv
    scale = 2 * p * (1 - p)
    i_hat = scale * float(np.mean(counts))
    stderr = scale * float(np.std(counts, ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return InfluenceEstimate(p, i_hat, "pivotal_mc", stderr)


def margulis_russo_check(params: ModelParams, p: float, dp: float) -> dict:
    """Central finite difference of the exact E_p[f] against I_f(p)/(2p(1-p)).

    Both sides are evaluated in exact rational arithmetic, so the gap is the
    pure O(dp^2) discretization error of the central difference.
    """
    if not (0.0 < p - dp and p + dp < 1.0):
        raise PerclabError("need 0 < p-dp and p+dp < 1")
    pf, dpf = Fraction(p), Fraction(dp)
    lhs = (emptiness_prob_exact(params, pf + dpf)
           - emptiness_prob_exact(params, pf - dpf)) / (2 * dpf)
    rhs = total_pivotal_prob_exact(params, p)
    return {"lhs": float(lhs), "rhs": float(rhs), "gap": abs(float(lhs - rhs))}


# -- gentle-mapping experiments ---------------------------------------------

def _as_codes(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return points.astype(np.uint32, copy=False)
    return np.array(sorted(v.bits for v in points), dtype=np.uint32)


def _filter_by_centers(codes: np.ndarray, centers, params: ModelParams) -> np.ndarray:
    m = params.min_dot
    for c in centers:
        if codes.size == 0:
            break
        codes = codes[dot_codes(codes, c, params.n) >= m]
    return codes


def q_of_A(points, gmap: GentleMap, params: ModelParams, trials: int, seed: int) -> float:
    """MC estimate of the probability that the gently-mapped half-cubes of k
    i.i.d. uniform vectors empty the given point set."""
    hits, _ = q_of_A_hits(points, gmap, params, trials, seed)
    return hits / trials


def q_of_A_hits(points, gmap: GentleMap, params: ModelParams, trials: int,
                seed: int) -> tuple[int, int]:
    codes = _as_codes(points)
    if codes.size and params.n != gmap.reference.n:
        raise PerclabError("point set dimension differs from the gentle map")
    n, k = gmap.reference.n, gmap.reference.k
    hits = 0
    for t in range(trials):
        rng = substream(seed, 0, t)
        y = SpinSequence.random(n, k, rng)
        fy = gentle_apply(gmap, y)
        left = _filter_by_centers(codes, (v.bits for v in fy.vectors), params)
        hits += left.size == 0
    return hits, trials


def _first_empty_index(codes: np.ndarray, constraints: np.ndarray,
                       params: ModelParams) -> int:
    """1-based count of uniform half-cubes needed to empty the set; -1 if never."""
    m = params.min_dot
    for i, c in enumerate(constraints):
        codes = codes[dot_codes(codes, int(c), params.n) >= m]
        if codes.size == 0:
            return i + 1
    return -1


def removal_rates(points, params: ModelParams, budgets, trials: int,
                  seed: int) -> dict[int, float]:
    """P(A emptied by the first b uniform half-cubes), per budget b.

    Budgets share each trial's constraint stream, so the rates are monotone
    nondecreasing in b sample path by sample path.
    """
    codes = _as_codes(points)
    budgets = sorted(set(int(b) for b in budgets))
    top = budgets[-1]
    hits = {b: 0 for b in budgets}
    for t in range(trials):
        rng = substream(seed, 1, t)
        constraints = rng.integers(0, 1 << params.n, size=top, dtype=np.uint32)
        first = _first_empty_index(codes, constraints, params)
        if first > 0:
            for b in budgets:
                if first <= b:
                    hits[b] += 1
    return {b: h / trials for b, h in hits.items()}


def removal_experiment(points, gmap: GentleMap, params: ModelParams,
                       rp: RemovalExperimentParams, seed: int) -> dict:
    """Estimate q(A) and the removal probability with budget k * n_star."""
    budget = rp.k * rp.n_star
    if budget > 1 << params.n:
        raise PerclabError("sampling budget exceeds the center population")
    q_hits, q_trials = q_of_A_hits(points, gmap, params, rp.trials, seed)
    q_hat = q_hits / q_trials
    rates = removal_rates(points, params, [budget], rp.trials, seed)
    removal_rate = rates[budget]
    return {
        "q_hat": q_hat,
        "q_stderr": math.sqrt(max(q_hat * (1 - q_hat), 1e-12) / q_trials),
        "removal_rate": removal_rate,
        "removal_stderr": math.sqrt(max(removal_rate * (1 - removal_rate), 1e-12) / rp.trials),
        "n_star": rp.n_star,
        "budget": budget,
        "trials": rp.trials,
    }


# -- boosting-set search ------------------------------------------------------

def _conditional_empty_hits(params: ModelParams, p: float, forced: tuple[int, ...],
                            trials: int, seed: int, step: int) -> int:
    hits = 0
    for t in range(trials):
        rng = substream(seed, 2, step, t)
        d = sample_disorder(params, p, rng)
        merged = tuple(sorted(set(d.active) | set(forced)))
        hits += is_empty(params, merged)
    return hits


def boosting_search(d: Disorder, delta: float, k_max: int, trials: int,
                    seed: int) -> BoostingCertificate | None:
    """Greedy forward selection of a boosting set from the disorder's own
    active centers, certified by a Wilson lower bound at the disorder's p.

    Candidates are evaluated with shared trial keys per step (common random
    numbers), so the greedy path is deterministic given the seed.  Returns
    None when k_max is exhausted without certification.
    """
    if d.p is None:
        raise PerclabError("disorder carries no sampling probability p")
    if not 0.0 < delta <= 1.0:
        raise PerclabError("delta must lie in (0, 1]")
    params, p = d.params, d.p
    chosen: tuple[int, ...] = ()
    for step in range(k_max + 1):
        hits = _conditional_empty_hits(params, p, chosen, trials, seed, step)
        if wilson_interval(hits, trials)[0] >= 1.0 - delta:
            return BoostingCertificate(
                tuple(SpinVector(params.n, c) for c in chosen),
                delta, wilson_interval(hits, trials)[0], trials,
            )
        if step == k_max:
            break
        best_code, best_hits = None, -1
        for x in d.active:
            if x in chosen:
                continue
            h = _conditional_empty_hits(params, p, chosen + (x,), trials, seed, step + 1)
            if h > best_hits:
                best_code, best_hits = x, h
        if best_code is None:
            break
        chosen = tuple(sorted(chosen + (best_code,)))
    return None


# -- half-cube difference scan -----------------------------------------------

def angle_scan(params: ModelParams, dists, samples: int, seed: int) -> list[dict]:
    """Empirical constant of the half-cube difference bound, per distance.

    For each m, samples pairs at Hamming distance m and reports the max of
    |H(x) \\ H(y)| / (sqrt(m ln n / n) * 2^n) over the samples.
    """
    if params.n > MC_ENUM_CAP:
        raise ExactRegimeError(f"angle_scan needs n <= {MC_ENUM_CAP}")
    n = params.n
    rows = []
    for m in dists:
        m = int(m)
        if m > n:
            raise PerclabError(f"distance m={m} exceeds n={n}")
        if m == 0:
            rows.append({"m": 0, "max_ratio": 0.0})
            continue
        denom = math.sqrt(m * math.log(n) / n) * (1 << n)
        worst = 0.0
        for s in range(samples):
            rng = substream(seed, m, s)
            x = SpinVector.random(n, rng)
            flip = 0
            for j in rng.choice(n, size=m, replace=False):
                flip |= 1 << int(j)
            y = SpinVector(n, x.bits ^ flip)
            diff = halfcube_diff_size(x, y, params)
            worst = max(worst, diff / denom)
        rows.append({"m": m, "max_ratio": worst})
    return rows
