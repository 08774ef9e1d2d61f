"""Exact property battery over the constructive machinery.

Each check is an exact assertion (no tolerances): automorphism images of
half-cubes, encode/decode bijection, class invariance under sign switches,
automorphism witnesses, gentle-mapping equivariance and closeness, and
solver backend agreement.  Any failure is a genuine bug.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hypercube import (
    ModelParams,
    Permutation,
    SignSwitch,
    SpinVector,
    apply_permutation,
    apply_sign_switch,
    halfcube_codes,
    hamming,
    permute_codes,
    sign_switch_codes,
)
from .sat import BACKENDS, sample_disorder, solution_codes
from .seeding import substream
from .symmetry import (
    AdmissibilityParams,
    SpinSequence,
    build_gentle_map,
    decode,
    encode,
    gentle_apply,
    is_admissible,
    match_automorphism,
    permute_sequence,
    sign_switch_invariance_check,
    switch_sequence,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    failures: int

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _check_halfcube_sign_switch(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    for c in range(cases):
        rng = substream(seed, 10, c)
        n = int(rng.integers(1, 13))
        params = ModelParams(n, float(rng.choice([0.0, 0.5, 1.0])))
        x = SpinVector.random(n, rng)
        g = SignSwitch(SpinVector.random(n, rng))
        lhs = set(halfcube_codes(apply_sign_switch(g, x), params).tolist())
        rhs = set(sign_switch_codes(halfcube_codes(x, params), g.g.bits, n).tolist())
        if mutate:
            rhs.add(max(rhs, default=0) + 1)
        fails += lhs != rhs
    return CheckResult("halfcube-sign-switch-equivariance", cases, fails)


def _check_halfcube_permutation(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    for c in range(cases):
        rng = substream(seed, 11, c)
        n = int(rng.integers(1, 13))
        params = ModelParams(n, float(rng.choice([0.0, 0.5, 1.0])))
        x = SpinVector.random(n, rng)
        sigma = Permutation.random(n, rng)
        lhs = set(halfcube_codes(apply_permutation(sigma, x), params).tolist())
        rhs = set(permute_codes(halfcube_codes(x, params), sigma).tolist())
        fails += lhs != rhs
    return CheckResult("halfcube-permutation-equivariance", cases, fails)


def _check_encode_bijection(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    for c in range(cases):
        rng = substream(seed, 12, c)
        n = int(rng.integers(1, 65))
        k = int(rng.integers(1, 6))
        seq = SpinSequence.random(n, k, rng)
        pp = encode(seq)
        back = decode(pp, k)
        fails += back != seq or encode(back) != pp
    return CheckResult("encode-decode-bijection", cases, fails)


def _check_class_invariance(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    for c in range(cases):
        rng = substream(seed, 13, c)
        n = int(rng.integers(1, 65))
        k = int(rng.integers(1, 6))
        seq = SpinSequence.random(n, k, rng)
        g = SignSwitch(SpinVector.random(n, rng))
        fails += not sign_switch_invariance_check(g, seq)
    return CheckResult("class-invariance-under-sign-switch", cases, fails)


def _check_witness(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    for c in range(cases):
        rng = substream(seed, 14, c)
        n = int(rng.integers(1, 65))
        k = int(rng.integers(1, 6))
        source = SpinSequence.random(n, k, rng)
        target = switch_sequence(
            SignSwitch(SpinVector.random(n, rng)),
            permute_sequence(Permutation.random(n, rng), source),
        )
        w = match_automorphism(source, target)
        image = switch_sequence(w.g, permute_sequence(w.sigma, source))
        fails += image != target
    return CheckResult("automorphism-witness-soundness", cases, fails)


def _check_gentle(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    ap = AdmissibilityParams(4.0)
    for c in range(cases):
        rng = substream(seed, 15, c)
        n = int(rng.integers(16, 65))
        k = int(rng.integers(1, 4))
        ref = SpinSequence.random(n, k, rng)
        z = SpinSequence.random(n, k, rng)
        if not (is_admissible(ref, ap) and is_admissible(z, ap)):
            continue  # overwhelmingly rare at these sizes
        gmap = build_gentle_map(ref, ap)
        fz = gentle_apply(gmap, z)
        bound = (1 << k) * ap.slack(n)
        ok = all(hamming(a, b) <= bound for a, b in zip(z.vectors, fz.vectors))
        g = SignSwitch(SpinVector.random(n, rng))
        ok = ok and gentle_apply(gmap, switch_sequence(g, z)) == switch_sequence(g, fz)
        w = match_automorphism(fz, ref)
        image = switch_sequence(w.g, permute_sequence(w.sigma, fz))
        ok = ok and image == ref
        fails += not ok
    return CheckResult("gentle-mapping-properties", cases, fails)


def _check_backends(seed: int, cases: int, mutate: bool) -> CheckResult:
    fails = 0
    for c in range(cases):
        rng = substream(seed, 16, c)
        n = int(rng.integers(4, 13))
        params = ModelParams(n, float(rng.choice([0.0, 0.5, 1.0])))
        d = sample_disorder(params, min(1.0, 4.0 * n * 2.0 ** -n), rng)
        sols = [solution_codes(d, b) for b in BACKENDS]
        fails += not all(np.array_equal(sols[0], s) for s in sols[1:])
    return CheckResult("solver-backend-agreement", cases, fails)


_CHECKS = (
    _check_halfcube_sign_switch,
    _check_halfcube_permutation,
    _check_encode_bijection,
    _check_class_invariance,
    _check_witness,
    _check_gentle,
    _check_backends,
)


def run_lemma_suite(seed: int, cases: int, mutate: bool = False) -> list[CheckResult]:
    """Run the full exact battery; `mutate` injects one deliberate fault so the
    suite's sensitivity can be demonstrated."""
    return [chk(seed, cases, mutate) for chk in _CHECKS]
