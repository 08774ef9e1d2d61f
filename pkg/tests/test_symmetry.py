"""Pattern-class encoding, automorphism witnesses, admissibility, and the
gentle rebalancing map."""

import json
import math

import pytest
from hypothesis import given, strategies as st

from perclab.errors import (
    MalformedEncodingError,
    NoWitnessError,
    NotAdmissibleError,
)
from perclab.hypercube import Permutation, SignSwitch, SpinVector, hamming
from perclab.seeding import substream
from perclab.symmetry import (
    AdmissibilityParams,
    PatternPartition,
    SpinSequence,
    build_gentle_map,
    class_sizes,
    compose_to_reference,
    decode,
    encode,
    gentle_apply,
    is_admissible,
    match_automorphism,
    partition_from_json,
    partition_to_json,
    permute_sequence,
    sign_switch_invariance_check,
    switch_sequence,
)


def seq(*rows):
    return SpinSequence(tuple(SpinVector.from_components(r) for r in rows))


@st.composite
def random_sequences(draw, max_n=64, max_k=5):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_k))
    mask = (1 << n) - 1
    return SpinSequence(tuple(
        SpinVector(n, draw(st.integers(0, mask))) for _ in range(k)
    ))


# -- encoding ----------------------------------------------------------------

def test_encode_k2_example():
    pp = encode(seq((1, 1, 1), (1, -1, 1)))
    assert pp.first == SpinVector.from_components((1, 1, 1))
    # pattern bit set = agreement with the first vector (0-based indices)
    assert pp.classes[1] == (0, 2)
    assert pp.classes[0] == (1,)


def test_encode_k1_single_class():
    pp = encode(seq((1, -1, 1, 1)))
    assert pp.width == 0
    assert pp.classes == {0: (0, 1, 2, 3)}


def test_encode_identical_pair():
    pp = encode(seq((1, -1), (1, -1)))
    assert pp.classes[1] == (0, 1)
    assert pp.classes[0] == ()


def test_decode_k2_example():
    pp = encode(seq((1, 1, 1), (1, -1, 1)))
    assert decode(pp, 2) == seq((1, 1, 1), (1, -1, 1))


def test_decode_constant_sequence():
    first = SpinVector.from_components((1, -1, 1))
    pp = PatternPartition(first, 2, {3: (0, 1, 2), 0: (), 1: (), 2: ()})
    assert decode(pp, 3) == SpinSequence((first, first, first))


@given(random_sequences())
def test_encode_decode_bijection(s):
    pp = encode(s)
    assert decode(pp, s.k) == s
    assert encode(decode(pp, s.k)) == pp


@given(random_sequences(max_n=48))
def test_partition_completeness(s):
    pp = encode(s)
    seen = sorted(j for idx in pp.classes.values() for j in idx)
    assert seen == list(range(s.n))
    assert sum(class_sizes(s).values()) == s.n


def test_decode_rejects_non_partition():
    first = SpinVector.from_components((1, 1, 1))
    with pytest.raises(MalformedEncodingError):
        decode(PatternPartition(first, 1, {0: (0,), 1: (0, 1, 2)}), 2)
    with pytest.raises(MalformedEncodingError):
        decode(PatternPartition(first, 1, {0: (0, 1)}), 2)
    with pytest.raises(MalformedEncodingError):
        decode(PatternPartition(first, 1, {0: (0, 1), 1: (2,)}), 3)


@given(random_sequences(), st.integers(0, 2 ** 31 - 1))
def test_sign_switch_invariance(s, gseed):
    g = SignSwitch(SpinVector.random(s.n, substream(gseed)))
    assert sign_switch_invariance_check(g, s)


def test_self_switch_normalizes_first_vector():
    s = seq((1, -1, 1), (-1, -1, 1))
    g = SignSwitch(s.vectors[0])
    switched = switch_sequence(g, s)
    assert encode(switched).classes == encode(s).classes
    assert switched.vectors[0] == SpinVector.from_components((1, 1, 1))


# -- automorphism witnesses --------------------------------------------------

def test_witness_identity_case():
    s = seq((1, -1, 1), (-1, -1, 1))
    w = match_automorphism(s, s)
    assert switch_sequence(w.g, permute_sequence(w.sigma, s)) == s


def test_witness_worked_example():
    x = seq((1, 1, 1), (1, -1, 1))
    y = seq((-1, -1, -1), (-1, -1, 1))
    w = match_automorphism(x, y)
    assert switch_sequence(w.g, permute_sequence(w.sigma, x)) == y


def test_witness_cardinality_mismatch():
    x = seq((1, 1, 1), (1, -1, 1))   # disagreement class size 1
    y = seq((1, 1, 1), (-1, -1, 1))  # disagreement class size 2
    with pytest.raises(NoWitnessError):
        match_automorphism(x, y)


@given(st.integers(0, 2 ** 31 - 1))
def test_witness_on_random_automorphic_pairs(seed):
    rng = substream(seed)
    n = int(rng.integers(1, 49))
    k = int(rng.integers(1, 5))
    source = SpinSequence.random(n, k, rng)
    target = switch_sequence(
        SignSwitch(SpinVector.random(n, rng)),
        permute_sequence(Permutation.random(n, rng), source),
    )
    w = match_automorphism(source, target)
    assert switch_sequence(w.g, permute_sequence(w.sigma, source)) == target


# -- admissibility -----------------------------------------------------------

def test_admissibility_k1_always():
    assert is_admissible(seq((1, -1, 1)), AdmissibilityParams(0.01))


def test_admissibility_balanced_and_skewed():
    n = 100
    rng = substream(5)
    first = SpinVector.random(n, rng)
    balanced = SpinVector(n, first.bits ^ ((1 << 50) - 1))
    s_balanced = SpinSequence((first, balanced))
    assert class_sizes(s_balanced) == {0: 50, 1: 50}
    assert is_admissible(s_balanced, AdmissibilityParams(4.0))
    skewed = SpinVector(n, first.bits ^ ((1 << 10) - 1))
    s_skewed = SpinSequence((first, skewed))
    assert class_sizes(s_skewed) == {0: 10, 1: 90}
    assert not is_admissible(s_skewed, AdmissibilityParams(0.1))
    # deviation 40 <= 4 * sqrt(100 ln 100) ~ 85.8
    assert is_admissible(s_skewed, AdmissibilityParams(4.0))


# -- gentle mapping ----------------------------------------------------------

def _random_admissible(n, k, ap, seed):
    for attempt in range(200):
        s = SpinSequence.random(n, k, substream(seed, attempt))
        if is_admissible(s, ap):
            return s
    raise AssertionError("no admissible sequence found")


def test_build_gentle_map_requires_admissible():
    ap = AdmissibilityParams(0.05)
    skewed = seq((1,) * 64, (1,) * 64)
    with pytest.raises(NotAdmissibleError):
        build_gentle_map(skewed, ap)


def test_gentle_identity_off_admissible_set():
    ap = AdmissibilityParams(0.5)
    ref = _random_admissible(64, 2, ap, 13)
    gmap = build_gentle_map(ref, ap)
    # identical pair: one class holds everything, far outside the slack
    skew = SpinSequence((SpinVector(64, 0), SpinVector(64, 0)))
    assert not is_admissible(skew, ap)
    assert gentle_apply(gmap, skew) == skew


def test_gentle_identity_when_sizes_match():
    ap = AdmissibilityParams(4.0)
    ref = _random_admissible(32, 3, ap, 21)
    gmap = build_gentle_map(ref, ap)
    g = SignSwitch(SpinVector.random(32, substream(22)))
    z = switch_sequence(g, ref)  # same classes, hence same sizes
    assert gentle_apply(gmap, z) == z


def test_gentle_rebalance_properties():
    ap = AdmissibilityParams(4.0)
    checked = 0
    for case in range(40):
        rng = substream(31, case)
        n = int(rng.integers(24, 129))
        k = int(rng.integers(2, 4))
        ref = SpinSequence.random(n, k, rng)
        z = SpinSequence.random(n, k, rng)
        if not (is_admissible(ref, ap) and is_admissible(z, ap)):
            continue
        gmap = build_gentle_map(ref, ap)
        fz = gentle_apply(gmap, z)
        assert fz.vectors[0] == z.vectors[0]
        assert class_sizes(fz) == class_sizes(ref)
        # per-class symmetric difference within twice the slack
        zc = encode(z).classes
        fc = encode(fz).classes
        for a in zc:
            sym = set(zc[a]) ^ set(fc[a])
            assert len(sym) <= 2 * ap.slack(n) + 1e-9
        bound = (1 << k) * ap.slack(n)
        for zi, fi in zip(z.vectors, fz.vectors):
            assert hamming(zi, fi) <= bound
        # sign-switch equivariance
        g = SignSwitch(SpinVector.random(n, rng))
        assert gentle_apply(gmap, switch_sequence(g, z)) == switch_sequence(g, fz)
        # composition witness back to the reference
        w = compose_to_reference(gmap, z)
        assert switch_sequence(w.g, permute_sequence(w.sigma, fz)) == ref
        checked += 1
    assert checked >= 10


def test_compose_rejects_inadmissible():
    ap = AdmissibilityParams(0.5)
    ref = _random_admissible(64, 2, ap, 41)
    gmap = build_gentle_map(ref, ap)
    skew = SpinSequence((SpinVector(64, 0), SpinVector(64, 0)))
    with pytest.raises(NotAdmissibleError):
        compose_to_reference(gmap, skew)


# -- serialization -----------------------------------------------------------

def test_partition_json_roundtrip_and_one_based():
    s = seq((1, 1, 1), (1, -1, 1))
    pp = encode(s)
    blob = partition_to_json(pp)
    obj = json.loads(blob)
    assert obj["first"] == "3:0x7"
    assert obj["classes"]["1"] == [1, 3]  # 1-based in the wire format
    assert obj["classes"]["0"] == [2]
    back = partition_from_json(blob)
    assert back == pp
    assert decode(back, 2) == s


@given(random_sequences(max_n=32, max_k=4))
def test_partition_json_random_roundtrip(s):
    pp = encode(s)
    assert partition_from_json(partition_to_json(pp), pp.width) == pp


def test_slack_uses_natural_log():
    ap = AdmissibilityParams(2.0)
    assert ap.slack(100) == pytest.approx(2.0 * math.sqrt(100 * math.log(100)))
