"""Pattern-class encoding of spin sequences, admissibility, and gentle mappings.

A length-k sequence Y = (y_1,...,y_k) is recorded as its first vector plus a
partition of the coordinate set into 2^(k-1) agreement classes: coordinate j
belongs to the class of pattern a iff the j-th component of y_1 o y_i equals
a_{i-1} for i = 2..k.  Patterns are packed into (k-1)-bit integers, bit t set
meaning y_{t+2} agrees with y_1 at that coordinate.

The encoding is a bijection, is invariant (classes only) under sign switches,
and two sequences with equal class cardinalities are related by an explicit
(permutation, sign switch) pair.  Gentle mappings rebalance the class sizes of
an input sequence onto those of an admissible reference sequence, moving each
vector only a little in Hamming distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .bitops import mask_of
from .errors import (
    DimensionMismatchError,
    MalformedEncodingError,
    NoWitnessError,
    NotAdmissibleError,
)
from .hypercube import (
    Permutation,
    SignSwitch,
    SpinVector,
    apply_permutation,
    apply_sign_switch,
)

#: Hard cap on sequence length (pattern map of at most 2^19 classes).
MAX_K = 20


@dataclass(frozen=True)
class SpinSequence:
    """Ordered k-tuple of spin vectors sharing one dimension."""

    vectors: tuple[SpinVector, ...]

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("sequence must contain at least one vector")
        if len(self.vectors) > MAX_K:
            raise ValueError(f"k={len(self.vectors)} exceeds cap {MAX_K}")
        n = self.vectors[0].n
        for v in self.vectors:
            if v.n != n:
                raise DimensionMismatchError("mixed dimensions in sequence")
        object.__setattr__(self, "vectors", tuple(self.vectors))

    @property
    def k(self) -> int:
        return len(self.vectors)

    @property
    def n(self) -> int:
        return self.vectors[0].n

    @classmethod
    def random(cls, n: int, k: int, rng) -> "SpinSequence":
        return cls(tuple(SpinVector.random(n, rng) for _ in range(k)))


def switch_sequence(g: SignSwitch, seq: SpinSequence) -> SpinSequence:
    return SpinSequence(tuple(apply_sign_switch(g, v) for v in seq.vectors))


def permute_sequence(sigma: Permutation, seq: SpinSequence) -> SpinSequence:
    return SpinSequence(tuple(apply_permutation(sigma, v) for v in seq.vectors))


@dataclass(frozen=True)
class PatternPartition:
    """First vector plus the agreement-class partition (0-based indices)."""

    first: SpinVector
    width: int  # k - 1 pattern bits
    classes: dict[int, tuple[int, ...]]

    @property
    def n(self) -> int:
        return self.first.n


def _agreement_masks(seq: SpinSequence) -> list[int]:
    """Bitmask per i = 2..k: bit j set iff y_1 and y_i agree at coordinate j+1."""
    b1 = seq.vectors[0].bits
    full = mask_of(seq.n)
    return [(b1 ^ v.bits) ^ full for v in seq.vectors[1:]]


def _class_bitmask(masks: list[int], pattern: int, n: int) -> int:
    bm = mask_of(n)
    for t, m in enumerate(masks):
        bm &= m if (pattern >> t) & 1 else (m ^ mask_of(n))
    return bm


def _bit_indices(bm: int) -> tuple[int, ...]:
    out = []
    while bm:
        low = bm & -bm
        out.append(low.bit_length() - 1)
        bm ^= low
    return tuple(out)


def class_sizes(seq: SpinSequence) -> dict[int, int]:
    """Cardinality of every agreement class, without materializing indices."""
    masks = _agreement_masks(seq)
    return {
        a: _class_bitmask(masks, a, seq.n).bit_count()
        for a in range(1 << (seq.k - 1))
    }


def encode(seq: SpinSequence) -> PatternPartition:
    """(y_1, agreement-class partition) of the sequence."""
    masks = _agreement_masks(seq)
    classes = {
        a: _bit_indices(_class_bitmask(masks, a, seq.n))
        for a in range(1 << (seq.k - 1))
    }
    return PatternPartition(seq.vectors[0], seq.k - 1, classes)


def decode(pp: PatternPartition, k: int) -> SpinSequence:
    """Inverse of encode; validates that the classes partition the index set."""
    if k - 1 != pp.width:
        raise MalformedEncodingError(f"k={k} inconsistent with pattern width {pp.width}")
    n = pp.n
    if set(pp.classes) != set(range(1 << pp.width)):
        raise MalformedEncodingError("class map does not cover every pattern")
    union = 0
    total = 0
    bitmasks = {}
    for a, idx in pp.classes.items():
        bm = 0
        for j in idx:
            bm |= 1 << j
        bitmasks[a] = bm
        union |= bm
        total += len(idx)
    if union != mask_of(n) or total != n:
        raise MalformedEncodingError("classes do not partition the index set")
    b1 = pp.first.bits
    vectors = [pp.first]
    for t in range(pp.width):
        agree = 0
        for a, bm in bitmasks.items():
            if (a >> t) & 1:
                agree |= bm
        vectors.append(SpinVector(n, b1 ^ (agree ^ mask_of(n))))
    return SpinSequence(tuple(vectors))


def sign_switch_invariance_check(g: SignSwitch, seq: SpinSequence) -> bool:
    """Classes of g o seq equal those of seq (true for every g)."""
    return encode(switch_sequence(g, seq)).classes == encode(seq).classes


@dataclass(frozen=True)
class AutomorphismWitness:
    """(sigma, g) with g o (sigma o source) = target, verified at construction."""

    sigma: Permutation
    g: SignSwitch


def match_automorphism(source: SpinSequence, target: SpinSequence) -> AutomorphismWitness:
    """Explicit automorphism pair mapping source onto target.

    Requires equal class cardinalities; within each class the i-th smallest
    source index is paired with the i-th smallest target index, and the sign
    switch is g = y_1 o (sigma o x_1).
    """
    if source.n != target.n or source.k != target.k:
        raise DimensionMismatchError("source and target shapes differ")
    src_pp = encode(source)
    tgt_pp = encode(target)
    perm = [0] * source.n
    for a, src_idx in src_pp.classes.items():
        tgt_idx = tgt_pp.classes[a]
        if len(src_idx) != len(tgt_idx):
            raise NoWitnessError(
                f"class cardinality mismatch at pattern {a}: "
                f"{len(src_idx)} != {len(tgt_idx)}"
            )
        for s, t in zip(src_idx, tgt_idx):
            perm[s] = t
    sigma = Permutation(tuple(perm))
    moved_first = apply_permutation(sigma, source.vectors[0])
    g_bits = (target.vectors[0].bits ^ moved_first.bits) ^ mask_of(source.n)
    g = SignSwitch(SpinVector(source.n, g_bits))
    # postcondition check before returning
    image = switch_sequence(g, permute_sequence(sigma, source))
    if image != target:
        raise AssertionError("witness construction failed to reproduce target")
    return AutomorphismWitness(sigma, g)


@dataclass(frozen=True)
class AdmissibilityParams:
    """Deviation constant; slack is c2 * sqrt(n * ln n) (natural log)."""

    c2: float = 4.0

    def __post_init__(self):
        if self.c2 <= 0:
            raise ValueError("c2 must be positive")

    def slack(self, n: int) -> float:
        return self.c2 * math.sqrt(n * math.log(n))


def is_admissible(seq: SpinSequence, params: AdmissibilityParams) -> bool:
    """Every class size within slack of 2^-(k-1) * n."""
    expected = seq.n / (1 << (seq.k - 1))
    slack = params.slack(seq.n)
    return all(abs(size - expected) <= slack for size in class_sizes(seq).values())


@dataclass(frozen=True)
class GentleMap:
    """Rebalancing map anchored at an admissible reference sequence."""

    reference: SpinSequence
    params: AdmissibilityParams
    target_sizes: dict[int, int]


def build_gentle_map(reference: SpinSequence, params: AdmissibilityParams) -> GentleMap:
    if not is_admissible(reference, params):
        raise NotAdmissibleError("reference sequence is not admissible")
    return GentleMap(reference, params, class_sizes(reference))


def gentle_apply(gmap: GentleMap, z: SpinSequence) -> SpinSequence:
    """Rebalance z's class sizes onto the reference's; identity off the admissible set.

    The construction depends on z only through its encoding, so it commutes
    with every sign switch.  Each class either only donates or only receives
    indices, keeping every per-class symmetric difference within twice the
    admissibility slack.
    """
    ref = gmap.reference
    if z.n != ref.n or z.k != ref.k:
        raise DimensionMismatchError("input shape differs from the reference")
    if not is_admissible(z, gmap.params):
        return z
    pp = encode(z)
    sizes = {a: len(idx) for a, idx in pp.classes.items()}
    if sizes == gmap.target_sizes:
        return z
    # Greedy rebalance: iterate patterns ascending; surplus classes donate
    # their largest indices into a pool, deficit classes consume the pool in
    # ascending index order.
    pool = []
    new_classes = {}
    for a in sorted(pp.classes):
        idx = list(pp.classes[a])
        surplus = sizes[a] - gmap.target_sizes[a]
        if surplus > 0:
            new_classes[a] = idx[: len(idx) - surplus]
            pool.extend(idx[len(idx) - surplus:])
        else:
            new_classes[a] = idx
    pool.sort()
    pos = 0
    for a in sorted(new_classes):
        deficit = gmap.target_sizes[a] - len(new_classes[a])
        if deficit > 0:
            new_classes[a] = tuple(sorted(new_classes[a] + pool[pos:pos + deficit]))
            pos += deficit
        else:
            new_classes[a] = tuple(new_classes[a])
    return decode(PatternPartition(z.vectors[0], pp.width, new_classes), z.k)


def compose_to_reference(gmap: GentleMap, z: SpinSequence) -> AutomorphismWitness:
    """Witness (sigma, g) with g o (sigma o gentle_apply(z)) = reference."""
    if not is_admissible(z, gmap.params):
        raise NotAdmissibleError("input sequence is not admissible")
    return match_automorphism(gentle_apply(gmap, z), gmap.reference)


# -- serialization ----------------------------------------------------------

def partition_to_json(pp: PatternPartition) -> str:
    """JSON form with 1-based indices: {"first": ..., "classes": {...}}."""
    return json.dumps({
        "first": pp.first.to_str(),
        "classes": {str(a): [j + 1 for j in idx] for a, idx in sorted(pp.classes.items())},
    })


def partition_from_json(s: str, width: int | None = None) -> PatternPartition:
    obj = json.loads(s)
    first = SpinVector.from_str(obj["first"])
    classes = {int(a): tuple(j - 1 for j in idx) for a, idx in obj["classes"].items()}
    if width is None:
        width = max(classes, default=0).bit_length()
        while (1 << width) < len(classes):
            width += 1
    return PatternPartition(first, width, classes)
