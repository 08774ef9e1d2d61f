"""perclab: a laboratory for the Bernoulli-disorder Ising perceptron.

Bit-packed hypercube geometry, exact constructive symmetry machinery,
an exact small-dimension emptiness solver with three cross-checking
backends, and seeded Monte Carlo estimators for thresholds, influence,
and the related geometric experiments.
"""

__version__ = "0.1.0"

from .errors import (
    DimensionMismatchError,
    ExactRegimeError,
    MalformedEncodingError,
    NoWitnessError,
    NotAdmissibleError,
    PerclabError,
)
from .hypercube import (
    EXACT_ENUM_CAP,
    ModelParams,
    Permutation,
    SignSwitch,
    SpinVector,
    apply_permutation,
    apply_sign_switch,
    dot,
    halfcube_diff_size,
    hamming,
    in_halfcube,
)
from .sat import (
    BACKENDS,
    CouplingSample,
    Disorder,
    SolveResult,
    sample_coupled,
    sample_disorder,
    solution_set,
    solve,
)
from .symmetry import (
    AdmissibilityParams,
    AutomorphismWitness,
    GentleMap,
    PatternPartition,
    SpinSequence,
    build_gentle_map,
    compose_to_reference,
    decode,
    encode,
    gentle_apply,
    is_admissible,
    match_automorphism,
)
from .estimators import (
    BoostingCertificate,
    CurvePoint,
    InfluenceEstimate,
    RemovalExperimentParams,
    ThresholdEstimate,
    angle_scan,
    boosting_search,
    estimate_curve,
    find_threshold,
    influence_exact,
    influence_mc,
    margulis_russo_check,
    q_of_A,
    removal_experiment,
    sharpness_window,
)
