"""Monte Carlo estimators against exact oracles, plus their structural
invariants (monotonicity, nesting, determinism)."""

import math

import pytest

from perclab.errors import ExactRegimeError, PerclabError
from perclab.estimators import (
    RemovalExperimentParams,
    angle_scan,
    boosting_search,
    estimate_curve,
    find_threshold,
    influence_exact,
    influence_mc,
    margulis_russo_check,
    q_of_A,
    removal_experiment,
    removal_rates,
    sharpness_window,
    wilson_interval,
)
from perclab.exactsmall import emptiness_prob_exact
from perclab.hypercube import ModelParams, SpinVector
from perclab.sat import sample_disorder, solution_set
from perclab.seeding import substream
from perclab.symmetry import (
    AdmissibilityParams,
    SpinSequence,
    build_gentle_map,
    is_admissible,
)


# -- Wilson intervals --------------------------------------------------------

def test_wilson_basics():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    lo0, hi0 = wilson_interval(0, 100)
    assert lo0 == 0.0 and hi0 > 0.0
    lo1, hi1 = wilson_interval(100, 100)
    assert hi1 == 1.0 and lo1 < 1.0
    with pytest.raises(PerclabError):
        wilson_interval(0, 0)


def test_wilson_shrinks_with_trials():
    w1 = wilson_interval(30, 100)
    w2 = wilson_interval(300, 1000)
    assert (w2[1] - w2[0]) < (w1[1] - w1[0])


# -- curves ------------------------------------------------------------------

def test_curve_at_p_zero_and_infeasible_margin():
    pts = estimate_curve(ModelParams(6, 0.0), [0.0], 50, 1)
    assert pts[0].theta_hat == 0.0
    # kappa*sqrt(n) > n: every half-cube empty, so any active center empties A
    pts = estimate_curve(ModelParams(1, 2.0), [1.0], 50, 1)
    assert pts[0].theta_hat == 1.0


def test_curve_monotone_in_p():
    ps = [0.001, 0.002, 0.004, 0.008, 0.016]
    pts = estimate_curve(ModelParams(10, 0.0), ps, 300, 5)
    thetas = [pt.theta_hat for pt in pts]
    assert thetas == sorted(thetas)
    for pt in pts:
        assert pt.ci_lo <= pt.theta_hat <= pt.ci_hi
        assert pt.empty_hits == round(pt.theta_hat * pt.trials)


def test_curve_thread_count_invariance():
    ps = [0.002, 0.006]
    a = estimate_curve(ModelParams(10, 0.0), ps, 200, 9, threads=1)
    b = estimate_curve(ModelParams(10, 0.0), ps, 200, 9, threads=4)
    assert a == b


def test_curve_matches_exact_polynomial_tiny_n():
    params = ModelParams(2, 0.0)
    for p in (0.2, 0.5):
        pt = estimate_curve(params, [p], 4000, 13)[0]
        exact = float(emptiness_prob_exact(params, p))
        sigma = max((pt.ci_hi - pt.ci_lo) / 2, 1e-9)
        assert abs(pt.theta_hat - exact) <= 3 * sigma


# -- thresholds --------------------------------------------------------------

def test_find_threshold_n1_quarter():
    est = find_threshold(ModelParams(1, 0.0), 0.25, 3000, 3, max_boost=4)
    assert abs(est.p_hat - 0.5) < 0.05  # exact curve is p^2
    assert est.bracket[0] <= est.p_hat <= est.bracket[1]


def test_threshold_quantile_nesting():
    params = ModelParams(8, 0.0)
    hats = [find_threshold(params, th, 400, 7, max_boost=4).p_hat
            for th in (0.3, 0.5, 0.7)]
    assert hats[0] <= hats[1] <= hats[2]


def test_threshold_rejects_degenerate_theta():
    with pytest.raises(PerclabError):
        find_threshold(ModelParams(4, 0.0), 0.0, 100, 1)
    with pytest.raises(PerclabError):
        find_threshold(ModelParams(4, 0.0), 1.0, 100, 1)


def test_threshold_infeasible_margin():
    # kappa > sqrt(n): every half-cube is empty, so emptiness holds as soon
    # as any center is active and theta(p) = 1 - (1-p)^4; theta = 0.5 at
    # p = 1 - 0.5^(1/4) ~ 0.159.
    est = find_threshold(ModelParams(2, 3.0), 0.5, 2000, 3, max_boost=4)
    assert abs(est.p_hat - (1 - 0.5 ** 0.25)) < 0.02


def test_sharpness_window_basic():
    params = ModelParams(8, 0.0)
    ratio = sharpness_window(params, 0.25, 300, 11, max_boost=4)
    assert ratio >= 1.0 - 0.02
    with pytest.raises(PerclabError):
        sharpness_window(params, 0.6, 100, 1)


# -- influence and the derivative identity -----------------------------------

def test_influence_exact_closed_form_n1():
    params = ModelParams(1, 0.0)
    for p in (0.1, 0.3, 0.5, 0.9):
        est = influence_exact(params, p)
        assert est.i_hat == pytest.approx(4 * p * p * (1 - p), abs=1e-12)
    assert influence_exact(params, 0.0).i_hat == 0.0


def test_influence_exact_cap():
    with pytest.raises(ExactRegimeError):
        influence_exact(ModelParams(5, 0.0), 0.5)


def test_influence_mc_matches_exact():
    for n, p in ((1, 0.5), (2, 0.3), (3, 0.1)):
        params = ModelParams(n, 0.0)
        exact = influence_exact(params, p).i_hat
        mc = influence_mc(params, p, 3000, 19)
        tol = 3 * max(mc.stderr, 1e-6)
        assert abs(mc.i_hat - exact) <= tol, (n, p, mc.i_hat, exact)


def test_influence_mc_p_zero():
    est = influence_mc(ModelParams(3, 0.0), 0.0, 50, 1)
    assert est.i_hat == 0.0


def test_margulis_russo_gap_small_and_exact_rhs():
    params = ModelParams(1, 0.0)
    rec = margulis_russo_check(params, 0.5, 1e-3)
    assert rec["rhs"] == pytest.approx(1.0, abs=1e-12)  # d/dp p^2 at 0.5
    assert rec["gap"] <= 1e-5
    with pytest.raises(PerclabError):
        margulis_russo_check(params, 0.5, 0.6)


# -- gentle-removal experiments ----------------------------------------------

def _admissible_map(n, k, seed, c2=4.0):
    ap = AdmissibilityParams(c2)
    for attempt in range(200):
        ref = SpinSequence.random(n, k, substream(seed, attempt))
        if is_admissible(ref, ap):
            return build_gentle_map(ref, ap)
    raise AssertionError("no admissible reference")


def test_q_of_A_empty_set_is_one():
    gmap = _admissible_map(10, 2, 51)
    assert q_of_A([], gmap, ModelParams(10, 0.0), 40, 1) == 1.0


def test_q_of_A_infeasible_margin_is_one():
    params = ModelParams(8, 4.0)  # kappa*sqrt(n) > n: every H empty
    gmap = _admissible_map(8, 2, 52)
    pts = [SpinVector(8, c) for c in range(16)]
    assert q_of_A(pts, gmap, params, 40, 2) == 1.0


def test_removal_rates_monotone_in_budget():
    params = ModelParams(10, 0.0)
    d = sample_disorder(params, 8 * 2.0 ** -10, substream(53))
    pts = solution_set(d)
    rates = removal_rates(pts, params, [2, 4, 8, 16], 300, 7)
    vals = [rates[b] for b in (2, 4, 8, 16)]
    assert vals == sorted(vals)


def test_removal_experiment_record():
    params = ModelParams(10, 0.0)
    d = sample_disorder(params, 8 * 2.0 ** -10, substream(54))
    pts = solution_set(d)
    gmap = _admissible_map(10, 2, 55)
    rp = RemovalExperimentParams.for_model(params, 2, 300)
    rec = removal_experiment(pts, gmap, params, rp, 11)
    assert 0.0 <= rec["q_hat"] <= 1.0
    assert 0.0 <= rec["removal_rate"] <= 1.0
    assert rec["budget"] == rp.k * rp.n_star
    assert rec["n_star"] == int(10 / math.sqrt(math.log(10)))


# -- boosting search ---------------------------------------------------------

def test_boosting_delta_one_trivial():
    params = ModelParams(8, 0.0)
    d = sample_disorder(params, 0.01, substream(61))
    cert = boosting_search(d, 1.0, 4, 50, 3)
    assert cert is not None and cert.set == ()


def test_boosting_requires_provenance():
    d = sample_disorder(ModelParams(8, 0.0), 0.01, substream(62))
    bare = type(d)(d.params, d.active, None)
    with pytest.raises(PerclabError):
        boosting_search(bare, 0.5, 4, 50, 3)


def test_boosting_finds_certificate_at_high_p():
    params = ModelParams(8, 0.0)
    # p well above threshold: emptiness is already near-certain
    d = sample_disorder(params, 0.2, substream(63))
    cert = boosting_search(d, 0.2, 6, 400, 5)
    assert cert is not None
    assert cert.confidence >= 0.8
    assert len(cert.set) <= 6


# -- half-cube difference scan -----------------------------------------------

def test_angle_scan_zero_distance():
    rows = angle_scan(ModelParams(8, 0.0), [0], 10, 1)
    assert rows[0] == {"m": 0, "max_ratio": 0.0}


def test_angle_scan_n2_worked_example():
    rows = angle_scan(ModelParams(2, 0.0), [2], 50, 1)
    expected = 1 / (math.sqrt(2 * math.log(2) / 2) * 4)
    assert rows[0]["max_ratio"] == pytest.approx(expected)


def test_angle_scan_rejects_m_above_n():
    with pytest.raises(PerclabError):
        angle_scan(ModelParams(4, 0.0), [5], 10, 1)
