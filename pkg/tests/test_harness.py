"""Verification harness: verdict logic, hypothesis guards, reports.

Branch triggers used below were chosen so every verdict is reachable
honestly: tolerance choices only, never doctored metrics.
"""

import math

import numpy as np
import pytest

from pencil_spectra.harness import (
    DEFAULT_MATCH_TOL,
    DEFAULT_TOL,
    THEOREM_IDS,
    VERDICTS,
    HypothesisError,
    VerificationReport,
    check_ground_state_directions,
    check_integral_balance,
    check_mean_potential_identity,
    check_zero_spectrum_rigidity,
    integral_balance,
    random_p_diag,
    random_q_entries,
)
from pencil_spectra.model import (
    PI,
    ScalarFunctionSpec,
    UniformGrid,
    make_problem,
    zero_problem,
)

QUARTER_PI = 0.7853981633974483


@pytest.fixture(scope="module")
def grid_harness():
    return UniformGrid.from_steps(1000)


# --- equal-spectra mean identity (T31) ---

def test_t31_consistent_on_real_shift(zero_d1, grid_harness):
    # genuinely different potentials: mean gap large, spectra differ
    qt = (ScalarFunctionSpec.constant(0.1),)
    r = check_mean_potential_identity(zero_d1, qt, grid_harness, (-2.5, 2.5))
    assert r.theorem_id == "T31"
    assert r.verdict == "consistent"
    assert r.metrics["delta"] == pytest.approx(0.1 * PI, rel=1e-12)
    assert r.metrics["deviation"] >= 0.31


def test_t31_identical_potentials_inconclusive(const_q01, grid_harness):
    qt = (ScalarFunctionSpec.constant(0.1),)
    r = check_mean_potential_identity(const_q01, qt, grid_harness, (-2.5, 2.5))
    assert r.verdict == "inconclusive"
    assert r.metrics["delta"] == 0.0
    assert r.metrics["deviation"] <= 1e-7


def test_t31_zero_mean_difference_inconclusive(zero_d1, grid_harness):
    # cosine mode integrates to zero: identity holds whatever the spectra do
    qt = (ScalarFunctionSpec.cosine_series((0.0, 0.4)),)
    r = check_mean_potential_identity(zero_d1, qt, grid_harness, (-2.5, 2.5))
    assert r.verdict == "inconclusive"
    assert r.metrics["delta"] <= 1e-12


def test_t31_violated_at_tight_tolerance(const_q01, grid_harness):
    # tiny constant shift: spectra match at match_tol, delta = pi * 1e-9
    qt = (ScalarFunctionSpec.constant(0.1 + 1e-9),)
    r = check_mean_potential_identity(const_q01, qt, grid_harness, (-2.5, 2.5),
                                      tol=1e-9)
    assert r.verdict == "violated"
    assert r.metrics["delta"] == pytest.approx(PI * 1e-9, rel=1e-9)
    assert r.metrics["deviation"] <= DEFAULT_MATCH_TOL


def test_t31_two_x_gate(const_q01, grid_harness):
    # same instance, tol = 2e-9: delta sits between tol and 2 tol
    qt = (ScalarFunctionSpec.constant(0.1 + 1e-9),)
    r = check_mean_potential_identity(const_q01, qt, grid_harness, (-2.5, 2.5),
                                      tol=2e-9)
    assert r.verdict == "inconclusive"
    r = check_mean_potential_identity(const_q01, qt, grid_harness, (-2.5, 2.5),
                                      tol=1e-8)
    assert r.verdict == "inconclusive"


def test_t31_requires_zero_alpha_pi(const_p05, grid_harness):
    qt = (ScalarFunctionSpec.constant(0.1),)
    with pytest.raises(HypothesisError):
        check_mean_potential_identity(const_p05, qt, grid_harness, (-2.5, 2.5))


def test_t31_rejects_wrong_tilde_count(zero_d2, grid_harness):
    qt = (ScalarFunctionSpec.constant(0.1),)
    with pytest.raises(ValueError):
        check_mean_potential_identity(zero_d2, qt, grid_harness, (-2.5, 2.5))


@pytest.mark.parametrize("q0,qt0", [(0.0, 0.3), (0.1, -0.2), (-0.15, 0.25)])
def test_t31_never_violated_for_separated_constants(q0, qt0, grid_harness):
    # distinct constant potentials always produce distinct spectra
    prob = make_problem(1, [ScalarFunctionSpec.zero()],
                        [ScalarFunctionSpec.constant(q0)])
    qt = (ScalarFunctionSpec.constant(qt0),)
    r = check_mean_potential_identity(prob, qt, grid_harness, (-2.6, 2.6))
    assert r.verdict in ("consistent", "inconclusive")
    assert r.verdict == "consistent"


# --- zero-potential rigidity (T32) ---

@pytest.mark.parametrize("d", [1, 2, 3])
def test_t32_consistent_zero_problem(d, grid_harness):
    r = check_zero_spectrum_rigidity(zero_problem(d), grid_harness, 2)
    assert r.theorem_id == "T32"
    assert r.verdict == "consistent"
    assert r.metrics["potential_size"] == 0.0
    assert r.metrics["deviation"] <= 1e-7
    assert r.metrics["unmatched"] == 0.0


def test_t32_consistent_zero_problem_deep(grid_harness):
    r = check_zero_spectrum_rigidity(zero_problem(1), grid_harness, 5)
    assert r.verdict == "consistent"
    assert r.metrics["n_max"] == 5.0


def test_t32_consistent_nonzero_potential(const_q01, grid_harness):
    # S large and the spectrum moved: exactly what the theorem predicts
    r = check_zero_spectrum_rigidity(const_q01, grid_harness, 2)
    assert r.verdict == "consistent"
    assert r.metrics["potential_size"] == pytest.approx(0.1)
    assert r.metrics["deviation"] >= 0.31 or r.metrics["unmatched"] >= 1.0


def test_t32_violated_at_tuned_match_tol(grid_harness):
    # p = 0.01 cos x barely moves the spectrum (measured 8.3e-5) while
    # S = 0.01 > 100 * match_tol: the rigidity claim fails at that scale
    prob = make_problem(1, [ScalarFunctionSpec.cosine_series((0.0, 0.01))],
                        [ScalarFunctionSpec.zero()])
    r = check_zero_spectrum_rigidity(prob, grid_harness, 2, match_tol=9e-5)
    assert r.verdict == "violated"
    r = check_zero_spectrum_rigidity(prob, grid_harness, 2, match_tol=1e-4)
    assert r.verdict == "inconclusive"


def test_t32_requires_neumann(grid_harness):
    prob = zero_problem(1, boundary="dirichlet")
    with pytest.raises(HypothesisError):
        check_zero_spectrum_rigidity(prob, grid_harness, 2)


def test_t32_deviation_grid_stable(const_q01):
    a = check_zero_spectrum_rigidity(const_q01, UniformGrid.from_steps(1000), 2)
    b = check_zero_spectrum_rigidity(const_q01, UniformGrid.from_steps(2000), 2)
    assert abs(a.metrics["deviation"] - b.metrics["deviation"]) <= 1e-6


# --- ground-state directions ---

def test_ground_state_zero_problem(zero_d2, grid_harness):
    r = check_ground_state_directions(zero_d2, grid_harness)
    assert r.theorem_id == "ground_state"
    assert r.verdict == "consistent"
    assert r.metrics["residual_max"] == 0.0
    assert r.metrics["lambda0_sigma_min"] <= 1e-9


def test_ground_state_uniform_potential(const_q01, grid_harness):
    r = check_ground_state_directions(const_q01, grid_harness)
    assert r.verdict == "consistent"
    assert r.metrics["residual_max"] == pytest.approx(0.1)
    assert r.metrics["residual_channel_1"] == pytest.approx(0.1)


def test_ground_state_mixed_channels(grid_harness):
    prob = make_problem(2, [ScalarFunctionSpec.zero()] * 2,
                        [ScalarFunctionSpec.zero(), ScalarFunctionSpec.zero(),
                         ScalarFunctionSpec.constant(0.2)])
    r = check_ground_state_directions(prob, grid_harness)
    assert r.verdict == "consistent"
    assert r.metrics["residual_channel_1"] == 0.0
    assert r.metrics["residual_channel_2"] == pytest.approx(0.2)


def test_ground_state_verdict_ignores_p(grid_harness):
    # same Q, different P: the structural check must not move
    base = zero_problem(2)
    shifted = make_problem(2, [ScalarFunctionSpec.constant(0.3),
                               ScalarFunctionSpec.cosine_series((0.0, 0.2))],
                           [ScalarFunctionSpec.zero()] * 3)
    r1 = check_ground_state_directions(base, grid_harness)
    r2 = check_ground_state_directions(shifted, grid_harness)
    assert r1.verdict == r2.verdict == "consistent"
    assert r1.metrics["residual_max"] == r2.metrics["residual_max"]
    assert (r1.metrics["residual_channel_1"]
            == r2.metrics["residual_channel_1"])


# --- integral balance (reported, never judged) ---

def test_integral_balance_zero_problem(zero_d1):
    lhs, rhs, residual = integral_balance(zero_d1)
    assert np.max(np.abs(lhs)) == 0.0
    assert np.max(np.abs(rhs)) == 0.0
    assert residual == 0.0


def test_integral_balance_frozen_values(const_p05):
    _, _, residual = integral_balance(const_p05)
    assert residual == pytest.approx(QUARTER_PI, rel=1e-15)
    prob = make_problem(1, [ScalarFunctionSpec.zero()],
                        [ScalarFunctionSpec.constant(-0.25)])
    _, _, residual = integral_balance(prob)
    assert residual == pytest.approx(QUARTER_PI, rel=1e-15)


def test_integral_balance_always_inconclusive(zero_d1, const_p05, grid_harness):
    for prob in (zero_d1, const_p05):
        r = check_integral_balance(prob)
        assert r.theorem_id == "eq39"
        assert r.verdict == "inconclusive"
        assert set(r.metrics) >= {"lhs_max_abs", "rhs_max_abs", "residual"}


# --- reports ---

def test_report_validates_enums():
    with pytest.raises(ValueError):
        VerificationReport("T99", "0" * 64, {}, "consistent")
    with pytest.raises(ValueError):
        VerificationReport("T31", "0" * 64, {}, "maybe")


def test_report_to_dict_shape(zero_d1, grid_harness):
    r = check_integral_balance(zero_d1, seed=11)
    d = r.to_dict()
    assert d["theorem_id"] == "eq39"
    assert d["verdict"] in VERDICTS
    assert d["seed"] == 11
    assert len(d["inputs_digest"]) == 64
    assert isinstance(d["metrics"], dict)


def test_report_digest_discriminates(zero_d1, const_q01, grid_harness):
    r1 = check_integral_balance(zero_d1)
    r2 = check_integral_balance(const_q01)
    r3 = check_integral_balance(zero_d1)
    assert r1.inputs_digest != r2.inputs_digest
    assert r1.inputs_digest == r3.inputs_digest


def test_checks_deterministic(const_q01, grid_harness):
    a = check_zero_spectrum_rigidity(const_q01, grid_harness, 2, seed=3)
    b = check_zero_spectrum_rigidity(const_q01, grid_harness, 2, seed=3)
    assert a.to_dict() == b.to_dict()


# --- random families ---

def test_random_q_entries_reproducible():
    a = random_q_entries(2, np.random.default_rng(7))
    b = random_q_entries(2, np.random.default_rng(7))
    assert a == b
    assert len(a) == 3
    for spec in a:
        assert spec.kind == "cosine_series"
        assert len(spec.coefficients) == 3
        assert all(abs(c) <= 0.5 for c in spec.coefficients)


def test_random_p_diag_admissible_for_t31():
    specs = random_p_diag(3, np.random.default_rng(5))
    assert len(specs) == 3
    for spec in specs:
        # zero mean over [0, pi]: alpha(pi) vanishes at working precision
        assert abs(spec.antiderivative(PI)) <= 1e-12


def test_random_families_differ_across_seeds():
    a = random_q_entries(2, np.random.default_rng(1))
    b = random_q_entries(2, np.random.default_rng(2))
    assert a != b
