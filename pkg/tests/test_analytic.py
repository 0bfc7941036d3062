import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from replica_portfolio.analytic import (
    DomainError,
    alpha_grid,
    annealed_epsilon,
    annealed_portfolio,
    annealed_qw,
    finite_beta_epsilon,
    predict,
    quenched_epsilon,
    quenched_qw,
    rs_chi_u,
    rs_chi_w,
    scaled_prediction,
)
from replica_portfolio.core import concentration
from replica_portfolio.variance_model import PRESETS, Identical, InverseMoments, Uniform, analytic_moments, empirical_moments

UNIT = InverseMoments(1.0, 1.0)
CASE_1A = InverseMoments(3.0, 30.0)

alphas = st.floats(1.0001, 100.0)
moments = st.builds(
    lambda m1, excess: InverseMoments(m1, m1**2 * (1 + excess)),
    st.floats(0.05, 20.0),
    st.floats(0.0, 10.0),
)


def test_quenched_epsilon_values():
    assert quenched_epsilon(2.0, UNIT) == pytest.approx(0.5)
    assert quenched_epsilon(2.0, CASE_1A) == pytest.approx(1 / 6)
    assert quenched_epsilon(1 + 1e-12, UNIT) == pytest.approx(0.0, abs=1e-11)


def test_quenched_qw_values():
    assert quenched_qw(2.0, UNIT) == pytest.approx(2.0)
    assert quenched_qw(2.0, CASE_1A) == pytest.approx(13 / 3)
    assert quenched_qw(1e9, CASE_1A) == pytest.approx(30 / 9, rel=1e-8)


@pytest.mark.parametrize("f", [quenched_epsilon, quenched_qw])
@pytest.mark.parametrize("alpha", [1.0, 0.5, -2.0])
def test_domain_guard(f, alpha):
    with pytest.raises(DomainError):
        f(alpha, UNIT)


def test_annealed_values():
    assert annealed_epsilon(2.0, UNIT) == pytest.approx(1.0)
    assert annealed_epsilon(2.0, CASE_1A) == pytest.approx(1 / 3)
    assert annealed_qw(UNIT) == 1.0
    assert annealed_qw(CASE_1A) == pytest.approx(30 / 9)
    assert annealed_qw(analytic_moments(Uniform(1, 2))) == pytest.approx(1.04068, abs=1e-5)


def test_annealed_portfolio():
    np.testing.assert_allclose(annealed_portfolio(np.ones(6)).weights, np.ones(6))
    np.testing.assert_allclose(annealed_portfolio([1.0, 2.0]).weights, [4 / 3, 2 / 3])
    s = np.random.default_rng(0).uniform(0.5, 3.0, 50)
    w = annealed_portfolio(s)
    assert w.weights.sum() == pytest.approx(50)
    m = empirical_moments(s)
    assert concentration(w) == pytest.approx(m.m2 / m.m1**2, rel=1e-12)


def test_annealed_portfolio_minimises_expected_risk():
    # expected risk is (alpha/2) sum s_i w_i^2; any budget-preserving move increases it
    s = np.array([1.0, 0.3, 2.5, 0.8])
    w = annealed_portfolio(s).weights
    cost = lambda v: float(np.sum(s * v**2))
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = rng.standard_normal(4)
        d -= d.mean()
        assert cost(w + 0.01 * d) > cost(w)


def test_scaled_prediction():
    pred = predict(2.0, CASE_1A)
    assert scaled_prediction(pred, 1.0) == pred
    scaled = scaled_prediction(pred, 4.0)
    assert scaled.epsilon_quenched == pytest.approx(4 / 6)
    assert scaled.epsilon_annealed == pytest.approx(4 / 3)
    assert (scaled.qw_quenched, scaled.qw_annealed) == (pred.qw_quenched, pred.qw_annealed)
    assert predict(2.0, CASE_1A, gamma=4.0) == scaled


def test_finite_beta():
    assert finite_beta_epsilon(2.0, UNIT, 1.0) == pytest.approx(1.0)
    assert finite_beta_epsilon(3.0, CASE_1A, 1e12) == pytest.approx(quenched_epsilon(3.0, CASE_1A))


@given(alphas, moments, st.floats(1e-3, 1e6))
def test_finite_beta_offset_is_half_temperature(alpha, m, beta):
    diff = finite_beta_epsilon(alpha, m, beta) - quenched_epsilon(alpha, m)
    assert diff == pytest.approx(1 / (2 * beta), rel=1e-9)


def test_rs_susceptibilities():
    assert rs_chi_w(2.0, UNIT, 1.0) == pytest.approx(1.0)
    assert rs_chi_w(2.0, UNIT, 10.0) == pytest.approx(0.1)
    assert rs_chi_w(2.0, CASE_1A, 100.0) == pytest.approx(0.03)
    assert rs_chi_u(2.0, 100.0) == pytest.approx(50.0)


@given(alphas)
def test_identical_variance_reduces_to_iid_baseline(alpha):
    assert quenched_epsilon(alpha, UNIT) == pytest.approx((alpha - 1) / 2)
    assert quenched_qw(alpha, UNIT) == pytest.approx(alpha / (alpha - 1))


@given(alphas, moments)
def test_prediction_gap_identities(alpha, m):
    pred = predict(alpha, m)
    assert pred.epsilon_annealed - pred.epsilon_quenched == pytest.approx(1 / (2 * m.m1), rel=1e-9)
    assert pred.qw_quenched - pred.qw_annealed == pytest.approx(1 / (alpha - 1), rel=1e-9)
    assert pred.qw_quenched >= alpha / (alpha - 1) * (1 - 1e-12)


@pytest.mark.parametrize("name", list(PRESETS))
def test_sharp_bound_strict_for_dispersed_variances(name):
    m = analytic_moments(PRESETS[name])
    for alpha in (1.2, 2.0, 10.0):
        assert quenched_qw(alpha, m) > alpha / (alpha - 1)
    m_id = analytic_moments(Identical(3.0))
    assert quenched_qw(2.0, m_id) == pytest.approx(2.0)


@given(moments, st.floats(1.001, 50.0), st.floats(1.001, 50.0))
def test_monotone_in_alpha(m, a, b):
    lo, hi = sorted((a, b))
    if hi - lo < 1e-6:
        return
    assert quenched_epsilon(lo, m) < quenched_epsilon(hi, m)
    assert quenched_qw(lo, m) > quenched_qw(hi, m)


def test_alpha_grid():
    g = alpha_grid(1.5, 10, 18)
    assert len(g) == 18 and g[0] == 1.5 and g[-1] == 10
    with pytest.raises(DomainError):
        alpha_grid(0.5, 2, 10)
    assert math.isclose(alpha_grid(2, 2, 1)[0], 2)
