import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from cases import SCENARIO, N_SCENARIO, fitted_params, thresholds
from twostrain.core import FullState, ModelParams
from twostrain.equilibria import boundary_steady_states
from twostrain.errors import DegenerateRates
from twostrain.reproduction import (
    closed_form_reproduction,
    ngm_at_state,
    ngm_reproduction,
    spectral_radius_2x2,
)


@st.composite
def params(draw, epsilon=None, supercritical=False):
    rate = st.floats(0.01, 2.0)
    b1, b2, g1, g2 = (draw(rate) for _ in range(4))
    if supercritical:
        b1, b2 = g1 * draw(st.floats(1.001, 5.0)), g2 * draw(st.floats(1.001, 5.0))
    eps = draw(st.floats(0.0, 1.0)) if epsilon is None else epsilon
    return ModelParams(b1, b2, g1, g2, draw(rate), draw(rate), eps, draw(st.floats(10.0, 1e8)))


def test_coexistence_scenario_values():
    r = closed_form_reproduction(SCENARIO["a"])
    assert (r.r1, r.r2, r.r21) == pytest.approx((2.0, 6.0, 5.0))
    assert round(r.r12, 2) == 1.17
    assert r.r0 == r.r2 == pytest.approx(6.0)


def test_cross_immunity_scenario_values():
    r = closed_form_reproduction(SCENARIO["c"])
    assert r.r12 == pytest.approx(0.75)
    assert r.r21 == pytest.approx(5.0)


def test_delta_full_basic_number():
    assert closed_form_reproduction(fitted_params("delta_full")).r1 == pytest.approx(1.02250, abs=1e-4)


def test_fast_immunity_loss_reduces_to_ratio():
    p = SCENARIO["a"].with_values(sigma2=1e9)
    r = closed_form_reproduction(p)
    assert r.r12 == pytest.approx(r.r1 / r.r2, rel=1e-8)


def test_basic_model_product_is_one():
    p = SCENARIO["a"].with_values(sigma1=1e12, sigma2=1e12)
    r = closed_form_reproduction(p)
    assert r.r12 * r.r21 == pytest.approx(1.0, rel=1e-9)


def test_zero_transmission_is_degenerate():
    with pytest.raises(DegenerateRates):
        closed_form_reproduction(SCENARIO["a"].with_values(beta2=0.0))
    with pytest.raises(DegenerateRates):
        closed_form_reproduction(SCENARIO["a"].with_values(beta1=0.0))


def test_target_physical_flags():
    r = closed_form_reproduction(SCENARIO["a"].with_values(beta2=0.05))
    assert not r.r12_target_physical and r.r21_target_physical


@given(params())
def test_closed_form_matches_independent_formula(p):
    r = closed_form_reproduction(p)
    np.testing.assert_allclose(r.thresholds(), thresholds(p), rtol=1e-14)
    assert r.r0 == max(r.r1, r.r2)


@given(params(epsilon=0.0, supercritical=True))
def test_invasion_product_at_least_one_without_cross_immunity(p):
    r = closed_form_reproduction(p)
    assert r.r12 * r.r21 >= 1.0 - 1e-12


def test_invasion_product_can_drop_below_one_when_strain2_is_subcritical():
    # outside R1, R2 > 1 the product bound does not hold
    p = ModelParams(0.21, 0.01, 0.2, 0.1, 0.1, 0.1, 0.0, N_SCENARIO)
    r = closed_form_reproduction(p)
    assert r.r12 * r.r21 < 1.0


# -- next-generation matrices ------------------------------------------------

def test_ngm_at_disease_free_state():
    p = SCENARIO["a"]
    pieces = ngm_at_state(p, FullState(N_SCENARIO, 0, 0, 0, 0))
    np.testing.assert_allclose(pieces.f_matrix, np.diag([0.4, 0.6]))
    np.testing.assert_array_equal(pieces.v_matrix, np.diag([0.2, 0.1]))
    assert pieces.strain_ratio(1) == pytest.approx(2.0)


def test_full_cross_immunity_drops_r2_term():
    p = SCENARIO["a"].with_values(epsilon=1.0)
    x = FullState(3000.0, 1000.0, 2000.0, 1500.0, 2500.0)
    assert ngm_at_state(p, x).f_matrix[0, 0] == pytest.approx(0.4 * 3000.0 / N_SCENARIO)


def test_ngm_at_original_strain_state_gives_r21():
    p = SCENARIO["a"]
    x1 = boundary_steady_states(p)[1].state
    pieces = ngm_at_state(p, x1)
    block = np.array([[pieces.strain_ratio(2)]])
    assert abs(block[0, 0] - 5.0) <= 1e-10 * 5.0
    next_gen = pieces.next_generation()
    assert spectral_radius_2x2(np.diag([0.0, next_gen[1, 1]])) == pytest.approx(5.0, rel=1e-10)


@given(params(supercritical=True))
def test_ngm_oracle_equals_closed_form(p):
    closed = closed_form_reproduction(p)
    ngm = ngm_reproduction(p)
    np.testing.assert_allclose(ngm.thresholds(), closed.thresholds(), rtol=1e-10)
    assert ngm.source == "next_generation"


@pytest.mark.parametrize("m, expected", [
    (np.diag([2.0, 6.0]), 6.0),
    ([[0.0, 1.0], [1.0, 0.0]], 1.0),
    ([[1.0, 2.0], [3.0, 4.0]], (5 + math.sqrt(33)) / 2),
    ([[0.0, -1.0], [1.0, 0.0]], 1.0),
    (np.diag([-7.0, 3.0]), 7.0),
])
def test_spectral_radius_examples(m, expected):
    assert spectral_radius_2x2(m) == pytest.approx(expected, rel=1e-14)


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=4))
def test_spectral_radius_matches_eigenvalues(entries):
    m = np.array(entries).reshape(2, 2)
    expected = np.max(np.abs(np.linalg.eigvals(m)))
    assert spectral_radius_2x2(m) == pytest.approx(expected, rel=1e-7, abs=1e-6)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=2))
def test_spectral_radius_of_diagonal(d):
    assume(all(math.isfinite(v) for v in d))
    assert spectral_radius_2x2(np.diag(d)) == max(abs(v) for v in d)
