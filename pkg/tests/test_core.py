import numpy as np
import pytest
from hypothesis import given, strategies as st

from cases import SCENARIO
from twostrain.core import FullState, ModelParams, ReducedState, ReproductionSet, validate_params
from twostrain.errors import (
    EpsilonOutOfRange,
    NegativeRate,
    NonPositivePopulation,
    ParameterError,
    StateError,
)

BASE_PARAMS = dict(beta1=0.4, beta2=0.6, gamma1=0.2, gamma2=0.1, sigma1=0.1, sigma2=0.1, epsilon=0.0, n_pop=10000)

rates = st.floats(0.0, 5.0)
positive = st.floats(1e-3, 5.0)


@st.composite
def valid_params(draw):
    return ModelParams(draw(rates), draw(rates), draw(positive), draw(positive), draw(rates),
                       draw(rates), draw(st.floats(0.0, 1.0)), draw(st.floats(1.0, 1e8)))


def test_scenario_parameters_validate():
    p = validate_params(BASE_PARAMS)
    assert p == SCENARIO["a"]


def test_sequence_input_uses_declared_order():
    assert validate_params([0.4, 0.6, 0.2, 0.1, 0.1, 0.1, 0.0, 10000]) == SCENARIO["a"]


def test_epsilon_above_one_rejected():
    with pytest.raises(EpsilonOutOfRange) as info:
        validate_params({**BASE_PARAMS, "epsilon": 1.5})
    assert info.value.field == "epsilon"


def test_zero_population_rejected():
    with pytest.raises(NonPositivePopulation):
        validate_params({**BASE_PARAMS, "n_pop": 0})


@pytest.mark.parametrize("name", ["beta1", "beta2", "sigma1", "sigma2"])
def test_negative_rate_names_the_field(name):
    with pytest.raises(NegativeRate) as info:
        validate_params({**BASE_PARAMS, name: -0.1})
    assert info.value.field == name


@pytest.mark.parametrize("name", ["gamma1", "gamma2"])
def test_recovery_rate_must_be_positive(name):
    with pytest.raises(NegativeRate):
        validate_params({**BASE_PARAMS, name: 0.0})


def test_missing_and_unknown_keys_rejected():
    partial = dict(BASE_PARAMS)
    del partial["sigma2"]
    with pytest.raises(ParameterError, match="sigma2"):
        validate_params(partial)
    with pytest.raises(ParameterError, match="delta"):
        validate_params({**BASE_PARAMS, "delta": 1.0})


def test_non_finite_value_rejected():
    with pytest.raises(ParameterError):
        validate_params({**BASE_PARAMS, "beta1": float("nan")})


@given(valid_params())
def test_validation_is_idempotent(p):
    assert validate_params(p) is p
    assert validate_params(p.as_dict()) == p
    assert validate_params(p.as_array()) == p


def test_switching_level_matches_threshold_formula():
    assert SCENARIO["a"].switching_level == pytest.approx(10000 * (1 - 0.2 / 0.4))


def test_states_reject_negative_components():
    with pytest.raises(StateError):
        FullState(1.0, -1e-300, 0.0, 0.0, 0.0)
    with pytest.raises(StateError):
        ReducedState(0.0, float("nan"))


def test_unchecked_state_keeps_negative_values():
    x = FullState.unchecked(1.0, -2.0, 0.0, 0.0, 0.0)
    assert x.i1 == -2.0 and not x.is_physical


def test_from_infected_fills_susceptibles():
    x = FullState.from_infected(100.0, 1.0, 2.0, 3.0, 4.0)
    assert x.s == 90.0 and x.total == 100.0


def test_trapping_region_membership():
    p = SCENARIO["a"]
    assert ReducedState(5000.0, 5000.0).in_trapping_region(p)
    assert not ReducedState(5000.0, 5000.1).in_trapping_region(p)
    assert ReducedState(5000.0, 5000.1).in_trapping_region(p, tol=0.2)


def test_reproduction_set_requires_r0_as_maximum():
    ReproductionSet(6.0, 2.0, 6.0, 1.0, 5.0)
    with pytest.raises(ValueError):
        ReproductionSet(2.0, 2.0, 6.0, 1.0, 5.0)
    with pytest.raises(ValueError):
        ReproductionSet(6.0, 2.0, 6.0, -1.0, 5.0)


def test_value_types_are_frozen():
    with pytest.raises(AttributeError):
        SCENARIO["a"].beta1 = 1.0
    with pytest.raises(AttributeError):
        ReducedState(1.0, 1.0).i2 = 0.0


def test_as_array_round_trip():
    x = FullState(1.0, 2.0, 3.0, 4.0, 5.0)
    assert FullState.from_array(x.as_array()) == x
    np.testing.assert_array_equal(SCENARIO["a"].as_array(), [0.4, 0.6, 0.2, 0.1, 0.1, 0.1, 0.0, 10000.0])
