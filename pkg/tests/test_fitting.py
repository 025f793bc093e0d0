import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from cases import SCENARIO, fitted_params, fitted_theta
from twostrain.dynamics import quasi_steady_strain1
from twostrain.errors import (
    ConfigError,
    ConstraintViolated,
    IncompleteWindow,
    LengthMismatch,
    ShareOutOfRange,
)
from twostrain.fitting import (
    FitSpec,
    IncidenceSeries,
    aggregate_biweekly,
    check_constraints,
    fit,
    population_lower_bound,
    predict,
    sse_objective,
    theta_from,
)
from twostrain.reproduction import closed_form_reproduction

DAY0 = dt.date(2021, 6, 1)


def days(n, start=DAY0):
    return [start + dt.timedelta(days=k) for k in range(n)]


def solve_ivp_windows(theta, n_windows):
    """Window incidence from a tight-tolerance adaptive solve with cumulative inflows as extra states."""
    b1, b2, g1, g2 = theta["beta1"], theta["beta2"], theta["gamma1"], theta["gamma2"]
    s1, s2, eps, n = theta["sigma1"], theta["sigma2"], theta["epsilon"], theta["n_pop"]

    def rhs(_, z):
        s, i1, r1, i2, r2 = z[:5]
        f1 = b1 / n * i1 * (s + (1 - eps) * r2)
        f2 = b2 / n * i2 * (s + r1)
        return [-s / n * (b1 * i1 + b2 * i2) + s1 * r1 + s2 * r2, f1 - g1 * i1,
                g1 * i1 - s1 * r1 - b2 / n * i2 * r1, f2 - g2 * i2, g2 * i2 - s2 * r2 - (1 - eps) * b1 / n * i1 * r2, f1, f2]

    i1, r1, i2, r2 = theta["i1_0"], theta["r1_0"], theta["i2_0"], theta["r2_0"]
    z0 = [n - i1 - r1 - i2 - r2, i1, r1, i2, r2, 0.0, 0.0]
    ends = 14.0 * np.arange(n_windows + 1)
    sol = solve_ivp(rhs, (0.0, ends[-1]), z0, t_eval=ends, method="DOP853", rtol=1e-12, atol=1e-6)
    return np.diff(sol.y[5]), np.diff(sol.y[6])


# -- aggregation -----------------------------------------------------------

def test_constant_daily_cases_split_by_share():
    d = days(14)
    series = aggregate_biweekly(d, [10] * 14, [d[-1]], [0.25])
    assert series.original_cases.tolist() == [105.0]
    assert series.emerging_cases.tolist() == [35.0]


def test_zero_share_gives_no_emerging_cases():
    d = days(28)
    series = aggregate_biweekly(d, np.arange(28), [d[13], d[27]], [0.0, 0.5])
    assert series.emerging_cases[0] == 0.0
    assert series.original_cases[0] == sum(range(14))


@given(st.lists(st.integers(0, 10 ** 6), min_size=14, max_size=14), st.floats(0.0, 1.0))
def test_window_split_matches_daily_split_for_constant_share(counts, share):
    d = days(14)
    series = aggregate_biweekly(d, counts, [d[-1]], [share])
    assert series.emerging_cases[0] == pytest.approx(sum(c * share for c in counts), rel=1e-12, abs=1e-9)
    assert series.totals[0] == pytest.approx(sum(counts))


def test_windows_outside_range_skipped():
    d = days(42)
    series = aggregate_biweekly(d, [1] * 42, [d[13], d[27], d[41]], [0.1, 0.2, 0.3],
                                start=d[14], end=d[41])
    assert series.window_end_dates == (d[27], d[41])


def test_missing_day_is_incomplete():
    d = days(14)
    with pytest.raises(IncompleteWindow):
        aggregate_biweekly(d[1:], [1] * 13, [d[-1]], [0.5])


@pytest.mark.parametrize("share", [-0.01, 1.5])
def test_share_outside_unit_interval(share):
    d = days(14)
    with pytest.raises(ShareOutOfRange):
        aggregate_biweekly(d, [1] * 14, [d[-1]], [share])


# -- objective ---------------------------------------------------------------

def test_sse_single_window():
    data = IncidenceSeries.synthetic([100.0], [50.0])
    assert sse_objective(data, [90.0], [60.0]) == 200.0


def test_sse_zero_for_exact_predictions():
    data = IncidenceSeries.synthetic([3.0, 4.0], [5.0, 6.0])
    assert sse_objective(data, data.original_cases, data.emerging_cases) == 0.0


@given(st.lists(st.tuples(*[st.floats(0, 1e6)] * 4), min_size=1, max_size=12), st.randoms())
def test_sse_invariant_under_window_permutation(rows, rnd):
    x, y, xh, yh = (np.array(c) for c in zip(*rows))
    order = list(range(len(rows)))
    rnd.shuffle(order)
    a = sse_objective(IncidenceSeries.synthetic(x, y), xh, yh)
    b = sse_objective(IncidenceSeries.synthetic(x[order], y[order]), xh[order], yh[order])
    assert b == pytest.approx(a, rel=1e-12, abs=1e-9)


def test_sse_length_mismatch():
    data = IncidenceSeries.synthetic([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(LengthMismatch):
        sse_objective(data, [1.0], [1.0])


def test_population_lower_bound():
    data = IncidenceSeries.synthetic([140.0, 70.0], [0.0, 70.0])
    assert population_lower_bound(data) == 10.0


# -- constraints -------------------------------------------------------------

@pytest.mark.parametrize("change", [
    dict(beta2=2 * 0.36685),
    dict(beta2=0.7 * 0.36685),
    dict(gamma2=0.3),
    dict(sigma1=0.6),
    dict(epsilon=0.0),
    dict(i1_0=2e7),
])
def test_inadmissible_parameters_rejected(change):
    theta = {**fitted_theta("delta_full"), **change}
    with pytest.raises(ConstraintViolated):
        check_constraints(FitSpec(), theta)


def test_fitted_columns_admissible():
    check_constraints(FitSpec(), fitted_theta("delta_full"))


@pytest.mark.parametrize("kwargs", [dict(model="sir"), dict(free=("kappa",)), dict(h=0.3),
                                    dict(bounds={"kappa": (0, 1)}), dict(max_iterations=-1)])
def test_bad_fit_spec(kwargs):
    with pytest.raises(ConfigError):
        FitSpec(**kwargs)


# -- prediction --------------------------------------------------------------

def test_zero_infections_give_zero_predictions():
    theta = theta_from(fitted_params("delta_full"))
    x, y = predict(FitSpec(), theta, 5)
    assert np.all(x == 0) and np.all(y == 0)


def test_reduced_model_zero_when_original_strain_subcritical():
    theta = theta_from(fitted_params("delta_full").with_values(beta1=0.3, beta2=0.3))
    x, y = predict(FitSpec(model="reduced"), theta, 3)
    assert np.all(x == 0) and np.all(y == 0)


def test_predictions_match_adaptive_solver():
    theta = fitted_theta("delta_full")
    x, y = predict(FitSpec(), theta, 10)
    xo, yo = solve_ivp_windows(theta, 10)
    np.testing.assert_allclose(x, xo, rtol=1e-4)
    np.testing.assert_allclose(y, yo, rtol=1e-4)
    # stand-in observations from a nearby parameter set
    other = {**theta, "beta2": theta["beta2"] * 1.02}
    data = IncidenceSeries.synthetic(*solve_ivp_windows(other, 10))
    ours, oracle = sse_objective(data, x, y), sse_objective(data, xo, yo)
    assert abs(ours - oracle) <= 0.05 * oracle


def test_full_and_reduced_emerging_incidence_report():
    p = SCENARIO["a"]
    i1, r1 = quasi_steady_strain1(p, (10.0, 0.0))
    x_full, y_full = predict(FitSpec(), theta_from(p, i1, r1, 10.0, 0.0), 10, check=False)
    _, y_red = predict(FitSpec(model="reduced"), theta_from(p, i2_0=10.0), 10, check=False)
    gaps = np.abs(y_red - y_full) / np.maximum(y_full, 1.0)
    print("full vs reduced emerging incidence, relative gap per window:", np.round(gaps, 3))
    assert np.all(np.isfinite(y_red)) and np.all(y_red >= 0)


# -- optimizer ---------------------------------------------------------------

@pytest.fixture(scope="module")
def delta_problem():
    theta = fitted_theta("delta_full")
    spec = FitSpec(rng_seed=3, max_iterations=25)
    data = IncidenceSeries.synthetic(*predict(spec, theta, 8))
    guess = dict(theta, beta1=theta["beta1"] * 1.05, beta2=theta["beta2"] * 1.05, i2_0=100.0)
    return spec, data, theta, guess


def test_fit_from_truth_stops_immediately(delta_problem):
    spec, data, theta, _ = delta_problem
    result = fit(spec, data, theta)
    assert result.sse == 0.0 and result.iterations_used == 0
    assert result.status == "converged"
    assert result.params == fitted_params("delta_full")


def test_infeasible_guess_rejected_before_simulation(delta_problem):
    spec, data, theta, _ = delta_problem
    calls = []
    with pytest.raises(ConstraintViolated):
        fit(spec, data, dict(theta, beta2=2 * theta["beta1"]), on_evaluate=calls.append)
    assert calls == []


def test_fit_is_deterministic_and_consistent(delta_problem):
    spec, data, _, guess = delta_problem
    seen = []
    first = fit(spec, data, guess, on_evaluate=seen.append)
    second = fit(spec, data, guess)
    assert first.theta == second.theta and first.history == second.history
    np.testing.assert_array_equal(first.x_hat, second.x_hat)
    assert first.sse == sse_objective(data, *first.model_predictions)
    assert all(a >= b for a, b in zip(first.history, first.history[1:]))
    assert first.sse < first.history[0]
    n_lower = population_lower_bound(data)
    assert len(seen) == first.evaluations
    for theta in seen:
        check_constraints(spec, theta, n_lower)


def test_reproduction_recomputed_from_fitted_params(delta_problem):
    spec, data, _, guess = delta_problem
    result = fit(FitSpec(rng_seed=1, max_iterations=3), data, guess)
    assert result.reproduction == closed_form_reproduction(result.params)


def test_fixed_coordinates_stay_put(delta_problem):
    _, data, _, guess = delta_problem
    spec = FitSpec(free=("beta1", "i2_0"), max_iterations=10)
    result = fit(spec, data, guess)
    for k in ("gamma1", "sigma1", "sigma2", "epsilon", "n_pop", "i1_0", "r1_0", "r2_0"):
        assert result.theta[k] == pytest.approx(guess[k], rel=1e-12)
