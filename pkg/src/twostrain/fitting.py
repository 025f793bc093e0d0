"""Least-squares fitting of the full or reduced model to biweekly strain-split incidence.

The fitted vector uses ``rho = beta2/beta1`` in place of ``beta2`` and a
single recovery rate ``gamma`` shared by both strains, so the ratio and
equality constraints hold by construction and only box bounds need
projecting.  Model time 0 is the start of the first data window.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import FullState, ModelParams, ReducedState, ReproductionSet
from .dynamics import WINDOW_DAYS, accumulate_incidence, integrate_rk4, quasi_steady_strain1
from .errors import (
    ConfigError,
    ConstraintViolated,
    IncompleteWindow,
    LengthMismatch,
    NegativeCases,
    NonFiniteState,
    IntegrationFailed,
    ShareOutOfRange,
    WindowMisaligned,
)
from .reproduction import closed_form_reproduction

MIN_RATE = 0.001
MAX_IMMUNITY_LOSS = 0.5
RATIO_BOUNDS = (0.8, 1.25)
DEFAULT_FIT_STEP = 0.25

INITIAL_NAMES = {"full": ("i1_0", "r1_0", "i2_0", "r2_0"), "reduced": ("i2_0", "r2_0")}
_RATE_VECTOR = ("n_pop", "beta1", "rho", "gamma", "sigma1", "sigma2", "epsilon")
_DEFAULT_BOUNDS = {
    "n_pop": (0.0, math.inf),  # lower bound raised from the data at fit time
    "beta1": (MIN_RATE, 10.0),
    "rho": RATIO_BOUNDS,
    "gamma": (MIN_RATE, 10.0),
    "sigma1": (MIN_RATE, MAX_IMMUNITY_LOSS),
    "sigma2": (MIN_RATE, MAX_IMMUNITY_LOSS),
    "epsilon": (MIN_RATE, 1.0),
}
_RATIO_SLACK = 1e-12
_LM_BASE = 1e-10
_MAX_STEP = 0.5   # largest move per proposal, in units of the starting magnitude
_MIN_DAMPING = 2.0 ** -40


def vector_names(model: str) -> tuple:
    """Names of the internal fit coordinates for ``model``."""
    return _RATE_VECTOR + INITIAL_NAMES[model]


# -- data ------------------------------------------------------------------

@dataclass(frozen=True)
class IncidenceSeries:
    """New cases per 14-day window, split by strain.  ``original_cases`` is x, ``emerging_cases`` is y."""

    window_end_dates: tuple
    original_cases: np.ndarray
    emerging_cases: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.original_cases, dtype=float)
        y = np.asarray(self.emerging_cases, dtype=float)
        if not (len(self.window_end_dates) == len(x) == len(y)):
            raise LengthMismatch("dates, original and emerging series must have equal lengths")
        if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(x < 0) or np.any(y < 0):
            raise NegativeCases("window counts must be finite and >= 0")
        dates = tuple(self.window_end_dates)
        for a, b in zip(dates, dates[1:]):
            if (b - a).days != int(WINDOW_DAYS):
                raise WindowMisaligned(f"window end dates {a} and {b} are not 14 days apart")
        object.__setattr__(self, "window_end_dates", dates)
        object.__setattr__(self, "original_cases", x)
        object.__setattr__(self, "emerging_cases", y)

    def __len__(self):
        return len(self.original_cases)

    @property
    def totals(self) -> np.ndarray:
        return self.original_cases + self.emerging_cases

    @classmethod
    def synthetic(cls, x, y, first_end: dt.date = dt.date(2021, 1, 14)):
        """Series with consecutive windows ending at ``first_end``, ``first_end + 14`` and so on."""
        dates = tuple(first_end + dt.timedelta(days=14 * k) for k in range(len(x)))
        return cls(dates, np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def aggregate_biweekly(daily_dates: Sequence[dt.date], daily_cases, share_dates: Sequence[dt.date],
                       shares, start: Optional[dt.date] = None,
                       end: Optional[dt.date] = None) -> IncidenceSeries:
    """Sum daily counts over each 14-day window and split them by variant share.

    Each share row closes a window covering its end date and the 13 days
    before it.  Windows ending before ``start + 13 days`` or after ``end``
    are skipped.

    Raises
    ------
    IncompleteWindow
        If a kept window is missing any day of case data.
    ShareOutOfRange
        If a share lies outside [0, 1].
    """
    cases = dict(zip(daily_dates, np.asarray(daily_cases, dtype=float)))
    ends, xs, ys = [], [], []
    for end_date, share in zip(share_dates, shares):
        share = float(share)
        if not 0.0 <= share <= 1.0:
            raise ShareOutOfRange(f"share {share!r} for window ending {end_date} is outside [0, 1]")
        first = end_date - dt.timedelta(days=int(WINDOW_DAYS) - 1)
        if start is not None and first < start:
            continue
        if end is not None and end_date > end:
            continue
        days = [first + dt.timedelta(days=k) for k in range(int(WINDOW_DAYS))]
        absent = [d for d in days if d not in cases]
        if absent:
            raise IncompleteWindow(f"window ending {end_date} lacks case data for {absent[0]}")
        total = float(sum(cases[d] for d in days))
        emerging = total * share
        ends.append(end_date)
        xs.append(total - emerging)
        ys.append(emerging)
    if not ends:
        raise IncompleteWindow("no complete window in the requested range")
    return IncidenceSeries(tuple(ends), np.array(xs), np.array(ys))


def sse_objective(data: IncidenceSeries, x_hat, y_hat) -> float:
    """Sum of squared errors over both strains' window counts."""
    x_hat = np.asarray(x_hat, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if not (len(x_hat) == len(y_hat) == len(data)):
        raise LengthMismatch(f"{len(data)} windows of data, predictions of length {len(x_hat)}/{len(y_hat)}")
    return float(np.sum((data.original_cases - x_hat) ** 2) + np.sum((data.emerging_cases - y_hat) ** 2))


# -- specification and parameters ----------------------------------------

@dataclass(frozen=True)
class FitSpec:
    """What to fit and how.

    ``free`` lists fit coordinates (see :func:`vector_names`); the rest stay
    at the initial guess.  ``bounds`` may tighten the default box but not
    widen it past the admissible limits.
    """

    model: str = "full"
    free: Optional[tuple] = None
    bounds: Mapping = field(default_factory=dict)
    rng_seed: int = 0
    max_iterations: int = 2000
    h: float = DEFAULT_FIT_STEP
    fd_step: float = 1e-4
    perturbation_scale: float = 0.1
    restart_after: int = 50
    target_sse: float = 0.0

    def __post_init__(self):
        if self.model not in INITIAL_NAMES:
            raise ConfigError(f"model must be 'full' or 'reduced', not {self.model!r}")
        names = vector_names(self.model)
        free = names if self.free is None else tuple(self.free)
        unknown = [k for k in free if k not in names]
        if unknown:
            raise ConfigError(f"unknown free parameter {unknown[0]!r}; choose from {', '.join(names)}")
        object.__setattr__(self, "free", free)
        for k in self.bounds:
            if k not in names:
                raise ConfigError(f"bounds given for unknown parameter {k!r}")
        ratio = (WINDOW_DAYS / self.h) if self.h > 0 else 0.0
        if not (self.h > 0 and abs(ratio - round(ratio)) < 1e-9 * ratio):
            raise ConfigError(f"step h={self.h!r} must divide the 14-day window")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")


def theta_from(params: ModelParams, i1_0: float = 0.0, r1_0: float = 0.0, i2_0: float = 0.0,
               r2_0: float = 0.0) -> dict:
    """Fit parameter dict (model rates plus initial infected compartments)."""
    theta = params.as_dict()
    theta.update(i1_0=float(i1_0), r1_0=float(r1_0), i2_0=float(i2_0), r2_0=float(r2_0))
    return theta


def _bounds(spec: FitSpec, n_lower: float) -> dict:
    out = {}
    for name in vector_names(spec.model):
        lo, hi = _DEFAULT_BOUNDS.get(name, (0.0, math.inf))
        if name == "n_pop":
            lo = max(lo, n_lower)
        if name in spec.bounds:
            ulo, uhi = spec.bounds[name]
            lo, hi = max(lo, float(ulo)), min(hi, float(uhi))
        if lo > hi:
            raise ConstraintViolated(f"empty bounds for {name}: [{lo}, {hi}]")
        out[name] = (lo, hi)
    return out


def population_lower_bound(data: Optional[IncidenceSeries]) -> float:
    """Smallest admissible N: the largest biweekly case total divided by 14."""
    if data is None or len(data) == 0:
        return 0.0
    return float(np.max(data.totals)) / WINDOW_DAYS


def check_constraints(spec: FitSpec, theta: Mapping, n_lower: float = 0.0) -> None:
    """Raise :class:`ConstraintViolated` unless ``theta`` is admissible for ``spec``."""
    for key in ("beta1", "beta2", "gamma1", "gamma2", "sigma1", "sigma2", "epsilon", "n_pop"):
        if key not in theta:
            raise ConstraintViolated(f"missing parameter {key!r}")
    b1, b2 = float(theta["beta1"]), float(theta["beta2"])
    g1, g2 = float(theta["gamma1"]), float(theta["gamma2"])
    if g1 != g2 and abs(g1 - g2) > _RATIO_SLACK * max(g1, g2):
        raise ConstraintViolated(f"gamma1={g1!r} must equal gamma2={g2!r}")
    lo_r, hi_r = RATIO_BOUNDS
    if not (lo_r * b1 * (1 - _RATIO_SLACK) <= b2 <= hi_r * b1 * (1 + _RATIO_SLACK)):
        raise ConstraintViolated(f"beta2={b2!r} must lie in [0.8, 1.25] x beta1={b1!r}")
    vec = _to_vector(spec.model, theta)
    for (name, value), (lo, hi) in zip(zip(vector_names(spec.model), vec), _bounds(spec, n_lower).values()):
        if not (lo * (1 - _RATIO_SLACK) <= value <= hi * (1 + _RATIO_SLACK)):
            raise ConstraintViolated(f"{name}={value!r} outside [{lo!r}, {hi!r}]")
    infected = sum(float(theta.get(k, 0.0)) for k in INITIAL_NAMES[spec.model])
    if infected > float(theta["n_pop"]) * (1 + _RATIO_SLACK):
        raise ConstraintViolated(f"initial compartments sum to {infected!r} > N={theta['n_pop']!r}")


def _to_vector(model: str, theta: Mapping) -> np.ndarray:
    b1 = float(theta["beta1"])
    vals = [float(theta["n_pop"]), b1, float(theta["beta2"]) / b1 if b1 > 0 else math.nan,
            float(theta["gamma1"]), float(theta["sigma1"]), float(theta["sigma2"]), float(theta["epsilon"])]
    vals += [float(theta.get(k, 0.0)) for k in INITIAL_NAMES[model]]
    return np.array(vals)


def _from_vector(model: str, vec) -> dict:
    n, b1, rho, g, s1, s2, eps = (float(v) for v in vec[:7])
    theta = {"beta1": b1, "beta2": rho * b1, "gamma1": g, "gamma2": g, "sigma1": s1,
             "sigma2": s2, "epsilon": eps, "n_pop": n}
    for k, v in zip(INITIAL_NAMES[model], vec[7:]):
        theta[k] = float(v)
    return theta


def _project(vec: np.ndarray, lo: np.ndarray, hi: np.ndarray, model: str) -> np.ndarray:
    out = np.clip(vec, lo, hi)
    k = len(_RATE_VECTOR)
    infected = out[k:].sum()
    if infected > out[0]:
        out[k:] *= out[0] / infected
    return out


# -- prediction ------------------------------------------------------------

def split_theta(model: str, theta: Mapping):
    """``(ModelParams, initial state)`` for a fit parameter dict."""
    p = ModelParams(**{k: float(theta[k]) for k in
                       ("beta1", "beta2", "gamma1", "gamma2", "sigma1", "sigma2", "epsilon", "n_pop")})
    if model == "full":
        i1, r1, i2, r2 = (float(theta.get(k, 0.0)) for k in INITIAL_NAMES["full"])
        return p, FullState.from_array([p.n_pop - i1 - r1 - i2 - r2, i1, r1, i2, r2], check=False)
    return p, ReducedState.unchecked(float(theta.get("i2_0", 0.0)), float(theta.get("r2_0", 0.0)))


def predict(spec: FitSpec, theta: Mapping, n_windows: int, check: bool = True, n_lower: float = 0.0):
    """Model new cases per window, ``(x_hat, y_hat)``.

    The full model starts from the given compartments.  The reduced model
    starts from ``(I2, R2)`` with the original strain at its quasi-steady
    level, and its strain-1 incidence uses that level throughout.

    Raises
    ------
    ConstraintViolated
        If ``check`` is set and ``theta`` is not admissible.
    IntegrationFailed
        If the simulation produces a non-finite value.
    """
    if check:
        check_constraints(spec, theta, n_lower)
    p, x0 = split_theta(spec.model, theta)
    if n_windows <= 0:
        return np.zeros(0), np.zeros(0)
    try:
        traj = integrate_rk4(spec.model, p, x0, (0.0, WINDOW_DAYS * n_windows), h=spec.h)
    except NonFiniteState as exc:
        raise IntegrationFailed(f"simulation diverged at t={exc.t!r}") from exc
    inc = accumulate_incidence(p, traj)
    return inc[:, 0].copy(), inc[:, 1].copy()


# -- optimizer ---------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    initial_state: object           # FullState or ReducedState
    sse: float
    x_hat: np.ndarray
    y_hat: np.ndarray
    reproduction: ReproductionSet
    iterations_used: int
    status: str                     # converged, budget_exhausted or no_improvement
    history: tuple                  # accepted objective values, first is the initial guess
    theta: dict
    evaluations: int
    seed: int

    @property
    def model_predictions(self):
        return self.x_hat, self.y_hat

    def initial_strain1(self) -> tuple:
        """Original-strain ``(I1(0), R1(0))``; implied by the quasi-steady closure for reduced fits."""
        if isinstance(self.initial_state, FullState):
            return self.initial_state.i1, self.initial_state.r1
        return quasi_steady_strain1(self.params, self.initial_state.as_array())


class _Objective:
    def __init__(self, spec, data, n_lower, base, on_evaluate):
        self.spec = spec
        self.data = data
        self.n_lower = n_lower
        self.base = base
        self.free_idx = np.array([vector_names(spec.model).index(k) for k in spec.free], dtype=int)
        self.on_evaluate = on_evaluate
        self.evaluations = 0
        self.target = np.concatenate([data.original_cases, data.emerging_cases])

    def full_vector(self, free_values):
        vec = self.base.copy()
        vec[self.free_idx] = free_values
        return vec

    def __call__(self, vec):
        theta = _from_vector(self.spec.model, vec)
        if self.on_evaluate is not None:
            self.on_evaluate(dict(theta))
        self.evaluations += 1
        try:
            x_hat, y_hat = predict(self.spec, theta, len(self.data), check=False)
        except (IntegrationFailed, ValueError):
            return math.inf, None, None
        sse = sse_objective(self.data, x_hat, y_hat)
        if not math.isfinite(sse):
            return math.inf, None, None
        return sse, np.concatenate([x_hat, y_hat]) - self.target, (x_hat, y_hat)


def fit(spec: FitSpec, data: IncidenceSeries, initial_guess: Mapping,
        on_evaluate: Optional[Callable[[dict], None]] = None) -> FitResult:
    """Damped Gauss-Newton with seeded random coordinate moves.

    Each iteration proposes a Gauss-Newton step (forward-difference
    Jacobian in scaled coordinates, recomputed after each accepted move)
    and a log-normal change to one randomly chosen free coordinate.  The
    better proposal is accepted if it lowers the SSE; otherwise the step
    damping halves, which quadruples a Levenberg-Marquardt term in the
    step equations.  Gauss-Newton moves are capped at half of each
    coordinate's starting magnitude.  After ``restart_after`` consecutive
    rejections the damping resets and the Jacobian is rebuilt.  All
    proposals are projected onto the feasible set before they are simulated.

    Raises
    ------
    ConstraintViolated
        If ``initial_guess`` is not admissible; nothing is simulated.
    """
    n_lower = population_lower_bound(data)
    check_constraints(spec, initial_guess, n_lower)
    names = vector_names(spec.model)
    bounds = _bounds(spec, n_lower)
    lo_all = np.array([bounds[k][0] for k in names])
    hi_all = np.array([bounds[k][1] for k in names])
    base = _project(_to_vector(spec.model, initial_guess), lo_all, hi_all, spec.model)
    obj = _Objective(spec, data, n_lower, base, on_evaluate)
    idx = obj.free_idx
    rng = np.random.default_rng(spec.rng_seed)

    # coordinates are scaled by their initial magnitude
    floor = np.where(np.arange(len(names)) >= len(_RATE_VECTOR), 1e-6 * base[0], MIN_RATE)
    scale = np.maximum(np.abs(base), floor)[idx]

    def project(u):
        return _project(obj.full_vector(u * scale), lo_all, hi_all, spec.model)

    best_vec = base
    best_sse, best_res, best_pred = obj(best_vec)
    if not math.isfinite(best_sse):
        raise IntegrationFailed("the initial guess does not produce finite predictions")
    history = [best_sse]
    damping = 1.0
    rejections = 0
    jac = None
    iterations = 0
    accepted_any = False

    while iterations < spec.max_iterations and best_sse > spec.target_sse and len(idx):
        iterations += 1
        u = best_vec[idx] / scale
        if jac is None:
            jac = _jacobian(obj, project, u, best_res, spec.fd_step, scale)
        candidates = []
        free_vec = best_vec[idx]
        step = _gauss_newton_step(jac, best_res, damping, free_vec <= lo_all[idx], free_vec >= hi_all[idx])
        if step is not None:
            candidates.append(project(u + step))
        k = int(rng.integers(len(idx)))
        z = float(rng.standard_normal())
        trial = best_vec.copy()
        j = idx[k]
        start = max(trial[j], lo_all[j] if lo_all[j] > 0 else 1e-3 * scale[k])
        trial[j] = start * math.exp(spec.perturbation_scale * z)
        candidates.append(_project(trial, lo_all, hi_all, spec.model))

        results = [(obj(c), c) for c in candidates]
        (sse, res, pred), vec = min(results, key=lambda r: r[0][0])
        if sse < best_sse:
            best_vec, best_sse, best_res, best_pred = vec, sse, res, pred
            history.append(sse)
            accepted_any = True
            damping = min(1.0, 2.0 * damping)
            rejections = 0
            jac = None
        else:
            damping *= 0.5
            rejections += 1
            if rejections >= spec.restart_after or damping < _MIN_DAMPING:
                damping = 1.0
                rejections = 0
                jac = None

    if best_sse <= spec.target_sse:
        status = "converged"
    elif accepted_any:
        status = "budget_exhausted"
    else:
        status = "no_improvement"
    theta = _from_vector(spec.model, best_vec)
    p, x0 = split_theta(spec.model, theta)
    x_hat, y_hat = best_pred
    return FitResult(
        params=p,
        initial_state=x0,
        sse=sse_objective(data, x_hat, y_hat),
        x_hat=x_hat,
        y_hat=y_hat,
        reproduction=closed_form_reproduction(p),
        iterations_used=iterations,
        status=status,
        history=tuple(history),
        theta=theta,
        evaluations=obj.evaluations,
        seed=spec.rng_seed,
    )


def _jacobian(obj, project, u, res0, rel_step, scale):
    """Forward differences in scaled coordinates; steps inward at an upper bound."""
    vec0 = project(u)
    cols = []
    for k in range(len(u)):
        j = obj.free_idx[k]
        h = rel_step * max(abs(u[k]), 1e-3)
        moved = 0.0
        for sign in (1.0, -1.0):
            trial = u.copy()
            trial[k] += sign * h
            vec = project(trial)
            moved = (vec[j] - vec0[j]) / scale[k]
            if moved != 0.0:
                break
        res = obj(vec)[1] if moved != 0.0 else None
        cols.append(np.zeros_like(res0) if res is None else (res - res0) / moved)
    return np.column_stack(cols)


def _gauss_newton_step(jac, res, damping, at_lower, at_upper):
    """Regularized Gauss-Newton step in scaled coordinates.

    The normal equations get a Levenberg-Marquardt term that grows fourfold
    each time ``damping`` halves, shortening the step and turning it toward
    steepest descent.  Coordinates sitting on a bound that the step would
    push through are frozen and the step is recomputed without them.
    """
    if not np.all(np.isfinite(jac)) or not np.all(np.isfinite(res)):
        return None
    jtj = jac.T @ jac
    grad = jac.T @ res
    mu = _LM_BASE * max(float(np.trace(jtj)), 1e-300) / damping ** 2
    active = np.ones(len(grad), dtype=bool)
    step = np.zeros(len(grad))
    for _ in range(len(grad)):
        step[:] = 0.0
        if not active.any():
            return None
        sub = jtj[np.ix_(active, active)]
        sub = sub + mu * np.eye(len(sub))
        try:
            step[active] = np.linalg.solve(sub, -grad[active])
        except np.linalg.LinAlgError:
            step[active], *_ = np.linalg.lstsq(sub, -grad[active], rcond=None)
        blocked = active & ((at_lower & (step < 0)) | (at_upper & (step > 0)))
        if not blocked.any():
            break
        active &= ~blocked
    if not np.all(np.isfinite(step)) or not step.any():
        return None
    largest = float(np.max(np.abs(step)))
    if largest > _MAX_STEP:
        step *= _MAX_STEP / largest
    return step
