"""Right-hand sides, the quasi-steady closure, RK4 integration and incidence.

The full model evolves ``(S, I1, R1, I2, R2)``.  The reduced model keeps only
the emerging strain ``(I2, R2)`` and pins the original strain to its
quasi-steady level ``omega(I2, R2)``; its vector field is continuous but has
a kink on the switching line ``I2 + eps*R2 = N(1 - 1/R1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .core import FULL_LABELS, REDUCED_LABELS, FullState, ModelParams, ReducedState
from .errors import ConfigError, NonFiniteState, StateError, StepNotPositive, WindowMisaligned

DEFAULT_STEP = 0.05
WINDOW_DAYS = 14.0

_SYSTEM_CODES = {"full": _kernels.FULL, "reduced": _kernels.REDUCED}
_DIMS = {"full": 5, "reduced": 2}

State = Union[FullState, ReducedState]


def _as_vector(x, dim) -> np.ndarray:
    if isinstance(x, (FullState, ReducedState)):
        arr = x.as_array()
    else:
        arr = np.asarray(x, dtype=float)
    if arr.shape != (dim,):
        raise StateError(f"expected a state with {dim} components, got shape {arr.shape}")
    return arr


def full_rhs(p: ModelParams, x) -> np.ndarray:
    """Derivatives ``(dS, dI1, dR1, dI2, dR2)`` of the full model, people/day."""
    out = np.empty(5)
    _kernels.full_rhs(_as_vector(x, 5), p.as_array(), out)
    return out


def omega(p: ModelParams, y) -> float:
    """Quasi-steady original-strain prevalence at emerging-strain state ``y``.

    Zero on and beyond the switching line; otherwise the positive root of the
    original strain's steady-state equations with ``I2``, ``R2`` frozen.
    """
    i2, r2 = (float(v) for v in y) if isinstance(y, tuple) else _as_vector(y, 2)
    if p.beta1 <= 0.0:
        return 0.0
    n = p.n_pop
    num = n * (p.beta1 - p.gamma1) - p.beta1 * (i2 + p.epsilon * r2)
    if num <= 0.0:
        return 0.0
    inflow = p.beta2 * i2 + n * p.sigma1
    return num * inflow / (p.beta1 * (inflow + n * p.gamma1))


def omega_array(p: ModelParams, i2, r2) -> np.ndarray:
    """Vectorized :func:`omega` over arrays of ``I2`` and ``R2``."""
    i2, r2 = np.broadcast_arrays(np.asarray(i2, dtype=float), np.asarray(r2, dtype=float))
    if p.beta1 <= 0:
        return np.zeros(i2.shape)
    n = p.n_pop
    num = n * (p.beta1 - p.gamma1) - p.beta1 * (i2 + p.epsilon * r2)
    inflow = p.beta2 * i2 + n * p.sigma1
    return np.where(num > 0, np.maximum(num, 0.0) * inflow / (p.beta1 * (inflow + n * p.gamma1)), 0.0)


def omega_gradient(p: ModelParams, y) -> tuple[float, float]:
    """Closed-form ``(d omega/d I2, d omega/d R2)``.

    Points on the switching line take the zero branch, where omega vanishes
    identically.
    """
    i2, r2 = _as_vector(y, 2)
    if i2 + p.epsilon * r2 >= p.switching_level:
        return 0.0, 0.0
    n = p.n_pop
    w = omega(p, (i2, r2))
    inflow = p.beta2 * i2 + n * p.sigma1
    denom = inflow + n * p.gamma1
    d_i2 = n * p.gamma1 * (1.0 + p.beta2 * w / inflow) / denom - 1.0
    d_r2 = -p.epsilon * inflow / denom
    return d_i2, d_r2


def reduced_rhs(p: ModelParams, y) -> np.ndarray:
    """Derivatives ``(dI2, dR2)`` of the reduced switching system."""
    out = np.empty(2)
    _kernels.reduced_rhs(_as_vector(y, 2), p.as_array(), out)
    return out


def quasi_steady_strain1(p: ModelParams, y) -> tuple[float, float]:
    """Original-strain ``(I1, R1)`` solving its steady-state equations at fixed ``(I2, R2)``."""
    i2, r2 = _as_vector(y, 2)
    i1 = omega(p, (i2, r2))
    denom = p.n_pop * p.sigma1 + p.beta2 * i2
    if denom > 0:
        r1 = p.n_pop * p.gamma1 * i1 / denom
    else:
        # sigma1 = I2 = 0: I1 = 0 and R1 is fixed by the transmission balance alone
        r1 = max(p.switching_level - i2 - p.epsilon * r2, 0.0)
    return i1, r1


def lift_reduced(p: ModelParams, y) -> FullState:
    """Full state implied by a reduced state under the quasi-steady closure.

    Susceptibles take up the remainder of the population and can come out
    negative in corners of the triangle, so the result is not validated.
    """
    i2, r2 = _as_vector(y, 2)
    i1, r1 = quasi_steady_strain1(p, (i2, r2))
    return FullState.unchecked(p.n_pop - i1 - r1 - i2 - r2, i1, r1, i2, r2)


@dataclass(frozen=True)
class Trajectory:
    system: str
    times: np.ndarray
    values: np.ndarray  # one row per time, columns FULL_LABELS or REDUCED_LABELS
    params: ModelParams
    h: float

    def __len__(self):
        return len(self.times)

    @property
    def labels(self) -> tuple:
        return FULL_LABELS if self.system == "full" else REDUCED_LABELS

    def state(self, k) -> State:
        cls = FullState if self.system == "full" else ReducedState
        return cls.from_array(self.values[k], check=False)

    @property
    def states(self) -> list:
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self) -> State:
        return self.state(-1)

    def column(self, label) -> np.ndarray:
        return self.values[:, self.labels.index(label)]


def _check_step(h, t_span):
    t0, t1 = (float(t) for t in t_span)
    if not (math.isfinite(h) and h > 0):
        raise StepNotPositive(f"step h={h!r} must be a positive finite number")
    if not (math.isfinite(t0) and math.isfinite(t1) and t1 > t0):
        raise ConfigError(f"time span {t_span!r} must satisfy t1 > t0")
    return t0, t1


def integrate_rk4(system: str, p: ModelParams, x0, t_span, h: float = DEFAULT_STEP,
                  store: bool = True) -> Trajectory:
    """Fixed-step classical RK4.

    Parameters
    ----------
    system : {"full", "reduced"}
    x0 : FullState, ReducedState or array
        Initial state matching ``system``.
    t_span : (t0, t1)
        Days; the last step is shortened so the trajectory ends exactly at t1.
    h : float
        Step in days.
    store : bool
        Keep every step (default) or only the two endpoints.

    Raises
    ------
    StepNotPositive
        If ``h <= 0``.
    NonFiniteState
        If a NaN or infinity appears; carries the offending time.
    """
    if system not in _SYSTEM_CODES:
        raise ConfigError(f"unknown system {system!r}; expected 'full' or 'reduced'")
    h = float(h)
    t0, t1 = _check_step(h, t_span)
    y0 = _as_vector(x0, _DIMS[system]).copy()
    times, values, bad = _kernels.rk4(_SYSTEM_CODES[system], y0, p.as_array(), t0, t1, h, store)
    if bad >= 0:
        raise NonFiniteState(float(times[bad]))
    return Trajectory(system, times, values, p, h)


def integrate_reduced_batch(p: ModelParams, starts, t_end: float, h: float = 0.1):
    """Integrate many reduced-model starts over ``[0, t_end]`` with a whole number of steps.

    Returns ``(final_states, excursion)`` where ``excursion[k]`` is the
    largest distance (people) by which trajectory ``k`` left the triangle
    ``I2, R2 >= 0, I2 + R2 <= N`` at any step; non-positive means it never left.
    """
    h = float(h)
    _check_step(h, (0.0, t_end))
    n_steps = int(round(t_end / h))
    if abs(n_steps * h - t_end) > 1e-9 * max(1.0, t_end):
        raise StepNotPositive(f"t_end={t_end!r} is not a whole number of steps h={h!r}")
    starts = np.asarray(starts, dtype=float)
    if starts.ndim != 2 or starts.shape[1] != 2:
        raise StateError("starts must have shape (m, 2)")
    i2 = np.ascontiguousarray(starts[:, 0])
    r2 = np.ascontiguousarray(starts[:, 1])
    excursion = _kernels.rk4_reduced_batch(i2, r2, p.as_array(), h, n_steps)
    final = np.column_stack([i2, r2])
    if not np.all(np.isfinite(final)):
        raise NonFiniteState(float(t_end))
    return final, excursion


def reconstruct_full(traj: Trajectory) -> Trajectory:
    """Lift a reduced trajectory to full states via the quasi-steady closure."""
    if traj.system == "full":
        return traj
    p = traj.params
    i2, r2 = traj.values[:, 0], traj.values[:, 1]
    i1 = omega_array(p, i2, r2)
    denom = p.n_pop * p.sigma1 + p.beta2 * i2
    with np.errstate(invalid="ignore", divide="ignore"):
        r1 = np.where(denom > 0, p.n_pop * p.gamma1 * i1 / np.where(denom > 0, denom, 1.0),
                      np.maximum(p.switching_level - i2 - p.epsilon * r2, 0.0))
    s = p.n_pop - i1 - r1 - i2 - r2
    values = np.column_stack([s, i1, r1, i2, r2])
    return Trajectory("full", traj.times, values, p, traj.h)


@dataclass(frozen=True)
class IncidenceAccumulator:
    """Cumulative new infections per strain along a trajectory's time grid."""

    times: np.ndarray
    new_cases_1: np.ndarray
    new_cases_2: np.ndarray


def infection_inflows(p: ModelParams, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Force-of-infection inflows into I1 and I2 for rows of full states."""
    s, i1, r1, i2, r2 = (values[:, k] for k in range(5))
    n = p.n_pop
    inflow1 = p.beta1 / n * i1 * (s + (1.0 - p.epsilon) * r2)
    inflow2 = p.beta2 / n * i2 * (s + r1)
    return inflow1, inflow2


def cumulative_incidence(p: ModelParams, traj: Trajectory) -> IncidenceAccumulator:
    full = reconstruct_full(traj)
    f1, f2 = infection_inflows(p, full.values)
    dt = np.diff(full.times)
    c1 = np.concatenate([[0.0], np.cumsum(0.5 * (f1[1:] + f1[:-1]) * dt)])
    c2 = np.concatenate([[0.0], np.cumsum(0.5 * (f2[1:] + f2[:-1]) * dt)])
    return IncidenceAccumulator(full.times, c1, c2)


def accumulate_incidence(p: ModelParams, traj: Trajectory, window: float = WINDOW_DAYS) -> np.ndarray:
    """New cases per strain in consecutive windows starting at the trajectory's first time.

    Returns an array of shape ``(n_windows, 2)``; column 0 is the original
    strain.  Integrals use the trapezoid rule on the stored grid, so every
    window boundary must be a grid point.  Reduced trajectories are lifted
    with :func:`reconstruct_full` first.
    """
    ratio = window / traj.h
    per_window = int(round(ratio))
    if per_window < 1 or abs(ratio - per_window) > 1e-9 * ratio:
        raise WindowMisaligned(f"step h={traj.h!r} does not divide the {window}-day window")
    t0 = traj.times[0]
    n_windows = int(math.floor((traj.times[-1] - t0) / window + 1e-9))
    idx = np.arange(n_windows + 1) * per_window
    if n_windows and (idx[-1] >= len(traj.times)
                      or np.max(np.abs(traj.times[idx] - (t0 + window * np.arange(n_windows + 1)))) > 1e-6 * traj.h):
        raise WindowMisaligned("window boundaries do not fall on the trajectory grid")
    acc = cumulative_incidence(p, traj)
    out = np.empty((n_windows, 2))
    out[:, 0] = np.diff(acc.new_cases_1[idx])
    out[:, 1] = np.diff(acc.new_cases_2[idx])
    return out
