"""Steady states of the full and reduced models.

Boundary states have closed forms.  The coexistence state of the full model
reduces to a scalar root in ``I1``: after eliminating ``I2`` and ``R2`` with
the curves ``phi`` and ``psi``, two expressions for ``R1`` (``f`` from the
strain-1 transmission balance, ``g`` from the ``R1`` balance) must agree,
and ``f - g`` is strictly decreasing.  The reduced steady state is the
crossing of the two nullclines, each traced by an inner bisection.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .core import FullState, ModelParams, ReducedState
from .dynamics import full_rhs, omega
from .errors import BisectionStagnated, DegenerateRates, OutOfDomain, PreconditionFailed
from .reproduction import closed_form_reproduction

KINDS = ("disease_free", "original_only", "emerging_only", "coexistence")
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class SteadyStateReport:
    kind: str
    state: FullState
    physical: bool
    residual: float  # max |full RHS| at the state, people/day

    def as_dict(self) -> dict:
        s = self.state
        return {"kind": self.kind, "physical": self.physical, "residual": self.residual,
                "S": s.s, "I1": s.i1, "R1": s.r1, "I2": s.i2, "R2": s.r2}


def _residual(p: ModelParams, x: FullState) -> float:
    values = x.as_array()
    if not np.all(np.isfinite(values)):
        return math.nan
    return float(np.max(np.abs(full_rhs(p, values))))


def _report(p, kind, x, physical=None) -> SteadyStateReport:
    if physical is None:
        physical = x.is_physical
    return SteadyStateReport(kind, x, bool(physical), _residual(p, x))


def bisect_root(fn: Callable[[float], float], lo: float, hi: float, tol: float = 0.0,
                max_iter: int = MAX_BISECTIONS) -> float:
    """Root of ``fn`` on ``[lo, hi]`` given ``fn(lo) > 0 >= fn(hi)``.

    Halves until the bracket is no wider than ``tol`` or the midpoint can no
    longer be told apart from an endpoint in floating point.
    """
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid <= lo or mid >= hi:
            return mid
        if fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    if hi - lo <= max(tol, 4.0 * math.ulp(max(abs(lo), abs(hi)))):
        return 0.5 * (lo + hi)
    raise BisectionStagnated(f"bisection did not converge on [{lo!r}, {hi!r}]")


# -- boundary states -------------------------------------------------------

def _single_strain_state(n, beta, gamma, sigma):
    """(S, I, R) of a one-strain endemic state; NaN when beta = 0."""
    if beta <= 0.0:
        return math.nan, math.nan, math.nan
    excess = n * (beta - gamma) / (beta * (gamma + sigma))
    return n * gamma / beta, sigma * excess, gamma * excess


def boundary_steady_states(p: ModelParams) -> list:
    """Disease-free, original-only and emerging-only states, in that order.

    The single-strain states are always returned; they are flagged physical
    only when that strain's transmission rate exceeds its recovery rate.
    """
    n = p.n_pop
    x0 = FullState(n, 0.0, 0.0, 0.0, 0.0)
    s, i, r = _single_strain_state(n, p.beta1, p.gamma1, p.sigma1)
    x1 = FullState.unchecked(s, i, r, 0.0, 0.0)
    s, i, r = _single_strain_state(n, p.beta2, p.gamma2, p.sigma2)
    x2 = FullState.unchecked(s, 0.0, 0.0, i, r)
    return [
        _report(p, "disease_free", x0, True),
        _report(p, "original_only", x1, p.beta1 > p.gamma1),
        _report(p, "emerging_only", x2, p.beta2 > p.gamma2),
    ]


# -- coexistence of the full model ----------------------------------------

class CoexistenceCurves(NamedTuple):
    phi: float  # I2 at the candidate state
    psi: float  # R2
    f: float    # R1 from the strain-1 transmission balance
    g: float    # R1 from the R1 balance


def coexistence_domain(p: ModelParams) -> float:
    """Upper end ``N(1 - 1/R2)`` of the ``I1`` range on which the curves are defined.

    Returns 0 when the emerging strain is subcritical (empty domain).
    """
    if p.beta2 <= p.gamma2:
        return 0.0
    return p.n_pop * (1.0 - p.gamma2 / p.beta2)


def _curves(p: ModelParams, i1: float) -> CoexistenceCurves:
    n = p.n_pop
    b1e = p.beta1 * (1.0 - p.epsilon) * i1
    head = n * (p.beta2 - p.gamma2) - p.beta2 * i1
    denom = p.beta2 * (b1e + n * (p.gamma2 + p.sigma2))
    phi = head * (b1e + n * p.sigma2) / denom
    psi = n * p.gamma2 * head / denom
    f = n - i1 - phi - p.epsilon * psi - (n * p.gamma1 / p.beta1 if p.beta1 > 0 else math.inf)
    g_denom = n * p.sigma1 + p.beta2 * phi
    if g_denom > 0.0:
        g = n * p.gamma1 * i1 / g_denom
    else:
        g = math.inf if i1 > 0 else 0.0
    return CoexistenceCurves(phi, psi, f, g)


def coexistence_curves(p: ModelParams, i1: float) -> CoexistenceCurves:
    """``phi``, ``psi``, ``f`` and ``g`` at original-strain prevalence ``i1``.

    ``phi(I1)`` and ``psi(I1)`` solve the emerging-strain steady-state
    equations for ``I2`` and ``R2``; ``f`` and ``g`` are the two resulting
    expressions for ``R1``.  A coexistence state sits where ``f = g``.

    Raises
    ------
    OutOfDomain
        Unless ``0 <= i1 < N(1 - 1/R2)``.
    """
    upper = coexistence_domain(p)
    if not 0.0 <= i1 < upper:
        raise OutOfDomain(f"I1={i1!r} outside [0, {upper!r})")
    return _curves(p, float(i1))


def coexistence_gap(p: ModelParams, i1: float) -> float:
    """``f(I1) - g(I1)``; strictly decreasing on the closed domain."""
    c = _curves(p, float(i1))
    return c.f - c.g


@dataclass(frozen=True)
class NoCoexistence:
    """Returned when no coexistence state exists; ``failing`` names thresholds at or below 1."""

    failing: tuple
    thresholds: dict = field(default_factory=dict)

    def __bool__(self):
        return False

    def as_dict(self) -> dict:
        return {"kind": "no_coexistence", "failing": list(self.failing), "thresholds": dict(self.thresholds)}


def _thresholds(p: ModelParams) -> dict:
    try:
        rs = closed_form_reproduction(p)
        return {"r1": rs.r1, "r2": rs.r2, "r12": rs.r12, "r21": rs.r21}
    except DegenerateRates:
        out = {"r1": p.beta1 / p.gamma1, "r2": p.beta2 / p.gamma2, "r12": math.nan, "r21": math.nan}
        return out


def _failing(thresholds: dict) -> tuple:
    # NaN (undefined) counts as failing
    return tuple(k for k, v in thresholds.items() if not v > 1.0)


def coexistence_bracket(p: ModelParams):
    """``(0, I1*)`` if ``f - g`` changes sign across the domain, else None."""
    upper = coexistence_domain(p)
    if upper <= 0.0 or p.beta1 <= 0.0:
        return None
    if coexistence_gap(p, 0.0) > 0.0 and coexistence_gap(p, upper) < 0.0:
        return 0.0, upper
    return None


def coexistence_from_i1(p: ModelParams, i1: float) -> FullState:
    """Back-substitute a root ``I1`` of ``f - g`` into a full state."""
    c = _curves(p, i1)
    r1 = c.g
    s = p.n_pop - i1 - r1 - c.phi - c.psi
    return FullState.unchecked(s, i1, r1, c.phi, c.psi)


def bisect_coexistence(p: ModelParams, lo: float, hi: float) -> float:
    """Root of ``f - g`` inside a caller-supplied bracket ``[lo, hi]``."""
    # run to float resolution, well inside the 1e-10*N target
    return bisect_root(lambda v: coexistence_gap(p, v), lo, hi)


def solve_coexistence_full(p: ModelParams):
    """Coexistence steady state of the full model, or :class:`NoCoexistence`.

    The state exists when ``f - g`` changes sign over ``[0, N(1 - 1/R2)]``,
    which happens exactly when all four thresholds exceed 1.  The sign test
    and the thresholds are computed separately; a disagreement is reported.

    Raises
    ------
    BisectionStagnated
        If every threshold exceeds 1 but no sign change is found.
    """
    thresholds = _thresholds(p)
    failing = _failing(thresholds)
    bracket = coexistence_bracket(p)
    if bracket is None:
        if not failing:
            raise BisectionStagnated("all thresholds exceed 1 but f - g has no sign change")
        return NoCoexistence(failing, thresholds)
    if failing:
        warnings.warn(f"coexistence bracket found although {failing} <= 1", RuntimeWarning, stacklevel=2)
    i1 = bisect_coexistence(p, *bracket)
    return _report(p, "coexistence", coexistence_from_i1(p, i1))


# -- reduced model ---------------------------------------------------------

def i2_nullcline_residual(p: ModelParams, i2: float, r2: float) -> float:
    """``I2'/I2`` of the reduced model; zero on the nontrivial I2-nullcline."""
    w = omega(p, (i2, r2))
    return p.beta2 - p.gamma2 - p.beta2 / p.n_pop * (w + i2 + r2)


def r2_nullcline_residual(p: ModelParams, i2: float, r2: float) -> float:
    """``R2'`` of the reduced model."""
    w = omega(p, (i2, r2))
    return p.gamma2 * i2 - p.sigma2 * r2 - p.beta1 / p.n_pop * (1.0 - p.epsilon) * w * r2


def nullcline_r2(p: ModelParams, which: str, i2: float):
    """R2 on a nullcline at column ``i2``, searched over ``[0, N - i2]``.

    Returns ``(r2, found)``.  When the residual keeps one sign over the
    column, the I2-nullcline reports 0 and the R2-nullcline reports ``N - i2``
    with ``found`` false.
    """
    resid = i2_nullcline_residual if which == "i2_nullcline" else r2_nullcline_residual
    top = p.n_pop - i2
    at_zero = resid(p, i2, 0.0)
    at_top = resid(p, i2, top)
    if at_zero <= 0.0:
        return 0.0, at_zero == 0.0
    if at_top > 0.0:
        return top, False
    return bisect_root(lambda r: resid(p, i2, r), 0.0, top), True


def _nullcline_gap(p: ModelParams, i2: float) -> float:
    return nullcline_r2(p, "i2_nullcline", i2)[0] - nullcline_r2(p, "r2_nullcline", i2)[0]


class ReducedSteadyState(NamedTuple):
    state: ReducedState
    regime: str         # "coexistence" or "emerging_only"
    conjectured: bool   # True for 0 < epsilon < 1, where uniqueness is not established


def solve_reduced_steady_state(p: ModelParams) -> ReducedSteadyState:
    """Interior steady state of the reduced model as the crossing of its nullclines.

    Bisects the vertical gap between the I2- and R2-nullclines over
    ``0 <= I2 <= N(1 - 1/R2)``.  The regime is ``coexistence`` when the
    state lies strictly before the switching line (original strain present).

    Raises
    ------
    PreconditionFailed
        Unless ``R1 > 1``, ``R2 > 1`` and ``R21 > 1``.
    """
    t = _thresholds(p)
    missing = [k for k in ("r1", "r2", "r21") if not t[k] > 1.0]
    if missing:
        raise PreconditionFailed(f"reduced steady state needs {', '.join(missing)} > 1")
    upper = coexistence_domain(p)
    if not _nullcline_gap(p, 0.0) > 0.0:
        raise BisectionStagnated("I2-nullcline does not start above the R2-nullcline")
    i2 = bisect_root(lambda v: _nullcline_gap(p, v), 0.0, upper)
    r2 = 0.5 * (nullcline_r2(p, "i2_nullcline", i2)[0] + nullcline_r2(p, "r2_nullcline", i2)[0])
    regime = "coexistence" if i2 + p.epsilon * r2 < p.switching_level else "emerging_only"
    return ReducedSteadyState(ReducedState(i2, r2), regime, 0.0 < p.epsilon < 1.0)
