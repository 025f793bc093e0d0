"""Phase-plane tools for the reduced ``(I2, R2)`` system.

Everything here lives in the triangle ``I2, R2 >= 0, I2 + R2 <= N``.  The
reduced field has a kink on the switching line, so derivative estimates
switch to one-sided differences when a stencil would cross it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams
from .dynamics import _as_vector, omega, omega_gradient, reduced_rhs
from .equilibria import (
    _thresholds,
    i2_nullcline_residual,
    nullcline_r2,
    r2_nullcline_residual,
)
from .errors import NotSteadyState, OnSwitchingLine, OutOfDomain, PreconditionFailed

NULLCLINES = ("i2_nullcline", "r2_nullcline")


# -- switching line --------------------------------------------------------

@dataclass(frozen=True)
class SwitchingLine:
    """The line ``I2 + eps*R2 = level`` where the original strain's quasi-steady level hits zero."""

    intercept_i2: float  # level = N(1 - 1/R1), also the I2-axis intercept
    epsilon: float
    n_pop: float

    def side(self, i2: float, r2: float) -> int:
        """-1 before the line (original strain present), +1 beyond, 0 on it."""
        v = float(i2) + self.epsilon * float(r2)
        return int(v > self.intercept_i2) - int(v < self.intercept_i2)

    def endpoints(self) -> tuple:
        """The two points where the line meets the boundary of the triangle."""
        c, eps, n = self.intercept_i2, self.epsilon, self.n_pop
        start = (c, 0.0)
        if eps == 0.0:
            return start, (c, n - c)
        if c / eps <= n:
            return start, (0.0, c / eps)
        r2 = (n - c) / (1.0 - eps)
        return start, (n - r2, r2)


def switching_line(p: ModelParams):
    """The switching line, or None when ``R1 <= 1`` (the original strain never persists)."""
    if p.beta1 <= p.gamma1:
        return None
    return SwitchingLine(p.switching_level, p.epsilon, p.n_pop)


# -- nullclines ------------------------------------------------------------

@dataclass(frozen=True)
class NullclineSample:
    which: str
    points: np.ndarray          # (m, 2) rows of (I2, R2)
    parameter_grid: np.ndarray  # the I2 values requested
    found: np.ndarray           # False where the nullcline has no root in the column
    missing: tuple = field(default=())

    @property
    def monotonicity(self) -> str:
        """'increasing', 'decreasing' or 'mixed' over the columns with a root."""
        r2 = self.points[self.found, 1]
        if len(r2) < 2:
            return "mixed"
        d = np.diff(r2)
        if np.all(d > 0):
            return "increasing"
        if np.all(d < 0):
            return "decreasing"
        return "mixed"

    def residuals(self, p: ModelParams) -> np.ndarray:
        resid = i2_nullcline_residual if self.which == "i2_nullcline" else r2_nullcline_residual
        return np.array([resid(p, a, b) for a, b in self.points[self.found]])


def _require_attractor_hypotheses(p: ModelParams):
    t = _thresholds(p)
    missing = [k for k in ("r1", "r2", "r21") if not t[k] > 1.0]
    if missing:
        raise PreconditionFailed(f"nullcline geometry needs {', '.join(missing)} > 1")


def sample_nullclines(p: ModelParams, grid) -> tuple:
    """Trace both nullclines over the ``I2`` values in ``grid``.

    For each column the ``R2`` value is found by bisection over ``[0, N - I2]``.
    Columns with no root are kept (``found`` false) and listed in
    ``missing``; the I2-nullcline leaves the triangle through the ``I2``
    axis, so its missing columns carry ``R2 = 0``.

    Returns
    -------
    (NullclineSample, NullclineSample)
        The I2-nullcline then the R2-nullcline.
    """
    _require_attractor_hypotheses(p)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid >= p.n_pop):
        raise OutOfDomain("nullcline grid must lie in [0, N)")
    out = []
    for which in NULLCLINES:
        pts = np.empty((len(grid), 2))
        found = np.empty(len(grid), dtype=bool)
        for k, i2 in enumerate(grid):
            r2, ok = nullcline_r2(p, which, float(i2))
            pts[k] = i2, r2
            found[k] = ok
        missing = tuple(float(v) for v in grid[~found])
        out.append(NullclineSample(which, pts, grid, found, missing))
    return tuple(out)


# -- vector field and directions ------------------------------------------

def region_direction(p: ModelParams, y) -> tuple:
    """Signs ``(sign I2', sign R2')`` at ``y`` as -1, 0 or +1."""
    d = reduced_rhs(p, y)
    return int(np.sign(d[0])), int(np.sign(d[1]))


def vector_field(p: ModelParams, i2_values, r2_values) -> np.ndarray:
    """Reduced-model field on the grid points inside the triangle.

    Returns rows ``(I2, R2, dI2, dR2, magnitude, unit_I2, unit_R2)``,
    ``I2`` varying slowest.  The unit direction is zero where the field
    vanishes.
    """
    rows = []
    n = p.n_pop
    for a in np.asarray(i2_values, dtype=float):
        for b in np.asarray(r2_values, dtype=float):
            if a < 0 or b < 0 or a + b > n * (1 + 1e-12):
                continue
            d = reduced_rhs(p, (a, b))
            mag = math.hypot(d[0], d[1])
            u = d / mag if mag > 0 else (0.0, 0.0)
            rows.append((a, b, d[0], d[1], mag, u[0], u[1]))
    return np.array(rows).reshape(-1, 7)


# -- Dulac test ------------------------------------------------------------

def dulac_expression(p: ModelParams, y) -> float:
    """Divergence of the reduced field scaled by ``1/I2``, closed form.

    Equals ``-(beta2/N)(dw/dI2 + 1) - sigma2/I2
    - beta1(1 - eps)/(N I2) * (dw/dR2 * R2 + w)``.  Strictly negative
    values on a region rule out closed orbits there.
    """
    i2, r2 = _as_vector(y, 2)
    if not i2 > 0:
        raise OutOfDomain("the Dulac multiplier 1/I2 needs I2 > 0")
    n = p.n_pop
    w = omega(p, (i2, r2))
    w_i, w_r = omega_gradient(p, (i2, r2))
    return (-p.beta2 / n * (w_i + 1.0) - p.sigma2 / i2
            - p.beta1 * (1.0 - p.epsilon) / (n * i2) * (w_r * r2 + w))


def _scaled_field(p, i2, r2):
    d = reduced_rhs(p, (i2, r2))
    return d[0] / i2, d[1] / i2


def _difference(fn, x, h, side_at, centre_side):
    """Central difference unless a stencil point sits across the kink."""
    lo_side, hi_side = side_at(x - h), side_at(x + h)
    if lo_side == centre_side == hi_side:
        return (fn(x + h) - fn(x - h)) / (2 * h)
    if centre_side <= 0 and lo_side == centre_side:
        return (fn(x) - fn(x - h)) / h
    return (fn(x + h) - fn(x)) / h


def dulac_finite_difference(p: ModelParams, y, step: float | None = None) -> float:
    """Finite-difference recomputation of :func:`dulac_expression` (default step ``1e-4 N``)."""
    i2, r2 = _as_vector(y, 2)
    if not i2 > 0:
        raise OutOfDomain("the Dulac multiplier 1/I2 needs I2 > 0")
    h = 1e-4 * p.n_pop if step is None else step
    line = switching_line(p)

    def side(a, b):
        return line.side(a, b) if line is not None else 1

    centre = side(i2, r2)
    h_i = min(h, 0.5 * i2)
    d_i = _difference(lambda a: _scaled_field(p, a, r2)[0], i2, h_i, lambda a: side(a, r2), centre)
    if r2 - h < 0:
        d_r = (_scaled_field(p, i2, r2 + h)[1] - _scaled_field(p, i2, r2)[1]) / h
    else:
        d_r = _difference(lambda b: _scaled_field(p, i2, b)[1], r2, h, lambda b: side(i2, b), centre)
    return d_i + d_r


# -- local stability -------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    jacobian: np.ndarray
    trace: float
    determinant: float
    sign_pattern_ok: bool  # signs [[-, -], [+, -]]
    step: float

    @property
    def stable(self) -> bool:
        return self.trace < 0 and self.determinant > 0

    def as_dict(self) -> dict:
        return {"jacobian": self.jacobian.tolist(), "trace": self.trace,
                "determinant": self.determinant, "sign_pattern_ok": self.sign_pattern_ok,
                "stable": self.stable}


def steady_residual_tolerance(p: ModelParams) -> float:
    return 1e-8 * p.n_pop * p.max_rate


def stability_sign_check(p: ModelParams, y_star, residual_tol: float | None = None) -> StabilityReport:
    """Central-difference Jacobian of the reduced field at a steady state.

    The step starts at ``1e-5 N`` and shrinks tenfold, at most three times,
    until no stencil point crosses the switching line.

    Raises
    ------
    NotSteadyState
        If ``max |field|`` at ``y_star`` exceeds the tolerance
        (default ``1e-8 N`` times the largest rate).
    OnSwitchingLine
        If even the smallest step straddles the kink.
    """
    y = _as_vector(y_star, 2)
    tol = steady_residual_tolerance(p) if residual_tol is None else residual_tol
    resid = float(np.max(np.abs(reduced_rhs(p, y))))
    if resid > tol:
        raise NotSteadyState(f"max |field| = {resid!r} exceeds {tol!r}")
    line = switching_line(p)
    h = 1e-5 * p.n_pop
    for _ in range(4):
        stencil = [y + s * h * e for e in np.eye(2) for s in (1.0, -1.0)]
        if line is None:
            clean = True
        else:
            centre = line.side(*y)
            clean = centre != 0 and all(line.side(*q) == centre for q in stencil)
        if clean:
            break
        h /= 10.0
    else:
        raise OnSwitchingLine(f"steady state at {tuple(y)} lies on the switching line")
    jac = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        jac[:, k] = (reduced_rhs(p, y + e) - reduced_rhs(p, y - e)) / (2 * h)
    pattern = jac[0, 0] < 0 and jac[0, 1] < 0 and jac[1, 0] > 0 and jac[1, 1] < 0
    return StabilityReport(jac, float(np.trace(jac)), float(np.linalg.det(jac)), bool(pattern), h)

