"""Reproduction numbers: closed forms and a next-generation-matrix oracle.

Only the two infectious compartments enter the next-generation matrix, so
``F`` and ``V`` are 2x2.  New infections of strain ``i`` land in ``I_i``;
``V`` holds the recovery outflows and is diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FullState, ModelParams, ReproductionSet
from .errors import DegenerateRates


def closed_form_reproduction(p: ModelParams) -> ReproductionSet:
    """Basic and invasion reproduction numbers from the rate parameters.

    ``r12`` measures the original strain invading the emerging-strain
    endemic state, ``r21`` the reverse.  Both are evaluated even when the
    state being invaded is not physical; the flags on the result say so.

    Raises
    ------
    DegenerateRates
        If ``beta1`` or ``beta2`` is zero, which puts a zero in the
        denominator of ``r12`` or ``r21``.
    """
    r1 = p.beta1 / p.gamma1
    r2 = p.beta2 / p.gamma2
    if r2 == 0.0:
        raise DegenerateRates("beta2", p.beta2, "beta2 > 0 (r12 divides by r2)")
    if r1 == 0.0:
        raise DegenerateRates("beta1", p.beta1, "beta1 > 0 (r21 divides by r1)")
    eps = p.epsilon
    r12 = (r1 / r2) * ((1.0 - eps) * p.beta2 + eps * p.gamma2 + p.sigma2) / (p.gamma2 + p.sigma2)
    r21 = (r2 / r1) * (p.beta1 + p.sigma1) / (p.gamma1 + p.sigma1)
    return ReproductionSet(
        r0=max(r1, r2), r1=r1, r2=r2, r12=r12, r21=r21,
        source="closed_form",
        r12_target_physical=p.beta2 > p.gamma2,
        r21_target_physical=p.beta1 > p.gamma1,
    )


@dataclass(frozen=True)
class NgmPieces:
    """New-infection and transition Jacobians at a state."""

    f_matrix: np.ndarray
    v_matrix: np.ndarray
    evaluated_at: FullState

    def strain_ratio(self, strain: int) -> float:
        """``F_i / V_i`` for the 1x1 block of strain ``i`` (1 or 2)."""
        k = strain - 1
        return self.f_matrix[k, k] / self.v_matrix[k, k]

    def next_generation(self) -> np.ndarray:
        return self.f_matrix @ np.linalg.inv(self.v_matrix)


def ngm_at_state(p: ModelParams, x: FullState) -> NgmPieces:
    """Linearized new-infection and transition matrices at ``x``.

    ``x`` should be a steady state; this is not checked.
    """
    n = p.n_pop
    f = np.diag([
        p.beta1 / n * (x.s + (1.0 - p.epsilon) * x.r2),
        p.beta2 / n * (x.s + x.r1),
    ])
    v = np.diag([p.gamma1, p.gamma2])
    return NgmPieces(f, v, x)


def spectral_radius_2x2(m) -> float:
    """Largest eigenvalue modulus of a real 2x2 matrix via the characteristic quadratic."""
    (a, b), (c, d) = np.asarray(m, dtype=float)
    if b * c == 0.0:
        # triangular: the eigenvalues are the diagonal entries
        return max(abs(a), abs(d))
    half_tr = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    if disc >= 0.0:
        root = math.sqrt(disc)
        return max(abs(half_tr + root), abs(half_tr - root))
    # complex pair: |lambda|^2 = determinant
    return math.sqrt(a * d - b * c)


def ngm_reproduction(p: ModelParams) -> ReproductionSet:
    """Reproduction numbers as spectral radii of next-generation matrices.

    ``r1``/``r2`` use the disease-free state; ``r12`` uses strain 1's block
    at the emerging-only state and ``r21`` strain 2's block at the
    original-only state.  Independent of :func:`closed_form_reproduction`
    apart from the steady-state formulas.
    """
    from .equilibria import boundary_steady_states

    x0, x1, x2 = (rep.state for rep in boundary_steady_states(p))
    at_x0 = ngm_at_state(p, x0)
    r1 = spectral_radius_2x2(np.diag([at_x0.strain_ratio(1), 0.0]))
    r2 = spectral_radius_2x2(np.diag([0.0, at_x0.strain_ratio(2)]))
    r12 = abs(ngm_at_state(p, x2).strain_ratio(1))
    r21 = abs(ngm_at_state(p, x1).strain_ratio(2))
    return ReproductionSet(
        r0=max(r1, r2), r1=r1, r2=r2, r12=r12, r21=r21,
        source="next_generation",
        r12_target_physical=p.beta2 > p.gamma2,
        r21_target_physical=p.beta1 > p.gamma1,
    )
