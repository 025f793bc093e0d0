"""Parameter and state value types shared by every other module.

Compartments follow the two-strain model: susceptibles ``S``, infectious
``I1``/``I2`` and temporarily immune ``R1``/``R2`` for the original (1) and
emerging (2) strain.  All rates are per day, populations are in people and
the population size is real-valued because it is fitted as an effective
population level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EpsilonOutOfRange,
    NegativeRate,
    NonPositivePopulation,
    ParameterError,
    StateError,
)

PARAM_NAMES = ("beta1", "beta2", "gamma1", "gamma2", "sigma1", "sigma2", "epsilon", "n_pop")
RATE_NAMES = PARAM_NAMES[:6]
FULL_LABELS = ("S", "I1", "R1", "I2", "R2")
REDUCED_LABELS = ("I2", "R2")


@dataclass(frozen=True)
class ModelParams:
    beta1: float    # transmission rate, original strain
    beta2: float    # transmission rate, emerging strain
    gamma1: float   # recovery rate
    gamma2: float
    sigma1: float   # immunity-loss rate
    sigma2: float
    epsilon: float  # cross-immunity conferred by strain 2 against strain 1
    n_pop: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ParameterError(name, value, "must be a real number")
            value = float(value)
            if not math.isfinite(value):
                raise ParameterError(name, value, "must be finite")
            object.__setattr__(self, name, value)
        if self.n_pop <= 0:
            raise NonPositivePopulation("n_pop", self.n_pop, "n_pop > 0")
        for name in ("beta1", "beta2", "sigma1", "sigma2"):
            if getattr(self, name) < 0:
                raise NegativeRate(name, getattr(self, name), f"{name} >= 0")
        for name in ("gamma1", "gamma2"):
            if getattr(self, name) <= 0:
                raise NegativeRate(name, getattr(self, name), f"{name} > 0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise EpsilonOutOfRange("epsilon", self.epsilon, "0 <= epsilon <= 1")

    @property
    def max_rate(self) -> float:
        return max(self.beta1, self.beta2, self.gamma1, self.gamma2, self.sigma1, self.sigma2)

    @property
    def switching_level(self) -> float:
        """Value of ``I2 + eps*R2`` at which the original strain's quasi-steady level hits zero."""
        if self.beta1 <= 0:
            return -math.inf
        return self.n_pop * (1.0 - self.gamma1 / self.beta1)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in PARAM_NAMES], dtype=float)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def with_values(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def validate_params(raw) -> ModelParams:
    """Build a :class:`ModelParams` from a mapping, sequence or existing instance.

    Sequences are read in the order ``beta1, beta2, gamma1, gamma2, sigma1,
    sigma2, epsilon, n_pop``.  Passing an existing ``ModelParams`` returns it
    unchanged.
    """
    if isinstance(raw, ModelParams):
        return raw
    if isinstance(raw, Mapping):
        missing = [k for k in PARAM_NAMES if k not in raw]
        extra = [k for k in raw if k not in PARAM_NAMES]
        if missing:
            raise ParameterError(missing[0], None, "required parameter is missing")
        if extra:
            raise ParameterError(extra[0], raw[extra[0]], "unknown parameter")
        return ModelParams(**{k: raw[k] for k in PARAM_NAMES})
    if isinstance(raw, (Sequence, np.ndarray)) and not isinstance(raw, str):
        if len(raw) != len(PARAM_NAMES):
            raise ParameterError("params", raw, f"expected {len(PARAM_NAMES)} values")
        return ModelParams(*raw)
    raise ParameterError("params", raw, "expected mapping, sequence or ModelParams")


def _check_nonnegative(obj, names):
    for name in names:
        value = float(getattr(obj, name))
        if not value >= 0.0:  # also rejects NaN
            raise StateError(f"{name}={value!r} must be >= 0")
        object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class FullState:
    s: float
    i1: float
    r1: float
    i2: float
    r2: float

    def __post_init__(self):
        _check_nonnegative(self, ("s", "i1", "r1", "i2", "r2"))

    @classmethod
    def unchecked(cls, s, i1, r1, i2, r2) -> "FullState":
        """Construct without the non-negativity check (non-physical steady states, reconstructions)."""
        obj = object.__new__(cls)
        for name, value in zip(("s", "i1", "r1", "i2", "r2"), (s, i1, r1, i2, r2)):
            object.__setattr__(obj, name, float(value))
        return obj

    @classmethod
    def from_array(cls, values, check=True) -> "FullState":
        values = np.asarray(values, dtype=float)
        return cls(*values) if check else cls.unchecked(*values)

    @classmethod
    def from_infected(cls, n_pop, i1=0.0, r1=0.0, i2=0.0, r2=0.0) -> "FullState":
        """State with susceptibles filling the rest of the population."""
        return cls(n_pop - i1 - r1 - i2 - r2, i1, r1, i2, r2)

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.i1, self.r1, self.i2, self.r2], dtype=float)

    @property
    def total(self) -> float:
        return self.s + self.i1 + self.r1 + self.i2 + self.r2

    @property
    def is_physical(self) -> bool:
        return all(v >= 0.0 for v in (self.s, self.i1, self.r1, self.i2, self.r2))

    def reduced(self) -> "ReducedState":
        return ReducedState(self.i2, self.r2)


@dataclass(frozen=True)
class ReducedState:
    i2: float
    r2: float

    def __post_init__(self):
        _check_nonnegative(self, ("i2", "r2"))

    @classmethod
    def unchecked(cls, i2, r2) -> "ReducedState":
        obj = object.__new__(cls)
        object.__setattr__(obj, "i2", float(i2))
        object.__setattr__(obj, "r2", float(r2))
        return obj

    @classmethod
    def from_array(cls, values, check=True) -> "ReducedState":
        values = np.asarray(values, dtype=float)
        return cls(*values) if check else cls.unchecked(*values)

    def as_array(self) -> np.ndarray:
        return np.array([self.i2, self.r2], dtype=float)

    def in_trapping_region(self, p: ModelParams, tol: float = 0.0) -> bool:
        """Membership in the triangle ``I2, R2 >= 0, I2 + R2 <= N`` (with slack ``tol`` people)."""
        return self.i2 >= -tol and self.r2 >= -tol and self.i2 + self.r2 <= p.n_pop + tol


@dataclass(frozen=True)
class ReproductionSet:
    """Basic and invasion reproduction numbers.

    ``r12`` is the reproduction number of the original strain invading the
    emerging-strain endemic state and ``r21`` the converse.  The
    ``*_target_physical`` flags record whether the endemic state being
    invaded actually exists (the numbers are computed regardless).
    """

    r0: float
    r1: float
    r2: float
    r12: float
    r21: float
    source: str = "closed_form"
    r12_target_physical: bool = True
    r21_target_physical: bool = True

    def __post_init__(self):
        for f in fields(self)[:5]:
            value = float(getattr(self, f.name))
            if not value >= 0.0:
                raise ValueError(f"{f.name}={value!r} must be >= 0")
            object.__setattr__(self, f.name, value)
        if self.r0 != max(self.r1, self.r2):
            raise ValueError("r0 must equal max(r1, r2)")

    def thresholds(self) -> tuple:
        return (self.r1, self.r2, self.r12, self.r21)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
