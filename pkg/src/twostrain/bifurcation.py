"""Long-run regime classification and two-parameter scans.

Regions:

* I   -- neither strain persists.
* II  -- the original strain persists and the emerging strain cannot invade.
* III -- the emerging strain takes over.
* IV  -- both strains coexist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelParams
from .equilibria import _thresholds
from .errors import InvalidAxis

REGIONS = ("I", "II", "III", "IV")
SCAN_AXES = ("beta1", "beta2", "gamma1", "gamma2", "sigma1", "sigma2", "epsilon")
QUANTITIES = ("region", "r12", "r21")


@dataclass(frozen=True)
class RegionLabel:
    label: str
    thresholds: dict       # r1, r2, r12, r21 (NaN where a ratio is undefined)
    contested: bool = False  # both single-strain states resist invasion

    def __str__(self):
        return self.label


def _above(v) -> bool:
    return v > 1.0  # NaN is never above


def classify_region(p: ModelParams) -> RegionLabel:
    """Label the long-run regime from the four reproduction thresholds.

    Checked in the order I, IV, II, III.  When both single-strain states
    resist invasion (``R12 <= 1`` and ``R21 <= 1`` with ``R1, R2 > 1``) the
    strain with the larger basic reproduction number wins the label and
    ``contested`` is set.  A threshold exactly equal to 1 counts as not
    exceeded, which places ties in the lower-numbered region.
    """
    t = _thresholds(p)
    r1, r2, r12, r21 = (_above(t[k]) for k in ("r1", "r2", "r12", "r21"))
    if not r1 and not r2:
        return RegionLabel("I", t)
    if r1 and r2 and r12 and r21:
        return RegionLabel("IV", t)
    if r1 and r2 and not r12 and not r21:
        return RegionLabel("II" if t["r1"] >= t["r2"] else "III", t, contested=True)
    if r1 and (not r2 or not r21):
        return RegionLabel("II", t)
    return RegionLabel("III", t)


@dataclass(frozen=True)
class Axis:
    name: str
    values: np.ndarray

    def __len__(self):
        return len(self.values)


def axis(name: str, start: float, stop: float, num: int) -> Axis:
    """Uniform axis with both endpoints included."""
    return make_axis(name, np.linspace(float(start), float(stop), int(num)))


def make_axis(name: str, values) -> Axis:
    if name not in SCAN_AXES:
        raise InvalidAxis(f"cannot scan {name!r}; choose from {', '.join(SCAN_AXES)}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 1:
        raise InvalidAxis(f"axis {name!r} needs a one-dimensional list of values")
    if not np.all(np.isfinite(values)) or np.any(np.diff(values) <= 0):
        raise InvalidAxis(f"axis {name!r} values must be finite and strictly increasing")
    return Axis(name, values)


@dataclass(frozen=True)
class ScanGrid:
    axis1: Axis
    axis2: Axis
    fixed: ModelParams
    quantity: str
    cells: np.ndarray  # shape (len(axis1), len(axis2)); RegionLabel objects or floats

    def rows(self):
        """Yield ``(axis1 value, axis2 value, cell)`` with axis2 varying fastest."""
        for i, a in enumerate(self.axis1.values):
            for j, b in enumerate(self.axis2.values):
                yield a, b, self.cells[i, j]

    def params_at(self, i: int, j: int) -> ModelParams:
        return _cell_params(self.fixed, self.axis1, self.axis2, i, j)

    def labels(self) -> np.ndarray:
        if self.quantity != "region":
            raise ValueError("labels() applies to region scans only")
        return np.vectorize(lambda c: c.label, otypes=[object])(self.cells)


def _check_axes(axis1, axis2):
    for ax in (axis1, axis2):
        if not isinstance(ax, Axis):
            raise InvalidAxis("axes must be built with axis() or make_axis()")
        make_axis(ax.name, ax.values)
    if axis1.name == axis2.name:
        raise InvalidAxis(f"both axes scan {axis1.name!r}")


def _cell_params(fixed, axis1, axis2, i, j) -> ModelParams:
    return fixed.with_values(**{axis1.name: axis1.values[i], axis2.name: axis2.values[j]})


def _scan(fixed, axis1, axis2, quantity, cell_fn):
    _check_axes(axis1, axis2)
    cells = np.empty((len(axis1), len(axis2)), dtype=object if quantity == "region" else float)
    for i in range(len(axis1)):
        for j in range(len(axis2)):
            cells[i, j] = cell_fn(_cell_params(fixed, axis1, axis2, i, j))
    return ScanGrid(axis1, axis2, fixed, quantity, cells)


def scan_regions(fixed: ModelParams, axis1: Axis, axis2: Axis) -> ScanGrid:
    """Region label for every cell of the ``axis1`` x ``axis2`` grid."""
    return _scan(fixed, axis1, axis2, "region", classify_region)


def scan_scalar(fixed: ModelParams, axis1: Axis, axis2: Axis, quantity: str) -> ScanGrid:
    """Invasion reproduction number ``r12`` or ``r21`` over the grid (NaN where undefined)."""
    if quantity not in ("r12", "r21"):
        raise InvalidAxis(f"quantity must be 'r12' or 'r21', not {quantity!r}")
    return _scan(fixed, axis1, axis2, quantity, lambda p: float(_thresholds(p)[quantity]))


def scan(fixed: ModelParams, axis1: Axis, axis2: Axis, quantity: str = "region") -> ScanGrid:
    if quantity == "region":
        return scan_regions(fixed, axis1, axis2)
    return scan_scalar(fixed, axis1, axis2, quantity)


def near_threshold(label: RegionLabel, margin: float) -> bool:
    """True when any defined threshold lies within ``margin`` of 1."""
    return any(math.isfinite(v) and abs(v - 1.0) < margin for v in label.thresholds.values())
