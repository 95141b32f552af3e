"""Radiance to brightness-temperature conversion for infrared window bands.

The forward conversion inverts the Planck function with per-band calibration
constants; the reverse direction is its analytic inverse. Values that cannot
be converted (non-positive radiance, temperatures outside the physical range)
are flagged missing rather than clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grids import BT_MAX_K, BT_MIN_K, Grid


@dataclass(frozen=True)
class PlanckConstants:
    """Per-band calibration constants.

    fk1: W m-2 sr-1 um-1 scale term, > 0
    fk2: K-equivalent exponent term, > 0
    bc1: additive bias correction, K
    bc2: multiplicative bias correction, dimensionless, > 0
    """

    fk1: float
    fk2: float
    bc1: float = 0.0
    bc2: float = 1.0

    def __post_init__(self) -> None:
        if not (self.fk1 > 0 and self.fk2 > 0 and self.bc2 > 0):
            raise ValueError("Planck constants require fk1 > 0, fk2 > 0, bc2 > 0")
        if not all(np.isfinite([self.fk1, self.fk2, self.bc1, self.bc2])):
            raise ValueError("Planck constants must be finite")


def brightness_temperature(radiance: np.ndarray, k: PlanckConstants) -> np.ndarray:
    """Raw Planck inversion, no range handling. radiance must be > 0."""
    radiance = np.asarray(radiance, dtype=np.float64)
    return (k.fk2 / np.log1p(k.fk1 / radiance) - k.bc1) / k.bc2


def radiance(bt: np.ndarray, k: PlanckConstants) -> np.ndarray:
    """Analytic inverse of brightness_temperature."""
    bt = np.asarray(bt, dtype=np.float64)
    return k.fk1 / np.expm1(k.fk2 / (k.bc1 + k.bc2 * bt))


def radiance_to_bt(grid: Grid, k: PlanckConstants) -> Grid:
    """Convert a radiance grid to brightness temperature in kelvin.

    Non-positive radiances and results outside [150, 350] K are flagged
    missing; their value planes are set to 0 so no sentinel leaks into stats.
    """
    vals = grid.values
    bad_input = grid.missing | ~(vals > 0.0) | ~np.isfinite(vals)
    safe = np.where(bad_input, 1.0, vals)
    bt = brightness_temperature(safe, k)
    out_of_range = (bt < BT_MIN_K) | (bt > BT_MAX_K) | ~np.isfinite(bt)
    missing = bad_input | out_of_range
    return grid.copy_with(values=np.where(missing, 0.0, bt), missing=missing)


def bt_to_radiance(grid: Grid, k: PlanckConstants) -> Grid:
    """Convert a brightness-temperature grid back to radiance."""
    vals = grid.values
    bad = grid.missing | ~np.isfinite(vals) | (k.bc1 + k.bc2 * vals <= 0.0)
    safe = np.where(bad, 200.0, vals)
    rad = radiance(safe, k)
    return grid.copy_with(values=np.where(bad, 0.0, rad), missing=bad)
