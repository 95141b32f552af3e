"""False-color composites from split-window brightness temperatures.

The composite maps the 12 um temperature to red, the 12-11 um difference to
blue, and the 11-8 um difference to green, each through a fixed affine range.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..grids import Grid


@dataclass(frozen=True)
class AshBounds:
    """Affine input ranges (lo, hi) in kelvin for each output channel."""

    red: tuple[float, float] = (243.0, 303.0)
    green: tuple[float, float] = (-4.0, 5.0)
    blue: tuple[float, float] = (-4.0, 2.0)

    def __post_init__(self) -> None:
        for name, (lo, hi) in (("red", self.red), ("green", self.green), ("blue", self.blue)):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} bounds must be finite with lo < hi")


def scale_to_byte(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """byte = round(255 * clamp((x - lo) / (hi - lo), 0, 1))"""
    t = np.clip((np.asarray(x, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)
    return np.rint(255.0 * t).astype(np.uint8)


def render_ash(
    bt12: Grid, bt11: Grid, bt8: Grid, bounds: AshBounds = AshBounds()
) -> np.ndarray:
    """Render an RGB uint8 image of shape (H, W, 3).

    Pixels missing in any input render as black. Inputs must share a shape.
    """
    if not (bt12.shape == bt11.shape == bt8.shape):
        raise ValueError(
            f"band shapes differ: {bt12.shape}, {bt11.shape}, {bt8.shape}"
        )
    missing = bt12.missing | bt11.missing | bt8.missing
    rgb = np.stack(
        [
            scale_to_byte(bt12.values, *bounds.red),
            scale_to_byte(bt11.values - bt8.values, *bounds.green),
            scale_to_byte(bt12.values - bt11.values, *bounds.blue),
        ],
        axis=-1,
    )
    rgb[missing] = 0
    return rgb


def save_png(rgb: np.ndarray, path: str | Path) -> None:
    from PIL import Image

    Image.fromarray(rgb, mode="RGB").save(str(path), format="PNG")
