"""Patch geometry and normalization for model-ready example tensors."""

from __future__ import annotations

import numpy as np

from ..grids import Grid

FRAME_SIZE = 281
PATCH_SIZE = 256
# 281 -> 256 keeps rows/cols 12..267 inclusive: 12 leading, 13 trailing.
CROP_LEAD = (FRAME_SIZE - PATCH_SIZE) // 2
CROP_TRAIL = FRAME_SIZE - PATCH_SIZE - CROP_LEAD


def center_crop(values: np.ndarray) -> np.ndarray:
    """Crop a 281x281 frame to its central 256x256 patch.

    The split is 12 leading and 13 trailing rows/columns. Any trailing array
    dimensions (channels) pass through.
    """
    values = np.asarray(values)
    if values.shape[:2] != (FRAME_SIZE, FRAME_SIZE):
        raise ValueError(
            f"expected a {FRAME_SIZE}x{FRAME_SIZE} frame, got {values.shape[:2]}"
        )
    return values[CROP_LEAD : CROP_LEAD + PATCH_SIZE, CROP_LEAD : CROP_LEAD + PATCH_SIZE]


def center_crop_grid(grid: Grid) -> Grid:
    out_geo = None
    if grid.geo is not None:
        lat0, lon0 = grid.geo.pixel_to_latlon(CROP_LEAD, CROP_LEAD)
        out_geo = type(grid.geo)(
            lat0=float(lat0), lon0=float(lon0), dlat=grid.geo.dlat, dlon=grid.geo.dlon
        )
    return Grid(
        values=center_crop(grid.values),
        missing=center_crop(grid.missing),
        channel_id=grid.channel_id,
        geo=out_geo,
    )


def pad_to_frame(values: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Inverse of center_crop for 256x256 patches: pad 12 leading and 13
    trailing rows/columns with a constant."""
    values = np.asarray(values)
    if values.shape[:2] != (PATCH_SIZE, PATCH_SIZE):
        raise ValueError(
            f"expected a {PATCH_SIZE}x{PATCH_SIZE} patch, got {values.shape[:2]}"
        )
    pad = [(CROP_LEAD, CROP_TRAIL), (CROP_LEAD, CROP_TRAIL)]
    pad += [(0, 0)] * (values.ndim - 2)
    return np.pad(values, pad, mode="constant", constant_values=fill)


def channel_scale(values: np.ndarray, scale_kind: str = "variance") -> float:
    """Derive a normalization scale from data: the channel's variance by
    default, its standard deviation when scale_kind="stddev"."""
    if scale_kind not in ("variance", "stddev"):
        raise ValueError(f"unknown scale_kind {scale_kind!r}")
    var = float(np.var(np.asarray(values, dtype=np.float64)))
    return var if scale_kind == "variance" else float(np.sqrt(var))


def standardize(values: np.ndarray, mean: float, scale: float) -> np.ndarray:
    """out = (in - mean) / scale, elementwise; rejects a zero or non-finite
    scale."""
    if not np.isfinite(scale) or scale == 0.0:
        raise ValueError(f"scale must be finite and nonzero, got {scale}")
    if not np.isfinite(mean):
        raise ValueError(f"mean must be finite, got {mean}")
    return (np.asarray(values, dtype=np.float64) - mean) / scale
