"""Line-filter screening for contrail-like structure in split-window imagery.

The screen subtracts a local median background from the brightness
temperature difference, convolves with a bank of oriented line kernels, and
keeps pixels where both the best line response and the high-passed
difference clear their thresholds. Small connected components are removed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grids import Grid


@dataclass(frozen=True)
class ScreenParams:
    """Line-screen configuration.

    n_orientations: number of kernel angles spanning [0, 180)
    kernel_len: line kernel length in pixels (odd)
    kernel_width: line kernel width in pixels
    btd_threshold: minimum high-passed temperature difference, K
    response_threshold: minimum oriented-line response, K
    min_component_px: connected components smaller than this are dropped
    background_size: median-filter window for the background estimate
    """

    n_orientations: int = 16
    kernel_len: int = 19
    kernel_width: int = 1
    btd_threshold: float = 0.5
    response_threshold: float = 0.5
    min_component_px: int = 10
    background_size: int = 11

    def __post_init__(self) -> None:
        if self.n_orientations < 4:
            raise ValueError("need at least 4 orientations")
        if self.kernel_len <= self.kernel_width:
            raise ValueError("kernel_len must exceed kernel_width")
        if self.kernel_len % 2 == 0:
            raise ValueError("kernel_len must be odd")
        if self.min_component_px < 1:
            raise ValueError("min_component_px must be at least 1")
        if self.background_size < 3 or self.background_size % 2 == 0:
            raise ValueError("background_size must be odd and at least 3")


# 8-connectivity for component analysis throughout the toolkit.
CONNECT_8 = np.ones((3, 3), dtype=bool)


def btd(bt11: Grid, bt12: Grid) -> Grid:
    """Split-window brightness temperature difference (11 um minus 12 um).
    Missing flags propagate from either band."""
    if bt11.shape != bt12.shape:
        raise ValueError(f"band shapes differ: {bt11.shape} vs {bt12.shape}")
    missing = bt11.missing | bt12.missing
    values = np.where(missing, 0.0, bt11.values - bt12.values)
    return Grid(values=values, missing=missing, channel_id=0, geo=bt11.geo)


def line_kernel(angle_deg: float, length: int, width: int = 1) -> np.ndarray:
    """Rasterize a line of the given angle into a square kernel that sums
    to 1.

    The line is sampled at half-pixel steps along its length (and across its
    width when width > 1) and each sample deposits bilinear weights, so
    kernels at angles 90 degrees apart are exact array rotations of each
    other.
    """
    size = length if length % 2 else length + 1
    half = (size - 1) // 2
    theta = np.radians(angle_deg)
    # Direction in (row, col); angle 0 runs along columns.
    dr, dc = np.sin(theta), np.cos(theta)
    pr, pc = -dc, dr

    kernel = np.zeros((size, size), dtype=np.float64)
    ts = np.arange(-(length - 1) / 2.0, (length - 1) / 2.0 + 1e-9, 0.5)
    if width > 1:
        ws = np.arange(-(width - 1) / 2.0, (width - 1) / 2.0 + 1e-9, 0.5)
    else:
        ws = np.array([0.0])
    for t in ts:
        for s in ws:
            r = half + t * dr + s * pr
            c = half + t * dc + s * pc
            r0 = int(np.floor(r))
            c0 = int(np.floor(c))
            fr = r - r0
            fc = c - c0
            for (rr, cc, wgt) in (
                (r0, c0, (1 - fr) * (1 - fc)),
                (r0, c0 + 1, (1 - fr) * fc),
                (r0 + 1, c0, fr * (1 - fc)),
                (r0 + 1, c0 + 1, fr * fc),
            ):
                if 0 <= rr < size and 0 <= cc < size and wgt > 0:
                    kernel[rr, cc] += wgt
    # The ideal deposit is symmetric under a half-turn; averaging with the
    # rotated array cancels float rounding so the symmetry holds exactly.
    kernel = (kernel + kernel[::-1, ::-1]) / 2.0
    total = kernel.sum()
    if total <= 0:
        raise ValueError("degenerate line kernel")
    return kernel / total


def orientation_bank(params: ScreenParams) -> list[np.ndarray]:
    """Kernels at n equally spaced angles covering [0, 180).

    For even n the upper half is built by rotating the lower-half arrays, so
    the bank is exactly closed under 90-degree rotation and the screen is
    equivariant to quarter-turns of its input.
    """
    n = params.n_orientations
    step = 180.0 / n
    if n % 2 == 0:
        base = [
            line_kernel(i * step, params.kernel_len, params.kernel_width)
            for i in range(n // 2)
        ]
        return base + [np.rot90(k).copy() for k in base]
    return [
        line_kernel(i * step, params.kernel_len, params.kernel_width)
        for i in range(n)
    ]


def highpass(values: np.ndarray, background_size: int) -> np.ndarray:
    """Subtract a median-filtered background; invariant to any constant
    offset of the input."""
    background = ndimage.median_filter(values, size=background_size, mode="nearest")
    return values - background


def remove_small_components(mask: np.ndarray, min_px: int) -> np.ndarray:
    """Drop 8-connected components with fewer than min_px pixels."""
    labels, n = ndimage.label(mask, structure=CONNECT_8)
    if n == 0:
        return np.zeros_like(mask, dtype=bool)
    counts = np.bincount(labels.ravel())
    keep = counts >= min_px
    keep[0] = False
    return keep[labels]


def screen(grid: Grid, params: ScreenParams = ScreenParams()) -> tuple[np.ndarray, bool]:
    """Run the oriented-line screen on a temperature-difference grid.

    Returns (mask, passed): a boolean pixel mask of surviving line-like
    structure and whether anything survived. A pixel survives when its best
    oriented response and its high-passed difference both meet their
    thresholds; components smaller than min_component_px are removed.
    Missing pixels never fire; they enter the filters as zeros.
    """
    h, w = grid.shape
    if h < params.kernel_len or w < params.kernel_len:
        raise ValueError(
            f"grid {h}x{w} is smaller than the kernel ({params.kernel_len})"
        )
    values = np.where(grid.missing, 0.0, grid.values)
    hp = highpass(values, params.background_size)
    response = None
    for kernel in orientation_bank(params):
        resp = ndimage.correlate(hp, kernel, mode="nearest")
        response = resp if response is None else np.maximum(response, resp)
    mask = (
        (response >= params.response_threshold)
        & (hp >= params.btd_threshold)
        & ~grid.missing
    )
    mask = remove_small_components(mask, params.min_component_px)
    return mask, bool(mask.any())
