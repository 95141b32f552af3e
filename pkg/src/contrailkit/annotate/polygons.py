"""Polygon rasterization and labeling-guideline checks.

Coordinates are (row, col) with pixel (i, j) centered at continuous (i, j).
A pixel is positive when its center falls inside any polygon under the
even-odd rule.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

log = logging.getLogger(__name__)

Polygon = Sequence[Sequence[float]]

# 8-connectivity, matching the component analysis used on detection masks.
_CONNECT_8 = np.ones((3, 3), dtype=bool)


def _is_degenerate(poly: np.ndarray) -> bool:
    return len({(float(r), float(c)) for r, c in poly}) < 3


def rasterize_polygon(poly: Polygon, shape: tuple[int, int]) -> np.ndarray:
    """Even-odd rasterization of one polygon onto pixel centers."""
    h, w = shape
    pts = np.asarray(poly, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("polygon must be a sequence of (row, col) pairs")
    out = np.zeros((h, w), dtype=bool)
    if _is_degenerate(pts):
        log.warning("skipping degenerate polygon with <3 distinct vertices")
        return out
    r_lo = max(0, int(np.ceil(pts[:, 0].min())))
    r_hi = min(h - 1, int(np.floor(pts[:, 0].max())))
    if r_lo > r_hi:
        return out
    rows = np.arange(r_lo, r_hi + 1, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    inside = np.zeros((rows.size, w), dtype=bool)
    n = len(pts)
    for k in range(n):
        r1, c1 = pts[k]
        r2, c2 = pts[(k + 1) % n]
        if r1 == r2:
            continue
        # Half-open rule on the row interval avoids double counting at a
        # vertex shared by two edges.
        crosses = (r1 > rows[:, None]) != (r2 > rows[:, None])
        c_at = c1 + (rows[:, None] - r1) * (c2 - c1) / (r2 - r1)
        inside ^= crosses & (cols[None, :] < c_at)
    out[r_lo : r_hi + 1] = inside
    return out


def rasterize_polygons(polys: Sequence[Polygon], shape: tuple[int, int]) -> np.ndarray:
    """Union of per-polygon even-odd rasterizations, as a uint8 mask."""
    out = np.zeros(shape, dtype=bool)
    for poly in polys:
        out |= rasterize_polygon(poly, shape)
    return out.astype(np.uint8)


@dataclass(frozen=True)
class ComponentCheck:
    component: int
    n_pixels: int
    size_ok: bool
    aspect: float
    aspect_ok: bool

    @property
    def ok(self) -> bool:
        return self.size_ok and self.aspect_ok

    def to_json(self) -> dict:
        return {
            "component": self.component,
            "n_pixels": self.n_pixels,
            "size_ok": self.size_ok,
            "aspect": self.aspect,
            "aspect_ok": self.aspect_ok,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class GuidelineReport:
    components: tuple[ComponentCheck, ...]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.components)

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components], "all_ok": self.all_ok}


def component_aspect(rows: np.ndarray, cols: np.ndarray) -> float:
    """Elongation of a pixel set: the ratio of its extents along the
    principal and secondary axes, each extent padded by one pixel."""
    coords = np.column_stack([rows, cols]).astype(np.float64)
    centered = coords - coords.mean(axis=0)
    cov = centered.T @ centered / len(coords)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    major = centered @ eigvecs[:, order[0]]
    minor = centered @ eigvecs[:, order[1]]
    ext_major = float(major.max() - major.min())
    ext_minor = float(minor.max() - minor.min())
    return (ext_major + 1.0) / (ext_minor + 1.0)


def guideline_check(
    mask: np.ndarray, min_pixels: int = 10, min_aspect: float = 3.0
) -> GuidelineReport:
    """Check every 8-connected component of a mask against the labeling
    guidelines: at least min_pixels pixels and at least min_aspect times
    longer than wide."""
    mask = np.asarray(mask).astype(bool)
    labels, n = ndimage.label(mask, structure=_CONNECT_8)
    checks = []
    for idx in range(1, n + 1):
        rows, cols = np.nonzero(labels == idx)
        aspect = component_aspect(rows, cols)
        checks.append(
            ComponentCheck(
                component=idx,
                n_pixels=int(rows.size),
                size_ok=rows.size >= min_pixels,
                aspect=aspect,
                aspect_ok=aspect >= min_aspect,
            )
        )
    return GuidelineReport(components=tuple(checks))
