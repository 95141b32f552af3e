"""Mosaicking tile detections and reporting coverage statistics.

Covers stitching overlapping tiles, fractional coverage above a threshold,
diurnal/seasonal aggregation helpers (local solar hour, rolling means, solar
zenith angle), and stratified precision/recall reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grids import Grid, GridGeo
from .metrics import MetricsError


@dataclass(frozen=True)
class TileDetection:
    """One tile's probability map with its placement."""

    prob: np.ndarray
    geo: GridGeo
    missing: np.ndarray | None = None

    def __post_init__(self) -> None:
        prob = np.asarray(self.prob, dtype=np.float64)
        object.__setattr__(self, "prob", prob)
        if prob.ndim != 2:
            raise ValueError("tile probabilities must be 2-D")
        missing = (
            np.zeros(prob.shape, dtype=bool)
            if self.missing is None
            else np.asarray(self.missing, dtype=bool)
        )
        if missing.shape != prob.shape:
            raise ValueError("tile missing plane shape mismatch")
        object.__setattr__(self, "missing", missing)
        valid = prob[~missing]
        if valid.size and (valid.min() < 0 or valid.max() > 1):
            raise ValueError("tile probabilities must lie in [0, 1]")


_OFFSET_TOL = 1e-6


def stitch(
    tiles: Sequence[TileDetection],
    mosaic_geo: GridGeo,
    mosaic_shape: tuple[int, int],
    blend: str = "max",
) -> Grid:
    """Combine tiles onto a mosaic lattice.

    Every tile must sit on the mosaic lattice (same spacing, integer pixel
    offset within 1e-6). Overlaps blend per pixel with max by default, or
    with the mean of covering tiles when blend="mean". Pixels no tile
    covers are missing.
    """
    if blend not in ("max", "mean"):
        raise ValueError(f"unknown blend mode {blend!r}")
    h, w = mosaic_shape
    acc = np.zeros((h, w), dtype=np.float64)
    if blend == "max":
        acc -= np.inf
    counts = np.zeros((h, w), dtype=np.int64)
    for index, tile in enumerate(tiles):
        if (
            abs(tile.geo.dlat - mosaic_geo.dlat) > _OFFSET_TOL * abs(mosaic_geo.dlat)
            or abs(tile.geo.dlon - mosaic_geo.dlon) > _OFFSET_TOL * abs(mosaic_geo.dlon)
        ):
            raise ValueError(f"tile {index}: spacing differs from the mosaic")
        row_off, col_off = mosaic_geo.latlon_to_pixel(tile.geo.lat0, tile.geo.lon0)
        r0, c0 = float(row_off), float(col_off)
        if abs(r0 - round(r0)) > _OFFSET_TOL or abs(c0 - round(c0)) > _OFFSET_TOL:
            raise ValueError(
                f"tile {index}: offset ({r0}, {c0}) is not on the mosaic lattice"
            )
        r0i, c0i = int(round(r0)), int(round(c0))
        th, tw = tile.prob.shape
        rs, cs = max(r0i, 0), max(c0i, 0)
        re, ce = min(r0i + th, h), min(c0i + tw, w)
        if rs >= re or cs >= ce:
            continue
        sub = tile.prob[rs - r0i : re - r0i, cs - c0i : ce - c0i]
        sub_ok = ~tile.missing[rs - r0i : re - r0i, cs - c0i : ce - c0i]
        view = acc[rs:re, cs:ce]
        if blend == "max":
            np.maximum(view, np.where(sub_ok, sub, -np.inf), out=view)
        else:
            view += np.where(sub_ok, sub, 0.0)
        counts[rs:re, cs:ce] += sub_ok
    covered = counts > 0
    if blend == "max":
        values = np.where(covered, acc, 0.0)
    else:
        values = np.where(covered, acc / np.maximum(counts, 1), 0.0)
    return Grid(values=values, missing=~covered, geo=mosaic_geo)


def coverage_fraction(grid: Grid, threshold: float) -> float:
    """Percent of non-missing pixels at or above the threshold."""
    valid = ~grid.missing
    n = int(valid.sum())
    if n == 0:
        raise MetricsError("coverage undefined: all pixels missing")
    return 100.0 * float((grid.values[valid] >= threshold).sum()) / n


def cloud_cover_fraction(
    phase_codes: np.ndarray, clear_code: int = 0, invalid_code: int | None = None
) -> float:
    """Fraction of valid pixels whose phase code is not clear."""
    codes = np.asarray(phase_codes)
    valid = np.ones(codes.shape, dtype=bool)
    if invalid_code is not None:
        valid &= codes != invalid_code
    n = int(valid.sum())
    if n == 0:
        raise MetricsError("cloud cover undefined: all pixels invalid")
    return float((codes[valid] != clear_code).sum()) / n


def local_hour(utc_hour: float, lon: float) -> float:
    """Local solar hour: UTC hour plus longitude converted to hours, mod 24."""
    return (utc_hour + lon / 360.0 * 24.0) % 24.0


def rolling_mean(days: np.ndarray, values: np.ndarray, window: int = 15) -> np.ndarray:
    """Centered rolling mean over day-indexed values.

    The window covers all present days within +/- window//2 calendar days;
    edges use the truncated window. window must be odd so the window is
    symmetric; window=1 is the identity.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and at least 1")
    days = np.asarray(days, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if days.shape != values.shape or days.ndim != 1:
        raise ValueError("days and values must be matching 1-D arrays")
    if days.size > 1 and not np.all(np.diff(days) > 0):
        raise ValueError("days must be strictly increasing")
    if window == 1:
        return values.copy()
    half = window // 2
    lo = np.searchsorted(days, days - half, side="left")
    hi = np.searchsorted(days, days + half, side="right")
    csum = np.concatenate([[0.0], np.cumsum(values)])
    return (csum[hi] - csum[lo]) / (hi - lo)


def _day_of_year_and_hour(when: datetime) -> tuple[int, float]:
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    when = when.astimezone(timezone.utc)
    doy = when.timetuple().tm_yday
    hour = when.hour + when.minute / 60.0 + when.second / 3600.0
    return doy, hour


def solar_declination_and_eot(when: datetime) -> tuple[float, float]:
    """Solar declination (degrees) and equation of time (minutes) from a
    truncated solar-position series adequate to ~0.1 degree."""
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    when = when.astimezone(timezone.utc)
    # Julian centuries from J2000.
    epoch = datetime(2000, 1, 1, 12, 0, 0, tzinfo=timezone.utc)
    days = (when - epoch).total_seconds() / 86400.0
    t = days / 36525.0
    l0 = (280.46646 + 36000.76983 * t + 0.0003032 * t * t) % 360.0
    m = math.radians(357.52911 + 35999.05029 * t - 0.0001537 * t * t)
    c = (
        (1.914602 - 0.004817 * t - 0.000014 * t * t) * math.sin(m)
        + (0.019993 - 0.000101 * t) * math.sin(2 * m)
        + 0.000289 * math.sin(3 * m)
    )
    true_lon = l0 + c
    omega = math.radians(125.04 - 1934.136 * t)
    lam = math.radians(true_lon - 0.00569 - 0.00478 * math.sin(omega))
    eps0 = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0
    eps = math.radians(eps0 + 0.00256 * math.cos(omega))
    decl = math.degrees(math.asin(math.sin(eps) * math.sin(lam)))
    y = math.tan(eps / 2.0) ** 2
    ecc = 0.016708634 - t * (0.000042037 + 0.0000001267 * t)
    l0r = math.radians(l0)
    eot = 4.0 * math.degrees(
        y * math.sin(2 * l0r)
        - 2 * ecc * math.sin(m)
        + 4 * ecc * y * math.sin(m) * math.cos(2 * l0r)
        - 0.5 * y * y * math.sin(4 * l0r)
        - 1.25 * ecc * ecc * math.sin(2 * m)
    )
    return decl, eot


def solar_zenith_deg(when: datetime, lat: float, lon: float) -> float:
    """Solar zenith angle in degrees.

    cos z = sin(lat) sin(decl) + cos(lat) cos(decl) cos(hour angle), with the
    hour angle from true solar time (UTC + equation of time + longitude).
    """
    decl, eot = solar_declination_and_eot(when)
    _, hour = _day_of_year_and_hour(when)
    tst_min = hour * 60.0 + eot + 4.0 * lon
    hour_angle = math.radians(tst_min / 4.0 - 180.0)
    phi = math.radians(lat)
    d = math.radians(decl)
    cosz = math.sin(phi) * math.sin(d) + math.cos(phi) * math.cos(d) * math.cos(hour_angle)
    return math.degrees(math.acos(min(1.0, max(-1.0, cosz))))


def gridbox(lat: float, lon: float, box_deg: float = 10.0) -> tuple[float, float]:
    """The (lat, lon) box containing the point; boxes are [lo, lo + box) with
    edges anchored at multiples of the box size."""
    if box_deg <= 0:
        raise ValueError("box size must be positive")
    return (
        math.floor(lat / box_deg) * box_deg,
        math.floor(lon / box_deg) * box_deg,
    )


@dataclass(frozen=True)
class StratumReport:
    stratum: object
    n_examples: int
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def degenerate(self) -> bool:
        return self.tp + self.fp == 0 or self.tp + self.fn == 0

    def to_json(self) -> dict:
        return {
            "stratum": list(self.stratum)
            if isinstance(self.stratum, tuple)
            else self.stratum,
            "n_examples": self.n_examples,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "degenerate": self.degenerate,
        }


_STRATA = ("gridbox", "zenith", "cloud", "hour")


def stratified_report(
    examples: Iterable[Mapping],
    stratify_by: str = "gridbox",
    threshold: float = 0.4,
    box_deg: float = 10.0,
    zenith_bin_deg: float = 10.0,
    cloud_bin: float = 0.1,
) -> list[StratumReport]:
    """Pooled pixel precision/recall per stratum at a fixed threshold.

    Each example is a mapping with "pred" (probabilities), "gt" (binary
    mask), and the metadata its stratifier needs: center_lat/center_lon for
    gridbox, zenith_deg, cloud_fraction, or local hour ("when" datetime plus
    center_lon, or utc_hour plus center_lon).
    """
    if stratify_by not in _STRATA:
        raise MetricsError(
            f"unknown stratification {stratify_by!r}; choose from {_STRATA}"
        )
    agg: dict[object, list[int]] = {}
    for ex in examples:
        pred = np.asarray(ex["pred"], dtype=np.float64)
        gt = np.asarray(ex["gt"]).astype(bool)
        if pred.shape != gt.shape:
            raise MetricsError("prediction and ground truth shapes differ")
        if stratify_by == "gridbox":
            key = gridbox(float(ex["center_lat"]), float(ex["center_lon"]), box_deg)
        elif stratify_by == "zenith":
            key = math.floor(float(ex["zenith_deg"]) / zenith_bin_deg) * zenith_bin_deg
        elif stratify_by == "cloud":
            key = math.floor(float(ex["cloud_fraction"]) / cloud_bin) * cloud_bin
        else:
            if "utc_hour" in ex:
                utc_hour = float(ex["utc_hour"])
            else:
                _, utc_hour = _day_of_year_and_hour(ex["when"])
            key = math.floor(local_hour(utc_hour, float(ex["center_lon"])))
        hit = pred >= threshold
        tp = int((hit & gt).sum())
        fp = int((hit & ~gt).sum())
        fn = int((~hit & gt).sum())
        entry = agg.setdefault(key, [0, 0, 0, 0])
        entry[0] += 1
        entry[1] += tp
        entry[2] += fp
        entry[3] += fn
    return [
        StratumReport(stratum=key, n_examples=v[0], tp=v[1], fp=v[2], fn=v[3])
        for key, v in sorted(agg.items())
    ]
