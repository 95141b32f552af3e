"""Transverse Mercator (UTM) projection and grid reprojection.

The forward/inverse transform uses the sixth-order series in the third
flattening (Krueger series, Karney's arrangement), good to well under a
millimeter inside a zone. Reprojection resamples bilinearly and propagates
missing flags strictly: an output pixel touching any missing or out-of-bounds
source pixel is missing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..grids import Grid

log = logging.getLogger(__name__)

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
UTM_K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0

_N = WGS84_F / (2.0 - WGS84_F)
_E2 = WGS84_F * (2.0 - WGS84_F)
_E = math.sqrt(_E2)
# Rectifying radius: A = a/(1+n) (1 + n^2/4 + n^4/64 + n^6/256)
_A_RECT = WGS84_A / (1.0 + _N) * (1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0)

_ALPHA = (
    _N / 2 - 2 * _N**2 / 3 + 5 * _N**3 / 16 + 41 * _N**4 / 180
    - 127 * _N**5 / 288 + 7891 * _N**6 / 37800,
    13 * _N**2 / 48 - 3 * _N**3 / 5 + 557 * _N**4 / 1440 + 281 * _N**5 / 630
    - 1983433 * _N**6 / 1935360,
    61 * _N**3 / 240 - 103 * _N**4 / 140 + 15061 * _N**5 / 26880
    + 167603 * _N**6 / 181440,
    49561 * _N**4 / 161280 - 179 * _N**5 / 168 + 6601661 * _N**6 / 7257600,
    34729 * _N**5 / 80640 - 3418889 * _N**6 / 1995840,
    212378941 * _N**6 / 319334400,
)
_BETA = (
    _N / 2 - 2 * _N**2 / 3 + 37 * _N**3 / 96 - _N**4 / 360
    - 81 * _N**5 / 512 + 96199 * _N**6 / 604800,
    _N**2 / 48 + _N**3 / 15 - 437 * _N**4 / 1440 + 46 * _N**5 / 105
    - 1118711 * _N**6 / 3870720,
    17 * _N**3 / 480 - 37 * _N**4 / 840 - 209 * _N**5 / 4480
    + 5569 * _N**6 / 90720,
    4397 * _N**4 / 161280 - 11 * _N**5 / 504 - 830251 * _N**6 / 7257600,
    4583 * _N**5 / 161280 - 108847 * _N**6 / 3991680,
    20648693 * _N**6 / 638668800,
)


def utm_zone(lon: float) -> int:
    """Standard 6-degree zone containing the given longitude."""
    return int(math.floor((lon + 180.0) / 6.0)) % 60 + 1


def zone_central_meridian(zone: int) -> float:
    if not 1 <= zone <= 60:
        raise ValueError(f"UTM zone must be in 1..60, got {zone}")
    return -183.0 + 6.0 * zone


@dataclass(frozen=True)
class UtmCrs:
    """A UTM zone on WGS84."""

    zone: int
    north: bool = True

    def __post_init__(self) -> None:
        if not 1 <= self.zone <= 60:
            raise ValueError(f"UTM zone must be in 1..60, got {self.zone}")

    @property
    def lon0_deg(self) -> float:
        return zone_central_meridian(self.zone)

    @property
    def false_northing(self) -> float:
        return 0.0 if self.north else FALSE_NORTHING_SOUTH

    def forward(self, lat, lon):
        """Geographic (degrees) to (easting, northing) in meters."""
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        if np.any(np.abs(lat) > 84.5):
            raise ValueError("latitude outside UTM validity (|lat| > 84.5)")
        phi = np.radians(lat)
        lam = np.radians(lon - self.lon0_deg)
        lam = (lam + np.pi) % (2.0 * np.pi) - np.pi

        sphi = np.sin(phi)
        t = np.sinh(np.arcsinh(np.tan(phi)) - _E * np.arctanh(_E * sphi))
        xi = np.arctan2(t, np.cos(lam))
        eta = np.arcsinh(np.sin(lam) / np.hypot(t, np.cos(lam)))
        xi_s = xi.copy()
        eta_s = eta.copy()
        for j, a in enumerate(_ALPHA, start=1):
            xi_s += a * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
            eta_s += a * np.cos(2 * j * xi) * np.sinh(2 * j * eta)
        easting = FALSE_EASTING + UTM_K0 * _A_RECT * eta_s
        northing = self.false_northing + UTM_K0 * _A_RECT * xi_s
        return easting, northing

    def inverse(self, easting, northing):
        """(easting, northing) in meters to geographic degrees."""
        easting = np.asarray(easting, dtype=np.float64)
        northing = np.asarray(northing, dtype=np.float64)
        xi = (northing - self.false_northing) / (UTM_K0 * _A_RECT)
        eta = (easting - FALSE_EASTING) / (UTM_K0 * _A_RECT)
        xi_p = xi.copy()
        eta_p = eta.copy()
        for j, b in enumerate(_BETA, start=1):
            xi_p -= b * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
            eta_p -= b * np.cos(2 * j * xi) * np.sinh(2 * j * eta)
        tau_p = np.sin(xi_p) / np.sqrt(np.sinh(eta_p) ** 2 + np.cos(xi_p) ** 2)

        # Newton iteration for tau = tan(phi) solving tau'(tau) = tau_p.
        tau = np.array(tau_p, dtype=np.float64, copy=True)
        for _ in range(8):
            sq_tau = np.sqrt(1.0 + tau**2)
            sigma = np.sinh(_E * np.arctanh(_E * tau / sq_tau))
            sq_sig = np.sqrt(1.0 + sigma**2)
            f = tau * sq_sig - sigma * sq_tau - tau_p
            df = (sq_sig * sq_tau - sigma * tau) * (1.0 - _E2) * sq_tau / (
                1.0 + (1.0 - _E2) * tau**2
            )
            tau = tau - f / df
        lat = np.degrees(np.arctan(tau))
        lon = self.lon0_deg + np.degrees(np.arctan2(np.sinh(eta_p), np.cos(xi_p)))
        return lat, lon


def reproject_utm(
    src: Grid,
    out_shape: tuple[int, int],
    pixel_m: float,
    zone: int | None = None,
) -> Grid:
    """Resample a lat/lon grid onto a north-up UTM raster (bilinear).

    The output is centered on the source grid's center; row 0 is the
    northernmost row. The zone defaults to the one containing the source's
    NW corner; the hemisphere comes from the NW corner latitude. A footprint
    that misses the source entirely yields an all-missing output and a
    logged warning.
    """
    if src.geo is None:
        raise ValueError("source grid has no geolocation")
    if pixel_m <= 0:
        raise ValueError("pixel_m must be positive")
    out_h, out_w = out_shape
    if out_h < 1 or out_w < 1:
        raise ValueError("output shape must be at least 1x1")

    h, w = src.shape
    if h < 2 or w < 2:
        raise ValueError("source grid must be at least 2x2 for bilinear sampling")
    corner_lats, corner_lons = src.geo.pixel_to_latlon(
        np.array([0.0, 0.0, h - 1.0, h - 1.0]), np.array([0.0, w - 1.0, 0.0, w - 1.0])
    )
    nw_lat = float(corner_lats.max())
    nw_lon = float(corner_lons.min())
    crs = UtmCrs(
        zone=utm_zone(nw_lon) if zone is None else zone,
        north=nw_lat >= 0.0,
    )

    lat_c, lon_c = src.geo.pixel_to_latlon((h - 1) / 2.0, (w - 1) / 2.0)
    e_c, n_c = crs.forward(lat_c, lon_c)

    jj, ii = np.meshgrid(np.arange(out_w), np.arange(out_h))
    easting = e_c + (jj - (out_w - 1) / 2.0) * pixel_m
    northing = n_c + ((out_h - 1) / 2.0 - ii) * pixel_m
    lat, lon = crs.inverse(easting, northing)
    rows, cols = src.geo.latlon_to_pixel(lat, lon)

    values, missing = bilinear_sample(src.values, src.missing, rows, cols)
    if missing.all():
        log.warning(
            "reproject_utm: output footprint lies entirely outside the source grid"
        )
    return Grid(values=values, missing=missing, channel_id=src.channel_id, geo=None)


def bilinear_sample(
    values: np.ndarray,
    missing: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear interpolation at fractional (rows, cols).

    A sample is missing when any of its four neighbors is missing or falls
    outside the source; interpolated values therefore stay within the source
    min/max.
    """
    h, w = values.shape
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    fr = rows - r0
    fc = cols - c0
    # Points exactly on the last row/col still interpolate from valid cells.
    on_edge_r = rows == (h - 1)
    on_edge_c = cols == (w - 1)
    r0 = np.where(on_edge_r, h - 2, r0)
    fr = np.where(on_edge_r, 1.0, fr)
    c0 = np.where(on_edge_c, w - 2, c0)
    fc = np.where(on_edge_c, 1.0, fc)

    inside = (r0 >= 0) & (r0 <= h - 2) & (c0 >= 0) & (c0 <= w - 2)
    r0s = np.clip(r0, 0, h - 2)
    c0s = np.clip(c0, 0, w - 2)

    v00 = values[r0s, c0s]
    v01 = values[r0s, c0s + 1]
    v10 = values[r0s + 1, c0s]
    v11 = values[r0s + 1, c0s + 1]
    out = (
        v00 * (1 - fr) * (1 - fc)
        + v01 * (1 - fr) * fc
        + v10 * fr * (1 - fc)
        + v11 * fr * fc
    )
    any_missing = (
        missing[r0s, c0s]
        | missing[r0s, c0s + 1]
        | missing[r0s + 1, c0s]
        | missing[r0s + 1, c0s + 1]
    )
    bad = ~inside | any_missing
    return np.where(bad, 0.0, out), bad
