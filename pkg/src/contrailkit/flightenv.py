"""Flight waypoint advection through gridded winds, ice-supersaturation
diagnostics, and advected flight-density rendering.

Winds live on a regular lat/lon grid with pressure-level and time axes.
Horizontal interpolation is bilinear, time interpolation linear, and the
pressure level is chosen once per trajectory as the level nearest the
source altitude (converted through the standard atmosphere). Integration
uses a fixed-step third-order Runge-Kutta advance.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .grids import GridGeo

METERS_PER_DEGREE = 111320.0
MAX_WIND_MS = 200.0

WIND_MAGIC = b"BTW1"

# Standard atmosphere constants.
_P0_HPA = 1013.25
_T0_K = 288.15
_LAPSE_K_PER_M = 0.0065
_TROPOPAUSE_M = 11000.0
_P_TROP_HPA = _P0_HPA * (1.0 - _LAPSE_K_PER_M * _TROPOPAUSE_M / _T0_K) ** 5.255877
_H_SCALE_M = 287.05287 * 216.65 / 9.80665

EPSILON_WATER = 0.622


class WindDomainError(ValueError):
    """A sample position fell outside the wind-field domain."""


def pressure_at_altitude_hpa(alt_m: float) -> float:
    """ICAO standard atmosphere pressure at a geometric altitude."""
    if alt_m < -1000.0 or alt_m > 50000.0:
        raise ValueError(f"altitude {alt_m} m outside supported range")
    if alt_m <= _TROPOPAUSE_M:
        return _P0_HPA * (1.0 - _LAPSE_K_PER_M * alt_m / _T0_K) ** 5.255877
    return _P_TROP_HPA * math.exp(-(alt_m - _TROPOPAUSE_M) / _H_SCALE_M)


def _check_axis(name: str, axis: np.ndarray) -> None:
    if axis.ndim != 1 or axis.size < 1:
        raise ValueError(f"{name} axis must be a nonempty 1-D array")
    if axis.size > 1 and not np.all(np.diff(axis) > 0):
        raise ValueError(f"{name} axis must be strictly increasing")


@dataclass
class WindField:
    """u/v wind components on (time, level, lat, lon) axes.

    u is eastward and v northward, in m/s; levels are pressure in hPa
    (ascending); times are epoch seconds (ascending).
    """

    times: np.ndarray
    levels_hpa: np.ndarray
    lats: np.ndarray
    lons: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        self.levels_hpa = np.asarray(self.levels_hpa, dtype=np.float64)
        self.lats = np.asarray(self.lats, dtype=np.float64)
        self.lons = np.asarray(self.lons, dtype=np.float64)
        for name, axis in (
            ("time", self.times),
            ("level", self.levels_hpa),
            ("lat", self.lats),
            ("lon", self.lons),
        ):
            _check_axis(name, axis)
        if self.lats.size < 2 or self.lons.size < 2:
            raise ValueError("wind grid needs at least 2 lat and 2 lon samples")
        shape = (self.times.size, self.levels_hpa.size, self.lats.size, self.lons.size)
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.shape != shape or self.v.shape != shape:
            raise ValueError(
                f"wind component shape must be {shape}, got {self.u.shape} / {self.v.shape}"
            )
        for comp in (self.u, self.v):
            if not np.all(np.isfinite(comp)):
                raise ValueError("wind components must be finite")
            if np.abs(comp).max(initial=0.0) >= MAX_WIND_MS:
                raise ValueError(f"wind speeds must stay below {MAX_WIND_MS} m/s")

    def nearest_level_index(self, alt_m: float) -> int:
        p = pressure_at_altitude_hpa(alt_m)
        return int(np.argmin(np.abs(self.levels_hpa - p)))

    def _interp_plane(self, plane_pair: np.ndarray, wt: float, lat: float, lon: float) -> float:
        """Bilinear in lat/lon on two consecutive time planes blended by wt."""
        lats, lons = self.lats, self.lons
        i = int(np.searchsorted(lats, lat)) - 1
        j = int(np.searchsorted(lons, lon)) - 1
        i = min(max(i, 0), lats.size - 2)
        j = min(max(j, 0), lons.size - 2)
        fy = (lat - lats[i]) / (lats[i + 1] - lats[i])
        fx = (lon - lons[j]) / (lons[j + 1] - lons[j])
        plane = plane_pair[0] * (1.0 - wt) + plane_pair[1] * wt
        return float(
            plane[i, j] * (1 - fy) * (1 - fx)
            + plane[i, j + 1] * (1 - fy) * fx
            + plane[i + 1, j] * fy * (1 - fx)
            + plane[i + 1, j + 1] * fy * fx
        )

    def sample(self, t_epoch: float, lat: float, lon: float, level_index: int) -> tuple[float, float]:
        """Interpolated (u, v) at a position and time on a fixed level.

        Raises WindDomainError outside the spatial or temporal domain.
        """
        if not (self.lats[0] <= lat <= self.lats[-1]) or not (
            self.lons[0] <= lon <= self.lons[-1]
        ):
            raise WindDomainError(f"position ({lat}, {lon}) outside wind grid")
        if not (self.times[0] <= t_epoch <= self.times[-1]):
            raise WindDomainError(f"time {t_epoch} outside wind time range")
        if not 0 <= level_index < self.levels_hpa.size:
            raise WindDomainError(f"level index {level_index} out of range")
        k = int(np.searchsorted(self.times, t_epoch)) - 1
        k = min(max(k, 0), self.times.size - 2) if self.times.size > 1 else 0
        if self.times.size == 1:
            wt = 0.0
            pair_u = self.u[0:1, level_index]
            pair_v = self.v[0:1, level_index]
            u = self._interp_plane(np.concatenate([pair_u, pair_u]), wt, lat, lon)
            v = self._interp_plane(np.concatenate([pair_v, pair_v]), wt, lat, lon)
            return u, v
        wt = (t_epoch - self.times[k]) / (self.times[k + 1] - self.times[k])
        u = self._interp_plane(self.u[k : k + 2, level_index], wt, lat, lon)
        v = self._interp_plane(self.v[k : k + 2, level_index], wt, lat, lon)
        return u, v


def write_wind(wind: WindField, path: str | Path | BinaryIO) -> None:
    """Binary wind sidecar: magic 'BTW1'; u32 n_lon, n_lat, n_levels,
    n_times; f64 lat, lon, level, time tables; float32 u then v cubes,
    little-endian row-major."""
    header = struct.pack(
        "<4sIIII",
        WIND_MAGIC,
        wind.lons.size,
        wind.lats.size,
        wind.levels_hpa.size,
        wind.times.size,
    )
    body = (
        header
        + wind.lats.astype("<f8").tobytes()
        + wind.lons.astype("<f8").tobytes()
        + wind.levels_hpa.astype("<f8").tobytes()
        + wind.times.astype("<f8").tobytes()
        + wind.u.astype("<f4").tobytes()
        + wind.v.astype("<f4").tobytes()
    )
    if hasattr(path, "write"):
        path.write(body)  # type: ignore[union-attr]
    else:
        Path(path).write_bytes(body)


def read_wind(path: str | Path | BinaryIO) -> WindField:
    raw = path.read() if hasattr(path, "read") else Path(path).read_bytes()  # type: ignore[union-attr]
    if len(raw) < 20 or raw[:4] != WIND_MAGIC:
        raise ValueError("not a wind sidecar file")
    n_lon, n_lat, n_lev, n_t = struct.unpack_from("<IIII", raw, 4)
    pos = 20

    def take(count: int, dtype: str) -> np.ndarray:
        nonlocal pos
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
        pos += arr.nbytes
        return arr

    lats = take(n_lat, "<f8")
    lons = take(n_lon, "<f8")
    levels = take(n_lev, "<f8")
    times = take(n_t, "<f8")
    n = n_t * n_lev * n_lat * n_lon
    u = take(n, "<f4").reshape(n_t, n_lev, n_lat, n_lon)
    v = take(n, "<f4").reshape(n_t, n_lev, n_lat, n_lon)
    if pos != len(raw):
        raise ValueError("wind sidecar has trailing bytes")
    return WindField(times=times, levels_hpa=levels, lats=lats, lons=lons,
                     u=u.astype(np.float64), v=v.astype(np.float64))


@dataclass(frozen=True)
class Waypoint:
    """One reported flight position."""

    flight_id: str
    t_epoch: float
    lat: float
    lon: float
    alt_m: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -360.0 <= self.lon <= 360.0:
            raise ValueError(f"longitude {self.lon} out of range")
        if not 0.0 <= self.alt_m <= 20000.0:
            raise ValueError(f"altitude {self.alt_m} m out of range")


@dataclass(frozen=True)
class FlightTrack:
    flight_id: str
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self) -> None:
        times = [w.t_epoch for w in self.waypoints]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        if any(w.flight_id != self.flight_id for w in self.waypoints):
            raise ValueError("waypoint flight ids must match the track")


@dataclass
class AdvectedTrack:
    """A waypoint integrated forward: positions, their times, and ages
    relative to the source waypoint. The first point is the source itself."""

    flight_id: str
    waypoint_index: int
    times: np.ndarray
    lats: np.ndarray
    lons: np.ndarray
    exited_domain: bool = False

    @property
    def ages_s(self) -> np.ndarray:
        return self.times - self.times[0]


def _wind_tendency(
    wind: WindField, level_index: int, t: float, lat: float, lon: float
) -> tuple[float, float]:
    u, v = wind.sample(t, lat, lon, level_index)
    dlat = v / METERS_PER_DEGREE
    coslat = math.cos(math.radians(lat))
    if abs(coslat) < 1e-6:
        raise WindDomainError("advection undefined at the poles")
    dlon = u / (METERS_PER_DEGREE * coslat)
    return dlat, dlon


def advect(
    start: Waypoint,
    wind: WindField,
    duration_s: float,
    step_s: float = 60.0,
    waypoint_index: int = 0,
) -> AdvectedTrack:
    """Integrate a waypoint forward with fixed-step third-order Runge-Kutta.

    Stages: k1 = f(t, y); k2 = f(t + h/2, y + h/2 k1);
    k3 = f(t + 3h/4, y + 3h/4 k2); y+ = y + h (2 k1 + 3 k2 + 4 k3) / 9.
    Leaving the wind domain truncates the trajectory and sets the exit flag.
    """
    if duration_s < 0:
        raise ValueError("duration must be nonnegative")
    if step_s <= 0:
        raise ValueError("step must be positive")
    level_index = wind.nearest_level_index(start.alt_m)
    t = float(start.t_epoch)
    lat, lon = float(start.lat), float(start.lon)
    times = [t]
    lats = [lat]
    lons = [lon]
    exited = False
    remaining = float(duration_s)
    while remaining > 1e-9:
        h = min(step_s, remaining)
        try:
            k1 = _wind_tendency(wind, level_index, t, lat, lon)
            k2 = _wind_tendency(
                wind, level_index, t + h / 2, lat + h / 2 * k1[0], lon + h / 2 * k1[1]
            )
            k3 = _wind_tendency(
                wind,
                level_index,
                t + 3 * h / 4,
                lat + 3 * h / 4 * k2[0],
                lon + 3 * h / 4 * k2[1],
            )
        except WindDomainError:
            exited = True
            break
        lat = lat + h * (2 * k1[0] + 3 * k2[0] + 4 * k3[0]) / 9.0
        lon = lon + h * (2 * k1[1] + 3 * k2[1] + 4 * k3[1]) / 9.0
        t += h
        remaining -= h
        if not (
            wind.lats[0] <= lat <= wind.lats[-1]
            and wind.lons[0] <= lon <= wind.lons[-1]
        ):
            exited = True
            break
        times.append(t)
        lats.append(lat)
        lons.append(lon)
    return AdvectedTrack(
        flight_id=start.flight_id,
        waypoint_index=waypoint_index,
        times=np.array(times),
        lats=np.array(lats),
        lons=np.array(lons),
        exited_domain=exited,
    )


def advect_track(
    track: FlightTrack, wind: WindField, until_epoch: float, step_s: float = 60.0
) -> list[AdvectedTrack]:
    """Advect every waypoint with time before until_epoch up to that time."""
    out = []
    for index, wp in enumerate(track.waypoints):
        if wp.t_epoch > until_epoch:
            continue
        out.append(
            advect(wp, wind, until_epoch - wp.t_epoch, step_s, waypoint_index=index)
        )
    return out


def saturation_vapor_pressure_ice_pa(temp_k) -> np.ndarray:
    """Saturation vapor pressure over ice (Murphy and Koop 2005), Pa."""
    t = np.asarray(temp_k, dtype=np.float64)
    return np.exp(
        9.550426 - 5723.265 / t + 3.53068 * np.log(t) - 0.00728332 * t
    )


def relative_humidity_ice(
    temp_k, pressure_hpa, specific_humidity
) -> np.ndarray:
    """Relative humidity with respect to ice, in percent.

    Vapor pressure comes from specific humidity q via
    e = q p / (eps + (1 - eps) q) with eps = 0.622 and p in Pa.
    Temperatures below 110 K are outside the saturation formula's validity
    and are rejected.
    """
    t = np.asarray(temp_k, dtype=np.float64)
    p = np.asarray(pressure_hpa, dtype=np.float64) * 100.0
    q = np.asarray(specific_humidity, dtype=np.float64)
    if np.any(t < 110.0):
        raise ValueError("temperature below 110 K: saturation formula invalid")
    if np.any(q < 0.0) or np.any(q > 0.05):
        raise ValueError("specific humidity must lie in [0, 0.05] kg/kg")
    if np.any(p <= 0.0):
        raise ValueError("pressure must be positive")
    e = q * p / (EPSILON_WATER + (1.0 - EPSILON_WATER) * q)
    return 100.0 * e / saturation_vapor_pressure_ice_pa(t)


@dataclass
class AtmosColumn:
    """Per-level temperature (K), pressure (hPa), and specific humidity."""

    temperature_k: np.ndarray
    pressure_hpa: np.ndarray
    specific_humidity: np.ndarray

    def __post_init__(self) -> None:
        self.temperature_k = np.asarray(self.temperature_k, dtype=np.float64)
        self.pressure_hpa = np.asarray(self.pressure_hpa, dtype=np.float64)
        self.specific_humidity = np.asarray(self.specific_humidity, dtype=np.float64)
        n = self.temperature_k.size
        if self.pressure_hpa.size != n or self.specific_humidity.size != n:
            raise ValueError("column arrays must share a length")
        if np.any((self.temperature_k < 150.0) | (self.temperature_k > 350.0)):
            raise ValueError("column temperatures must lie in [150, 350] K")
        if np.any((self.specific_humidity < 0) | (self.specific_humidity > 0.05)):
            raise ValueError("specific humidity must lie in [0, 0.05] kg/kg")
        if np.any(self.pressure_hpa <= 0):
            raise ValueError("pressures must be positive")

    def relative_humidity_ice(self) -> np.ndarray:
        return relative_humidity_ice(
            self.temperature_k, self.pressure_hpa, self.specific_humidity
        )


def render_density(
    tracks: Sequence[AdvectedTrack],
    geo: GridGeo,
    shape: tuple[int, int],
    sigma0_px: float = 1.0,
    growth_px_per_s: float = 1.0 / 3600.0,
) -> np.ndarray:
    """Render advected flight positions as a sum of Gaussian blobs.

    Each track deposits one isotropic Gaussian at its final position with
    sigma = sigma0_px + growth_px_per_s * age. Every blob is normalized by
    its discrete sum over an untruncated window, so a blob wholly inside the
    footprint contributes mass exactly 1; blobs near the border lose the
    truncated part.
    """
    if sigma0_px <= 0 or growth_px_per_s < 0:
        raise ValueError("sigma0_px must be positive and growth nonnegative")
    h, w = shape
    out = np.zeros((h, w), dtype=np.float64)
    for track in tracks:
        age = float(track.ages_s[-1])
        sigma = sigma0_px + growth_px_per_s * age
        row, col = geo.latlon_to_pixel(track.lats[-1], track.lons[-1])
        _deposit_gaussian(out, float(row), float(col), sigma)
    return out


def _deposit_gaussian(out: np.ndarray, row: float, col: float, sigma: float) -> None:
    radius = int(math.ceil(4.0 * sigma))
    r0 = int(round(row))
    c0 = int(round(col))
    rr = np.arange(r0 - radius, r0 + radius + 1)
    cc = np.arange(c0 - radius, c0 + radius + 1)
    gauss = np.exp(
        -((rr[:, None] - row) ** 2 + (cc[None, :] - col) ** 2) / (2.0 * sigma**2)
    )
    gauss /= gauss.sum()
    h, w = out.shape
    rsel = (rr >= 0) & (rr < h)
    csel = (cc >= 0) & (cc < w)
    if not rsel.any() or not csel.any():
        return
    out[np.ix_(rr[rsel], cc[csel])] += gauss[np.ix_(rsel, csel)]


def count_tracks_in_patch(
    tracks: Sequence[AdvectedTrack], geo: GridGeo, shape: tuple[int, int]
) -> int:
    """Number of distinct flights with any trajectory point inside the
    patch footprint (pixel-area bounds)."""
    h, w = shape
    flights = set()
    for track in tracks:
        rows, cols = geo.latlon_to_pixel(track.lats, track.lons)
        inside = (
            (rows >= -0.5) & (rows < h - 0.5) & (cols >= -0.5) & (cols < w - 0.5)
        )
        if inside.any():
            flights.add(track.flight_id)
    return len(flights)


def read_track_csv(path: str | Path | Iterable[str]) -> list[FlightTrack]:
    """Parse waypoints from CSV columns flight_id, time_iso8601, lat, lon,
    alt_m; rows group into per-flight tracks ordered by time."""
    if isinstance(path, (str, Path)):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    else:
        rows = list(csv.DictReader(path))
    by_flight: dict[str, list[Waypoint]] = {}
    for row in rows:
        ts = datetime.fromisoformat(row["time_iso8601"].replace("Z", "+00:00"))
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        wp = Waypoint(
            flight_id=row["flight_id"],
            t_epoch=ts.timestamp(),
            lat=float(row["lat"]),
            lon=float(row["lon"]),
            alt_m=float(row["alt_m"]),
        )
        by_flight.setdefault(wp.flight_id, []).append(wp)
    tracks = []
    for flight_id, wps in by_flight.items():
        wps.sort(key=lambda w: w.t_epoch)
        tracks.append(FlightTrack(flight_id=flight_id, waypoints=tuple(wps)))
    return tracks
