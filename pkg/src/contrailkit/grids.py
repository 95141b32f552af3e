"""Raster grids with per-pixel missing flags and a small binary sidecar format.

A grid is a rectangular array of float values plus a boolean missing plane.
Missing data is always carried as an explicit flag plane, never as sentinel
values mixed into the data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO

import numpy as np

MAGIC = b"BTG1"
HEADER_SIZE = 32

BT_MIN_K = 150.0
BT_MAX_K = 350.0


class RasterFormatError(ValueError):
    """Raised when a sidecar file is malformed or truncated."""


@dataclass(frozen=True)
class GridGeo:
    """Affine lat/lon placement of a grid: pixel (row, col) has its center at
    (lat0 + row * dlat, lon0 + col * dlon)."""

    lat0: float
    lon0: float
    dlat: float
    dlon: float

    def __post_init__(self) -> None:
        if not all(np.isfinite([self.lat0, self.lon0, self.dlat, self.dlon])):
            raise ValueError("grid geometry must be finite")
        if self.dlat == 0.0 or self.dlon == 0.0:
            raise ValueError("grid spacing must be nonzero")

    def pixel_to_latlon(self, row, col):
        row = np.asarray(row, dtype=np.float64)
        col = np.asarray(col, dtype=np.float64)
        return self.lat0 + row * self.dlat, self.lon0 + col * self.dlon

    def latlon_to_pixel(self, lat, lon):
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        return (lat - self.lat0) / self.dlat, (lon - self.lon0) / self.dlon


@dataclass
class Grid:
    """A 2-D raster with a missing-flag plane and optional geolocation.

    values: float array, shape (height, width)
    missing: bool array, same shape; True marks pixels with no valid data
    channel_id: small integer identifying the physical quantity
    geo: optional affine lat/lon placement
    """

    values: np.ndarray
    missing: np.ndarray = field(default=None)  # type: ignore[assignment]
    channel_id: int = 0
    geo: GridGeo | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"grid values must be 2-D, got shape {self.values.shape}")
        if self.missing is None:
            self.missing = np.zeros(self.values.shape, dtype=bool)
        else:
            self.missing = np.asarray(self.missing, dtype=bool)
        if self.missing.shape != self.values.shape:
            raise ValueError(
                f"missing plane shape {self.missing.shape} does not match "
                f"values shape {self.values.shape}"
            )
        if not (0 <= int(self.channel_id) < 2**32):
            raise ValueError("channel_id must fit in an unsigned 32-bit integer")
        valid = self.values[~self.missing]
        if valid.size and not np.all(np.isfinite(valid)):
            raise ValueError("non-missing grid values must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def copy_with(self, values: np.ndarray, missing: np.ndarray | None = None) -> "Grid":
        return Grid(
            values=values,
            missing=self.missing.copy() if missing is None else missing,
            channel_id=self.channel_id,
            geo=self.geo,
        )


def validate_bt_grid(grid: Grid) -> None:
    """Check the brightness-temperature contract: non-missing values must lie
    in the physical range [150, 350] K."""
    valid = grid.values[~grid.missing]
    if valid.size and (valid.min() < BT_MIN_K or valid.max() > BT_MAX_K):
        raise ValueError(
            f"brightness temperatures outside [{BT_MIN_K}, {BT_MAX_K}] K "
            "must be flagged missing"
        )


def write_raster(grid: Grid, path: str | Path | BinaryIO) -> None:
    """Write a grid to the little-endian binary sidecar format.

    Layout: 32-byte header (magic 'BTG1', u32 width, u32 height,
    u32 channel-id, f64 corner lat, f64 corner lon), then row-major float32
    values, then row-major u8 missing flags.
    """
    h, w = grid.shape
    lat0 = grid.geo.lat0 if grid.geo is not None else 0.0
    lon0 = grid.geo.lon0 if grid.geo is not None else 0.0
    header = struct.pack("<4sIIIdd", MAGIC, w, h, grid.channel_id, lat0, lon0)
    assert len(header) == HEADER_SIZE
    body = (
        header
        + np.ascontiguousarray(grid.values, dtype="<f4").tobytes()
        + np.ascontiguousarray(grid.missing, dtype=np.uint8).tobytes()
    )
    if hasattr(path, "write"):
        path.write(body)  # type: ignore[union-attr]
    else:
        Path(path).write_bytes(body)


def read_raster(
    path: str | Path | BinaryIO,
    dlat: float | None = None,
    dlon: float | None = None,
) -> Grid:
    """Read a grid from the binary sidecar format.

    The header stores only the corner position; pass dlat/dlon to recover a
    full geolocation, otherwise the grid carries no geo.
    """
    if hasattr(path, "read"):
        raw = path.read()  # type: ignore[union-attr]
    else:
        raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise RasterFormatError(f"file too short for header: {len(raw)} bytes")
    magic, w, h, channel_id, lat0, lon0 = struct.unpack_from("<4sIIIdd", raw, 0)
    if magic != MAGIC:
        raise RasterFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    n = w * h
    expected = HEADER_SIZE + 4 * n + n
    if len(raw) != expected:
        raise RasterFormatError(
            f"file length {len(raw)} does not match header "
            f"({w}x{h} grid needs {expected} bytes)"
        )
    values = np.frombuffer(raw, dtype="<f4", count=n, offset=HEADER_SIZE)
    flags = np.frombuffer(raw, dtype=np.uint8, count=n, offset=HEADER_SIZE + 4 * n)
    geo = None
    if dlat is not None and dlon is not None:
        geo = GridGeo(lat0=lat0, lon0=lon0, dlat=dlat, dlon=dlon)
    return Grid(
        values=values.reshape(h, w).astype(np.float64),
        missing=flags.reshape(h, w).astype(bool),
        channel_id=channel_id,
        geo=geo,
    )
