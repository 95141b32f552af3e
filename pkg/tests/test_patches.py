import numpy as np
import pytest

from contrailkit.grids import Grid, GridGeo
from contrailkit.ingest.patches import (
    CROP_LEAD,
    CROP_TRAIL,
    center_crop,
    center_crop_grid,
    channel_scale,
    pad_to_frame,
    standardize,
)


def test_crop_offsets_are_12_and_13():
    assert CROP_LEAD == 12
    assert CROP_TRAIL == 13
    frame = np.arange(281 * 281).reshape(281, 281)
    patch = center_crop(frame)
    assert patch.shape == (256, 256)
    assert patch[0, 0] == frame[12, 12]
    assert patch[-1, -1] == frame[267, 267]


def test_crop_rejects_wrong_size():
    with pytest.raises(ValueError):
        center_crop(np.zeros((256, 256)))
    with pytest.raises(ValueError):
        center_crop(np.zeros((282, 281)))


def test_crop_then_pad_round_trip():
    rng = np.random.default_rng(0)
    patch = rng.normal(size=(256, 256))
    np.testing.assert_array_equal(center_crop(pad_to_frame(patch)), patch)


def test_crop_passes_channels_through():
    frame = np.zeros((281, 281, 3))
    assert center_crop(frame).shape == (256, 256, 3)


def test_crop_grid_shifts_geo():
    geo = GridGeo(lat0=40.0, lon0=-100.0, dlat=-0.02, dlon=0.02)
    g = Grid(values=np.zeros((281, 281)), geo=geo)
    out = center_crop_grid(g)
    assert out.shape == (256, 256)
    assert out.geo.lat0 == pytest.approx(40.0 - 0.02 * 12)
    assert out.geo.lon0 == pytest.approx(-100.0 + 0.02 * 12)


def test_standardize_math_and_errors():
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(standardize(x, 2.0, 0.5), [-2.0, 0.0, 2.0])
    with pytest.raises(ValueError):
        standardize(x, 0.0, 0.0)
    with pytest.raises(ValueError):
        standardize(x, np.nan, 1.0)


def test_channel_scale_kinds():
    x = np.array([0.0, 2.0, 4.0, 6.0])
    var = float(np.var(x))
    assert channel_scale(x, "variance") == pytest.approx(var)
    assert channel_scale(x, "stddev") == pytest.approx(np.sqrt(var))
    with pytest.raises(ValueError):
        channel_scale(x, "mad")
