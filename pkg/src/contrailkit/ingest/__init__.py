"""Imagery and record ingestion: calibration, false color, reprojection,
patch geometry, and the record file format."""

from .planck import PlanckConstants, bt_to_radiance, radiance_to_bt
from .ash import AshBounds, render_ash
from .patches import center_crop, pad_to_frame, standardize
from .projection import UtmCrs, reproject_utm, utm_zone
from .records import ExampleRecord, read_records, write_records

__all__ = [
    "PlanckConstants",
    "bt_to_radiance",
    "radiance_to_bt",
    "AshBounds",
    "render_ash",
    "center_crop",
    "pad_to_frame",
    "standardize",
    "UtmCrs",
    "reproject_utm",
    "utm_zone",
    "ExampleRecord",
    "read_records",
    "write_records",
]
