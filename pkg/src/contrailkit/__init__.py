"""contrailkit: build and evaluate linear-contrail detections on
geostationary infrared imagery.

The package covers the non-learned machinery of a contrail benchmark:
calibrated imagery ingestion and false color, record serialization, a
classical line screen, mask vectorization, detection metrics, flight
advection and humidity diagnostics, deterministic scene sampling, coverage
reporting, and a polygon annotation service.
"""

from .grids import Grid, GridGeo, read_raster, write_raster

__all__ = ["Grid", "GridGeo", "read_raster", "write_raster"]

__version__ = "0.1.0"
