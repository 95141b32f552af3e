"""Polygon annotation: rasterization, guideline checks, storage, and the
HTTP service."""

from .polygons import GuidelineReport, guideline_check, rasterize_polygons
from .store import Annotation, AnnotationStore, LabelingTask, UnknownTaskError

__all__ = [
    "GuidelineReport",
    "guideline_check",
    "rasterize_polygons",
    "Annotation",
    "AnnotationStore",
    "LabelingTask",
    "UnknownTaskError",
]
