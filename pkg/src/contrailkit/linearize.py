"""Vectorizing binary detection masks into line segments.

Connected components are fitted with total-least-squares lines; components
too wide for a single line split recursively on the side of the
farthest-offset pixel. Nearly collinear segments merge back together under
angle, lateral-offset, and gap gates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy import ndimage

from .detector import CONNECT_8

ANGLE_EPS_DEG = 1e-6
_MAX_SPLIT_DEPTH = 12


def canonical_angle_deg(dr: float, dc: float) -> float:
    """Undirected angle of the (row, col) displacement in [0, 180).

    A horizontal run is 0 degrees, a vertical run 90 degrees.
    """
    ang = math.degrees(math.atan2(dr, dc)) % 180.0
    return 0.0 if ang >= 180.0 - 1e-12 else ang


def angle_difference_deg(a: float, b: float) -> float:
    """Distance between undirected angles, in [0, 90]."""
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d)


@dataclass(frozen=True)
class LineSegment:
    """A segment in pixel coordinates (row, col), endpoints canonically
    ordered so that the column increases (ties: row increases)."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    angle: float
    length: float

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError("segment length must be positive")
        dr = self.p1[0] - self.p0[0]
        dc = self.p1[1] - self.p0[1]
        if abs(math.hypot(dr, dc) - self.length) > 1e-6 * max(1.0, self.length):
            raise ValueError("segment length is inconsistent with its endpoints")
        if angle_difference_deg(canonical_angle_deg(dr, dc), self.angle) > ANGLE_EPS_DEG:
            raise ValueError("segment angle is inconsistent with its endpoints")

    @classmethod
    def from_endpoints(
        cls, p0: Sequence[float], p1: Sequence[float]
    ) -> "LineSegment":
        a = (float(p0[0]), float(p0[1]))
        b = (float(p1[0]), float(p1[1]))
        dc = b[1] - a[1]
        dr = b[0] - a[0]
        if dc < 0 or (dc == 0 and dr < 0):
            a, b = b, a
            dr, dc = -dr, -dc
        length = math.hypot(dr, dc)
        if length == 0:
            raise ValueError("segment endpoints coincide")
        return cls(p0=a, p1=b, angle=canonical_angle_deg(dr, dc), length=length)

    def to_json(self) -> dict:
        return {
            "p0": [self.p0[0], self.p0[1]],
            "p1": [self.p1[0], self.p1[1]],
            "angle": self.angle,
            "length": self.length,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LineSegment":
        return cls.from_endpoints(obj["p0"], obj["p1"])


@dataclass(frozen=True)
class SegmentSet:
    """Segments extracted from one mask, tagged with the binarization
    threshold that produced the mask."""

    segments: tuple[LineSegment, ...]
    source_threshold: float = 0.0

    def __post_init__(self) -> None:
        seen = set()
        for seg in self.segments:
            key = (seg.p0, seg.p1)
            if key in seen:
                raise ValueError(f"duplicate segment {key}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)


def binarize(prob: np.ndarray, threshold: float) -> np.ndarray:
    """Probability map to boolean mask: positive where prob >= threshold."""
    return np.asarray(prob) >= threshold


def _principal_axis(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Centroid and unit principal/perpendicular axes of an (n, 2) point set."""
    centroid = coords.mean(axis=0)
    centered = coords - centroid
    cov = centered.T @ centered / len(coords)
    eigvals, eigvecs = np.linalg.eigh(cov)
    axis = eigvecs[:, int(np.argmax(eigvals))]
    # Canonical direction: column component positive (ties: row positive).
    if axis[1] < 0 or (axis[1] == 0 and axis[0] < 0):
        axis = -axis
    perp = np.array([-axis[1], axis[0]])
    return centroid, axis, perp


def _segment_from_cluster(coords: np.ndarray) -> LineSegment | None:
    centroid, axis, _ = _principal_axis(coords)
    t = (coords - centroid) @ axis
    t_min, t_max = float(t.min()), float(t.max())
    if t_max - t_min <= 0:
        return None
    a = centroid + t_min * axis
    b = centroid + t_max * axis
    return LineSegment.from_endpoints(a, b)


def _fit_cluster(
    coords: np.ndarray, width_tol: float, depth: int
) -> list[LineSegment]:
    if len(coords) < 2:
        return []
    centroid, axis, perp = _principal_axis(coords)
    offsets = (coords - centroid) @ perp
    rms = float(np.sqrt(np.mean(offsets**2)))
    if rms <= width_tol or depth >= _MAX_SPLIT_DEPTH:
        seg = _segment_from_cluster(coords)
        return [seg] if seg else []
    # Cut across the axis at the farthest-offset pixel. For an L the axis
    # bisects the corner, the corner deviates the most, and the cut lands
    # there, separating the arms.
    proj = (coords - centroid) @ axis
    far = int(np.argmax(np.abs(offsets)))
    side = proj < proj[far]
    if side.all() or not side.any():
        side = proj < np.median(proj)
    if side.all() or not side.any():
        seg = _segment_from_cluster(coords)
        return [seg] if seg else []
    return _fit_cluster(coords[side], width_tol, depth + 1) + _fit_cluster(
        coords[~side], width_tol, depth + 1
    )


def detect_segments(
    mask: np.ndarray,
    width_tol: float = 1.5,
    min_component_px: int = 10,
    source_threshold: float = 0.0,
) -> SegmentSet:
    """Fit line segments to the 8-connected components of a binary mask.

    Components smaller than min_component_px are ignored. A component whose
    RMS perpendicular residual is within width_tol becomes one segment
    spanning its extremal projections; wider components split recursively.
    """
    mask = np.asarray(mask).astype(bool)
    if width_tol <= 0:
        raise ValueError("width_tol must be positive")
    labels, n = ndimage.label(mask, structure=CONNECT_8)
    segments: list[LineSegment] = []
    for idx in range(1, n + 1):
        rows, cols = np.nonzero(labels == idx)
        if rows.size < min_component_px:
            continue
        coords = np.column_stack([rows, cols]).astype(np.float64)
        segments.extend(_fit_cluster(coords, width_tol, depth=0))
    return SegmentSet(segments=tuple(segments), source_threshold=source_threshold)


def point_to_line_distance(
    point: np.ndarray, origin: np.ndarray, direction: np.ndarray
) -> float:
    """Perpendicular distance from a point to the infinite line through
    origin with unit direction."""
    rel = np.asarray(point, dtype=np.float64) - origin
    return abs(float(rel[0] * -direction[1] + rel[1] * direction[0]))


def _segment_geometry(seg: LineSegment) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.array(seg.p0)
    p1 = np.array(seg.p1)
    direction = (p1 - p0) / seg.length
    return p0, direction


def _mergeable(
    a: LineSegment, b: LineSegment, angle_tol: float, lateral_tol: float, gap_tol: float
) -> tuple[bool, float]:
    """Whether two segments may merge; also returns their axis gap."""
    if angle_difference_deg(a.angle, b.angle) > angle_tol:
        return False, math.inf
    pa, da = _segment_geometry(a)
    pb, db = _segment_geometry(b)
    lateral = max(
        point_to_line_distance(np.array(b.p0), pa, da),
        point_to_line_distance(np.array(b.p1), pa, da),
        point_to_line_distance(np.array(a.p0), pb, db),
        point_to_line_distance(np.array(a.p1), pb, db),
    )
    if lateral > lateral_tol:
        return False, math.inf
    # Project all endpoints on a shared axis to measure the along-line gap.
    db_aligned = db if float(da @ db) >= 0 else -db
    axis = da + db_aligned
    norm = float(np.hypot(axis[0], axis[1]))
    axis = da if norm == 0 else axis / norm
    ta = sorted([float(np.array(a.p0) @ axis), float(np.array(a.p1) @ axis)])
    tb = sorted([float(np.array(b.p0) @ axis), float(np.array(b.p1) @ axis)])
    gap = max(0.0, max(ta[0], tb[0]) - min(ta[1], tb[1]))
    if gap > gap_tol:
        return False, math.inf
    return True, gap


def _merge_pair(a: LineSegment, b: LineSegment) -> LineSegment:
    pts = np.array([a.p0, a.p1, b.p0, b.p1], dtype=np.float64)
    seg = _segment_from_cluster(pts)
    if seg is None:
        raise ValueError("cannot merge coincident segments")
    return seg


def merge_segments(
    segset: SegmentSet,
    angle_tol: float = 10.0,
    lateral_tol: float = 2.0,
    gap_tol: float = 3.0,
) -> SegmentSet:
    """Merge nearly collinear segments until no pair qualifies.

    A pair merges when the angle difference, the mutual perpendicular offset
    (endpoints of each against the other's infinite line), and the along-axis
    gap are all within tolerance. Each round merges the pair with the
    smallest gap (ties by position), replacing it with the least-squares
    segment over both pairs of endpoints, so the result does not depend on
    input order and the operation is idempotent.
    """
    # The working list stays canonically sorted, so the tie-break on pair
    # position is a tie-break on segment content and the fixpoint does not
    # depend on input order.
    order = lambda s: (s.p0, s.p1)  # noqa: E731
    segments = sorted(segset.segments, key=order)
    while True:
        best: tuple[float, int, int] | None = None
        for i in range(len(segments)):
            for j in range(i + 1, len(segments)):
                ok, gap = _mergeable(
                    segments[i], segments[j], angle_tol, lateral_tol, gap_tol
                )
                if ok and (best is None or gap < best[0]):
                    best = (gap, i, j)
        if best is None:
            break
        _, i, j = best
        merged = _merge_pair(segments[i], segments[j])
        segments = [s for k, s in enumerate(segments) if k not in (i, j)]
        segments.append(merged)
        segments.sort(key=order)
    return SegmentSet(segments=tuple(segments), source_threshold=segset.source_threshold)


def write_segments_jsonl(
    segset: SegmentSet, path: str | Path | TextIO
) -> None:
    """One JSON object per line: p0, p1, angle, length, source_threshold."""

    def _dump(fh: TextIO) -> None:
        for seg in segset.segments:
            obj = seg.to_json()
            obj["source_threshold"] = segset.source_threshold
            fh.write(json.dumps(obj) + "\n")

    if hasattr(path, "write"):
        _dump(path)  # type: ignore[arg-type]
    else:
        with open(path, "w", encoding="utf-8") as fh:
            _dump(fh)


def read_segments_jsonl(path: str | Path | TextIO) -> SegmentSet:
    def _load(lines: Iterable[str]) -> SegmentSet:
        segments = []
        threshold = 0.0
        for line in lines:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            segments.append(LineSegment.from_json(obj))
            threshold = float(obj.get("source_threshold", 0.0))
        return SegmentSet(segments=tuple(segments), source_threshold=threshold)

    if hasattr(path, "read"):
        return _load(path)  # type: ignore[arg-type]
    with open(path, "r", encoding="utf-8") as fh:
        return _load(fh)
