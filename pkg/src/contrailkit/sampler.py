"""Deterministic scene sampling for dataset construction.

Scenes are downweighted when they have no or few flight tracks, no
ice-supersaturated levels, or no line-screen detections; the keep decision
is a pure function of (seed, scene_id) so a sampling run is reproducible
and order-independent.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, TextIO

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class KeepPolicy:
    """Multiplicative keep-probability factors.

    track_count == 0 applies p_no_tracks; 0 < track_count < few_tracks_below
    applies p_few_tracks. max_rhi_percent <= dry_rhi_percent applies p_dry.
    A failed line screen applies p_screen_fail. Factors multiply.
    """

    p_no_tracks: float = 0.05
    p_few_tracks: float = 0.20
    few_tracks_below: int = 10
    p_dry: float = 0.05
    dry_rhi_percent: float = 90.0
    p_screen_fail: float = 0.05

    def __post_init__(self) -> None:
        for name in ("p_no_tracks", "p_few_tracks", "p_dry", "p_screen_fail"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.few_tracks_below < 1:
            raise ValueError("few_tracks_below must be at least 1")


@dataclass(frozen=True)
class SceneFeatures:
    """Per-scene features the sampler weighs."""

    scene_id: str
    track_count: int
    max_rhi_percent: float
    screen_passed: bool

    def __post_init__(self) -> None:
        if not self.scene_id:
            raise ValueError("scene_id must be nonempty")
        if self.track_count < 0:
            raise ValueError("track_count must be nonnegative")
        if self.max_rhi_percent < 0:
            raise ValueError("max_rhi_percent must be nonnegative")


def keep_probability(features: SceneFeatures, policy: KeepPolicy = KeepPolicy()) -> float:
    p = 1.0
    if features.track_count == 0:
        p *= policy.p_no_tracks
    elif features.track_count < policy.few_tracks_below:
        p *= policy.p_few_tracks
    if features.max_rhi_percent <= policy.dry_rhi_percent:
        p *= policy.p_dry
    if not features.screen_passed:
        p *= policy.p_screen_fail
    return p


def fnv1a64(data: bytes) -> int:
    h = FNV64_OFFSET
    for b in data:
        h = ((h ^ b) * FNV64_PRIME) & _MASK64
    return h


def scene_draw(seed: int, scene_id: str) -> float:
    """Uniform draw in [0, 1) derived from hashing the seed and scene id."""
    data = struct.pack("<Q", seed & _MASK64) + scene_id.encode("utf-8")
    return fnv1a64(data) / 2.0**64


def decide_keep(
    features: SceneFeatures, seed: int, policy: KeepPolicy = KeepPolicy()
) -> bool:
    """Keep the scene iff its hash draw falls below its keep probability."""
    return scene_draw(seed, features.scene_id) < keep_probability(features, policy)


def sample_scenes(
    features: Iterable[SceneFeatures], seed: int, policy: KeepPolicy = KeepPolicy()
) -> Iterator[SceneFeatures]:
    for f in features:
        if decide_keep(f, seed, policy):
            yield f


def read_features_csv(path: str | Path | Iterable[str]) -> list[SceneFeatures]:
    """Columns: scene_id, track_count, max_rhi, mannstein_passed."""
    if isinstance(path, (str, Path)):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    else:
        rows = list(csv.DictReader(path))
    out = []
    for row in rows:
        out.append(
            SceneFeatures(
                scene_id=row["scene_id"],
                track_count=int(row["track_count"]),
                max_rhi_percent=float(row["max_rhi"]),
                screen_passed=row["mannstein_passed"].strip().lower()
                in ("1", "true", "yes"),
            )
        )
    return out


def write_kept_csv(kept: Iterable[SceneFeatures], path: str | Path | TextIO) -> int:
    def _dump(fh) -> int:
        writer = csv.writer(fh)
        writer.writerow(["scene_id", "track_count", "max_rhi", "mannstein_passed"])
        n = 0
        for f in kept:
            writer.writerow(
                [f.scene_id, f.track_count, f.max_rhi_percent, str(f.screen_passed).lower()]
            )
            n += 1
        return n

    if hasattr(path, "write"):
        return _dump(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        return _dump(fh)
