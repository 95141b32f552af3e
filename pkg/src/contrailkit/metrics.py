"""Pixel-level, contrail-level, and relaxed precision/recall metrics.

Conventions shared by every metric here: precision with an empty prediction
set (or zero predicted-positive pixels) is defined as 1 and flagged
degenerate, the analogous rule holds for recall, and thresholds compare with
>= so a probability exactly at a threshold counts positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .linearize import (
    LineSegment,
    SegmentSet,
    angle_difference_deg,
    binarize,
    detect_segments,
    merge_segments,
)


class MetricsError(ValueError):
    """Raised when a metric's preconditions do not hold."""


@dataclass(frozen=True)
class PRPoint:
    """Counts and rates at one decision threshold."""

    threshold: float
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def precision_degenerate(self) -> bool:
        return self.tp + self.fp == 0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def recall_degenerate(self) -> bool:
        return self.tp + self.fn == 0

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "precision_degenerate": self.precision_degenerate,
            "recall_degenerate": self.recall_degenerate,
        }


@dataclass(frozen=True)
class PRCurve:
    points: tuple[PRPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_json(self) -> dict:
        return {"points": [p.to_json() for p in self.points], "auc": auc_pr(self)}


def default_thresholds(n: int = 10000) -> np.ndarray:
    """The evaluation threshold grid: k / (n - 1) for k = 0 .. n-1."""
    if n < 2:
        raise MetricsError("need at least 2 thresholds")
    return np.linspace(0.0, 1.0, n)


def _check_image_pair(pred: np.ndarray, gt: np.ndarray, index: int) -> None:
    if pred.shape != gt.shape:
        raise MetricsError(
            f"image {index}: prediction shape {pred.shape} != ground truth {gt.shape}"
        )
    if pred.size == 0:
        raise MetricsError(f"image {index}: empty arrays")
    if np.any((pred < 0) | (pred > 1)) or not np.all(np.isfinite(pred)):
        raise MetricsError(f"image {index}: probabilities must lie in [0, 1]")


def pixel_pr_curve(
    preds: Sequence[np.ndarray],
    gts: Sequence[np.ndarray],
    n_thresholds: int = 10000,
) -> PRCurve:
    """Micro-averaged pixel PR curve over a dataset.

    Counts pool over all images before any ratio is taken, so images with no
    positives contribute their false positives instead of dropping out. A
    dataset with zero positive ground-truth pixels has no defined recall
    anywhere and is rejected.
    """
    if len(preds) != len(gts):
        raise MetricsError(f"{len(preds)} predictions vs {len(gts)} ground truths")
    if not preds:
        raise MetricsError("empty dataset")
    thresholds = default_thresholds(n_thresholds)
    n = len(thresholds)
    # A value v predicts positive at thresholds[k] iff v >= thresholds[k],
    # i.e. at exactly searchsorted(thresholds, v, side="right") leading
    # thresholds. Bincount those counts and suffix-sum.
    pos_hist = np.zeros(n + 1, dtype=np.int64)
    neg_hist = np.zeros(n + 1, dtype=np.int64)
    total_pos = 0
    total_neg = 0
    for index, (pred, gt) in enumerate(zip(preds, gts)):
        pred = np.asarray(pred, dtype=np.float64)
        gt = np.asarray(gt).astype(bool)
        _check_image_pair(pred, gt, index)
        pos_vals = pred[gt]
        neg_vals = pred[~gt]
        pos_hist += np.bincount(
            np.searchsorted(thresholds, pos_vals, side="right"), minlength=n + 1
        )
        neg_hist += np.bincount(
            np.searchsorted(thresholds, neg_vals, side="right"), minlength=n + 1
        )
        total_pos += int(pos_vals.size)
        total_neg += int(neg_vals.size)
    if total_pos == 0:
        raise MetricsError("no positive ground-truth pixels: recall is undefined")
    # tp at threshold index k = number of positive values v with
    # searchsorted(v) > k.
    pos_cum = np.cumsum(pos_hist)
    neg_cum = np.cumsum(neg_hist)
    points = []
    for k in range(n):
        tp = total_pos - int(pos_cum[k])
        fp = total_neg - int(neg_cum[k])
        points.append(
            PRPoint(threshold=float(thresholds[k]), tp=tp, fp=fp, fn=total_pos - tp)
        )
    return PRCurve(points=tuple(points))


def auc_pr(curve: PRCurve) -> float:
    """Area under the PR curve by right-step interpolation.

    Points are grouped by recall; at each distinct recall the precision of
    the highest-threshold point applies. Recalls sort ascending with an
    anchor at recall 0, and each step contributes
    (recall_j - recall_{j-1}) * precision_j.
    """
    defined = [p for p in curve.points if not p.recall_degenerate]
    if len(defined) < 2:
        raise MetricsError("need at least 2 points with defined recall")
    best_at_recall: dict[float, PRPoint] = {}
    for p in defined:
        cur = best_at_recall.get(p.recall)
        if cur is None or p.threshold > cur.threshold:
            best_at_recall[p.recall] = p
    area = 0.0
    prev_recall = 0.0
    for recall in sorted(best_at_recall):
        area += (recall - prev_recall) * best_at_recall[recall].precision
        prev_recall = recall
    return area


@dataclass(frozen=True)
class MatchParams:
    """Gates for pairing predicted and ground-truth segments."""

    angle_tol_deg: float = 10.0
    distance_tol_km: float = 10.0
    km_per_pixel: float = 2.0
    sample_step_px: float = 1.0
    mode: str = "greedy"

    def __post_init__(self) -> None:
        if self.angle_tol_deg < 0 or self.distance_tol_km < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.km_per_pixel <= 0 or self.sample_step_px <= 0:
            raise ValueError("km_per_pixel and sample_step_px must be positive")
        if self.mode not in ("greedy", "optimal"):
            raise ValueError(f"unknown matching mode {self.mode!r}")


def point_to_segment_distance(points: np.ndarray, seg: LineSegment) -> np.ndarray:
    """Distance from each (row, col) point to a finite segment."""
    p0 = np.array(seg.p0, dtype=np.float64)
    d = np.array(seg.p1, dtype=np.float64) - p0
    denom = float(d @ d)
    t = np.clip(((points - p0) @ d) / denom, 0.0, 1.0)
    closest = p0 + t[:, None] * d
    return np.hypot(*(points - closest).T)


def mean_segment_distance_km(
    pred: LineSegment, gt: LineSegment, params: MatchParams
) -> float:
    """Mean distance (km) from points sampled along the predicted segment to
    the ground-truth segment."""
    n = max(2, int(math.ceil(pred.length / params.sample_step_px)) + 1)
    ts = np.linspace(0.0, 1.0, n)
    p0 = np.array(pred.p0, dtype=np.float64)
    p1 = np.array(pred.p1, dtype=np.float64)
    samples = p0 + ts[:, None] * (p1 - p0)
    return float(point_to_segment_distance(samples, gt).mean()) * params.km_per_pixel


@dataclass(frozen=True)
class MatchResult:
    precision: float
    recall: float
    pairs: tuple[tuple[int, int], ...]
    precision_degenerate: bool
    recall_degenerate: bool

    @property
    def n_matched(self) -> int:
        return len(self.pairs)

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "pairs": [list(p) for p in self.pairs],
            "precision_degenerate": self.precision_degenerate,
            "recall_degenerate": self.recall_degenerate,
        }


def _feasible_pairs(
    preds: Sequence[LineSegment], gts: Sequence[LineSegment], params: MatchParams
) -> list[tuple[float, int, int]]:
    out = []
    for i, pred in enumerate(preds):
        for j, gt in enumerate(gts):
            if angle_difference_deg(pred.angle, gt.angle) > params.angle_tol_deg:
                continue
            dist = mean_segment_distance_km(pred, gt, params)
            if dist <= params.distance_tol_km:
                out.append((dist, i, j))
    return out


def match_contrails(
    pred_set: SegmentSet | Sequence[LineSegment],
    gt_set: SegmentSet | Sequence[LineSegment],
    params: MatchParams = MatchParams(),
) -> MatchResult:
    """One-to-one matching of predicted to ground-truth segments.

    A pair is feasible when the angle difference and the mean distance from
    the predicted segment to the ground-truth segment are both within
    tolerance. Greedy mode matches feasible pairs in ascending distance
    order (ties by index); optimal mode maximizes the number of matches,
    breaking ties by total distance.
    """
    preds = list(pred_set)
    gts = list(gt_set)
    feasible = sorted(_feasible_pairs(preds, gts, params))
    if params.mode == "optimal" and feasible:
        pairs = _optimal_pairs(feasible, len(preds), len(gts))
    else:
        used_p: set[int] = set()
        used_g: set[int] = set()
        pairs = []
        for _, i, j in feasible:
            if i in used_p or j in used_g:
                continue
            used_p.add(i)
            used_g.add(j)
            pairs.append((i, j))
    matched = len(pairs)
    return MatchResult(
        precision=matched / len(preds) if preds else 1.0,
        recall=matched / len(gts) if gts else 1.0,
        pairs=tuple(sorted(pairs)),
        precision_degenerate=not preds,
        recall_degenerate=not gts,
    )


def _optimal_pairs(
    feasible: list[tuple[float, int, int]], n_pred: int, n_gt: int
) -> list[tuple[int, int]]:
    from scipy.optimize import linear_sum_assignment

    # Infeasible pairs get a cost large enough that the assignment never
    # prefers them over any chain of feasible matches.
    big = 1e9
    cost = np.full((n_pred, n_gt), big)
    for dist, i, j in feasible:
        cost[i, j] = dist
    rows, cols = linear_sum_assignment(cost)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if cost[i, j] < big]


def contrail_pr_curve(
    prob_masks: Sequence[np.ndarray],
    gt_sets: Sequence[SegmentSet | Sequence[LineSegment]],
    thresholds: Iterable[float],
    match_params: MatchParams = MatchParams(),
    width_tol: float = 1.5,
    min_component_px: int = 10,
) -> PRCurve:
    """Contrail-level PR curve: binarize, vectorize, merge, and match each
    probability mask at every threshold; counts pool over the dataset."""
    if len(prob_masks) != len(gt_sets):
        raise MetricsError(f"{len(prob_masks)} masks vs {len(gt_sets)} segment sets")
    points = []
    for threshold in thresholds:
        tp = fp = fn = 0
        for prob, gts in zip(prob_masks, gt_sets):
            mask = binarize(prob, threshold)
            pred = merge_segments(
                detect_segments(
                    mask,
                    width_tol=width_tol,
                    min_component_px=min_component_px,
                    source_threshold=threshold,
                )
            )
            result = match_contrails(pred, gts, match_params)
            gts_n = len(list(gts))
            tp += result.n_matched
            fp += len(pred) - result.n_matched
            fn += gts_n - result.n_matched
        points.append(PRPoint(threshold=float(threshold), tp=tp, fp=fp, fn=fn))
    return PRCurve(points=tuple(points))


@dataclass(frozen=True)
class RelaxedPR:
    precision: float
    recall: float
    precision_degenerate: bool
    recall_degenerate: bool

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "precision_degenerate": self.precision_degenerate,
            "recall_degenerate": self.recall_degenerate,
        }


def _within_radius(sources: np.ndarray, rho: int) -> np.ndarray:
    """Boolean plane: pixels whose Euclidean distance to the nearest source
    pixel is at most rho. Exact integer arithmetic throughout."""
    if not sources.any():
        return np.zeros(sources.shape, dtype=bool)
    indices = ndimage.distance_transform_edt(
        ~sources, return_distances=False, return_indices=True
    )
    rr, cc = np.indices(sources.shape)
    d2 = (indices[0] - rr) ** 2 + (indices[1] - cc) ** 2
    return d2 <= rho * rho


def relaxed_pr(pred: np.ndarray, gt: np.ndarray, rho: int = 2) -> RelaxedPR:
    """Boundary-relaxed pixel precision and recall.

    A predicted positive counts as correct when any ground-truth positive
    lies within Euclidean distance rho; recall relaxes symmetrically. With
    rho = 0 both collapse to exact pixel precision and recall.
    """
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    if pred.shape != gt.shape:
        raise MetricsError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if rho < 0:
        raise MetricsError("rho must be nonnegative")
    n_pred = int(pred.sum())
    n_gt = int(gt.sum())
    precision_degenerate = n_pred == 0
    recall_degenerate = n_gt == 0
    precision = 1.0 if precision_degenerate else float(
        (pred & _within_radius(gt, rho)).sum() / n_pred
    )
    recall = 1.0 if recall_degenerate else float(
        (gt & _within_radius(pred, rho)).sum() / n_gt
    )
    return RelaxedPR(
        precision=precision,
        recall=recall,
        precision_degenerate=precision_degenerate,
        recall_degenerate=recall_degenerate,
    )


@dataclass(frozen=True)
class QuorumSpec:
    """Aggregation rule: a pixel is positive when at least `quorum` of the
    `n_labelers` marked it."""

    n_labelers: int = 4
    quorum: int = 3

    def __post_init__(self) -> None:
        if not 1 <= self.quorum <= self.n_labelers:
            raise ValueError("quorum must be in 1..n_labelers")


def aggregate_labels(masks: Sequence[np.ndarray], spec: QuorumSpec = QuorumSpec()) -> np.ndarray:
    """Combine per-labeler binary masks into the quorum mask."""
    if len(masks) != spec.n_labelers:
        raise MetricsError(
            f"expected {spec.n_labelers} labeler masks, got {len(masks)}"
        )
    stack = np.stack([np.asarray(m).astype(bool) for m in masks])
    return (stack.sum(axis=0) >= spec.quorum).astype(np.uint8)


@dataclass(frozen=True)
class AgreementResult:
    value: float
    degenerate: bool


def labeler_agreement(masks: Sequence[np.ndarray]) -> AgreementResult:
    """Fraction of pixels marked by anyone that a strict majority marked.

    An empty union is defined as agreement 1 with the degenerate flag set.
    """
    if len(masks) < 2:
        raise MetricsError("agreement needs at least 2 labelers")
    stack = np.stack([np.asarray(m).astype(bool) for m in masks])
    counts = stack.sum(axis=0)
    union = int((counts >= 1).sum())
    if union == 0:
        return AgreementResult(value=1.0, degenerate=True)
    majority = int((counts > len(masks) / 2).sum())
    return AgreementResult(value=majority / union, degenerate=False)
