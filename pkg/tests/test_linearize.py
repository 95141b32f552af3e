import io
import math

import numpy as np
import pytest

from contrailkit.linearize import (
    LineSegment,
    SegmentSet,
    angle_difference_deg,
    binarize,
    canonical_angle_deg,
    detect_segments,
    merge_segments,
    read_segments_jsonl,
    write_segments_jsonl,
)


def seg(p0, p1) -> LineSegment:
    return LineSegment.from_endpoints(p0, p1)


def rasterize_line(shape, r0, c0, angle_deg, length) -> np.ndarray:
    """Nearest-pixel rasterization of a straight line."""
    mask = np.zeros(shape, dtype=bool)
    theta = math.radians(angle_deg)
    for t in np.linspace(0.0, length, int(length * 4) + 1):
        r = int(round(r0 + t * math.sin(theta)))
        c = int(round(c0 + t * math.cos(theta)))
        if 0 <= r < shape[0] and 0 <= c < shape[1]:
            mask[r, c] = True
    return mask


def test_angle_conventions():
    assert canonical_angle_deg(0.0, 1.0) == 0.0
    assert canonical_angle_deg(1.0, 0.0) == 90.0
    assert canonical_angle_deg(-1.0, 0.0) == 90.0
    assert canonical_angle_deg(1.0, 1.0) == pytest.approx(45.0)
    assert angle_difference_deg(5.0, 175.0) == pytest.approx(10.0)
    assert angle_difference_deg(89.0, 91.0) == pytest.approx(2.0)


def test_segment_canonical_order_and_fields():
    s = seg((5.0, 9.0), (5.0, 1.0))
    assert s.p0 == (5.0, 1.0)  # endpoints swap so the column increases
    assert s.p1 == (5.0, 9.0)
    assert s.angle == pytest.approx(0.0)
    assert s.length == pytest.approx(8.0)
    v = seg((7.0, 3.0), (2.0, 3.0))
    assert v.p0 == (2.0, 3.0)  # equal columns: row increases
    assert v.angle == pytest.approx(90.0)


def test_segment_validation():
    with pytest.raises(ValueError):
        seg((1.0, 1.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        LineSegment(p0=(0.0, 0.0), p1=(0.0, 10.0), angle=45.0, length=10.0)
    with pytest.raises(ValueError):
        LineSegment(p0=(0.0, 0.0), p1=(0.0, 10.0), angle=0.0, length=3.0)


def test_segment_set_rejects_duplicates():
    s = seg((0.0, 0.0), (0.0, 5.0))
    with pytest.raises(ValueError):
        SegmentSet(segments=(s, seg((0.0, 0.0), (0.0, 5.0))))


def test_binarize_threshold_inclusive():
    prob = np.array([[0.2, 0.5, 0.7]])
    np.testing.assert_array_equal(binarize(prob, 0.5), [[False, True, True]])


def test_horizontal_run_fits_one_segment():
    mask = np.zeros((11, 50), dtype=bool)
    mask[5, 0:40] = True
    out = detect_segments(mask)
    assert len(out) == 1
    s = out.segments[0]
    assert abs(s.angle - 0.0) <= 0.5 or abs(s.angle - 180.0) <= 0.5
    assert 39.0 <= s.length <= 41.0
    assert s.p0 == pytest.approx((5.0, 0.0), abs=1e-6)
    assert s.p1 == pytest.approx((5.0, 39.0), abs=1e-6)


def test_small_components_ignored():
    mask = np.zeros((20, 20), dtype=bool)
    mask[3, 3:8] = True  # 5 px
    assert len(detect_segments(mask, min_component_px=10)) == 0
    assert len(detect_segments(mask, min_component_px=5)) == 1


def test_l_shape_splits_into_two_arms():
    mask = np.zeros((40, 40), dtype=bool)
    mask[5, 5:35] = True  # horizontal arm, 30 px
    mask[5:35, 5] = True  # vertical arm, 30 px
    out = detect_segments(mask)
    assert len(out) == 2
    angles = sorted(s.angle for s in out.segments)
    assert angles[0] == pytest.approx(0.0, abs=5.0)
    assert abs(angles[1] - 90.0) <= 5.0
    for s in out.segments:
        assert s.length >= 25.0


def test_twelve_angle_recovery():
    for k in range(12):
        # The segment is centered on the canvas so every angle fits fully.
        angle = k * 15.0
        dr = math.sin(math.radians(angle))
        dc = math.cos(math.radians(angle))
        r0, c0 = 32.0 - 19.0 * dr, 32.0 - 19.0 * dc
        mask = rasterize_line((64, 64), r0, c0, angle, 38.0)
        out = detect_segments(mask)
        assert len(out) == 1, f"angle {angle}: got {len(out)} segments"
        s = out.segments[0]
        assert angle_difference_deg(s.angle, angle) <= 2.0
        want0 = (r0, c0)
        want1 = (r0 + 38.0 * dr, c0 + 38.0 * dc)
        d00 = math.hypot(s.p0[0] - want0[0], s.p0[1] - want0[1])
        d01 = math.hypot(s.p1[0] - want1[0], s.p1[1] - want1[1])
        d10 = math.hypot(s.p0[0] - want1[0], s.p0[1] - want1[1])
        d11 = math.hypot(s.p1[0] - want0[0], s.p1[1] - want0[1])
        assert min(max(d00, d01), max(d10, d11)) <= 2.0


def test_merge_collinear_chain_with_gaps():
    chain = SegmentSet(
        segments=(
            seg((0.0, 0.0), (0.0, 10.0)),
            seg((0.0, 11.0), (0.0, 21.0)),
            seg((0.0, 22.0), (0.0, 32.0)),
        )
    )
    out = merge_segments(chain, gap_tol=2.0)
    assert len(out) == 1
    s = out.segments[0]
    assert s.p0 == pytest.approx((0.0, 0.0), abs=1e-9)
    assert s.p1 == pytest.approx((0.0, 32.0), abs=1e-9)


def test_merge_gates_respected():
    base = seg((0.0, 0.0), (0.0, 10.0))
    # Angle gate: 11 degrees apart stays separate at tol 10.
    tilted = seg((0.0, 12.0), (0.0 + 12.0 * math.tan(math.radians(11.0)), 24.0))
    out = merge_segments(SegmentSet(segments=(base, tilted)))
    assert len(out) == 2
    # Lateral gate: parallel but 3 px off stays separate at tol 2.
    offset = seg((3.0, 11.0), (3.0, 21.0))
    assert len(merge_segments(SegmentSet(segments=(base, offset)))) == 2
    # Gap gate: 4 px gap stays separate at tol 3.
    far = seg((0.0, 14.0), (0.0, 24.0))
    assert len(merge_segments(SegmentSet(segments=(base, far)))) == 2
    # All gates satisfied: merges.
    near = seg((0.5, 12.0), (0.5, 22.0))
    assert len(merge_segments(SegmentSet(segments=(base, near)))) == 1


def _random_segment_set(rng: np.random.Generator, n: int) -> SegmentSet:
    segs = []
    tries = 0
    while len(segs) < n and tries < 200:
        tries += 1
        p0 = rng.uniform(0, 50, 2)
        ang = rng.uniform(0, math.pi)
        length = rng.uniform(3, 25)
        p1 = p0 + length * np.array([math.sin(ang), math.cos(ang)])
        s = seg(tuple(p0), tuple(p1))
        if all(s.p0 != t.p0 or s.p1 != t.p1 for t in segs):
            segs.append(s)
    return SegmentSet(segments=tuple(segs))


def test_merge_idempotent_and_order_independent():
    rng = np.random.default_rng(12)
    for _ in range(300):
        n = int(rng.integers(1, 7))
        segset = _random_segment_set(rng, n)
        once = merge_segments(segset)
        twice = merge_segments(once)
        assert once.segments == twice.segments
        perm = list(segset.segments)
        rng.shuffle(perm)
        shuffled = merge_segments(SegmentSet(segments=tuple(perm)))
        assert shuffled.segments == once.segments


def test_jsonl_round_trip(tmp_path):
    original = SegmentSet(
        segments=(seg((1.0, 2.0), (3.5, 14.0)), seg((8.0, 1.0), (2.0, 9.0))),
        source_threshold=0.35,
    )
    path = tmp_path / "segments.jsonl"
    write_segments_jsonl(original, path)
    back = read_segments_jsonl(path)
    assert back.source_threshold == pytest.approx(0.35)
    assert back.segments == original.segments
    buf = io.StringIO()
    write_segments_jsonl(original, buf)
    buf.seek(0)
    assert read_segments_jsonl(buf).segments == original.segments
