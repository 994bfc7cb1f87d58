"""Score-weighted NMS tests against an independently written greedy oracle."""

import numpy as np
import pytest

from oracles import greedy_nms_oracle as greedy_oracle
from hypothesis import given, settings
from hypothesis import strategies as st

from mvdet.geometry import CropRect
from mvdet.nms import (
    DetectionCandidate,
    detection_from_json,
    detection_to_json,
    iou,
    max_view_overlap,
    score_weighted_nms,
)


def rect(x0, y0, x1, y1):
    return CropRect(x0, y0, x1, y1, visible=True)


class TestIoU:
    def test_identical(self):
        assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0

    def test_disjoint(self):
        assert iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0

    def test_half_offset_unit_squares(self):
        assert iou((0, 0, 1, 1), (0.5, 0, 1.5, 1)) == pytest.approx(1 / 3)

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = np.sort(rng.uniform(0, 10, 2)), np.sort(rng.uniform(0, 10, 2))
            b = np.sort(rng.uniform(0, 10, 2)), np.sort(rng.uniform(0, 10, 2))
            ra = (a[0][0], a[1][0], a[0][1], a[1][1])
            rb = (b[0][0], b[1][0], b[0][1], b[1][1])
            v = iou(ra, rb)
            assert 0.0 <= v <= 1.0
            assert v == pytest.approx(iou(rb, ra))


def random_candidates(rng, n_views=3, max_n=10):
    n = int(rng.integers(1, max_n + 1))
    out = []
    for i in range(n):
        rects = []
        for _ in range(n_views):
            if rng.random() < 0.15:
                rects.append(None)
                continue
            x0, y0 = rng.uniform(0, 20, 2)
            rects.append(rect(x0, y0, x0 + rng.uniform(0.5, 8), y0 + rng.uniform(0.5, 8)))
        if all(r is None for r in rects):
            rects[0] = rect(0, 0, 1, 1)
        out.append(DetectionCandidate(cell=i, score=float(rng.random()), rects=tuple(rects)))
    return out


class TestScoreWeightedNMS:
    def test_single_candidate_kept(self):
        c = DetectionCandidate(0, 0.7, (rect(0, 0, 2, 2),))
        assert score_weighted_nms([c], 0.4) == [c]

    def test_empty_input(self):
        assert score_weighted_nms([], 0.4) == []

    def test_duplicate_suppressed_by_score(self):
        r = (rect(0, 0, 2, 2),)
        hi = DetectionCandidate(0, 0.9, r)
        lo = DetectionCandidate(1, 0.8, r)
        assert score_weighted_nms([lo, hi], 0.4) == [hi]

    def test_one_view_overlap_suppresses(self):
        a = DetectionCandidate(0, 0.9, (rect(0, 0, 2, 2), rect(0, 0, 2, 2)))
        b = DetectionCandidate(1, 0.8, (rect(0, 0, 2, 2), rect(10, 10, 12, 12)))
        assert score_weighted_nms([a, b], 0.4) == [a]

    def test_invisible_views_do_not_suppress(self):
        a = DetectionCandidate(0, 0.9, (rect(0, 0, 2, 2), None))
        b = DetectionCandidate(1, 0.8, (None, rect(0, 0, 2, 2)))
        assert score_weighted_nms([a, b], 0.0) == [a, b]

    def test_matches_oracle_on_1000_random_instances(self):
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            cands = random_candidates(rng)
            tau = float(rng.uniform(0, 1))
            got = score_weighted_nms(cands, tau)
            expected = greedy_oracle(cands, tau)
            assert [(c.cell, c.score) for c in got] == [(c.cell, c.score) for c in expected]

    @given(st.data())
    @settings(max_examples=120, deadline=None)
    def test_properties(self, data):
        seed = data.draw(st.integers(0, 10 ** 6))
        rng = np.random.default_rng(seed)
        cands = random_candidates(rng)
        tau = data.draw(st.floats(0.0, 1.0))
        kept = score_weighted_nms(cands, tau)
        ids = {id(c) for c in cands}
        # subset of input
        assert all(id(c) in ids for c in kept)
        # pairwise max-view IoU bounded by the threshold
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert max_view_overlap(a, b) <= tau + 1e-12
        # the best-scoring candidate always survives
        best = max(cands, key=lambda c: (c.score, -c.cell))
        assert any(k is best for k in kept)
        # raising the threshold never shrinks the output
        higher = data.draw(st.floats(0.0, 1.0))
        lo, hi = sorted([tau, higher])
        assert len(score_weighted_nms(cands, hi)) >= len(score_weighted_nms(cands, lo))
        # input permutation invariance
        perm = list(cands)
        rng.shuffle(perm)
        assert [c.cell for c in score_weighted_nms(perm, tau)] == [c.cell for c in kept]

    def test_min_cell_distance_filter(self):
        from mvdet.geometry import GroundGrid

        grid = GroundGrid(origin=(0, 0), cell_size=1.0, rows=2, cols=2)
        a = DetectionCandidate(0, 0.9, (rect(0, 0, 1, 1),))
        b = DetectionCandidate(1, 0.8, (rect(5, 5, 6, 6),))  # no image overlap
        both = score_weighted_nms([a, b], 0.4)
        assert len(both) == 2
        one = score_weighted_nms([a, b], 0.4, min_cell_distance=1.5, grid=grid)
        assert one == [a]

    def test_min_cell_distance_requires_grid(self):
        from mvdet.errors import ConfigError

        with pytest.raises(ConfigError):
            score_weighted_nms([], 0.4, min_cell_distance=1.0)


class TestDetectionJson:
    def test_round_trip(self):
        cand = DetectionCandidate(5, 0.75, (rect(1, 2, 3, 4), None))
        line = detection_to_json(17, cand)
        frame, parsed = detection_from_json(line)
        assert frame == 17
        assert parsed.cell == 5
        assert parsed.score == 0.75
        assert parsed.rects[1] is None
        assert parsed.rects[0].as_list() == [1.0, 2.0, 3.0, 4.0]

    def test_score_out_of_range_rejected(self):
        with pytest.raises(Exception):
            DetectionCandidate(0, 1.5, (rect(0, 0, 1, 1),))
