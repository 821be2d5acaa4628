import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgeattend.tracker import CentroidTracker, TrackerConfig
from edgeattend.vision import BoundingBox, Detection, Landmarks5


def det_at(x, y, size=10.0):
    bbox = BoundingBox(x - size / 2, y - size / 2, size, size)
    pts = [(x - 2, y - 2), (x + 2, y - 2), (x, y), (x - 2, y + 2), (x + 2, y + 2)]
    return Detection(bbox=bbox, landmarks=Landmarks5.from_array(pts), score=0.9)


def greedy_oracle(track_centroids, det_centroids, max_distance):
    """Independent greedy matcher: repeatedly take the globally smallest
    remaining entry of the full distance matrix (same tie-break order)."""
    matched = {}
    used_tracks, used_dets = set(), set()
    while True:
        best = None
        for tid, (tx, ty) in track_centroids.items():
            if tid in used_tracks:
                continue
            for j, (dx, dy) in enumerate(det_centroids):
                if j in used_dets:
                    continue
                dist = math.hypot(tx - dx, ty - dy)
                if dist > max_distance:
                    continue
                key = (dist, tid, dx, dy, j)
                if best is None or key < best:
                    best = key
        if best is None:
            return matched
        matched[best[1]] = best[4]
        used_tracks.add(best[1])
        used_dets.add(best[4])


def tracker_matching(tracker, detections):
    """(pre-existing-track id -> detection index) from one update call."""
    before = set(tracker.tracks)
    index_of = {id(d): i for i, d in enumerate(detections)}
    out = tracker.update(detections)
    return {
        tid: index_of[id(det)]
        for tid, det in out.assignments
        if det is not None and tid in before
    }


class TestSpecExamples:
    def test_cold_start_registers_all(self):
        t = CentroidTracker()
        out = t.update([det_at(5, 5), det_at(100, 100)])
        assert [tid for tid, det in out.assignments] == [0, 1]
        assert all(det is not None for _, det in out.assignments)

    def test_single_track_follows_detection(self):
        t = CentroidTracker(TrackerConfig(max_distance=80))
        t.update([det_at(10, 10)])
        out = t.update([det_at(12, 11)])
        assert out.assignments[0][0] == 0
        assert t.tracks[0].centroid == (12, 11)

    def test_aging_ends_track(self):
        cfg = TrackerConfig(max_disappeared=5)
        t = CentroidTracker(cfg)
        t.update([det_at(10, 10)])
        ended = []
        for _ in range(cfg.max_disappeared + 1):
            ended += t.update([]).ended
        assert ended == [0]
        assert not t.tracks

    def test_crossed_detections_match_nearest(self):
        t = CentroidTracker()
        t.update([det_at(0, 0), det_at(10, 0)])
        matching = tracker_matching(t, [det_at(9, 0), det_at(1, 0)])
        # track 0 takes the detection at distance 1, track 1 the one at 1
        assert matching == {0: 1, 1: 0}
        oracle = greedy_oracle({0: (0, 0), 1: (10, 0)}, [(9, 0), (1, 0)], 80)
        assert matching == oracle

    def test_far_detection_not_matched(self):
        t = CentroidTracker(TrackerConfig(max_distance=10))
        t.update([det_at(0, 0)])
        out = t.update([det_at(50, 50)])
        # old track unmatched, new track registered
        matched = {tid: det for tid, det in out.assignments}
        assert matched[0] is None
        assert matched[1] is not None


class TestOracleEquivalence:
    def test_random_small_instances(self):
        rng = np.random.default_rng(123)
        for _ in range(300):
            n_tracks = int(rng.integers(0, 6))
            n_dets = int(rng.integers(0, 6))
            cfg = TrackerConfig(max_distance=float(rng.uniform(10, 120)))
            t = CentroidTracker(cfg)
            seeds = [det_at(*rng.uniform(0, 200, 2)) for _ in range(n_tracks)]
            if seeds:
                t.update(seeds)
            centroids = {tid: tr.centroid for tid, tr in t.tracks.items()}
            dets = [det_at(*rng.uniform(0, 200, 2)) for _ in range(n_dets)]
            got = tracker_matching(t, dets)
            want = greedy_oracle(centroids, [d.bbox.centroid() for d in dets], cfg.max_distance)
            assert got == want

    @settings(max_examples=200, deadline=None)
    @given(
        tracks=st.lists(
            st.tuples(st.integers(0, 150), st.integers(0, 150)), min_size=0, max_size=5
        ),
        dets=st.lists(
            st.tuples(st.integers(0, 150), st.integers(0, 150)), min_size=0, max_size=5
        ),
    )
    def test_hypothesis_instances_with_ties(self, tracks, dets):
        # integer grids force exact distance ties; oracle must still agree
        cfg = TrackerConfig(max_distance=100.0)
        t = CentroidTracker(cfg)
        if tracks:
            t.update([det_at(float(x), float(y)) for x, y in tracks])
        centroids = {tid: tr.centroid for tid, tr in t.tracks.items()}
        det_objs = [det_at(float(x), float(y)) for x, y in dets]
        got = tracker_matching(t, det_objs)
        want = greedy_oracle(centroids, [d.bbox.centroid() for d in det_objs], cfg.max_distance)
        assert got == want


class TestProperties:
    def test_id_stable_over_random_walk(self):
        rng = np.random.default_rng(7)
        cfg = TrackerConfig(max_distance=80)
        t = CentroidTracker(cfg)
        x, y = 100.0, 100.0
        ids = set()
        for _ in range(2000):
            out = t.update([det_at(x, y)])
            ids.update(tid for tid, det in out.assignments if det is not None)
            step = rng.uniform(-1, 1, 2)
            step = step / (np.linalg.norm(step) + 1e-9) * rng.uniform(0, cfg.max_distance * 0.9)
            x, y = float(x + step[0]), float(y + step[1])
        assert ids == {0}

    def test_no_id_reuse(self):
        rng = np.random.default_rng(99)
        t = CentroidTracker(TrackerConfig(max_disappeared=2, max_distance=30))
        seen: list[int] = []
        alive_prev: set[int] = set()
        for _ in range(3000):
            dets = [det_at(*rng.uniform(0, 300, 2)) for _ in range(rng.integers(0, 4))]
            t.update(dets)
            alive = set(t.tracks)
            for tid in sorted(alive - alive_prev):  # newly registered
                assert not seen or tid > max(seen)
                seen.append(tid)
            alive_prev = alive
        assert len(seen) == len(set(seen))

    def test_matching_injective_both_ways(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            t = CentroidTracker(TrackerConfig(max_distance=150))
            t.update([det_at(*rng.uniform(0, 100, 2)) for _ in range(4)])
            dets = [det_at(*rng.uniform(0, 100, 2)) for _ in range(4)]
            matching = tracker_matching(t, dets)
            assert len(set(matching.values())) == len(matching)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            base_pts = [tuple(rng.integers(0, 80, 2).tolist()) for _ in range(4)]
            det_pts = [tuple(rng.integers(0, 80, 2).tolist()) for _ in range(4)]

            def run(order):
                t = CentroidTracker(TrackerConfig(max_distance=100))
                t.update([det_at(float(x), float(y)) for x, y in base_pts])
                dets = [det_at(float(x), float(y)) for x, y in order]
                out = t.update(dets)
                # compare as values: track id -> detection centroid
                return {
                    tid: det.bbox.centroid() for tid, det in out.assignments if det is not None
                }

            perm = list(det_pts)
            rng.shuffle(perm)
            assert run(det_pts) == run(perm)

    def test_each_live_track_reported_once(self):
        t = CentroidTracker()
        t.update([det_at(0, 0), det_at(50, 50)])
        out = t.update([det_at(1, 1)])
        ids = [tid for tid, _ in out.assignments]
        assert ids == sorted(set(ids))
        assert set(ids) == set(t.tracks)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrackerConfig(max_disappeared=0)
        with pytest.raises(ValueError):
            TrackerConfig(max_distance=0)
