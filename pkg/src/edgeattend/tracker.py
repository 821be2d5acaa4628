"""Centroid-based multi-object tracker.

Detections are matched to live tracks greedily by ascending centroid
distance, gated by a maximum distance. Unmatched detections register new
tracks; tracks unseen for more than ``max_disappeared`` consecutive frames
are deregistered. IDs increase monotonically and are never reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .vision import Detection, Point


@dataclass
class TrackerConfig:
    max_disappeared: int = 15
    max_distance: float = 80.0

    def __post_init__(self) -> None:
        if self.max_disappeared < 1:
            raise ValueError("max_disappeared must be >= 1")
        if not self.max_distance > 0:
            raise ValueError("max_distance must be positive")


@dataclass
class Track:
    """One tracked face: stable id, last centroid, aging counter, and a slot
    for the pipeline's per-track recognition state."""

    id: int
    centroid: Point
    disappeared: int = 0
    recognition: Any = None


@dataclass
class TrackerOutput:
    """Per-frame result: one (track_id, detection-or-None) entry per live
    track, ordered by id, plus ids of tracks that ended this frame."""

    assignments: list[tuple[int, Detection | None]] = field(default_factory=list)
    ended: list[int] = field(default_factory=list)

    def matched(self) -> list[tuple[int, Detection]]:
        return [(tid, det) for tid, det in self.assignments if det is not None]


class CentroidTracker:
    """Single-stream tracker; not safe for concurrent use."""

    def __init__(self, config: TrackerConfig | None = None) -> None:
        self.config = config or TrackerConfig()
        self.tracks: dict[int, Track] = {}
        self._next_id = 0

    def _register(self, det: Detection) -> int:
        tid = self._next_id
        self._next_id += 1
        self.tracks[tid] = Track(id=tid, centroid=det.bbox.centroid())
        return tid

    def update(self, detections: list[Detection]) -> TrackerOutput:
        out = TrackerOutput()
        live_ids = sorted(self.tracks)
        n_det = len(detections)
        det_centroids = [d.bbox.centroid() for d in detections]

        # Candidate pairs in ascending distance; ties broken by track id,
        # then detection centroid value (so shuffling the detection list
        # cannot change the matching), then index.
        pairs = []
        for tid in live_ids:
            tc = self.tracks[tid].centroid
            for j, dc in enumerate(det_centroids):
                dist = math.hypot(tc[0] - dc[0], tc[1] - dc[1])
                if dist <= self.config.max_distance:
                    pairs.append((dist, tid, dc[0], dc[1], j))
        pairs.sort()

        matched_tracks: dict[int, int] = {}
        claimed_dets: set[int] = set()
        for dist, tid, _cx, _cy, j in pairs:
            if tid in matched_tracks or j in claimed_dets:
                continue
            matched_tracks[tid] = j
            claimed_dets.add(j)

        for tid, j in matched_tracks.items():
            track = self.tracks[tid]
            track.centroid = det_centroids[j]
            track.disappeared = 0

        # Register leftover detections in centroid order, for id assignment
        # independent of input order.
        leftover = sorted(
            (j for j in range(n_det) if j not in claimed_dets),
            key=lambda j: (det_centroids[j][0], det_centroids[j][1], j),
        )
        for j in leftover:
            tid = self._register(detections[j])
            matched_tracks[tid] = j

        # Age and possibly drop unmatched tracks.
        for tid in live_ids:
            if tid in matched_tracks:
                continue
            track = self.tracks[tid]
            track.disappeared += 1
            if track.disappeared > self.config.max_disappeared:
                del self.tracks[tid]
                out.ended.append(tid)

        out.assignments = [
            (tid, detections[matched_tracks[tid]] if tid in matched_tracks else None)
            for tid in sorted(self.tracks)
        ]
        return out
