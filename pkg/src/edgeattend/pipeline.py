"""Frame-to-event orchestration.

Per processed frame: detect -> track -> (for pending tracks) align -> embed
-> match -> vote. A track that accumulates ``vote_k`` consistent Known
decisions is Identified and emits exactly one attendance event; a track
that exhausts its attempts goes Unknown and stays silent. Identified and
Unknown tracks are never re-embedded.

run() splits capture and processing across two threads joined by a small
keep-latest queue, so a slow recognizer drops stale frames instead of
stalling capture.
"""

from __future__ import annotations

import enum
import io
import json
import math
import threading
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .align import LandmarkTemplate, align_chip
from .backends import DetectorBackend, EmbedderBackend
from .edgelink import AttendanceEvent, new_event_id
from .gallery import Gallery, MatchResult
from .tracker import CentroidTracker, TrackerConfig
from .vision import Detection, ImageBuffer, detection_from_json

Frame = tuple[ImageBuffer, int]
DecisionListener = Callable[[int, Detection, MatchResult], None]


class TrackStatus(enum.Enum):
    PENDING = "pending"
    IDENTIFIED = "identified"
    UNKNOWN = "unknown"


@dataclass
class RecognitionState:
    status: TrackStatus = TrackStatus.PENDING
    identified_as: str | None = None
    votes: dict[str, int] = field(default_factory=dict)
    attempts: int = 0
    event_emitted: bool = False


@dataclass
class PipelineConfig:
    vote_k: int = 3
    max_attempts: int = 10
    frame_stride: int = 1
    queue_capacity: int = 2
    drop_policy: str = "keep-latest"

    def __post_init__(self) -> None:
        if self.vote_k < 1:
            raise ValueError("vote_k must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be >= 1")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if self.drop_policy != "keep-latest":
            raise ValueError("only keep-latest is supported")


@dataclass
class RunSummary:
    frames_seen: int = 0
    frames_processed: int = 0
    frames_dropped: int = 0
    frames_skipped: int = 0
    events_emitted: int = 0
    errors: int = 0
    undelivered: list[AttendanceEvent] = field(default_factory=list)


class LatestFrameQueue:
    """Bounded hand-off between capture and processing; when full, the
    oldest frame is evicted so the newest always gets in."""

    def __init__(self, capacity: int) -> None:
        self._dq: deque = deque()
        self._capacity = capacity
        self._cond = threading.Condition()
        self._closed = False

    def put_latest(self, item) -> int:
        with self._cond:
            dropped = 0
            if len(self._dq) >= self._capacity:
                self._dq.popleft()
                dropped = 1
            self._dq.append(item)
            self._cond.notify()
            return dropped

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def get(self):
        """Next frame, oldest first; None once closed and drained."""
        with self._cond:
            while not self._dq and not self._closed:
                self._cond.wait()
            return self._dq.popleft() if self._dq else None


def _jpeg_thumbnail(chip: ImageBuffer, cap: int = 16 * 1024) -> bytes | None:
    from PIL import Image

    arr = chip.pixels[:, :, 0] if chip.channels == 1 else chip.pixels
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="JPEG", quality=80)
    data = buf.getvalue()
    return data if len(data) <= cap else None


class RecognitionPipeline:
    """Single-stream recognizer owned by the processing thread."""

    def __init__(
        self,
        detector: DetectorBackend,
        embedder: EmbedderBackend,
        gallery: Gallery,
        config: PipelineConfig | None = None,
        tracker_config: TrackerConfig | None = None,
        template: LandmarkTemplate | None = None,
        threshold: float = 0.4,
        metric: str = "cosine",
        device_id: str = "device-0",
        session_id: str = "session-0",
        decision_listener: DecisionListener | None = None,
        attach_thumbnails: bool = False,
        allow_empty_gallery: bool = False,
    ) -> None:
        if len(gallery) == 0 and not allow_empty_gallery:
            raise ValueError("gallery is empty (pass allow_empty_gallery=True to run open-set)")
        self.detector = detector
        self.embedder = embedder
        self.gallery = gallery
        self.config = config or PipelineConfig()
        self.tracker = CentroidTracker(tracker_config)
        self.template = template or LandmarkTemplate()
        self.threshold = threshold
        self.metric = metric
        self.device_id = device_id
        self.session_id = session_id
        self.decision_listener = decision_listener
        self.attach_thumbnails = attach_thumbnails
        self.errors = 0

    def _state(self, track) -> RecognitionState:
        if track.recognition is None:
            track.recognition = RecognitionState()
        return track.recognition

    def process_frame(self, frame: ImageBuffer, t: int) -> list[AttendanceEvent]:
        """Run one frame through the pipeline; returns newly emitted events.

        Backend failures skip the frame (or the face) and are counted in
        ``errors``; they never propagate.
        """
        try:
            detections = self.detector.detect(frame)
        except Exception:
            self.errors += 1
            return []
        update = self.tracker.update(detections)
        events: list[AttendanceEvent] = []
        for tid, det in update.matched():
            track = self.tracker.tracks[tid]
            state = self._state(track)
            if state.status is not TrackStatus.PENDING:
                continue
            if state.attempts >= self.config.max_attempts:
                continue
            try:
                chip = align_chip(frame, det.landmarks, self.template)
                if len(self.gallery) == 0:
                    result = MatchResult(known=False, best_student_id="", best_distance=math.inf)
                else:
                    result = self.gallery.match(
                        self.embedder.embed(chip), metric=self.metric, threshold=self.threshold
                    )
            except Exception:
                self.errors += 1
                continue
            state.attempts += 1
            if self.decision_listener is not None:
                self.decision_listener(tid, det, result)
            if result.known:
                sid = result.best_student_id
                state.votes[sid] = state.votes.get(sid, 0) + 1
                if state.votes[sid] >= self.config.vote_k:
                    state.status = TrackStatus.IDENTIFIED
                    state.identified_as = sid
                    state.event_emitted = True
                    thumb = _jpeg_thumbnail(chip) if self.attach_thumbnails else None
                    events.append(
                        AttendanceEvent(
                            event_id=new_event_id(),
                            device_id=self.device_id,
                            session_id=self.session_id,
                            student_id=sid,
                            distance=result.best_distance,
                            track_id=tid,
                            t=t,
                            thumbnail=thumb,
                        )
                    )
                    continue
            if state.attempts >= self.config.max_attempts:
                state.status = TrackStatus.UNKNOWN
        return events

    def run(
        self,
        source: Iterable[Frame],
        sink: Callable[[AttendanceEvent], object],
        spill=None,
        stop: threading.Event | None = None,
    ) -> RunSummary:
        """Drain a frame source through the pipeline, handing events to sink.

        A sink exception counts as an error and the event goes to ``spill``
        (anything with append(), e.g. an edgelink.OfflineQueue) or, absent
        that, to summary.undelivered; emitted events are never discarded.
        """
        summary = RunSummary()
        queue = LatestFrameQueue(self.config.queue_capacity)
        stride = self.config.frame_stride

        def capture() -> None:
            index = 0
            for frame, t in source:
                if stop is not None and stop.is_set():
                    break
                summary.frames_seen += 1
                if index % stride != 0:
                    summary.frames_skipped += 1
                    index += 1
                    continue
                index += 1
                summary.frames_dropped += queue.put_latest((frame, t))
            queue.close()

        capture_thread = threading.Thread(target=capture, name="capture", daemon=True)
        capture_thread.start()
        while True:
            item = queue.get()
            if item is None:
                break
            frame, t = item
            pre_errors = self.errors
            events = self.process_frame(frame, t)
            summary.frames_processed += 1
            summary.errors += self.errors - pre_errors
            for event in events:
                summary.events_emitted += 1
                try:
                    sink(event)
                except Exception:
                    summary.errors += 1
                    if spill is not None:
                        spill.append(event)
                    else:
                        summary.undelivered.append(event)
        capture_thread.join()
        return summary


class DirectoryFrameSource:
    """Fixture frame source: numbered image files plus a manifest of
    timestamps (`manifest.json` with a "frames" list of file/t_ms entries)."""

    def __init__(self, directory: str | Path) -> None:
        self.dir = Path(directory)
        self.manifest = json.loads((self.dir / "manifest.json").read_text())

    def script(self) -> list[list[Detection]] | None:
        """Scripted detections for the mock detector, when present."""
        raw = self.manifest.get("script")
        if raw is None:
            return None
        return [[detection_from_json(d) for d in frame] for frame in raw]

    def __iter__(self) -> Iterator[Frame]:
        import numpy as np
        from PIL import Image

        for entry in self.manifest["frames"]:
            with Image.open(self.dir / entry["file"]) as im:
                arr = np.asarray(im, dtype=np.uint8)
            yield ImageBuffer.from_array(arr), int(entry["t_ms"])
