"""Edge-to-server event delivery: at-least-once transport with an
fsync'd offline journal, id-keyed server dedup, and hotspot-mode file
export.

The journal (`queue.jsonl`) is append-only; `queue.cursor` holds the index
of the first event not yet acknowledged by the server. Both survive
process restarts, so a crash mid-flush re-sends exactly the
unacknowledged suffix with the original event ids.
"""

from __future__ import annotations

import base64
import enum
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

THUMBNAIL_CAP = 16 * 1024

JOURNAL_FILE = "queue.jsonl"
CURSOR_FILE = "queue.cursor"
DEAD_LETTER_FILE = "dead-letter.jsonl"


def now_ms() -> int:
    return int(time.time() * 1000)


def new_event_id() -> str:
    return str(uuid.uuid4())


@dataclass(frozen=True)
class AttendanceEvent:
    """One deduplicated "student seen" record crossing the wire."""

    event_id: str
    device_id: str
    session_id: str
    student_id: str
    distance: float
    track_id: int
    t: int  # UTC milliseconds
    thumbnail: bytes | None = None

    def __post_init__(self) -> None:
        if self.distance < 0:
            raise ValueError("distance must be >= 0")
        if self.thumbnail is not None and len(self.thumbnail) > THUMBNAIL_CAP:
            raise ValueError("thumbnail exceeds 16 KiB cap")

    def to_json(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "device_id": self.device_id,
            "session_id": self.session_id,
            "student_id": self.student_id,
            "distance": self.distance,
            "track_id": self.track_id,
            "t": self.t,
            "thumbnail": base64.b64encode(self.thumbnail).decode("ascii")
            if self.thumbnail is not None
            else None,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "AttendanceEvent":
        thumb = obj.get("thumbnail")
        return cls(
            event_id=str(obj["event_id"]),
            device_id=str(obj["device_id"]),
            session_id=str(obj["session_id"]),
            student_id=str(obj["student_id"]),
            distance=float(obj["distance"]),
            track_id=int(obj["track_id"]),
            t=int(obj["t"]),
            thumbnail=base64.b64decode(thumb) if thumb else None,
        )


@dataclass
class DeviceConfig:
    """Device-side configuration surface (file- and HTTP-exposed)."""

    device_id: str = "device-0"
    session_id: str = "session-0"
    mode: str = "network"
    server_url: str | None = None
    threshold: float = 0.4
    metric: str = "cosine"
    auth_token: str | None = None
    tracker: dict[str, Any] = field(default_factory=dict)
    pipeline: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("network", "hotspot"):
            raise ValueError("mode must be 'network' or 'hotspot'")
        if self.mode == "network" and not self.server_url:
            raise ValueError("network mode requires server_url")
        if self.metric not in ("cosine", "euclidean"):
            raise ValueError("metric must be 'cosine' or 'euclidean'")

    def to_json(self) -> dict[str, Any]:
        return {
            "device_id": self.device_id,
            "session_id": self.session_id,
            "mode": self.mode,
            "server_url": self.server_url,
            "threshold": self.threshold,
            "metric": self.metric,
            "auth_token": self.auth_token,
            "tracker": dict(self.tracker),
            "pipeline": dict(self.pipeline),
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "DeviceConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})

    @classmethod
    def load(cls, path: str | Path) -> "DeviceConfig":
        return cls.from_json(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def _fsync_write(path: Path, data: str) -> None:
    with open(path, "w") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())


class OfflineQueue:
    """Durable append-only event journal with an acknowledgment cursor."""

    def __init__(self, directory: str | Path) -> None:
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._journal_path = self.dir / JOURNAL_FILE
        self._cursor_path = self.dir / CURSOR_FILE
        self._events: list[AttendanceEvent] = []
        self._cursor = 0
        self._load()

    def _load(self) -> None:
        if self._journal_path.exists():
            for line in self._journal_path.read_text().splitlines():
                if line.strip():
                    self._events.append(AttendanceEvent.from_json(json.loads(line)))
        if self._cursor_path.exists():
            try:
                self._cursor = int(self._cursor_path.read_text().strip() or 0)
            except ValueError:
                self._cursor = 0
        self._cursor = max(0, min(self._cursor, len(self._events)))

    @property
    def journal_length(self) -> int:
        return len(self._events)

    @property
    def cursor(self) -> int:
        return self._cursor

    def pending(self) -> list[AttendanceEvent]:
        return self._events[self._cursor :]

    def all_events(self) -> list[AttendanceEvent]:
        return list(self._events)

    def append(self, event: AttendanceEvent) -> None:
        """Durably journal an event (fsync per append; rates are human-scale)."""
        line = json.dumps(event.to_json()) + "\n"
        with open(self._journal_path, "a") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())
        self._events.append(event)

    def ack(self, count: int = 1) -> None:
        """Advance the cursor past server-acknowledged events."""
        if count < 0 or self._cursor + count > len(self._events):
            raise ValueError("ack beyond journal")
        self._cursor += count
        if self._cursor == len(self._events) and self._events:
            # Fully acknowledged: compact. Journal first, cursor second; a
            # crash in between loads as (empty journal, stale cursor) which
            # clamps to 0 and loses nothing unacknowledged.
            _fsync_write(self._journal_path, "")
            self._events = []
            self._cursor = 0
        _fsync_write(self._cursor_path, str(self._cursor))


class TransportOutcome(enum.Enum):
    ACCEPTED = "accepted"  # 2xx, including duplicate
    MALFORMED = "malformed"  # 4xx: do not retry
    RETRYABLE = "retryable"  # 5xx / timeout / connection failure


class EventTransport(Protocol):
    def post_event(self, event: AttendanceEvent) -> TransportOutcome: ...


class HttpTransport:
    """POSTs events to {server}/api/v1/events with optional bearer auth."""

    def __init__(self, server_url: str, auth_token: str | None = None, timeout: float = 5.0, client=None) -> None:
        import httpx

        self.url = server_url.rstrip("/") + "/api/v1/events"
        headers = {"Authorization": f"Bearer {auth_token}"} if auth_token else {}
        self._client = client or httpx.Client(timeout=timeout, headers=headers)
        self._errors = (httpx.TransportError,)

    def post_event(self, event: AttendanceEvent) -> TransportOutcome:
        try:
            resp = self._client.post(self.url, json=event.to_json())
        except self._errors:
            return TransportOutcome.RETRYABLE
        if 200 <= resp.status_code < 300:
            return TransportOutcome.ACCEPTED
        if 400 <= resp.status_code < 500:
            return TransportOutcome.MALFORMED
        return TransportOutcome.RETRYABLE


class SendResult(enum.Enum):
    DELIVERED = "delivered"
    QUEUED = "queued"
    DEAD_LETTERED = "dead_lettered"


class EdgeLink:
    """Reliable event path from the pipeline to the server.

    send() never raises on transport trouble and never drops an event:
    failures land in the offline journal, permanent rejections in the
    dead-letter file. flush() replays the journal in order, advancing the
    cursor one acknowledgment at a time.
    """

    def __init__(
        self,
        config: DeviceConfig,
        queue_dir: str | Path,
        transport: EventTransport | None = None,
    ) -> None:
        self.config = config
        self.queue = OfflineQueue(queue_dir)
        if transport is None and config.mode == "network":
            transport = HttpTransport(config.server_url, config.auth_token)
        self.transport = transport
        self._lock = threading.Lock()

    def _dead_letter(self, event: AttendanceEvent) -> None:
        with open(self.queue.dir / DEAD_LETTER_FILE, "a") as fh:
            fh.write(json.dumps(event.to_json()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def send(self, event: AttendanceEvent) -> SendResult:
        with self._lock:
            if self.config.mode == "hotspot":
                self.queue.append(event)
                return SendResult.QUEUED
            if self.queue.pending():
                # Preserve emission order: don't overtake queued events.
                self.queue.append(event)
                return SendResult.QUEUED
            outcome = self.transport.post_event(event)
            if outcome is TransportOutcome.ACCEPTED:
                return SendResult.DELIVERED
            if outcome is TransportOutcome.MALFORMED:
                self._dead_letter(event)
                return SendResult.DEAD_LETTERED
            self.queue.append(event)
            return SendResult.QUEUED

    def flush(self) -> int:
        """Replay unacknowledged events in order; returns how many the
        server accepted. Stops at the first retryable failure."""
        if self.config.mode == "hotspot" or self.transport is None:
            return 0
        delivered = 0
        with self._lock:
            for event in self.queue.pending():
                outcome = self.transport.post_event(event)
                if outcome is TransportOutcome.RETRYABLE:
                    break
                if outcome is TransportOutcome.MALFORMED:
                    self._dead_letter(event)
                    self.queue.ack(1)
                    continue
                self.queue.ack(1)
                delivered += 1
        return delivered

    def export_bundle(self, path: str | Path) -> int:
        """Write the journal as a JSON-lines bundle with a header line."""
        with self._lock:
            events = self.queue.all_events()
            header = {
                "device_id": self.config.device_id,
                "session_id": self.config.session_id,
                "exported_at": now_ms(),
                "count": len(events),
            }
            lines = [json.dumps(header)]
            lines.extend(json.dumps(e.to_json()) for e in events)
            Path(path).write_text("\n".join(lines) + "\n")
            return len(events)


class BundleFormatError(ValueError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


def read_bundle_text(text: str) -> tuple[dict[str, Any], list[AttendanceEvent]]:
    """Parse and validate an export bundle; used by the server's import.

    Raises BundleFormatError (with a 1-based line number) on any malformed
    line or a header/body count mismatch, so nothing is partially applied.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise BundleFormatError(1, "empty bundle (missing header)")
    try:
        header = json.loads(lines[0])
        count = int(header["count"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        raise BundleFormatError(1, "malformed header") from None
    events = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            events.append(AttendanceEvent.from_json(json.loads(line)))
        except Exception:
            raise BundleFormatError(i, "malformed event") from None
    if len(events) != count:
        raise BundleFormatError(1, f"header count {count} != body count {len(events)}")
    return header, events


def read_bundle(path: str | Path) -> tuple[dict[str, Any], list[AttendanceEvent]]:
    return read_bundle_text(Path(path).read_text())
