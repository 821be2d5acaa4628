"""REST API of the attendance server (versioned under /api/v1).

Device-facing: event ingest and bundle import. Operator-facing: student
and session management, enrollment photo upload, attendance reports (JSON
and CSV), and a per-session server-sent event stream where every applied
ingest becomes exactly one update message.
"""

from __future__ import annotations

import asyncio
import csv
import io
import json
import queue
import threading
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from ..align import align_chip, unsharp_mask
from ..backends import DetectorBackend, EmbedderBackend
from ..edgelink import AttendanceEvent, BundleFormatError, read_bundle_text
from ..gallery import Gallery
from ..vision import ImageBuffer
from .storage import GRACE_MS_DEFAULT, IngestStatus, Storage

HEARTBEAT_S = 10.0


class EventHub:
    """Fan-out of applied ingests to per-session stream subscribers."""

    def __init__(self) -> None:
        self._subs: dict[str, list[queue.Queue]] = {}
        self._lock = threading.Lock()

    def subscribe(self, session_id: str) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=1024)
        with self._lock:
            self._subs.setdefault(session_id, []).append(q)
        return q

    def unsubscribe(self, session_id: str, q: queue.Queue) -> None:
        with self._lock:
            subs = self._subs.get(session_id, [])
            if q in subs:
                subs.remove(q)

    def publish(self, session_id: str, message: dict) -> None:
        with self._lock:
            subs = list(self._subs.get(session_id, []))
        for q in subs:
            try:
                q.put_nowait(message)
            except queue.Full:
                pass


def _iso(ms: int | None) -> str:
    if ms is None:
        return ""
    return datetime.fromtimestamp(ms / 1000, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _decode_photo(body: bytes) -> ImageBuffer:
    from PIL import Image

    im = Image.open(io.BytesIO(body))
    if im.mode not in ("L", "RGB"):
        im = im.convert("RGB")
    return ImageBuffer.from_array(np.asarray(im, dtype=np.uint8))


def _report_json(report) -> dict:
    return {
        "session_id": report.session_id,
        "rows": [
            {
                "student_id": r.student_id,
                "name": r.name,
                "status": "present" if r.present else "absent",
                "first_seen": r.first_seen,
                "evidence": list(r.evidence),
            }
            for r in report.rows
        ],
        "present": report.present,
        "absent": report.absent,
        "rate": report.rate,
    }


def create_app(
    storage: Storage | None = None,
    detector: DetectorBackend | None = None,
    embedder: EmbedderBackend | None = None,
    gallery_dir: str | Path | None = None,
    auth_token: str | None = None,
    grace_ms: int = GRACE_MS_DEFAULT,
) -> FastAPI:
    app = FastAPI(title="edgeattend attendance server")
    store = storage or Storage()
    hub = EventHub()
    gallery = Gallery(embedder.dimension()) if embedder is not None else None
    if gallery is not None and gallery_dir is not None and (Path(gallery_dir) / "meta.json").exists():
        gallery = Gallery.load(gallery_dir)
    enroll_lock = threading.Lock()

    app.state.storage = store
    app.state.hub = hub
    app.state.gallery = gallery

    @app.middleware("http")
    async def check_auth(request: Request, call_next):
        if auth_token and request.url.path.startswith("/api/"):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {auth_token}":
                return JSONResponse({"error": "unauthorized"}, status_code=401)
        return await call_next(request)

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    # -- ingest

    @app.post("/api/v1/events")
    def ingest(payload: dict):
        try:
            event = AttendanceEvent.from_json(payload)
        except Exception:
            return JSONResponse({"error": "malformed event"}, status_code=400)
        result = store.ingest_event(event, grace_ms=grace_ms)
        if result.status is IngestStatus.DUPLICATE:
            return {"duplicate": True}
        if result.status is IngestStatus.REJECTED:
            return JSONResponse({"rejected": result.reason}, status_code=422)
        record_first_seen = next(
            (r.first_seen for r in store.attendance_report(event.session_id).rows
             if r.student_id == event.student_id),
            event.t,
        )
        hub.publish(
            event.session_id,
            {
                "session_id": event.session_id,
                "student_id": event.student_id,
                "status": "present",
                "first_seen": record_first_seen,
            },
        )
        return {"status": "applied"}

    @app.post("/api/v1/import")
    async def import_bundle(request: Request):
        body = (await request.body()).decode("utf-8", errors="replace")
        try:
            _header, events = read_bundle_text(body)
        except BundleFormatError as err:
            return JSONResponse({"error": err.reason, "line": err.line}, status_code=400)
        applied = duplicates = 0
        rejected = []
        for event in events:
            result = store.ingest_event(event, grace_ms=grace_ms)
            if result.status is IngestStatus.APPLIED:
                applied += 1
                hub.publish(
                    event.session_id,
                    {
                        "session_id": event.session_id,
                        "student_id": event.student_id,
                        "status": "present",
                        "first_seen": event.t,
                    },
                )
            elif result.status is IngestStatus.DUPLICATE:
                duplicates += 1
            else:
                rejected.append({"event_id": event.event_id, "reason": result.reason})
        return {
            "count": len(events),
            "applied": applied,
            "duplicates": duplicates,
            "rejected": rejected,
        }

    # -- students & enrollment

    @app.get("/api/v1/students")
    def list_students(group: str | None = None):
        return store.list_students(group)

    @app.post("/api/v1/students", status_code=201)
    def add_student(payload: dict):
        try:
            student_id = payload["student_id"]
            name = payload["display_name"]
            group = payload["group"]
        except KeyError as missing:
            return JSONResponse({"error": f"missing field {missing}"}, status_code=400)
        if not store.add_student(student_id, name, group):
            return JSONResponse({"error": "student_id already exists"}, status_code=409)
        return store.get_student(student_id)

    @app.post("/api/v1/students/{student_id}/photo")
    async def enroll_photo(student_id: str, request: Request):
        student = store.get_student(student_id)
        if student is None:
            return JSONResponse({"error": "unknown student"}, status_code=404)
        body = await request.body()
        try:
            photo = _decode_photo(body)
        except Exception:
            return JSONResponse({"error": "undecodable image"}, status_code=400)
        if detector is None or embedder is None or gallery is None:
            store.set_student_photo(student_id, body, status="pending")
            return JSONResponse({"status": "pending"}, status_code=202)

        def work():
            sharpened = unsharp_mask(photo, radius=2, amount=1.0)
            faces = detector.detect(sharpened)
            if len(faces) != 1:
                return JSONResponse({"rejected": f"{len(faces)} faces"}, status_code=422)
            chip = align_chip(sharpened, faces[0].landmarks)
            vec = embedder.embed(chip)
            with enroll_lock:
                gallery.enroll(student_id, student["display_name"], vec)
                if gallery_dir is not None:
                    gallery.save(gallery_dir)
            store.set_student_photo(student_id, body, status="enrolled")
            return {
                "status": "enrolled",
                "embeddings": len(gallery.get(student_id).embeddings),
            }

        return await asyncio.get_event_loop().run_in_executor(None, work)

    # -- sessions & reports

    @app.get("/api/v1/sessions")
    def list_sessions():
        return store.list_sessions()

    @app.post("/api/v1/sessions", status_code=201)
    def add_session(payload: dict):
        try:
            created = store.add_session(
                session_id=payload["session_id"],
                course=payload.get("course", ""),
                starts_at=int(payload["starts_at"]),
                ends_at=int(payload["ends_at"]),
                group=payload["group"],
                device_ids=payload.get("device_ids"),
            )
        except KeyError as missing:
            return JSONResponse({"error": f"missing field {missing}"}, status_code=400)
        except ValueError as err:
            return JSONResponse({"error": str(err)}, status_code=422)
        if not created:
            return JSONResponse({"error": "session_id already exists"}, status_code=409)
        return store.get_session(payload["session_id"])

    @app.get("/api/v1/sessions/{session_id}/attendance")
    def attendance(session_id: str):
        try:
            return _report_json(store.attendance_report(session_id))
        except LookupError:
            return JSONResponse({"error": "unknown session"}, status_code=404)

    @app.get("/api/v1/sessions/{session_id}/attendance.csv")
    def attendance_csv(session_id: str):
        try:
            report = store.attendance_report(session_id)
        except LookupError:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["student_id", "name", "status", "first_seen"])
        for r in report.rows:
            writer.writerow(
                [r.student_id, r.name, "present" if r.present else "absent", _iso(r.first_seen)]
            )
        return PlainTextResponse(buf.getvalue(), media_type="text/csv")

    @app.get("/api/v1/sessions/{session_id}/stream")
    async def stream(session_id: str, request: Request):
        if store.get_session(session_id) is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        sub = hub.subscribe(session_id)

        async def gen():
            # Client disconnects cancel this generator; the finally block
            # drops the subscription.
            try:
                yield "retry: 2000\n\n"
                idle = 0.0
                while True:
                    try:
                        msg = sub.get_nowait()
                    except queue.Empty:
                        await asyncio.sleep(0.05)
                        idle += 0.05
                        if idle >= HEARTBEAT_S:
                            idle = 0.0
                            yield ": ping\n\n"
                        continue
                    idle = 0.0
                    yield f"event: attendance\ndata: {json.dumps(msg)}\n\n"
            finally:
                hub.unsubscribe(session_id, sub)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app
