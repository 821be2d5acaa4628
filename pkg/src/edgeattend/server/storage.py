"""Server-side persistence: students, sessions, events, attendance.

SQLite behind a narrow interface; the unique keys (event_id, and
(session_id, student_id)) plus one transaction per mutation give the
idempotency the ingest path relies on. A document-store adapter could
replace this without touching the API layer.
"""

from __future__ import annotations

import enum
import json
import sqlite3
import threading
from dataclasses import dataclass
from pathlib import Path

from ..edgelink import AttendanceEvent

GRACE_MS_DEFAULT = 10 * 60 * 1000

_SCHEMA = """
CREATE TABLE IF NOT EXISTS students (
    student_id TEXT PRIMARY KEY,
    display_name TEXT NOT NULL,
    grp TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'pending',
    photo BLOB
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id TEXT PRIMARY KEY,
    course TEXT NOT NULL,
    starts_at INTEGER NOT NULL,
    ends_at INTEGER NOT NULL,
    grp TEXT NOT NULL,
    device_ids TEXT NOT NULL DEFAULT '[]'
);
CREATE TABLE IF NOT EXISTS events (
    event_id TEXT PRIMARY KEY,
    session_id TEXT NOT NULL,
    student_id TEXT NOT NULL,
    device_id TEXT NOT NULL,
    track_id INTEGER NOT NULL,
    distance REAL NOT NULL,
    t INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS attendance (
    session_id TEXT NOT NULL,
    student_id TEXT NOT NULL,
    first_seen INTEGER NOT NULL,
    PRIMARY KEY (session_id, student_id)
);
"""


class IngestStatus(enum.Enum):
    APPLIED = "applied"
    DUPLICATE = "duplicate"
    REJECTED = "rejected"


@dataclass(frozen=True)
class IngestResult:
    status: IngestStatus
    reason: str | None = None


@dataclass(frozen=True)
class ReportRow:
    student_id: str
    name: str
    present: bool
    first_seen: int | None
    evidence: tuple[str, ...] = ()


@dataclass(frozen=True)
class AttendanceReport:
    session_id: str
    rows: tuple[ReportRow, ...]
    present: int
    absent: int
    rate: float


class Storage:
    """All mutations funnel through one lock + one transaction."""

    def __init__(self, path: str | Path = ":memory:") -> None:
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL") if path != ":memory:" else None
        self._lock = threading.Lock()
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    # -- students

    def add_student(self, student_id: str, display_name: str, group: str) -> bool:
        """False if the id is already taken."""
        with self._lock, self._conn:
            try:
                self._conn.execute(
                    "INSERT INTO students (student_id, display_name, grp) VALUES (?, ?, ?)",
                    (student_id, display_name, group),
                )
            except sqlite3.IntegrityError:
                return False
        return True

    def get_student(self, student_id: str) -> dict | None:
        row = self._conn.execute(
            "SELECT student_id, display_name, grp, status FROM students WHERE student_id=?",
            (student_id,),
        ).fetchone()
        if row is None:
            return None
        return {"student_id": row[0], "display_name": row[1], "group": row[2], "status": row[3]}

    def list_students(self, group: str | None = None) -> list[dict]:
        q = "SELECT student_id, display_name, grp, status FROM students"
        args: tuple = ()
        if group is not None:
            q += " WHERE grp=?"
            args = (group,)
        q += " ORDER BY student_id"
        return [
            {"student_id": r[0], "display_name": r[1], "group": r[2], "status": r[3]}
            for r in self._conn.execute(q, args)
        ]

    def set_student_photo(self, student_id: str, photo: bytes | None, status: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE students SET photo=?, status=? WHERE student_id=?",
                (photo, status, student_id),
            )

    # -- sessions

    def add_session(
        self,
        session_id: str,
        course: str,
        starts_at: int,
        ends_at: int,
        group: str,
        device_ids: list[str] | None = None,
    ) -> bool:
        if not starts_at < ends_at:
            raise ValueError("starts_at must precede ends_at")
        with self._lock, self._conn:
            try:
                self._conn.execute(
                    "INSERT INTO sessions VALUES (?, ?, ?, ?, ?, ?)",
                    (session_id, course, starts_at, ends_at, group, json.dumps(device_ids or [])),
                )
            except sqlite3.IntegrityError:
                return False
        return True

    def get_session(self, session_id: str) -> dict | None:
        row = self._conn.execute(
            "SELECT session_id, course, starts_at, ends_at, grp, device_ids FROM sessions WHERE session_id=?",
            (session_id,),
        ).fetchone()
        if row is None:
            return None
        return {
            "session_id": row[0],
            "course": row[1],
            "starts_at": row[2],
            "ends_at": row[3],
            "group": row[4],
            "device_ids": json.loads(row[5]),
        }

    def list_sessions(self) -> list[dict]:
        return [
            self.get_session(r[0])
            for r in self._conn.execute("SELECT session_id FROM sessions ORDER BY session_id")
        ]

    # -- ingest

    def ingest_event(self, e: AttendanceEvent, grace_ms: int = GRACE_MS_DEFAULT) -> IngestResult:
        """Apply an event idempotently.

        Duplicates (by event_id) change nothing; unknown student/session or
        a timestamp outside the session's grace window reject the event.
        Otherwise the (session, student) attendance record is created or its
        first_seen lowered, and the event is kept as evidence.
        """
        with self._lock, self._conn:
            dup = self._conn.execute(
                "SELECT 1 FROM events WHERE event_id=?", (e.event_id,)
            ).fetchone()
            if dup is not None:
                return IngestResult(IngestStatus.DUPLICATE)
            student = self._conn.execute(
                "SELECT 1 FROM students WHERE student_id=?", (e.student_id,)
            ).fetchone()
            if student is None:
                return IngestResult(IngestStatus.REJECTED, f"unknown student {e.student_id}")
            sess = self._conn.execute(
                "SELECT starts_at, ends_at FROM sessions WHERE session_id=?", (e.session_id,)
            ).fetchone()
            if sess is None:
                return IngestResult(IngestStatus.REJECTED, f"unknown session {e.session_id}")
            if not (sess[0] - grace_ms <= e.t <= sess[1] + grace_ms):
                return IngestResult(IngestStatus.REJECTED, "outside session")
            self._conn.execute(
                "INSERT INTO events VALUES (?, ?, ?, ?, ?, ?, ?)",
                (e.event_id, e.session_id, e.student_id, e.device_id, e.track_id, e.distance, e.t),
            )
            self._conn.execute(
                "INSERT INTO attendance VALUES (?, ?, ?) "
                "ON CONFLICT(session_id, student_id) DO UPDATE SET "
                "first_seen = MIN(first_seen, excluded.first_seen)",
                (e.session_id, e.student_id, e.t),
            )
        return IngestResult(IngestStatus.APPLIED)

    def evidence(self, session_id: str, student_id: str) -> list[str]:
        return [
            r[0]
            for r in self._conn.execute(
                "SELECT event_id FROM events WHERE session_id=? AND student_id=? ORDER BY t, event_id",
                (session_id, student_id),
            )
        ]

    # -- reports

    def attendance_report(self, session_id: str) -> AttendanceReport:
        """One row per student of the session's group; absence is derived
        here, never stored."""
        session = self.get_session(session_id)
        if session is None:
            raise LookupError(f"unknown session {session_id}")
        seen = {
            r[0]: r[1]
            for r in self._conn.execute(
                "SELECT student_id, first_seen FROM attendance WHERE session_id=?",
                (session_id,),
            )
        }
        rows = []
        for student in self.list_students(group=session["group"]):
            sid = student["student_id"]
            present = sid in seen
            rows.append(
                ReportRow(
                    student_id=sid,
                    name=student["display_name"],
                    present=present,
                    first_seen=seen.get(sid),
                    evidence=tuple(self.evidence(session_id, sid)) if present else (),
                )
            )
        present = sum(1 for r in rows if r.present)
        absent = len(rows) - present
        rate = present / len(rows) if rows else 0.0
        return AttendanceReport(
            session_id=session_id, rows=tuple(rows), present=present, absent=absent, rate=rate
        )
