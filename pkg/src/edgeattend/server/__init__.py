from .app import create_app
from .storage import AttendanceReport, IngestResult, IngestStatus, ReportRow, Storage

__all__ = [
    "create_app",
    "Storage",
    "IngestStatus",
    "IngestResult",
    "AttendanceReport",
    "ReportRow",
]
