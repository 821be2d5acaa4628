// Shapes of the /api/v1 surface the UI consumes.

export interface ReportRow {
  student_id: string;
  name: string;
  status: "present" | "absent";
  first_seen: number | null;
  evidence: string[];
}

export interface AttendanceReport {
  session_id: string;
  rows: ReportRow[];
  present: number;
  absent: number;
  rate: number;
}

export interface StreamMessage {
  session_id: string;
  student_id: string;
  status: "present";
  first_seen: number;
}

export interface Student {
  student_id: string;
  display_name: string;
  group: string;
  status: "pending" | "enrolled";
}

export interface Session {
  session_id: string;
  course: string;
  starts_at: number;
  ends_at: number;
  group: string;
  device_ids: string[];
}

export interface ImportSummary {
  count: number;
  applied: number;
  duplicates: number;
  rejected: { event_id: string; reason: string }[];
}

export type ConnectionState = "connecting" | "live" | "reconnecting" | "stopped";
