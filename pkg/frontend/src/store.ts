// Roster state as a pure function of API responses and stream messages.
// No attendance logic lives client-side: a full report replaces the state,
// and stream updates are idempotent upserts keyed by student_id.

import type { AttendanceReport, ConnectionState, ReportRow, StreamMessage } from "./types";

export interface BoardState {
  sessionId: string;
  rows: ReportRow[];
  present: number;
  absent: number;
  connection: ConnectionState;
}

export function fromReport(report: AttendanceReport, connection: ConnectionState): BoardState {
  const rows = [...report.rows].sort((a, b) => a.student_id.localeCompare(b.student_id));
  return {
    sessionId: report.session_id,
    rows,
    present: report.present,
    absent: report.absent,
    connection,
  };
}

export function applyStreamMessage(state: BoardState, msg: StreamMessage): BoardState {
  if (msg.session_id !== state.sessionId) return state;
  const idx = state.rows.findIndex((r) => r.student_id === msg.student_id);
  if (idx === -1) return state; // never invent students outside the roster
  const row = state.rows[idx]!;
  if (row.status === "present" && row.first_seen === msg.first_seen) return state;
  const updated: ReportRow = {
    ...row,
    status: "present",
    first_seen: msg.first_seen,
  };
  const rows = state.rows.slice();
  rows[idx] = updated;
  const present = rows.filter((r) => r.status === "present").length;
  return { ...state, rows, present, absent: rows.length - present };
}

export function withConnection(state: BoardState, connection: ConnectionState): BoardState {
  return state.connection === connection ? state : { ...state, connection };
}

const BADGES: Record<ConnectionState, string> = {
  connecting: "connecting…",
  live: "live",
  reconnecting: "reconnecting…",
  stopped: "stopped",
};

function escapeHtml(s: string): string {
  return s.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]!);
}

function formatSeen(ms: number | null): string {
  return ms === null ? "" : new Date(ms).toISOString().replace(".000Z", "Z");
}

/** Render the roster as an HTML table body; pure, DOM-free. */
export function renderBoard(state: BoardState): string {
  const rows = state.rows
    .map(
      (r) =>
        `<tr class="${r.status}" data-student="${escapeHtml(r.student_id)}">` +
        `<td>${escapeHtml(r.student_id)}</td><td>${escapeHtml(r.name)}</td>` +
        `<td>${r.status}</td><td>${formatSeen(r.first_seen)}</td></tr>`,
    )
    .join("");
  return (
    `<div class="board" data-connection="${state.connection}">` +
    `<p class="status">${BADGES[state.connection]} — present ${state.present} / ${state.rows.length}</p>` +
    `<table><thead><tr><th>id</th><th>name</th><th>status</th><th>first seen</th></tr></thead>` +
    `<tbody>${rows}</tbody></table></div>`
  );
}
