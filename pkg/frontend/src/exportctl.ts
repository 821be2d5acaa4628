// Export/import controls: CSV download and bundle upload, thin wrappers
// over the server endpoints with counts surfaced for the operator.

import { ApiError, type ApiClient } from "./api";
import type { ImportSummary } from "./types";

export interface CsvExport {
  filename: string;
  text: string;
  rows: number; // data rows, excluding the header
}

export async function exportCsv(api: ApiClient, sessionId: string): Promise<CsvExport> {
  const text = await api.fetchCsv(sessionId);
  const lines = text.trim().split(/\r?\n/);
  return {
    filename: `attendance-${sessionId}.csv`,
    text,
    rows: Math.max(lines.length - 1, 0),
  };
}

export type ImportOutcome =
  | { kind: "done"; summary: ImportSummary }
  | { kind: "malformed"; line: number | null; reason: string };

export async function importBundle(api: ApiClient, text: string): Promise<ImportOutcome> {
  try {
    return { kind: "done", summary: await api.importBundle(text) };
  } catch (err) {
    if (err instanceof ApiError && err.status === 400) {
      const body = err.body as { error?: string; line?: number } | null;
      return { kind: "malformed", line: body?.line ?? null, reason: body?.error ?? "malformed bundle" };
    }
    throw err;
  }
}

export function renderImportOutcome(outcome: ImportOutcome): string {
  if (outcome.kind === "malformed") {
    const where = outcome.line === null ? "" : ` at line ${outcome.line}`;
    return `import rejected${where}: ${outcome.reason}`;
  }
  const s = outcome.summary;
  const rejected = s.rejected.length
    ? `, ${s.rejected.length} rejected (${s.rejected.map((r) => r.reason).join("; ")})`
    : "";
  return `imported ${s.applied} applied, ${s.duplicates} duplicates${rejected}`;
}
