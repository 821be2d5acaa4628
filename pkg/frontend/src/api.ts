// Thin typed client over the attendance server's REST surface.

import type { AttendanceReport, ImportSummary, Session, Student } from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
    message?: string,
  ) {
    super(message ?? `HTTP ${status}`);
  }
}

export class ApiClient {
  constructor(
    readonly base: string,
    private token?: string,
  ) {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    return this.token ? { Authorization: `Bearer ${this.token}`, ...extra } : extra;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const resp = await fetch(`${this.base}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init.headers as Record<string, string>) },
    });
    const text = await resp.text();
    let body: unknown = text;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      // non-JSON body (e.g. CSV) stays a string
    }
    if (!resp.ok) throw new ApiError(resp.status, body);
    return body as T;
  }

  report(sessionId: string): Promise<AttendanceReport> {
    return this.request(`/api/v1/sessions/${encodeURIComponent(sessionId)}/attendance`);
  }

  students(group?: string): Promise<Student[]> {
    const q = group ? `?group=${encodeURIComponent(group)}` : "";
    return this.request(`/api/v1/students${q}`);
  }

  addStudent(student: { student_id: string; display_name: string; group: string }): Promise<Student> {
    return this.request("/api/v1/students", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(student),
    });
  }

  uploadPhoto(studentId: string, photo: Blob | Uint8Array): Promise<{ status: string; embeddings?: number }> {
    const body = photo instanceof Uint8Array ? new Blob([photo as BlobPart]) : photo;
    return this.request(`/api/v1/students/${encodeURIComponent(studentId)}/photo`, {
      method: "POST",
      body,
    });
  }

  sessions(): Promise<Session[]> {
    return this.request("/api/v1/sessions");
  }

  importBundle(text: string): Promise<ImportSummary> {
    return this.request("/api/v1/import", { method: "POST", body: text });
  }

  csvUrl(sessionId: string): string {
    return `${this.base}/api/v1/sessions/${encodeURIComponent(sessionId)}/attendance.csv`;
  }

  async fetchCsv(sessionId: string): Promise<string> {
    const resp = await fetch(this.csvUrl(sessionId), { headers: this.headers() });
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.text();
  }

  streamUrl(sessionId: string): string {
    return `${this.base}/api/v1/sessions/${encodeURIComponent(sessionId)}/stream`;
  }

  streamHeaders(): Record<string, string> {
    return this.headers();
  }
}
