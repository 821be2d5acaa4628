// End-to-end suite against the real attendance server spawned by
// globalSetup (seeded demo roster: students s01..s09 in "demo-group" and
// an open "demo-session").

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, inject, it } from "vitest";

import { ApiClient } from "../src/api";
import { LiveBoard } from "../src/board";
import { emptyForm, fieldErrors, canSubmit, setField, submitEnrollment } from "../src/enroll";
import { exportCsv, importBundle, renderImportOutcome } from "../src/exportctl";
import { renderBoard, type BoardState } from "../src/store";

const base = inject("baseUrl");
const fixtureDir = inject("fixtureDir");
const api = new ApiClient(base);

function deviceEvent(student: string) {
  return {
    event_id: crypto.randomUUID(),
    device_id: "test-device",
    session_id: "demo-session",
    student_id: student,
    distance: 0.05,
    track_id: 1,
    t: Date.now(),
    thumbnail: null,
  };
}

async function ingest(student: string): Promise<void> {
  const resp = await fetch(`${base}/api/v1/events`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(deviceEvent(student)),
  });
  expect(resp.ok).toBe(true);
}

function rowStatus(state: BoardState | null, student: string): string | undefined {
  return state?.rows.find((r) => r.student_id === student)?.status;
}

describe("live board", () => {
  it("reflects an ingested event within 2 seconds, no reload", async () => {
    const states: BoardState[] = [];
    const board = new LiveBoard(api, "demo-session", (s) => states.push(s));
    await board.start();
    try {
      await expect.poll(() => states.at(-1)?.connection).toBe("live");
      expect(rowStatus(states.at(-1)!, "s05")).toBe("absent");

      const t0 = performance.now();
      await ingest("s05");
      await expect.poll(() => rowStatus(states.at(-1)!, "s05"), { timeout: 2000 }).toBe("present");
      expect(performance.now() - t0).toBeLessThan(2000);
      expect(renderBoard(states.at(-1)!)).toContain('<tr class="present" data-student="s05">');
    } finally {
      board.stop();
    }
  });

  it("equals a fresh report fetch after a dropped and restored stream", async () => {
    let latest: BoardState | null = null;
    const board = new LiveBoard(api, "demo-session", (s) => (latest = s));
    await board.start();
    try {
      await expect.poll(() => latest?.connection).toBe("live");

      board.killStream(); // network drop
      await ingest("s06"); // happens while the board may be offline
      await expect.poll(() => latest?.connection, { timeout: 10000 }).toBe("live");
      // resync on reconnect must converge to exactly the server's report
      await expect
        .poll(async () => {
          const fresh = await api.report("demo-session");
          const got = latest!.rows.map((r) => [r.student_id, r.status, r.first_seen]);
          const want = fresh.rows.map((r) => [r.student_id, r.status, r.first_seen]);
          return JSON.stringify(got) === JSON.stringify(want);
        })
        .toBe(true);
      expect(rowStatus(latest, "s06")).toBe("present");
    } finally {
      board.stop();
    }
  });

  it("rejects an unknown session with an error", async () => {
    const board = new LiveBoard(api, "no-such-session", () => {});
    await expect(board.start()).rejects.toMatchObject({ status: 404 });
  });
});

describe("export and import", () => {
  it("exports exactly 9 data rows for the 9-student roster", async () => {
    const csv = await exportCsv(api, "demo-session");
    expect(csv.rows).toBe(9);
    const lines = csv.text.trim().split(/\r?\n/); // RFC 4180 CRLF endings
    expect(lines[0]).toBe("student_id,name,status,first_seen");
    expect(lines).toHaveLength(10);
  });

  it("imports a bundle idempotently with visible counts", async () => {
    const events = [deviceEvent("s07"), deviceEvent("s08")];
    const header = {
      device_id: "test-device",
      session_id: "demo-session",
      exported_at: Date.now(),
      count: 2,
    };
    const bundle = [header, ...events].map((o) => JSON.stringify(o)).join("\n");

    const first = await importBundle(api, bundle);
    expect(first).toMatchObject({ kind: "done", summary: { applied: 2, duplicates: 0 } });
    const second = await importBundle(api, bundle);
    expect(second).toMatchObject({ kind: "done", summary: { applied: 0, duplicates: 2 } });
    expect(renderImportOutcome(second)).toBe("imported 0 applied, 2 duplicates");
  });

  it("surfaces malformed bundles with their line number", async () => {
    const header = { device_id: "d", session_id: "demo-session", exported_at: 0, count: 1 };
    const outcome = await importBundle(api, `${JSON.stringify(header)}\nnot json`);
    expect(outcome).toEqual({ kind: "malformed", line: 2, reason: "malformed event" });
    expect(renderImportOutcome(outcome)).toContain("line 2");
  });
});

describe("enrollment flow", () => {
  const photo = new Uint8Array(readFileSync(join(fixtureDir, "photo.png")));
  const blank = new Uint8Array(readFileSync(join(fixtureDir, "blank.png")));

  function filledForm(id: string, photoBytes: Uint8Array) {
    let form = emptyForm();
    form = setField(form, "student_id", id);
    form = setField(form, "display_name", "New Student");
    form = setField(form, "group", "demo-group");
    form = setField(form, "photo", photoBytes);
    return form;
  }

  it("disables submit until every field and the photo are present", () => {
    let form = emptyForm();
    expect(canSubmit(form)).toBe(false);
    expect(fieldErrors(form.fields)).toHaveProperty("photo");
    form = filledForm("s90", photo);
    expect(canSubmit(form)).toBe(true);
  });

  it("enrolls a valid submission and the student joins the roster", async () => {
    const done = await submitEnrollment(api, filledForm("s90", photo));
    expect(done.status).toEqual({ kind: "enrolled", embeddings: 1 });
    const students = await api.students("demo-group");
    expect(students.some((s) => s.student_id === "s90" && s.status === "enrolled")).toBe(true);
  });

  it("surfaces the server's face-count verdict verbatim", async () => {
    const done = await submitEnrollment(api, filledForm("s91", blank));
    expect(done.status).toEqual({ kind: "rejected", reason: "0 faces" });
  });

  it("surfaces duplicate student ids as a conflict", async () => {
    const done = await submitEnrollment(api, filledForm("s01", photo));
    expect(done.status).toMatchObject({ kind: "conflict" });
  });

  it("keeps the form on network failure so retry works", async () => {
    const offline = new ApiClient("http://127.0.0.1:1");
    const form = filledForm("s92", photo);
    const failed = await submitEnrollment(offline, form);
    expect(failed.status.kind).toBe("network-error");
    expect(failed.fields).toEqual(form.fields); // nothing lost
    const retried = await submitEnrollment(api, { ...failed, status: { kind: "idle" } });
    expect(retried.status).toEqual({ kind: "enrolled", embeddings: 1 });
  });
});
