// Browser entry: wires the board, enrollment form, and export controls to
// the DOM. All attendance logic lives in the imported modules; this file
// only moves state into elements.

import { ApiClient } from "./api";
import { LiveBoard } from "./board";
import {
  canSubmit,
  emptyForm,
  fieldErrors,
  renderStatus,
  setField,
  submitEnrollment,
  type EnrollmentState,
} from "./enroll";
import { exportCsv, importBundle, renderImportOutcome } from "./exportctl";
import { renderBoard } from "./store";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const params = new URLSearchParams(location.search);
const api = new ApiClient(params.get("server") ?? "", params.get("token") ?? undefined);

// --- live board

let board: LiveBoard | null = null;

async function openBoard(sessionId: string): Promise<void> {
  board?.stop();
  board = new LiveBoard(api, sessionId, (state) => {
    el("board").innerHTML = renderBoard(state);
  });
  try {
    await board.start();
  } catch (err) {
    el("board").innerHTML = `<p class="error">failed to load session: ${String(err)}</p>`;
  }
}

el<HTMLButtonElement>("open-session").addEventListener("click", () => {
  const sessionId = el<HTMLInputElement>("session-id").value.trim();
  if (sessionId) void openBoard(sessionId);
});

// --- enrollment form

let form: EnrollmentState = emptyForm();

function paintForm(): void {
  const errors = fieldErrors(form.fields);
  el<HTMLButtonElement>("enroll-submit").disabled = !canSubmit(form);
  el("enroll-status").textContent = renderStatus(form.status);
  for (const name of ["student_id", "display_name", "group", "photo"] as const) {
    el(`err-${name}`).textContent = errors[name] ?? "";
  }
}

for (const name of ["student_id", "display_name", "group"] as const) {
  el<HTMLInputElement>(`enroll-${name}`).addEventListener("input", (ev) => {
    form = setField(form, name, (ev.target as HTMLInputElement).value);
    paintForm();
  });
}

el<HTMLInputElement>("enroll-photo").addEventListener("change", (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0] ?? null;
  form = setField(form, "photo", file);
  paintForm();
});

el<HTMLButtonElement>("enroll-submit").addEventListener("click", () => {
  form = { ...form, status: { kind: "submitting" } };
  paintForm();
  void submitEnrollment(api, form).then((next) => {
    form = next;
    paintForm();
  });
});

// --- export / import

el<HTMLButtonElement>("export-csv").addEventListener("click", () => {
  const sessionId = el<HTMLInputElement>("session-id").value.trim();
  if (!sessionId) return;
  void exportCsv(api, sessionId).then((csv) => {
    const blob = new Blob([csv.text], { type: "text/csv" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = csv.filename;
    a.click();
    URL.revokeObjectURL(a.href);
    el("export-status").textContent = `exported ${csv.rows} rows`;
  });
});

el<HTMLInputElement>("import-file").addEventListener("change", (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  void file.text().then(async (text) => {
    const outcome = await importBundle(api, text);
    el("import-status").textContent = renderImportOutcome(outcome);
    if (outcome.kind === "done" && board) await board.resync();
  });
});

paintForm();
