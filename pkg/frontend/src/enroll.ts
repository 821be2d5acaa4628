// Enrollment form model: field validation, submission, and verbatim
// surfacing of server verdicts. Framework-free; the DOM layer renders
// from this state.

import { ApiError, type ApiClient } from "./api";

export interface EnrollmentFields {
  student_id: string;
  display_name: string;
  group: string;
  photo: Blob | Uint8Array | null;
}

export type SubmissionStatus =
  | { kind: "idle" }
  | { kind: "submitting" }
  | { kind: "enrolled"; embeddings: number }
  | { kind: "rejected"; reason: string }
  | { kind: "conflict"; reason: string }
  | { kind: "network-error"; reason: string };

export interface EnrollmentState {
  fields: EnrollmentFields;
  status: SubmissionStatus;
}

export function emptyForm(): EnrollmentState {
  return {
    fields: { student_id: "", display_name: "", group: "", photo: null },
    status: { kind: "idle" },
  };
}

export function setField(
  state: EnrollmentState,
  name: keyof EnrollmentFields,
  value: string | Blob | Uint8Array | null,
): EnrollmentState {
  return { ...state, fields: { ...state.fields, [name]: value } };
}

export function fieldErrors(fields: EnrollmentFields): Partial<Record<keyof EnrollmentFields, string>> {
  const errors: Partial<Record<keyof EnrollmentFields, string>> = {};
  if (!/^[A-Za-z0-9_-]+$/.test(fields.student_id)) errors.student_id = "required: letters, digits, - or _";
  if (fields.display_name.trim() === "") errors.display_name = "required";
  if (fields.group.trim() === "") errors.group = "required";
  if (fields.photo === null) errors.photo = "photo required";
  return errors;
}

export function canSubmit(state: EnrollmentState): boolean {
  return state.status.kind !== "submitting" && Object.keys(fieldErrors(state.fields)).length === 0;
}

/** Create the student (idempotent on conflict) and upload the photo.
 * Network failures keep the form state so the操作 can simply retry. */
export async function submitEnrollment(api: ApiClient, state: EnrollmentState): Promise<EnrollmentState> {
  if (!canSubmit(state)) return state;
  const { fields } = state;
  try {
    try {
      await api.addStudent({
        student_id: fields.student_id,
        display_name: fields.display_name,
        group: fields.group,
      });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // duplicate student_id: surface as a conflict, keep the form
        const reason = (err.body as { error?: string })?.error ?? "student_id already exists";
        return { ...state, status: { kind: "conflict", reason } };
      }
      throw err;
    }
    const verdict = await api.uploadPhoto(fields.student_id, fields.photo!);
    return { ...state, status: { kind: "enrolled", embeddings: verdict.embeddings ?? 0 } };
  } catch (err) {
    if (err instanceof ApiError) {
      const body = err.body as { rejected?: string; error?: string } | null;
      // server verdicts ("0 faces", "2 faces", ...) rendered verbatim
      const reason = body?.rejected ?? body?.error ?? `HTTP ${err.status}`;
      return { ...state, status: { kind: "rejected", reason } };
    }
    return { ...state, status: { kind: "network-error", reason: String(err) } };
  }
}

export function renderStatus(status: SubmissionStatus): string {
  switch (status.kind) {
    case "idle":
      return "";
    case "submitting":
      return "submitting…";
    case "enrolled":
      return `enrolled (${status.embeddings} reference photo${status.embeddings === 1 ? "" : "s"})`;
    case "rejected":
    case "conflict":
      return `rejected: ${status.reason}`;
    case "network-error":
      return `network error, form kept — retry (${status.reason})`;
  }
}
