/** Wire-format events, one JSON object per NDJSON line. */

export interface TokenEvent {
  seq: number;
  type: "token";
  message_id: string;
  text: string;
}

export interface MessageCompleteEvent {
  seq: number;
  type: "message_complete";
  message_id: string;
  model_version: string;
  text: string;
}

export interface JobQueuedEvent {
  seq: number;
  type: "job_queued";
  job_id: string;
  message_id: string;
  mode: string;
}

export interface JobRunningEvent {
  seq: number;
  type: "job_running";
  job_id: string;
}

export interface JobSucceededEvent {
  seq: number;
  type: "job_succeeded";
  job_id: string;
  artifact_digest: string;
}

export interface JobFailedEvent {
  seq: number;
  type: "job_failed";
  job_id: string | null;
  error: string;
}

export interface ModelSwappedEvent {
  seq: number;
  type: "model_swapped";
  job_id: string;
  version: string;
  previous: string;
  scope: string;
}

export interface ErrorEvent {
  seq: number;
  type: "error";
  code: string;
  detail: string;
  message_id?: string;
}

export type ServerEvent =
  | TokenEvent
  | MessageCompleteEvent
  | JobQueuedEvent
  | JobRunningEvent
  | JobFailedEvent
  | JobSucceededEvent
  | ModelSwappedEvent
  | ErrorEvent;

/** After one of these the server closes the per-message stream. */
export const TERMINAL_TYPES: ReadonlySet<string> = new Set([
  "model_swapped",
  "job_failed",
  "error",
]);

export function parseEventLine(line: string): ServerEvent {
  const obj = JSON.parse(line) as Record<string, unknown>;
  if (typeof obj.seq !== "number" || typeof obj.type !== "string") {
    throw new Error(`malformed event line: ${line}`);
  }
  return obj as unknown as ServerEvent;
}
