/**
 * UI state as a pure fold over the ordered server event stream.
 *
 * Everything the page shows is a function of (local user turns, server
 * events).  applyEvent never mutates its input, so replaying a recorded
 * stream over the same initial state always lands on the same snapshot.
 */

import type { ServerEvent } from "./events.js";

export type Role = "user" | "assistant" | "system";

export interface UiMessage {
  id: string;
  role: Role;
  text: string;
  /** Version tag on finished assistant turns. */
  modelVersion?: string;
  /** Set on user turns the server accepted as a learning directive. */
  directiveMode?: string;
  /** True while tokens are still arriving. */
  streaming?: boolean;
  /** True once a correction was filed against this answer. */
  feedbackSent?: boolean;
}

export interface ActiveJob {
  jobId: string;
  state: "queued" | "running" | "succeeded";
}

export interface PendingUpload {
  name: string;
  bytes: Uint8Array;
}

export interface UiState {
  sessionId: string | null;
  messages: UiMessage[];
  activeJob: ActiveJob | null;
  modelVersion: string;
  pendingUpload: PendingUpload | null;
  /** Highest event seq applied; resume point after a dropped connection. */
  lastSeq: number;
}

export function initialState(sessionId: string | null = null, modelVersion = ""): UiState {
  return {
    sessionId,
    messages: [],
    activeJob: null,
    modelVersion,
    pendingUpload: null,
    lastSeq: 0,
  };
}

function withMessage(state: UiState, message: UiMessage): UiState {
  return { ...state, messages: [...state.messages, message] };
}

function updateMessage(
  state: UiState,
  id: string,
  patch: Partial<UiMessage>,
): UiState {
  return {
    ...state,
    messages: state.messages.map((m) => (m.id === id ? { ...m, ...patch } : m)),
  };
}

/** Notice ids derive from the event seq so replays stay byte-identical. */
function notice(state: UiState, seq: number, text: string): UiState {
  return withMessage(state, { id: `sys-${seq}`, role: "system", text });
}

export function applyEvent(state: UiState, event: ServerEvent): UiState {
  // stale or duplicate delivery after a resume; the log is append-only
  if (event.seq <= state.lastSeq) return state;
  let next: UiState = { ...state, lastSeq: event.seq };

  switch (event.type) {
    case "token": {
      const existing = next.messages.find((m) => m.id === event.message_id);
      if (existing) {
        return updateMessage(next, event.message_id, {
          text: existing.text + event.text,
        });
      }
      return withMessage(next, {
        id: event.message_id,
        role: "assistant",
        text: event.text,
        streaming: true,
      });
    }
    case "message_complete": {
      const patch = {
        text: event.text,
        modelVersion: event.model_version,
        streaming: false,
      };
      if (next.messages.some((m) => m.id === event.message_id)) {
        return updateMessage(next, event.message_id, patch);
      }
      return withMessage(next, {
        id: event.message_id,
        role: "assistant",
        ...patch,
      });
    }
    case "job_queued": {
      // replacing outright keeps the one-indicator invariant
      next = { ...next, activeJob: { jobId: event.job_id, state: "queued" } };
      if (next.messages.some((m) => m.id === event.message_id)) {
        return updateMessage(next, event.message_id, {
          directiveMode: event.mode,
        });
      }
      return next;
    }
    case "job_running":
      if (next.activeJob?.jobId === event.job_id) {
        return { ...next, activeJob: { jobId: event.job_id, state: "running" } };
      }
      return next;
    case "job_succeeded":
      if (next.activeJob?.jobId === event.job_id) {
        return {
          ...next,
          activeJob: { jobId: event.job_id, state: "succeeded" },
        };
      }
      return next;
    case "job_failed": {
      if (next.activeJob === null || next.activeJob.jobId === event.job_id || event.job_id === null) {
        next = { ...next, activeJob: null };
      }
      return notice(next, event.seq, `learning job failed: ${event.error}`);
    }
    case "model_swapped": {
      next = { ...next, modelVersion: event.version, activeJob: null };
      return notice(next, event.seq, `model updated to ${event.version}`);
    }
    case "error":
      return notice(next, event.seq, `${event.code}: ${event.detail}`);
  }
}

export function foldEvents(state: UiState, events: Iterable<ServerEvent>): UiState {
  let acc = state;
  for (const event of events) acc = applyEvent(acc, event);
  return acc;
}
