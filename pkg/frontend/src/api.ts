/**
 * Thin client for the chat service HTTP interface.
 *
 * Message posts answer with a newline-delimited JSON event stream; everything
 * else is plain JSON.  The fetch function is injectable so tests can run
 * against a fixture server without touching the network.
 */

import { parseEventLine, type ServerEvent } from "./events.js";

export interface AttachmentBody {
  name: string;
  format: string;
  content_b64: string;
}

export interface MessageStream {
  /** Server-assigned id of the user turn, from the X-Message-Id header. */
  messageId: string | null;
  events: AsyncGenerator<ServerEvent, void, void>;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function* readNdjson(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<ServerEvent, void, void> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) yield parseEventLine(line);
      }
    }
    buffer += decoder.decode();
    const tail = buffer.trim();
    if (tail) yield parseEventLine(tail);
  } finally {
    reader.releaseLock();
  }
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = "http_error";
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    if (body.error) code = body.error;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(response.status, code, detail);
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  async createSession(pinnedVersion?: string): Promise<string> {
    const body = pinnedVersion ? { pinned_version: pinnedVersion } : {};
    const data = await this.json<{ session_id: string }>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return data.session_id;
  }

  async health(): Promise<{ status: string; scope: string; active_version: string }> {
    return this.json("/healthz");
  }

  async postMessage(
    sessionId: string,
    text: string,
    attachments: AttachmentBody[] = [],
  ): Promise<MessageStream> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/messages`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text, attachments }),
      },
    );
    await raiseForStatus(response);
    if (!response.body) throw new Error("message response has no body stream");
    return {
      messageId: response.headers.get("X-Message-Id"),
      events: readNdjson(response.body),
    };
  }

  async postFeedback(
    sessionId: string,
    messageId: string,
    note: string,
  ): Promise<string | null> {
    const data = await this.json<{ job_id: string | null }>(
      `/sessions/${encodeURIComponent(sessionId)}/feedback`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ message_id: messageId, note }),
      },
    );
    return data.job_id;
  }

  /** Resume source: everything the session logged after the given seq. */
  async eventsAfter(sessionId: string, after: number): Promise<ServerEvent[]> {
    const data = await this.json<{ events: ServerEvent[] }>(
      `/sessions/${encodeURIComponent(sessionId)}/events?after=${after}`,
    );
    return data.events;
  }

  async getJob(jobId: string): Promise<{ id: string; state: string }> {
    return this.json(`/jobs/${encodeURIComponent(jobId)}`);
  }

  async listVersions(scope?: string): Promise<unknown[]> {
    const query = scope ? `?scope=${encodeURIComponent(scope)}` : "";
    const data = await this.json<{ versions: unknown[] }>(`/versions${query}`);
    return data.versions;
  }
}
