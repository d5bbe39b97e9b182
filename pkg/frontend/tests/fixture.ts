/**
 * In-process fixture server: answers the client's HTTP calls from recorded
 * data, logging every request so tests can count and inspect them.
 */

import type { FetchLike } from "../src/api.js";
import type { ServerEvent } from "../src/events.js";

export interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
}

export interface MessageScript {
  /** Goes out as the X-Message-Id header for the user turn. */
  userMessageId: string;
  events: ServerEvent[];
  /** Index into events after which the stream dies mid-flight. */
  dropAfter?: number;
}

export interface FixtureServer {
  fetchFn: FetchLike;
  calls: RecordedCall[];
  /** Full session log, consulted by the resume endpoint. */
  log: ServerEvent[];
  postsTo(pathSuffix: string): RecordedCall[];
}

function json(data: unknown, init?: ResponseInit): Response {
  return new Response(JSON.stringify(data), {
    status: 200,
    headers: { "Content-Type": "application/json" },
    ...init,
  });
}

function ndjsonResponse(script: MessageScript): Response {
  const encoder = new TextEncoder();
  const body = new ReadableStream<Uint8Array>({
    start(controller) {
      script.events.forEach((event, index) => {
        controller.enqueue(encoder.encode(JSON.stringify(event) + "\n"));
        if (script.dropAfter !== undefined && index === script.dropAfter) {
          controller.error(new Error("connection reset"));
          return;
        }
      });
      if (script.dropAfter === undefined) controller.close();
    },
  });
  return new Response(body, {
    status: 200,
    headers: {
      "Content-Type": "application/x-ndjson",
      "X-Message-Id": script.userMessageId,
    },
  });
}

export function fixtureServer(scripts: MessageScript[]): FixtureServer {
  const calls: RecordedCall[] = [];
  const log: ServerEvent[] = [];
  const queue = [...scripts];
  for (const script of scripts) log.push(...script.events);

  const fetchFn: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const [path, query = ""] = input.split("?");
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ method, path, body });

    if (method === "GET" && path === "/healthz") {
      return json({ status: "ok", scope: "global", active_version: "v0" });
    }
    if (method === "POST" && path === "/sessions") {
      return json({ session_id: "s-0001" });
    }
    if (method === "POST" && path.endsWith("/messages")) {
      const script = queue.shift();
      if (!script) throw new Error("fixture has no scripted reply left");
      return ndjsonResponse(script);
    }
    if (method === "POST" && path.endsWith("/feedback")) {
      return json({ job_id: "job-0042" });
    }
    if (method === "GET" && path.endsWith("/events")) {
      const after = Number(new URLSearchParams(query).get("after") ?? "0");
      return json({ events: log.filter((event) => event.seq > after) });
    }
    return json({ error: "not_found", detail: `no route ${method} ${path}` }, {
      status: 404,
    });
  };

  return {
    fetchFn,
    calls,
    log,
    postsTo(pathSuffix: string) {
      return calls.filter(
        (call) => call.method === "POST" && call.path.endsWith(pathSuffix),
      );
    },
  };
}
