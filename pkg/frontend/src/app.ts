/**
 * Controller: owns the UiState, talks to the service, repaints the page.
 *
 * All server events funnel through applyServer so they hit the fold in
 * arrival order on the one rendering thread the browser gives us.  A dropped
 * stream falls back to polling the session event log from the last seq seen.
 */

import { ApiClient, ApiError, type AttachmentBody } from "./api.js";
import { TERMINAL_TYPES, type ServerEvent } from "./events.js";
import {
  applyEvent,
  initialState,
  type PendingUpload,
  type UiMessage,
  type UiState,
} from "./state.js";
import { renderConversation } from "./view.js";

export const LEARN_PREFIX = "[Learn]";

const RESUME_POLL_MS = 400;
const RESUME_GIVE_UP_MS = 120_000;

function encodeBase64(bytes: Uint8Array): string {
  let binary = "";
  // 32k chunks keep String.fromCharCode off the argument-count ceiling
  for (let i = 0; i < bytes.length; i += 0x8000) {
    binary += String.fromCharCode(...bytes.subarray(i, i + 0x8000));
  }
  return btoa(binary);
}

function attachmentFormat(name: string): string {
  return name.toLowerCase().endsWith(".pdf") ? "pdf" : "txt";
}

export interface AppOptions {
  /** Dynamic region the conversation renders into. */
  root?: HTMLElement | null;
  /** Asks the user for a correction note; null cancels the post. */
  promptFn?: (question: string) => string | null;
  sleepFn?: (ms: number) => Promise<void>;
}

export class ChatApp {
  state: UiState = initialState();
  private readonly root: HTMLElement | null;
  private readonly promptFn: (question: string) => string | null;
  private readonly sleepFn: (ms: number) => Promise<void>;
  private readonly feedbackInFlight = new Set<string>();
  private localIds = 0;
  private sending = false;

  constructor(
    readonly api: ApiClient,
    options: AppOptions = {},
  ) {
    this.root = options.root ?? null;
    this.promptFn =
      options.promptFn ?? ((question) => window.prompt(question));
    this.sleepFn =
      options.sleepFn ?? ((ms) => new Promise((resolve) => setTimeout(resolve, ms)));
  }

  async start(): Promise<void> {
    const health = await this.api.health();
    const sessionId = await this.api.createSession();
    this.state = initialState(sessionId, health.active_version);
    this.render();
  }

  render(): void {
    if (this.root) this.root.innerHTML = renderConversation(this.state);
  }

  private applyServer(event: ServerEvent): void {
    this.state = applyEvent(this.state, event);
    this.render();
  }

  private appendLocal(message: UiMessage): void {
    this.state = { ...this.state, messages: [...this.state.messages, message] };
    this.render();
  }

  private localNotice(text: string): void {
    this.appendLocal({ id: `local-${++this.localIds}`, role: "system", text });
  }

  attachUpload(name: string, bytes: Uint8Array): void {
    const pendingUpload: PendingUpload = { name, bytes };
    this.state = { ...this.state, pendingUpload };
    this.render();
  }

  /** True while a message stream is still being consumed. */
  get busy(): boolean {
    return this.sending;
  }

  async submitTurn(text: string): Promise<void> {
    if (!this.state.sessionId || this.sending || !text.trim()) return;
    const isDirective = text.trimStart().startsWith(LEARN_PREFIX);
    const attachments: AttachmentBody[] = [];
    if (isDirective && this.state.pendingUpload) {
      const { name, bytes } = this.state.pendingUpload;
      attachments.push({
        name,
        format: attachmentFormat(name),
        content_b64: encodeBase64(bytes),
      });
    }
    this.sending = true;
    try {
      const stream = await this.api.postMessage(
        this.state.sessionId,
        text,
        attachments,
      );
      if (attachments.length > 0) {
        this.state = { ...this.state, pendingUpload: null };
      }
      this.appendLocal({
        id: stream.messageId ?? `local-${++this.localIds}`,
        role: "user",
        text,
      });
      await this.consume(stream.events);
    } catch (error) {
      if (error instanceof ApiError) {
        this.localNotice(`request rejected: ${error.code}: ${error.message}`);
      } else {
        await this.resumeFromLog();
      }
    } finally {
      this.sending = false;
    }
  }

  /** Click path: ask for a note, then file it; cancelling posts nothing. */
  async handleFeedbackClick(messageId: string): Promise<void> {
    const note = this.promptFn("What should be corrected?");
    if (note === null) {
      this.render();
      return;
    }
    await this.submitFeedback(messageId, note);
  }

  async submitFeedback(messageId: string, note: string): Promise<void> {
    if (!this.state.sessionId) return;
    const message = this.state.messages.find((m) => m.id === messageId);
    if (!message || message.feedbackSent || this.feedbackInFlight.has(messageId)) {
      return;
    }
    this.feedbackInFlight.add(messageId);
    try {
      await this.api.postFeedback(this.state.sessionId, messageId, note);
      this.state = {
        ...this.state,
        messages: this.state.messages.map((m) =>
          m.id === messageId ? { ...m, feedbackSent: true } : m,
        ),
      };
      this.localNotice("correction queued");
    } catch (error) {
      if (error instanceof ApiError) {
        this.localNotice(`feedback rejected: ${error.code}: ${error.message}`);
      } else {
        this.localNotice("feedback failed: connection lost");
      }
    } finally {
      this.feedbackInFlight.delete(messageId);
      this.render();
    }
  }

  private async consume(
    events: AsyncGenerator<ServerEvent, void, void>,
  ): Promise<void> {
    try {
      for await (const event of events) {
        this.applyServer(event);
      }
    } catch {
      await this.resumeFromLog();
    }
  }

  /**
   * Recover a dropped stream by replaying the session log from the last
   * applied seq until the in-flight work reaches a terminal event.
   */
  private async resumeFromLog(): Promise<void> {
    if (!this.state.sessionId) return;
    this.localNotice("connection lost, resuming");
    const deadline = Date.now() + RESUME_GIVE_UP_MS;
    for (;;) {
      let batch: ServerEvent[];
      try {
        batch = await this.api.eventsAfter(this.state.sessionId, this.state.lastSeq);
      } catch {
        if (Date.now() > deadline) break;
        await this.sleepFn(RESUME_POLL_MS);
        continue;
      }
      let sawTerminal = false;
      for (const event of batch) {
        this.applyServer(event);
        if (TERMINAL_TYPES.has(event.type) || event.type === "message_complete") {
          sawTerminal = true;
        }
      }
      const stillWaiting =
        this.state.activeJob !== null ||
        this.state.messages.some((m) => m.streaming);
      if (sawTerminal && !stillWaiting) break;
      if (Date.now() > deadline) break;
      await this.sleepFn(RESUME_POLL_MS);
    }
  }
}

/** Prefixes the composer text with the learn marker, once. */
export function insertLearnPrefix(text: string): string {
  return text.trimStart().startsWith(LEARN_PREFIX) ? text : `${LEARN_PREFIX} ${text}`;
}

export interface DomRefs {
  root: HTMLElement;
  textInput: HTMLTextAreaElement | HTMLInputElement;
  sendButton: HTMLButtonElement;
  learnButton: HTMLButtonElement;
  fileInput: HTMLInputElement;
}

/** Hooks the controller up to the static page chrome. */
export function bindDom(app: ChatApp, refs: DomRefs): void {
  const submit = async () => {
    const text = refs.textInput.value;
    if (!text.trim() || app.busy) return;
    refs.textInput.value = "";
    await app.submitTurn(text);
  };
  refs.sendButton.addEventListener("click", () => void submit());
  refs.textInput.addEventListener("keydown", (event) => {
    const key = event as KeyboardEvent;
    if (key.key === "Enter" && !key.shiftKey) {
      key.preventDefault();
      void submit();
    }
  });
  refs.learnButton.addEventListener("click", () => {
    refs.textInput.value = insertLearnPrefix(refs.textInput.value);
    refs.textInput.focus();
  });
  refs.fileInput.addEventListener("change", () => {
    const file = refs.fileInput.files?.[0];
    if (!file) return;
    void file.arrayBuffer().then((buffer) => {
      app.attachUpload(file.name, new Uint8Array(buffer));
      refs.fileInput.value = "";
    });
  });
  refs.root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const button = target.closest<HTMLButtonElement>("button.feedback");
    if (!button || button.disabled) return;
    const messageId = button.dataset.messageId;
    if (!messageId) return;
    // belt and braces: the controller also tracks in-flight posts
    button.disabled = true;
    void app.handleFeedbackClick(messageId);
  });
}
