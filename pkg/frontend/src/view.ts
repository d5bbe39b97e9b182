/**
 * Pure rendering: UiState in, HTML string out.
 *
 * Keeping this a string function makes snapshot checks trivial and leaves
 * event wiring to the controller, which re-renders on every applied event.
 */

import type { UiMessage, UiState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function isLearning(message: UiMessage): boolean {
  return (
    message.directiveMode !== undefined ||
    (message.role === "user" && message.text.trimStart().startsWith("[Learn]"))
  );
}

function renderMessage(message: UiMessage): string {
  const classes = ["message", message.role];
  if (isLearning(message)) classes.push("learning");
  if (message.streaming) classes.push("streaming");
  const parts: string[] = [];
  if (message.directiveMode) {
    parts.push(`<span class="mode-tag">${escapeHtml(message.directiveMode)}</span>`);
  }
  parts.push(`<span class="text">${escapeHtml(message.text)}</span>`);
  if (message.role === "assistant" && !message.streaming) {
    if (message.modelVersion) {
      parts.push(`<span class="version-tag">${escapeHtml(message.modelVersion)}</span>`);
    }
    const sent = message.feedbackSent ? " disabled" : "";
    parts.push(
      `<button class="feedback" data-message-id="${escapeHtml(message.id)}"` +
        ` title="flag this answer for correction"${sent}>` +
        (message.feedbackSent ? "correction filed" : "needs work") +
        `</button>`,
    );
  }
  return (
    `<div class="${classes.join(" ")}" data-message-id="${escapeHtml(message.id)}">` +
    parts.join("") +
    `</div>`
  );
}

export function renderBadge(state: UiState): string {
  const version = state.modelVersion || "-";
  return `<span class="badge" id="model-badge">${escapeHtml(version)}</span>`;
}

export function renderJobIndicator(state: UiState): string {
  if (!state.activeJob) return "";
  const { jobId, state: jobState } = state.activeJob;
  return (
    `<div class="job-indicator ${escapeHtml(jobState)}">` +
    `learning: ${escapeHtml(jobId)} (${escapeHtml(jobState)})` +
    `</div>`
  );
}

export function renderUploadChip(state: UiState): string {
  if (!state.pendingUpload) return "";
  return (
    `<span class="upload-chip">${escapeHtml(state.pendingUpload.name)}` +
    ` (${state.pendingUpload.bytes.length} bytes)</span>`
  );
}

/** Full dynamic region: badge, transcript, indicator, upload chip. */
export function renderConversation(state: UiState): string {
  const messages = state.messages.map(renderMessage).join("\n");
  return [
    `<header class="top-bar">` +
      `<span class="app-name">livetune</span>` +
      renderBadge(state) +
      `</header>`,
    `<main class="transcript">${messages ? "\n" + messages + "\n" : ""}</main>`,
    `<footer class="status-line">` +
      renderJobIndicator(state) +
      renderUploadChip(state) +
      `</footer>`,
  ].join("\n");
}
