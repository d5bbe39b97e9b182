import { ApiClient } from "./api.js";
import { bindDom, ChatApp } from "./app.js";

declare global {
  interface Window {
    /** Optional override when the service is not served same-origin. */
    LIVETUNE_BASE?: string;
  }
}

function mustFind<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing page element #${id}`);
  return el as T;
}

async function boot(): Promise<void> {
  const api = new ApiClient(window.LIVETUNE_BASE ?? "");
  const root = mustFind<HTMLElement>("conversation");
  const app = new ChatApp(api, { root });
  bindDom(app, {
    root,
    textInput: mustFind<HTMLTextAreaElement>("composer-text"),
    sendButton: mustFind<HTMLButtonElement>("send-button"),
    learnButton: mustFind<HTMLButtonElement>("learn-button"),
    fileInput: mustFind<HTMLInputElement>("file-input"),
  });
  try {
    await app.start();
  } catch (error) {
    root.innerHTML = `<div class="message system">service unreachable: ${String(
      error,
    )}</div>`;
  }
}

void boot();
