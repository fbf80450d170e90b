// Browser bootstrap: binds the controller to the DOM. The gateway base URL
// comes from a global injected at deploy time, falling back to same-origin.

import { GatewayApi } from "./api.js";
import { renderConversation } from "./render.js";
import { canSend, ChatController } from "./state.js";

declare global {
  interface Window {
    GRIDIRON_GATEWAY_URL?: string;
  }
}

function bootstrap(): void {
  const baseUrl = window.GRIDIRON_GATEWAY_URL ?? "";
  const api = new GatewayApi(baseUrl);
  const log = document.getElementById("chat-log") as HTMLDivElement;
  const input = document.getElementById("chat-input") as HTMLInputElement;
  const send = document.getElementById("chat-send") as HTMLButtonElement;

  const controller = new ChatController(api, undefined, (view) => {
    log.innerHTML = renderConversation(view.messages);
    send.disabled = !canSend(view, input.value);
    log.scrollTop = log.scrollHeight;
  });

  input.addEventListener("input", () => {
    send.disabled = !canSend(controller.view, input.value);
  });

  async function submit(): Promise<void> {
    const text = input.value;
    if (!canSend(controller.view, text)) return;
    input.value = "";
    await controller.sendMessage(text);
  }

  send.addEventListener("click", submit);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void submit();
  });

  log.addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    const feedback = target.closest(".feedback") as HTMLElement | null;
    if (feedback && target.tagName === "BUTTON") {
      const messageId = feedback.dataset.messageId!;
      if (target.classList.contains("thumb-up")) {
        await controller.submitFeedback(messageId, "up");
      } else {
        const comment = window.prompt("What was wrong with this answer?") ?? undefined;
        await controller.submitFeedback(messageId, "down", comment);
      }
      return;
    }
    if (target.classList.contains("dismiss")) {
      (target.closest(".failure-notice") as HTMLElement).remove();
      return;
    }
    const panel = target.closest(".trace-panel") as HTMLDetailsElement | null;
    if (panel && !panel.dataset.loaded) {
      panel.dataset.loaded = "1";
      const trace = await api.getTrace(panel.dataset.traceId!);
      const pre = panel.querySelector(".trace-body") as HTMLPreElement;
      pre.textContent = trace ? JSON.stringify(trace, null, 2) : "trace expired";
    }
  });

  send.disabled = true;
}

document.addEventListener("DOMContentLoaded", bootstrap);
