// Pure rendering of answers and messages to HTML strings. The UI never
// computes facts client-side: every number shown comes from the payload.

import { AnswerPayload, TableData } from "./api.js";
import { ChatMessage } from "./state.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTable(table: TableData): string {
  const head = table.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = table.rows
    .map(
      (row) =>
        `<tr>${row.map((cell) => `<td>${escapeHtml(cell ?? "")}</td>`).join("")}</tr>`
    )
    .join("");
  return `<table class="answer-table"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function renderAnswer(answer: AnswerPayload): string {
  const parts: string[] = [];
  parts.push(`<div class="answer-text">${escapeHtml(answer.text).replace(/\n/g, "<br>")}</div>`);
  for (const table of answer.tables) {
    parts.push(renderTable(table));
  }
  if (answer.media_links.length > 0) {
    const buttons = answer.media_links
      .map(
        (link) =>
          `<a class="video-button" href="${escapeHtml(link.url)}" target="_blank" rel="noopener">` +
          `Watch ${escapeHtml(link.play_id)}</a>`
      )
      .join("");
    parts.push(`<div class="media-links">${buttons}</div>`);
  }
  if (answer.failures.length > 0) {
    const items = answer.failures.map((f) => `<li>${escapeHtml(f)}</li>`).join("");
    parts.push(
      `<div class="failure-notice" data-dismissible="true"><ul>${items}</ul>` +
        `<button class="dismiss">dismiss</button></div>`
    );
  }
  return parts.join("");
}

export function renderMessage(message: ChatMessage, index: number): string {
  if (message.role === "user") {
    return `<div class="bubble user" data-index="${index}">${escapeHtml(message.text)}</div>`;
  }
  if (message.role === "notice") {
    const hints = (message.hints ?? [])
      .map((h) => `<li>${escapeHtml(h)}</li>`)
      .join("");
    const retry = message.retriable ? `<button class="retry">retry</button>` : "";
    return (
      `<div class="bubble notice" data-index="${index}">${escapeHtml(message.text)}` +
      (hints ? `<ul class="hints">${hints}</ul>` : "") +
      retry +
      `</div>`
    );
  }
  const feedback =
    `<span class="feedback" data-message-id="${escapeHtml(message.messageId ?? "")}">` +
    `<button class="thumb-up${message.feedback === "up" ? " active" : ""}">&#128077;</button>` +
    `<button class="thumb-down${message.feedback === "down" ? " active" : ""}">&#128078;</button>` +
    `</span>`;
  const notice = message.feedbackNotice
    ? `<div class="stale-notice">${escapeHtml(message.feedbackNotice)}</div>`
    : "";
  const trace = message.traceId
    ? `<details class="trace-panel" data-trace-id="${escapeHtml(message.traceId)}">` +
      `<summary>trace</summary><pre class="trace-body"></pre></details>`
    : "";
  return (
    `<div class="bubble engine" data-index="${index}">` +
    (message.answer ? renderAnswer(message.answer) : escapeHtml(message.text)) +
    feedback +
    notice +
    trace +
    `</div>`
  );
}

export function renderConversation(messages: ChatMessage[]): string {
  return messages.map((message, index) => renderMessage(message, index)).join("\n");
}
