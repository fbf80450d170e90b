// Typed client for the gateway's documented JSON endpoints.

export interface TableData {
  columns: string[];
  rows: (string | number | boolean | null)[][];
  provenance: string;
}

export interface MediaLink {
  play_id: string;
  url: string;
}

export interface AnswerPayload {
  text: string;
  tables: TableData[];
  media_links: MediaLink[];
  verdict: Record<string, unknown> | null;
  failures: string[];
}

export interface MessagePayload {
  message_id: string;
  conversation_id: string;
  answer: AnswerPayload;
  trace_id: string;
  intent_kind: string;
  inherited: string[];
  challenge: number;
}

export interface ParseHints {
  error: string;
  hints: string[];
}

export type SendResult =
  | { kind: "ok"; message: MessagePayload }
  | { kind: "unparseable"; hints: ParseHints }
  | { kind: "http_error"; status: number; detail: string };

export class GatewayApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async createConversation(): Promise<string> {
    const response = await this.fetchImpl(this.url("/v1/conversations"), {
      method: "POST",
    });
    if (!response.ok) {
      throw new Error(`conversation create failed: ${response.status}`);
    }
    const body = (await response.json()) as { conversation_id: string };
    return body.conversation_id;
  }

  async postMessage(conversationId: string, text: string): Promise<SendResult> {
    const response = await this.fetchImpl(
      this.url(`/v1/conversations/${conversationId}/messages`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text }),
      }
    );
    if (response.status === 422) {
      const body = (await response.json()) as { detail: ParseHints };
      return { kind: "unparseable", hints: body.detail };
    }
    if (!response.ok) {
      const detail = await response.text();
      return { kind: "http_error", status: response.status, detail };
    }
    return { kind: "ok", message: (await response.json()) as MessagePayload };
  }

  /** Returns the final stored rating, or "stale" when the message is unknown. */
  async postFeedback(
    messageId: string,
    rating: "up" | "down",
    comment?: string
  ): Promise<"stored" | "stale"> {
    const response = await this.fetchImpl(
      this.url(`/v1/messages/${messageId}/feedback`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ rating, comment: comment ?? null }),
      }
    );
    if (response.status === 404) return "stale";
    if (!response.ok) throw new Error(`feedback failed: ${response.status}`);
    return "stored";
  }

  async getTrace(traceId: string): Promise<Record<string, unknown> | null> {
    const response = await this.fetchImpl(this.url(`/v1/traces/${traceId}`));
    if (response.status === 404) return null;
    if (!response.ok) throw new Error(`trace fetch failed: ${response.status}`);
    return (await response.json()) as Record<string, unknown>;
  }
}
