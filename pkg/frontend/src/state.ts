// Chat view state and its transitions. All transitions are pure except the
// API calls; the controller owns the single in-flight request per
// conversation and applies responses to the state.

import { AnswerPayload, GatewayApi } from "./api.js";

export type Role = "user" | "engine" | "notice";

export interface ChatMessage {
  role: Role;
  text: string;
  answer?: AnswerPayload;
  messageId?: string;
  traceId?: string;
  feedback?: "up" | "down";
  feedbackNotice?: string;
  hints?: string[];
  retriable?: boolean;
}

export interface ChatViewState {
  conversationId: string | null;
  messages: ChatMessage[];
  pending: boolean;
}

export function initialState(): ChatViewState {
  return { conversationId: null, messages: [], pending: false };
}

export function canSend(view: ChatViewState, text: string): boolean {
  return !view.pending && text.trim().length > 0;
}

function withMessage(view: ChatViewState, message: ChatMessage): ChatViewState {
  return { ...view, messages: [...view.messages, message] };
}

export class ChatController {
  constructor(
    private api: GatewayApi,
    public view: ChatViewState = initialState(),
    private onChange: (view: ChatViewState) => void = () => {}
  ) {}

  private apply(view: ChatViewState): ChatViewState {
    this.view = view;
    this.onChange(view);
    return view;
  }

  async sendMessage(text: string): Promise<ChatViewState> {
    if (!canSend(this.view, text)) return this.view;
    let view = this.apply({
      ...withMessage(this.view, { role: "user", text }),
      pending: true,
    });
    try {
      if (view.conversationId === null) {
        const conversationId = await this.api.createConversation();
        view = this.apply({ ...view, conversationId });
      }
      const result = await this.api.postMessage(view.conversationId!, text);
      if (result.kind === "ok") {
        const { message } = result;
        view = this.apply(
          withMessage(view, {
            role: "engine",
            text: message.answer.text,
            answer: message.answer,
            messageId: message.message_id,
            traceId: message.trace_id,
          })
        );
      } else if (result.kind === "unparseable") {
        view = this.apply(
          withMessage(view, {
            role: "notice",
            text: "I couldn't parse that prompt.",
            hints: result.hints.hints,
          })
        );
      } else {
        view = this.apply(
          withMessage(view, {
            role: "notice",
            text: `The engine answered ${result.status}.`,
            retriable: false,
          })
        );
      }
    } catch (error) {
      view = this.apply(
        withMessage(view, {
          role: "notice",
          text: "Network problem - the message was not delivered. Try again.",
          retriable: true,
        })
      );
    }
    return this.apply({ ...this.view, pending: false });
  }

  async submitFeedback(
    messageId: string,
    rating: "up" | "down",
    comment?: string
  ): Promise<ChatViewState> {
    const index = this.view.messages.findIndex((m) => m.messageId === messageId);
    if (index < 0) {
      return this.apply(
        withMessage(this.view, {
          role: "notice",
          text: "That message is no longer on screen.",
        })
      );
    }
    const outcome = await this.api.postFeedback(messageId, rating, comment);
    const messages = this.view.messages.slice();
    if (outcome === "stale") {
      messages[index] = {
        ...messages[index],
        feedbackNotice: "This message is stale on the server; feedback not stored.",
      };
    } else {
      messages[index] = { ...messages[index], feedback: rating, feedbackNotice: undefined };
    }
    return this.apply({ ...this.view, messages });
  }
}
