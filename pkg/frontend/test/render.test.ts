import { describe, expect, it } from "vitest";

import { AnswerPayload } from "../src/api.js";
import { renderAnswer, renderConversation, renderMessage } from "../src/render.js";
import { ChatMessage } from "../src/state.js";

function answer(overrides: Partial<AnswerPayload> = {}): AnswerPayload {
  return {
    text: "Brock Purdy has more passing yards this season than Patrick Mahomes.",
    tables: [],
    media_links: [],
    verdict: null,
    failures: [],
    ...overrides,
  };
}

describe("renderAnswer", () => {
  it("renders a roster table as a 10-row grid", () => {
    const rosterRows = [
      ["QB", "Patrick Mahomes", "KC", 5.79],
      ["RB", "Josh Jacobs", "LV", 0.33],
      ["WR", "Justin Jefferson", "MIN", 0.43],
      ["TE", "Travis Kelce", "KC", 0.23],
      ["OT", "Trent Williams", "SF", 0.17],
      ["IOL", "Creed Humphrey", "KC", 0.25],
      ["EDGE", "Myles Garrett", "CLE", 0.61],
      ["DT", "Quinnen Williams", "NYJ", 0.47],
      ["ILB", "Fred Warner", "SF", 0.21],
      ["OB-LB", "Jaquan Brisker", "CHI", 0.11],
    ];
    const html = renderAnswer(
      answer({
        tables: [
          {
            columns: ["position", "player", "team", "twar"],
            rows: rosterRows,
            provenance: "roster",
          },
        ],
      })
    );
    expect(html.match(/<tr>/g)).toHaveLength(11); // header + 10 body rows
    expect(html).toContain("Patrick Mahomes");
    expect(html).toContain("5.79");
  });

  it("renders media links as labeled buttons", () => {
    const html = renderAnswer(
      answer({
        media_links: [{ play_id: "P1", url: "https://media.example.com/plays/P1" }],
      })
    );
    expect(html).toContain('class="video-button"');
    expect(html).toContain("Watch P1");
    expect(html).toContain("https://media.example.com/plays/P1");
  });

  it("renders failures as a dismissible notice", () => {
    const html = renderAnswer(answer({ failures: ["sub-task for x failed (timeout)."] }));
    expect(html).toContain('class="failure-notice"');
    expect(html).toContain("dismiss");
  });

  it("escapes markup coming from the server", () => {
    const html = renderAnswer(answer({ text: "<script>alert(1)</script>" }));
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("shows no numerals that are absent from the payload", () => {
    const payload = answer({
      text: "Purdy has a total of 2,454 passing yards.",
      tables: [{ columns: ["player", "pass_yards"], rows: [["Brock Purdy", 2454]], provenance: "t" }],
    });
    const html = renderAnswer(payload);
    const allowed = new Set(["2454", "2,454"]);
    const numerals = html.match(/\d[\d,]*(?:\.\d+)?/g) ?? [];
    for (const numeral of numerals) {
      expect(allowed.has(numeral)).toBe(true);
    }
  });
});

describe("renderMessage", () => {
  it("renders feedback buttons with the stored rating active", () => {
    const message: ChatMessage = {
      role: "engine",
      text: "",
      answer: answer(),
      messageId: "m1",
      traceId: "t1",
      feedback: "down",
    };
    const html = renderMessage(message, 1);
    expect(html).toContain('thumb-down active');
    expect(html).toContain('data-trace-id="t1"');
  });

  it("is deterministic: replaying the same payload renders identically", () => {
    const messages: ChatMessage[] = [
      { role: "user", text: "Who has more passing yards?" },
      { role: "engine", text: "", answer: answer(), messageId: "m1", traceId: "t1" },
    ];
    expect(renderConversation(messages)).toBe(renderConversation(messages));
  });
});
