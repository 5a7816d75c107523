import { describe, expect, it } from "vitest";

import {
  citeSentence,
  type DraftState,
  contextText,
  emptyDraft,
  exportDraft,
  importDraft,
  loadDraft,
  saveDraft,
  searchReadiness,
  toSearchRequest,
} from "../src/draft";

describe("draft model", () => {
  it("cite appends the sentence and records provenance", () => {
    const draft = emptyDraft();
    const cited = citeSentence(draft, "  A cited sentence. ", "d42");
    expect(cited.contextSentences).toEqual(["A cited sentence."]);
    expect(cited.history).toHaveLength(1);
    expect(cited.history[0].articleId).toBe("d42");
    expect(cited.history[0].position).toBe(0);
    // original draft untouched
    expect(draft.contextSentences).toEqual([]);
  });

  it("ignores empty cites", () => {
    const draft = emptyDraft();
    expect(citeSentence(draft, "   ", "d1")).toBe(draft);
  });

  it("joins context sentences with a single space", () => {
    let draft = emptyDraft();
    draft = citeSentence(draft, "One.", "a");
    draft = citeSentence(draft, "Two.", "b");
    expect(contextText(draft)).toBe("One. Two.");
    expect(draft.history.map((h) => h.position)).toEqual([0, 1]);
  });

  it("search request carries the draft fields", () => {
    let draft = emptyDraft();
    draft = { ...draft, eventText: "Headline. Lead.", timestamp: "2019-03-28T12:00:00Z" };
    draft = citeSentence(draft, "Ctx.", "a");
    const request = toSearchRequest(draft);
    expect(request).toEqual({
      event_text: "Headline. Lead.",
      context_text: "Ctx.",
      timestamp: "2019-03-28T12:00:00Z",
      mode: "EC",
      system: "rrf",
      depth: 20,
    });
  });

  it("omits the timestamp when searching as of now", () => {
    const request = toSearchRequest({ ...emptyDraft(), eventText: "x" });
    expect("timestamp" in request).toBe(false);
  });
});

describe("search readiness", () => {
  it("mode C with empty context disables search with a hint", () => {
    const draft = { ...emptyDraft(), eventText: "something", mode: "C" as const };
    const readiness = searchReadiness(draft);
    expect(readiness.ok).toBe(false);
    if (!readiness.ok) expect(readiness.hint).toMatch(/context/i);
  });

  it("mode E with empty event disables search", () => {
    const draft = { ...emptyDraft(), mode: "E" as const };
    expect(searchReadiness(draft).ok).toBe(false);
  });

  it("mode EC is ready with either side non-empty", () => {
    expect(searchReadiness({ ...emptyDraft(), eventText: "x" }).ok).toBe(true);
    expect(searchReadiness(citeSentence(emptyDraft(), "c.", "a")).ok).toBe(true);
    expect(searchReadiness(emptyDraft()).ok).toBe(false);
  });
});

describe("persistence and portability", () => {
  function memoryStorage() {
    const map = new Map<string, string>();
    return {
      getItem: (k: string) => map.get(k) ?? null,
      setItem: (k: string, v: string) => void map.set(k, v),
    };
  }

  it("saves and loads through storage", () => {
    const storage = memoryStorage();
    let draft = { ...emptyDraft(), eventText: "Event", depth: 30 };
    draft = citeSentence(draft, "Ctx one.", "d7");
    saveDraft(draft, storage);
    const loaded = loadDraft(storage);
    expect(loaded).toEqual(draft);
  });

  it("returns null for an empty or corrupt store", () => {
    const storage = memoryStorage();
    expect(loadDraft(storage)).toBeNull();
    storage.setItem("newsctx-workbench-draft-v1", "{nope");
    expect(loadDraft(storage)).toBeNull();
  });

  it("export/import round-trips the draft as plain text", () => {
    let draft: DraftState = {
      ...emptyDraft(),
      eventText: "Headline here.\nLead sentence.",
      timestamp: "2019-03-28T12:00:00Z",
      mode: "EC" as const,
      system: "bm25" as const,
      depth: 15,
    };
    draft = citeSentence(draft, "First cited.", "d1");
    draft = citeSentence(draft, "Second cited.", "d2");
    const text = exportDraft(draft);
    expect(text).toContain("## context");
    const back = importDraft(text);
    expect(back.eventText).toBe(draft.eventText);
    expect(back.contextSentences).toEqual(draft.contextSentences);
    expect(back.timestamp).toBe(draft.timestamp);
    expect(back.system).toBe("bm25");
    expect(back.depth).toBe(15);
    expect(back.history.map((h) => h.articleId)).toEqual(["d1", "d2"]);
  });
});
