import type { QueryMode, SearchRequest, SystemId } from "./types";

/** One "cite here" insertion: which article, where, and when. */
export interface InsertionRecord {
  articleId: string;
  position: number; // index in contextSentences where the sentence landed
  citedAt: string; // ISO time of the insertion
}

/**
 * The writer's working state: the event block being written (headline +
 * lead), the ordered context sentences, and the insertion history.
 */
export interface DraftState {
  eventText: string;
  contextSentences: string[];
  timestamp: string | null; // null = "now"; editable for what-if queries
  mode: QueryMode;
  system: SystemId;
  depth: number;
  history: InsertionRecord[];
}

export function emptyDraft(): DraftState {
  return {
    eventText: "",
    contextSentences: [],
    timestamp: null,
    mode: "EC",
    system: "rrf",
    depth: 20,
    history: [],
  };
}

export function contextText(draft: DraftState): string {
  return draft.contextSentences.join(" ");
}

/**
 * Append a writer-edited sentence to the context, recording provenance.
 * Returns a new draft; the previous state is untouched.
 */
export function citeSentence(draft: DraftState, sentence: string, articleId: string): DraftState {
  const trimmed = sentence.trim();
  if (!trimmed) return draft;
  return {
    ...draft,
    contextSentences: [...draft.contextSentences, trimmed],
    history: [
      ...draft.history,
      {
        articleId,
        position: draft.contextSentences.length,
        citedAt: new Date().toISOString(),
      },
    ],
  };
}

export type SearchReadiness = { ok: true } | { ok: false; hint: string };

/** Whether the current mode has text to search with; hint explains why not. */
export function searchReadiness(draft: DraftState): SearchReadiness {
  const hasEvent = draft.eventText.trim().length > 0;
  const hasContext = contextText(draft).trim().length > 0;
  if (draft.mode === "E" && !hasEvent) {
    return { ok: false, hint: "Mode E searches the event block, which is empty. Write the headline and lead first." };
  }
  if (draft.mode === "C" && !hasContext) {
    return { ok: false, hint: "Mode C searches the context, which is empty. Write or cite a context sentence first." };
  }
  if (draft.mode === "EC" && !hasEvent && !hasContext) {
    return { ok: false, hint: "The draft is empty. Write the event block or some context first." };
  }
  return { ok: true };
}

export function toSearchRequest(draft: DraftState): SearchRequest {
  const request: SearchRequest = {
    event_text: draft.eventText,
    context_text: contextText(draft),
    mode: draft.mode,
    system: draft.system,
    depth: draft.depth,
  };
  if (draft.timestamp) {
    request.timestamp = draft.timestamp;
  }
  return request;
}

// --- persistence -------------------------------------------------------------

const STORAGE_KEY = "newsctx-workbench-draft-v1";

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function saveDraft(draft: DraftState, storage: StorageLike): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(draft));
}

export function loadDraft(storage: StorageLike): DraftState | null {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return null;
  try {
    const parsed = JSON.parse(raw) as Partial<DraftState>;
    return { ...emptyDraft(), ...parsed };
  } catch {
    return null;
  }
}

// --- plain-text export / import ----------------------------------------------

const EXPORT_HEADER = "newsctx draft v1";

/** Render the draft as a plain text file the writer can keep anywhere. */
export function exportDraft(draft: DraftState): string {
  const lines: string[] = [
    `# ${EXPORT_HEADER}`,
    "## event",
    draft.eventText,
    "## context",
    ...draft.contextSentences.map((s) => `- ${s}`),
    "## settings",
    `timestamp=${draft.timestamp ?? ""}`,
    `mode=${draft.mode}`,
    `system=${draft.system}`,
    `depth=${draft.depth}`,
    "## history",
    ...draft.history.map((h) => `${h.articleId}\t${h.position}\t${h.citedAt}`),
  ];
  return lines.join("\n") + "\n";
}

export function importDraft(text: string): DraftState {
  const draft = emptyDraft();
  let section = "";
  const eventLines: string[] = [];
  for (const rawLine of text.split("\n")) {
    const line = rawLine.replace(/\r$/, "");
    if (line.startsWith("## ")) {
      section = line.slice(3).trim();
      continue;
    }
    if (line.startsWith("# ") || (!line.trim() && section !== "event")) continue;
    if (section === "event") {
      eventLines.push(line);
    } else if (section === "context" && line.startsWith("- ")) {
      draft.contextSentences.push(line.slice(2));
    } else if (section === "settings") {
      const eq = line.indexOf("=");
      if (eq < 0) continue;
      const key = line.slice(0, eq);
      const value = line.slice(eq + 1);
      if (key === "timestamp") draft.timestamp = value || null;
      else if (key === "mode") draft.mode = value as DraftState["mode"];
      else if (key === "system") draft.system = value as DraftState["system"];
      else if (key === "depth") draft.depth = parseInt(value, 10) || 20;
    } else if (section === "history") {
      const [articleId, position, citedAt] = line.split("\t");
      if (articleId && citedAt) {
        draft.history.push({ articleId, position: parseInt(position, 10) || 0, citedAt });
      }
    }
  }
  draft.eventText = eventLines.join("\n").trim();
  return draft;
}
