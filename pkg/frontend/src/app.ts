import { ApiClient } from "./api";
import {
  citeSentence,
  type DraftState,
  emptyDraft,
  exportDraft,
  importDraft,
  loadDraft,
  saveDraft,
  searchReadiness,
  toSearchRequest,
} from "./draft";
import { SearchController } from "./search-controller";
import { ALL_SYSTEMS, SEMANTIC_SYSTEMS, type QueryMode, type SystemId } from "./types";
import { renderArticlePreview, renderSuggestionList } from "./ui";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8321";

export function bootApp(root: HTMLElement): void {
  const client = new ApiClient(SERVICE_URL);
  const controller = new SearchController(client);
  let draft: DraftState = loadDraft(window.localStorage) ?? emptyDraft();
  let semanticAvailable = true;

  root.innerHTML = `
    <header>
      <h1>Narrative workbench</h1>
      <span id="service-state" class="service-state">checking service…</span>
    </header>
    <main>
      <section class="compose">
        <label>Event block (headline and lead)
          <textarea id="event-text" rows="4" placeholder="What is the story about?"></textarea>
        </label>
        <label>Context sentences (one per line; 'Cite here' appends)
          <textarea id="context-text" rows="5" placeholder="What have you written so far?"></textarea>
        </label>
        <div class="controls">
          <label>As of <input type="datetime-local" id="timestamp"></label>
          <label>Mode
            <select id="mode">
              <option value="EC">event + context</option>
              <option value="E">event only</option>
              <option value="C">context only</option>
            </select>
          </label>
          <label>System <select id="system"></select></label>
          <label>Depth <input type="number" id="depth" min="1" value="20"></label>
          <button type="button" id="search-button">Search</button>
        </div>
        <p id="hint" class="hint"></p>
        <div class="draft-io">
          <button type="button" id="export-button">Export draft</button>
          <label class="import-label">Import draft <input type="file" id="import-file" accept=".txt"></label>
        </div>
      </section>
      <section class="results">
        <div id="status" class="status"></div>
        <div id="suggestions"></div>
      </section>
      <section class="preview" id="preview"></section>
    </main>
  `;

  const el = <T extends HTMLElement>(id: string) => root.querySelector<T>(`#${id}`)!;
  const eventBox = el<HTMLTextAreaElement>("event-text");
  const contextBox = el<HTMLTextAreaElement>("context-text");
  const timestampBox = el<HTMLInputElement>("timestamp");
  const modeSelect = el<HTMLSelectElement>("mode");
  const systemSelect = el<HTMLSelectElement>("system");
  const depthBox = el<HTMLInputElement>("depth");
  const searchButton = el<HTMLButtonElement>("search-button");
  const hint = el<HTMLParagraphElement>("hint");
  const status = el<HTMLDivElement>("status");
  const suggestions = el<HTMLDivElement>("suggestions");
  const preview = el<HTMLElement>("preview");

  function renderSystemOptions(): void {
    systemSelect.innerHTML = "";
    for (const system of ALL_SYSTEMS) {
      const option = document.createElement("option");
      option.value = system;
      option.textContent = system;
      if (!semanticAvailable && SEMANTIC_SYSTEMS.includes(system)) {
        option.disabled = true;
        option.textContent = `${system} (no embeddings loaded)`;
      }
      systemSelect.appendChild(option);
    }
    if (!semanticAvailable && SEMANTIC_SYSTEMS.includes(draft.system)) {
      draft = { ...draft, system: "bm25" };
    }
    systemSelect.value = draft.system;
  }

  function syncFromDraft(): void {
    eventBox.value = draft.eventText;
    contextBox.value = draft.contextSentences.join("\n");
    timestampBox.value = draft.timestamp ? draft.timestamp.slice(0, 16) : "";
    modeSelect.value = draft.mode;
    depthBox.value = String(draft.depth);
    renderSystemOptions();
    refreshReadiness();
  }

  function refreshReadiness(): void {
    const readiness = searchReadiness(draft);
    searchButton.disabled = !readiness.ok;
    hint.textContent = readiness.ok ? "" : readiness.hint;
  }

  function persist(): void {
    saveDraft(draft, window.localStorage);
  }

  function readDraftFromInputs(): void {
    draft = {
      ...draft,
      eventText: eventBox.value,
      contextSentences: contextBox.value
        .split("\n")
        .map((s) => s.trim())
        .filter(Boolean),
      timestamp: timestampBox.value ? new Date(timestampBox.value + "Z").toISOString().replace(/\.\d{3}Z$/, "Z") : null,
      mode: modeSelect.value as QueryMode,
      system: systemSelect.value as SystemId,
      depth: Math.max(1, parseInt(depthBox.value, 10) || 20),
    };
    persist();
    refreshReadiness();
  }

  async function runSearch(): Promise<void> {
    readDraftFromInputs();
    const readiness = searchReadiness(draft);
    if (!readiness.ok) return;
    status.textContent = "searching…";
    const outcome = await controller.search(toSearchRequest(draft));
    if (outcome.kind === "superseded") return;
    if (outcome.kind === "error") {
      status.textContent = `search failed (${outcome.reason}): ${outcome.message}`;
      status.className = "status error";
      return;
    }
    status.className = "status";
    const { response } = outcome;
    status.textContent =
      `${response.results.length} suggestions | snapshot v${response.snapshot_version} | ` +
      `${response.took_ms.toFixed(1)} ms`;
    suggestions.innerHTML = "";
    suggestions.appendChild(renderSuggestionList(response.results, openPreview));
  }

  async function openPreview(articleId: string): Promise<void> {
    try {
      const article = await client.articleById(articleId);
      preview.innerHTML = "";
      preview.appendChild(renderArticlePreview(article, (sentence, id) => {
        draft = citeSentence(draft, sentence, id);
        persist();
        syncFromDraft();
        void runSearch(); // the appended sentence feeds the next query
      }));
    } catch (err) {
      status.textContent = `could not load article: ${err instanceof Error ? err.message : err}`;
      status.className = "status error";
    }
  }

  for (const input of [eventBox, contextBox, timestampBox, depthBox]) {
    input.addEventListener("change", readDraftFromInputs);
    input.addEventListener("input", readDraftFromInputs);
  }
  modeSelect.addEventListener("change", readDraftFromInputs);
  systemSelect.addEventListener("change", () => {
    readDraftFromInputs();
    void runSearch(); // switching systems re-queries without losing the draft
  });
  searchButton.addEventListener("click", () => void runSearch());

  el<HTMLButtonElement>("export-button").addEventListener("click", () => {
    const blob = new Blob([exportDraft(draft)], { type: "text/plain" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "draft.txt";
    a.click();
    URL.revokeObjectURL(a.href);
  });
  el<HTMLInputElement>("import-file").addEventListener("change", async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) return;
    draft = importDraft(await file.text());
    persist();
    syncFromDraft();
  });

  client
    .health()
    .then((health) => {
      semanticAvailable = health.semantic_available ?? false;
      el<HTMLSpanElement>("service-state").textContent =
        health.status === "ok"
          ? `service ok | ${health.articles} articles | snapshot v${health.snapshot_version}`
          : "service loading…";
      renderSystemOptions();
    })
    .catch(() => {
      el<HTMLSpanElement>("service-state").textContent =
        `service unreachable at ${SERVICE_URL} (pass ?service=http://host:port)`;
    });

  syncFromDraft();
}

if (!import.meta.env?.TEST) {
  const root = document.getElementById("app");
  if (root) bootApp(root);
}
