import type { ArticleRecord, SearchResultItem } from "./types";

/** Order badges consistently: candidate list first, then rerankers. */
const BADGE_ORDER = ["bm25", "semantic", "recency"];

export function rankBadges(item: SearchResultItem): string[] {
  return BADGE_ORDER.filter((tag) => tag in item.member_ranks).map(
    (tag) => `${tag} #${item.member_ranks[tag]}`,
  );
}

export function renderSuggestion(
  item: SearchResultItem,
  onPreview: (articleId: string) => void,
): HTMLElement {
  const li = document.createElement("li");
  li.className = "suggestion";
  li.dataset.articleId = item.article_id;

  const headline = document.createElement("h3");
  headline.textContent = item.headline;
  li.appendChild(headline);

  const meta = document.createElement("div");
  meta.className = "meta";
  const date = document.createElement("span");
  date.className = "published";
  date.textContent = item.published_at.slice(0, 10);
  meta.appendChild(date);
  for (const badge of rankBadges(item)) {
    const span = document.createElement("span");
    span.className = "badge";
    span.textContent = badge;
    meta.appendChild(span);
  }
  li.appendChild(meta);

  const lead = document.createElement("p");
  lead.className = "lead";
  lead.textContent = item.lead;
  li.appendChild(lead);

  const button = document.createElement("button");
  button.type = "button";
  button.className = "preview-button";
  button.textContent = "Preview";
  button.addEventListener("click", () => onPreview(item.article_id));
  li.appendChild(button);
  return li;
}

export function renderSuggestionList(
  items: SearchResultItem[],
  onPreview: (articleId: string) => void,
): HTMLElement {
  const ul = document.createElement("ul");
  ul.className = "suggestions";
  for (const item of items) {
    ul.appendChild(renderSuggestion(item, onPreview));
  }
  return ul;
}

export function renderArticlePreview(
  article: ArticleRecord,
  onCite: (sentence: string, articleId: string) => void,
): HTMLElement {
  const section = document.createElement("section");
  section.className = "article-preview";

  const headline = document.createElement("h2");
  headline.textContent = article.headline;
  section.appendChild(headline);

  const meta = document.createElement("p");
  meta.className = "meta";
  meta.textContent = `${article.section} | ${article.published_at}`;
  section.appendChild(meta);

  for (const paragraph of article.paragraphs) {
    const p = document.createElement("p");
    p.textContent = paragraph.join(" ");
    section.appendChild(p);
  }

  const citeBox = document.createElement("div");
  citeBox.className = "cite-box";
  const input = document.createElement("textarea");
  input.className = "cite-input";
  input.rows = 3;
  // prefill with a citable default the writer edits before inserting
  input.value = `${article.headline} (${article.published_at.slice(0, 10)}).`;
  citeBox.appendChild(input);

  const button = document.createElement("button");
  button.type = "button";
  button.className = "cite-button";
  button.textContent = "Cite here";
  button.addEventListener("click", () => onCite(input.value, article.id));
  citeBox.appendChild(button);
  section.appendChild(citeBox);
  return section;
}
