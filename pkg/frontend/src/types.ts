/** Wire types for the search service (see docs/service-api.md). */

export type QueryMode = "E" | "C" | "EC";

export type SystemId = "bm25" | "recency" | "semantic" | "rrf-recency" | "rrf";

export const ALL_SYSTEMS: SystemId[] = ["bm25", "recency", "semantic", "rrf-recency", "rrf"];

export const SEMANTIC_SYSTEMS: SystemId[] = ["semantic", "rrf-recency", "rrf"];

export interface SearchRequest {
  event_text: string;
  context_text: string;
  timestamp?: string;
  mode: QueryMode;
  system: SystemId;
  depth: number;
}

export interface SearchResultItem {
  article_id: string;
  headline: string;
  lead: string;
  published_at: string;
  score: number;
  member_ranks: Record<string, number>;
}

export interface SearchResponse {
  results: SearchResultItem[];
  took_ms: number;
  snapshot_version: number;
  snapshot_label: string;
  query_text: string;
  timestamp: string;
}

export interface ArticleRecord {
  id: string;
  url: string;
  headline: string;
  published_at: string;
  section: string;
  paragraphs: string[][];
  out_links: unknown[];
  entities?: string[];
}

export interface HealthResponse {
  status: "ok" | "loading";
  snapshot_version: number;
  snapshot_label?: string;
  articles?: number;
  vocabulary?: number;
  avgdl?: number;
  semantic_available?: boolean;
}
