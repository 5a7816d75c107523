import type { ArticleRecord, HealthResponse, SearchRequest, SearchResponse } from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly reason: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let reason = "http-error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body?.detail?.reason) {
      reason = body.detail.reason;
      message = body.detail.message ?? message;
    } else if (body?.detail) {
      message = JSON.stringify(body.detail);
    }
  } catch {
    // non-json error body; keep the status text
  }
  throw new ApiError(response.status, reason, message);
}

/**
 * Thin typed client for the search service. The fetch function is
 * injectable so tests can capture requests.
 */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async search(request: SearchRequest, signal?: AbortSignal): Promise<SearchResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/search`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
      signal,
    });
    await raiseForStatus(response);
    return (await response.json()) as SearchResponse;
  }

  async articleById(id: string, signal?: AbortSignal): Promise<ArticleRecord> {
    const response = await this.fetchFn(`${this.baseUrl}/article/${encodeURIComponent(id)}`, {
      signal,
    });
    await raiseForStatus(response);
    return (await response.json()) as ArticleRecord;
  }

  async health(): Promise<HealthResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/health`);
    await raiseForStatus(response);
    return (await response.json()) as HealthResponse;
  }
}

/**
 * Client-side mirror of the service's temporal invariant: every suggestion
 * must predate the draft's timestamp. Returns the ids that violate it.
 */
export function temporalViolations(response: SearchResponse): string[] {
  const cutoff = Date.parse(response.timestamp);
  return response.results
    .filter((item) => Date.parse(item.published_at) >= cutoff)
    .map((item) => item.article_id);
}
