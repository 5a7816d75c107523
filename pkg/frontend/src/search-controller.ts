import { ApiClient, temporalViolations } from "./api";
import type { SearchRequest, SearchResponse } from "./types";

export type SearchOutcome =
  | { kind: "results"; response: SearchResponse }
  | { kind: "superseded" }
  | { kind: "error"; message: string; reason: string };

/**
 * Serializes searches for a single-user, single-tab session: starting a new
 * search aborts the in-flight one, whose caller gets "superseded" instead
 * of stale results.
 */
export class SearchController {
  private inFlight: AbortController | null = null;

  constructor(private readonly client: ApiClient) {}

  async search(request: SearchRequest): Promise<SearchOutcome> {
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    try {
      const response = await this.client.search(request, controller.signal);
      if (controller.signal.aborted) {
        return { kind: "superseded" };
      }
      const violations = temporalViolations(response);
      if (violations.length > 0) {
        return {
          kind: "error",
          reason: "temporal-invariant",
          message: `service returned articles at/after the draft time: ${violations.join(", ")}`,
        };
      }
      return { kind: "results", response };
    } catch (err) {
      if (controller.signal.aborted) {
        return { kind: "superseded" };
      }
      if (err instanceof Error && err.name === "ApiError") {
        const apiErr = err as Error & { reason: string };
        return { kind: "error", reason: apiErr.reason, message: err.message };
      }
      const message = err instanceof Error ? err.message : String(err);
      return { kind: "error", reason: "network", message: `service unavailable: ${message}` };
    } finally {
      if (this.inFlight === controller) {
        this.inFlight = null;
      }
    }
  }
}
