/**
 * Thin client for the search service JSON API. All search semantics live
 * on the server; this module only shapes requests and decodes responses.
 *
 * At most one search request is in flight: issuing a new one aborts the
 * previous via AbortController.
 */

import { QueryState, encodeState } from "./state.js";

export interface ElementJson {
  name: string;
  content: string;
  refine: string | null;
  code: string | null;
  lang: string | null;
  scheme: string | null;
  effectiveLang: string;
}

export interface RecordJson {
  archive: string;
  identifier: string;
  datestamp: string | null;
  elements: ElementJson[];
}

export interface SearchHit {
  archive: string;
  identifier: string;
  score: number;
  record: RecordJson;
}

export interface SearchResponse {
  total: number;
  page: number;
  pageSize: number;
  results: SearchHit[];
  facets: Record<string, Record<string, number>>;
}

export interface RelatedJson {
  kind: string;
  target: string;
  archive: string | null;
  identifier: string | null;
  resolved: boolean;
  reciprocal: boolean;
}

export interface RecordDetail extends RecordJson {
  related: RelatedJson[];
}

export interface ResolveMatch {
  code: string;
  kind: string;
  entry: { code: string; primaryName: string };
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof DOMException
    ? err.name === "AbortError"
    : err instanceof Error && err.name === "AbortError";
}

export class ApiClient {
  private searchController: AbortController | null = null;
  private readonly nameCache = new Map<string, string | null>();

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, { signal });
    if (!response.ok) {
      let message = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { error?: string };
        if (body.error) message = body.error;
      } catch {
        /* non-JSON error body; keep the status message */
      }
      throw new ApiError(message, response.status);
    }
    return (await response.json()) as T;
  }

  /** Run a search mirroring the view state; aborts any previous search. */
  search(state: QueryState): Promise<SearchResponse> {
    this.searchController?.abort();
    this.searchController = new AbortController();
    const query = encodeState(state);
    const path = "/api/search" + (query ? "?" + query : "");
    return this.getJson<SearchResponse>(path, this.searchController.signal);
  }

  record(archive: string, identifier: string): Promise<RecordDetail> {
    const path =
      "/api/record/" +
      encodeURIComponent(archive) +
      "/" +
      encodeURIComponent(identifier);
    return this.getJson<RecordDetail>(path);
  }

  /**
   * Resolve a language name or code to its primary name, null on miss.
   * Misses are cached too: an unknown code stays a raw code on screen.
   */
  async resolveCode(code: string): Promise<string | null> {
    const cached = this.nameCache.get(code);
    if (cached !== undefined) return cached;
    const bare = code.replace(/^x-sil-/i, "");
    let resolved: string | null = null;
    try {
      const body = await this.getJson<{
        matches: ResolveMatch[];
      }>("/resolve?name=" + encodeURIComponent(bare));
      const primary = body.matches.find(
        (m) => m.code.toLowerCase() === bare.toLowerCase(),
      );
      resolved = primary ? primary.entry.primaryName : null;
    } catch (err) {
      if (isAbort(err)) throw err;
      resolved = null;
    }
    this.nameCache.set(code, resolved);
    return resolved;
  }
}
