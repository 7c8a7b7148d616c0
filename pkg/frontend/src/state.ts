/**
 * Query state <-> URL encoding.
 *
 * The whole view state lives in the URL query string so every view is
 * shareable and re-entering a URL reproduces it exactly. Encoding is
 * canonical: defaults are omitted and keys appear in a fixed order, so
 * two states are equal iff their encodings are equal.
 */

export interface QueryState {
  q: string;
  from: string;
  to: string;
  lang: string;
  type: string;
  archive: string;
  page: number;
}

export const EMPTY_STATE: QueryState = {
  q: "",
  from: "",
  to: "",
  lang: "",
  type: "",
  archive: "",
  page: 1,
};

const STRING_KEYS = ["q", "from", "to", "lang", "type", "archive"] as const;
type StringKey = (typeof STRING_KEYS)[number];

export function parseState(search: string): QueryState {
  const params = new URLSearchParams(search.replace(/^\?/, ""));
  const state: QueryState = { ...EMPTY_STATE };
  for (const key of STRING_KEYS) {
    const value = params.get(key);
    if (value !== null) state[key] = value.trim();
  }
  const page = Number.parseInt(params.get("page") ?? "", 10);
  state.page = Number.isFinite(page) && page >= 1 ? page : 1;
  return state;
}

export function encodeState(state: QueryState): string {
  const params = new URLSearchParams();
  for (const key of STRING_KEYS) {
    if (state[key] !== "") params.set(key, state[key]);
  }
  if (state.page !== 1) params.set("page", String(state.page));
  return params.toString();
}

export function statesEqual(a: QueryState, b: QueryState): boolean {
  return encodeState(a) === encodeState(b);
}

/** Element names whose facet values map onto a query field. */
const FACET_FIELDS: Record<string, StringKey> = {
  "Subject.language": "from",
  Language: "to",
  "Type.linguistic": "type",
};

export function facetField(facetName: string): StringKey | null {
  return FACET_FIELDS[facetName] ?? null;
}

/**
 * Merge a facet click into the state; clicking the already-active value
 * clears the filter. Returns null for facets with no query-field mapping
 * (those are rendered as plain counts, not controls). Any filter change
 * resets pagination.
 */
export function applyFacet(
  state: QueryState,
  facetName: string,
  code: string,
): QueryState | null {
  const field = facetField(facetName);
  if (field === null) return null;
  const next = { ...state, page: 1 };
  next[field] = state[field].toLowerCase() === code.toLowerCase() ? "" : code;
  return next;
}

export function withText(state: QueryState, q: string): QueryState {
  return { ...state, q: q.trim(), page: 1 };
}

export function withPage(state: QueryState, page: number): QueryState {
  return { ...state, page: Math.max(1, page) };
}
