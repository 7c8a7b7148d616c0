/**
 * App shell: hash routing, event wiring, and the fetch/render loop.
 * Views: #/search?<query state> and #/record/<archive>/<identifier>.
 */

import { ApiClient, isAbort } from "./api.js";
import {
  renderError,
  renderFacets,
  renderNotFound,
  renderRecordDetail,
  renderResults,
  searchHref,
} from "./render.js";
import { EMPTY_STATE, QueryState, parseState, withText } from "./state.js";

const api = new ApiClient("");
let lastSearchState: QueryState = { ...EMPTY_STATE };

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

interface Route {
  view: "search" | "record";
  state: QueryState;
  archive?: string;
  identifier?: string;
}

function parseRoute(hash: string): Route {
  const trimmed = hash.replace(/^#\/?/, "");
  const recordMatch = /^record\/([^/]+)\/([^/]+)$/.exec(trimmed);
  if (recordMatch) {
    return {
      view: "record",
      state: lastSearchState,
      archive: decodeURIComponent(recordMatch[1] ?? ""),
      identifier: decodeURIComponent(recordMatch[2] ?? ""),
    };
  }
  const queryStart = trimmed.indexOf("?");
  const query = queryStart === -1 ? "" : trimmed.slice(queryStart + 1);
  return { view: "search", state: parseState(query) };
}

async function nameLookupFor(codes: Iterable<string>) {
  const wanted = [...new Set(codes)];
  const resolved = new Map<string, string | null>();
  await Promise.all(
    wanted.map(async (code) => resolved.set(code, await api.resolveCode(code))),
  );
  return (code: string) => resolved.get(code) ?? null;
}

async function showSearch(state: QueryState): Promise<void> {
  lastSearchState = state;
  (el("q") as HTMLInputElement).value = state.q;
  try {
    const response = await api.search(state);
    const codes: string[] = [];
    for (const counts of Object.values(response.facets)) {
      codes.push(...Object.keys(counts).filter((c) => /^x-sil-/i.test(c)));
    }
    const names = await nameLookupFor(codes);
    el("results").innerHTML = renderResults(response, state);
    el("facets").innerHTML = renderFacets(response.facets, state, names);
  } catch (err) {
    if (isAbort(err)) return;
    el("results").innerHTML = renderError(String(err));
  }
}

async function showRecord(archive: string, identifier: string): Promise<void> {
  try {
    const detail = await api.record(archive, identifier);
    const codes = detail.elements
      .map((e) => e.code)
      .filter((c): c is string => c !== null && /^x-sil-/i.test(c));
    const names = await nameLookupFor(codes);
    el("results").innerHTML = renderRecordDetail(detail, names, lastSearchState);
    el("facets").innerHTML = "";
  } catch (err) {
    el("results").innerHTML = renderNotFound(archive, identifier);
  }
}

function route(): void {
  const parsed = parseRoute(window.location.hash);
  if (parsed.view === "record" && parsed.archive && parsed.identifier) {
    void showRecord(parsed.archive, parsed.identifier);
  } else {
    void showSearch(parsed.state);
  }
}

export function start(): void {
  window.addEventListener("hashchange", route);
  el("search-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const q = (el("q") as HTMLInputElement).value;
    window.location.hash = searchHref(withText(lastSearchState, q)).slice(1);
  });
  // Facet buttons are plain <button>s, so clicks and Enter/Space both land
  // here via the click event.
  el("facets").addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("button.facet");
    const href = target?.getAttribute("data-href");
    if (href) window.location.hash = href.slice(1);
  });
  route();
}

start();
