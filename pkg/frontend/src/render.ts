/**
 * Pure view functions: state + API payloads in, HTML strings out. No DOM
 * access here, so every view is unit-testable as a string and the app
 * shell stays a thin event loop.
 */

import {
  ElementJson,
  RecordDetail,
  RelatedJson,
  SearchResponse,
} from "./api.js";
import { QueryState, applyFacet, encodeState, facetField } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export type NameLookup = (code: string) => string | null;

/** Resolved primary name with the raw code kept visible; raw code on miss. */
export function languageLabel(code: string, names: NameLookup): string {
  const resolved = names(code);
  return resolved === null ? code : `${resolved} (${code})`;
}

export function searchHref(state: QueryState): string {
  const encoded = encodeState(state);
  return "#/search" + (encoded ? "?" + encoded : "");
}

export function recordHref(archive: string, identifier: string): string {
  return (
    "#/record/" +
    encodeURIComponent(archive) +
    "/" +
    encodeURIComponent(identifier)
  );
}

export function renderError(message: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(message)}</div>`;
}

export function renderResults(
  response: SearchResponse,
  state: QueryState,
): string {
  const pages = Math.max(1, Math.ceil(response.total / response.pageSize));
  const items = response.results
    .map((hit) => {
      const title =
        hit.record.elements.find((el) => el.name === "Title" && el.content)
          ?.content ?? hit.identifier;
      return (
        `<li class="hit">` +
        `<span class="archive-badge">${escapeHtml(hit.archive)}</span> ` +
        `<a href="${recordHref(hit.archive, hit.identifier)}">` +
        `${escapeHtml(title)}</a>` +
        `</li>`
      );
    })
    .join("");
  const pager =
    pages > 1
      ? `<nav class="pager" aria-label="pagination">` +
        (state.page > 1
          ? `<a href="${searchHref({ ...state, page: state.page - 1 })}">previous</a>`
          : "") +
        ` <span>page ${response.page} of ${pages}</span> ` +
        (state.page < pages
          ? `<a href="${searchHref({ ...state, page: state.page + 1 })}">next</a>`
          : "") +
        `</nav>`
      : "";
  return (
    `<p class="total">${response.total} record${response.total === 1 ? "" : "s"}</p>` +
    `<ul class="results">${items}</ul>` +
    pager
  );
}

export function renderFacets(
  facets: Record<string, Record<string, number>>,
  state: QueryState,
  names: NameLookup,
): string {
  const panels = Object.keys(facets)
    .sort()
    .map((facetName) => {
      const counts = facets[facetName] ?? {};
      const field = facetField(facetName);
      const rows = Object.keys(counts)
        .sort((a, b) => (counts[b] ?? 0) - (counts[a] ?? 0) || (a < b ? -1 : 1))
        .map((code) => {
          const label = escapeHtml(languageLabel(code, names));
          const count = counts[code] ?? 0;
          if (field === null) {
            return `<li>${label} <span class="count">${count}</span></li>`;
          }
          const next = applyFacet(state, facetName, code);
          const active = state[field].toLowerCase() === code.toLowerCase();
          return (
            `<li><button type="button" class="facet${active ? " active" : ""}"` +
            ` data-facet="${escapeHtml(facetName)}"` +
            ` data-code="${escapeHtml(code)}"` +
            ` data-href="${next === null ? "" : searchHref(next)}"` +
            ` aria-pressed="${active}">` +
            `${label} <span class="count">${count}</span></button></li>`
          );
        })
        .join("");
      return (
        `<section class="facet-panel">` +
        `<h3>${escapeHtml(facetName)}</h3><ul>${rows}</ul></section>`
      );
    })
    .join("");
  return panels || `<p class="empty">no facets</p>`;
}

function renderElementValue(el: ElementJson, names: NameLookup): string {
  const parts: string[] = [];
  if (el.content) {
    const langTag = el.lang ? ` <span class="lang">[${escapeHtml(el.lang)}]</span>` : "";
    parts.push(`<span class="content">${escapeHtml(el.content)}</span>${langTag}`);
  }
  if (el.code) {
    const label =
      facetField(el.name) !== null || /^x-sil-/i.test(el.code)
        ? languageLabel(el.code, names)
        : el.code;
    parts.push(`<code>${escapeHtml(label)}</code>`);
  }
  if (el.refine) parts.push(`<em class="refine">${escapeHtml(el.refine)}</em>`);
  if (el.scheme) parts.push(`<span class="scheme">${escapeHtml(el.scheme)}</span>`);
  return parts.join(" ") || `<span class="empty">(empty)</span>`;
}

function renderRelated(related: RelatedJson[]): string {
  if (related.length === 0) return "";
  const rows = related
    .map((rel) => {
      const kind = escapeHtml(rel.kind);
      if (rel.resolved && rel.archive !== null && rel.identifier !== null) {
        const marker = rel.reciprocal ? "" : ` <span class="warn">(no inverse link)</span>`;
        return (
          `<li>${kind}: <a href="${recordHref(rel.archive, rel.identifier)}">` +
          `${escapeHtml(rel.identifier)}</a>${marker}</li>`
        );
      }
      return `<li>${kind}: ${escapeHtml(rel.target)} <span class="warn">(not in catalog)</span></li>`;
    })
    .join("");
  return `<section class="related"><h3>Related records</h3><ul>${rows}</ul></section>`;
}

export function renderRecordDetail(
  detail: RecordDetail,
  names: NameLookup,
  backState: QueryState,
): string {
  const byName = new Map<string, ElementJson[]>();
  for (const el of detail.elements) {
    const group = byName.get(el.name);
    if (group) group.push(el);
    else byName.set(el.name, [el]);
  }
  const groups = [...byName.keys()]
    .sort()
    .map((name) => {
      const values = (byName.get(name) ?? [])
        .map((el) => `<li>${renderElementValue(el, names)}</li>`)
        .join("");
      return `<dt>${escapeHtml(name)}</dt><dd><ul>${values}</ul></dd>`;
    })
    .join("");
  return (
    `<nav><a href="${searchHref(backState)}">&larr; back to results</a></nav>` +
    `<h2><span class="archive-badge">${escapeHtml(detail.archive)}</span> ` +
    `${escapeHtml(detail.identifier)}</h2>` +
    (detail.datestamp
      ? `<p class="datestamp">updated ${escapeHtml(detail.datestamp)}</p>`
      : "") +
    (groups
      ? `<dl class="elements">${groups}</dl>`
      : `<p class="empty">This record has no descriptive elements.</p>`) +
    renderRelated(detail.related)
  );
}

export function renderNotFound(archive: string, identifier: string): string {
  return (
    `<div class="banner error" role="alert">No record ` +
    `${escapeHtml(archive)}/${escapeHtml(identifier)} in the catalog.</div>`
  );
}
