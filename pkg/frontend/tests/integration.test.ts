/**
 * UI contract against the live fixture federation: three providers are
 * harvested into a search service (spawned as a child process), and the
 * UI layers — state, API client, renderers — run against it unmodified.
 */

import { ChildProcess, spawn } from "node:child_process";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  languageLabel,
  renderFacets,
  renderRecordDetail,
  renderResults,
  recordHref,
} from "../src/render.js";
import { EMPTY_STATE, applyFacet, parseState, statesEqual } from "../src/state.js";

let child: ChildProcess;
let api: ApiClient;

beforeAll(async () => {
  const script = path.join(__dirname, "fixture_server.py");
  child = spawn("python3", [script], { stdio: ["ignore", "pipe", "inherit"] });
  const port = await new Promise<number>((resolve, reject) => {
    let buffer = "";
    child.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = /READY (\d+)/.exec(buffer);
      if (match) resolve(Number(match[1]));
    });
    child.on("exit", (code) => reject(new Error(`server exited: ${code}`)));
    setTimeout(() => reject(new Error("server start timeout")), 30_000);
  });
  api = new ApiClient(`http://127.0.0.1:${port}`);
}, 40_000);

afterAll(() => {
  child?.kill();
});

describe("facet interaction reproduces the multi-archive query", () => {
  it("empty query shows the full catalog with facet totals", async () => {
    const response = await api.search(EMPTY_STATE);
    expect(response.total).toBe(100);
    expect(response.facets["Language"]).toBeDefined();
    expect(renderResults(response, EMPTY_STATE)).toContain("100 records");
  });

  it("clicking the Language facet yields records from >= 2 archives", async () => {
    const empty = await api.search(EMPTY_STATE);
    const code = Object.keys(empty.facets["Language"] ?? {}).find((c) =>
      c.endsWith("eng"),
    );
    expect(code).toBe("x-sil-eng");

    const clicked = applyFacet(EMPTY_STATE, "Language", code!);
    expect(clicked).not.toBeNull();
    // The click produces exactly the state a hand-typed URL would.
    expect(statesEqual(clicked!, parseState("to=x-sil-eng"))).toBe(true);

    const response = await api.search(clicked!);
    const archives = new Set(response.results.map((hit) => hit.archive));
    expect(response.total).toBeGreaterThan(0);
    expect(archives.size).toBeGreaterThanOrEqual(2);
  });

  it("pagination concatenation equals the reported total", async () => {
    const state = applyFacet(EMPTY_STATE, "Language", "x-sil-eng")!;
    const seen: string[] = [];
    let page = 1;
    let total = 0;
    for (;;) {
      const response = await api.search({ ...state, page });
      total = response.total;
      seen.push(...response.results.map((h) => `${h.archive}/${h.identifier}`));
      if (page * response.pageSize >= response.total) break;
      page += 1;
    }
    expect(seen).toHaveLength(total);
    expect(new Set(seen).size).toBe(total);
  });

  it("group queries work through the same state encoding", async () => {
    const grouped = await api.search(parseState("lang=AS:Amis"));
    const keys = grouped.results.map((h) => h.identifier).sort();
    expect(keys).toContain("sinica:amis-dictionary-001");
    expect(keys).toContain("sinica:nataoran-texts-001");
  });
});

describe("field-notes / bitext cross-navigation", () => {
  it("the pair link to each other through relation links", async () => {
    const notes = await api.record("sinica", "sinica:fieldnotes-001");
    const toBitext = notes.related.find((r) => r.kind === "hasPart");
    expect(toBitext?.resolved).toBe(true);
    expect(toBitext?.reciprocal).toBe(true);

    const bitext = await api.record(toBitext!.archive!, toBitext!.identifier!);
    const back = bitext.related.find((r) => r.kind === "isPartOf");
    expect(back?.identifier).toBe("sinica:fieldnotes-001");
    expect(back?.reciprocal).toBe(true);

    const html = renderRecordDetail(notes, () => null, EMPTY_STATE);
    expect(html).toContain(recordHref(toBitext!.archive!, toBitext!.identifier!));
    const backHtml = renderRecordDetail(bitext, () => null, EMPTY_STATE);
    expect(backHtml).toContain(recordHref("sinica", "sinica:fieldnotes-001"));
  });

  it("missing records produce a clean not-found error", async () => {
    await expect(api.record("sinica", "sinica:nope-999")).rejects.toThrow(
      /no record/i,
    );
  });
});

describe("name resolution in rendered views", () => {
  it("known codes render with primary names, unknown stay raw", async () => {
    expect(await api.resolveCode("x-sil-ais")).toBe("Nataoran");
    expect(await api.resolveCode("x-sil-alv")).toBe("Amis");
    expect(await api.resolveCode("x-sil-zzz")).toBeNull();

    const names = (code: string) =>
      code === "x-sil-ais" ? "Nataoran" : null;
    expect(languageLabel("x-sil-ais", names)).toBe("Nataoran (x-sil-ais)");
    expect(languageLabel("x-sil-zzz", names)).toBe("x-sil-zzz");

    const response = await api.search(parseState("from=x-sil-AIS"));
    const html = renderFacets(response.facets, EMPTY_STATE, names);
    expect(html).toContain("Nataoran (x-sil-ais)");
  });
});
