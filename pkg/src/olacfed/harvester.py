"""Service-provider back end: harvests many providers into a union catalog.

Catalog identity is the pair (archive id, record identifier), so identical
local identifiers from different archives never collide. The catalog is
persisted as an append-only journal of upserts/deletes/cursor moves and is
rebuildable by re-harvest.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from xml.etree import ElementTree as ET

from . import metadata_core as mc

log = logging.getLogger("olacfed.harvester")

RETRY_ATTEMPTS = 3
DEFAULT_PARALLELISM = 4


class HarvestError(Exception):
    pass


class _RestartHarvest(Exception):
    """A resumption token went stale mid-harvest; start over."""


@dataclass
class ProviderConfig:
    archive_id: str
    base_url: str
    cursor: str | None = None


def load_providers_file(path) -> list:
    """Plain-text provider list: one `archive_id base_url` per line."""
    providers = []
    seen = set()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8")
                                 .splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HarvestError("providers file line %d: expected "
                               "'archive_id base_url'" % lineno)
        archive_id, base_url = parts
        if archive_id in seen:
            raise HarvestError("duplicate archive id %s" % archive_id)
        seen.add(archive_id)
        providers.append(ProviderConfig(archive_id, base_url))
    return providers


@dataclass(frozen=True)
class CatalogSnapshot:
    """Point-in-time immutable view of the catalog, for indexing."""
    entries: tuple  # of ((archive_id, identifier), MetadataRecord)

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return [key for key, _ in self.entries]


class UnionCatalog:
    """Merged, provider-attributed record collection with journal persistence."""

    def __init__(self, state_dir=None):
        self._entries = {}   # (archive, id) -> MetadataRecord
        self._cursors = {}   # archive -> datestamp
        self._lock = threading.RLock()
        self._journal = None
        if state_dir is not None:
            state_dir = Path(state_dir)
            state_dir.mkdir(parents=True, exist_ok=True)
            journal_path = state_dir / "journal.jsonl"
            if journal_path.exists():
                self._replay(journal_path)
            self._journal = journal_path.open("a", encoding="utf-8")
            self._journal_path = journal_path

    def _replay(self, path):
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            op = json.loads(line)
            if op["op"] == "upsert":
                record = mc.parse_record(op["xml"].encode("utf-8"))
                self._entries[(op["archive"], record.identifier)] = record
            elif op["op"] == "delete":
                self._entries.pop((op["archive"], op["id"]), None)
            elif op["op"] == "cursor":
                self._cursors[op["archive"]] = op["value"]

    def _append(self, op):
        if self._journal is not None:
            self._journal.write(json.dumps(op, sort_keys=True) + "\n")
            self._journal.flush()

    def __len__(self):
        return len(self._entries)

    def get(self, archive_id, identifier):
        return self._entries.get((archive_id, identifier))

    def archive_keys(self, archive_id):
        return [k for k in self._entries if k[0] == archive_id]

    def cursor(self, archive_id):
        return self._cursors.get(archive_id)

    def cursors(self):
        return dict(self._cursors)

    def set_cursor(self, archive_id, value):
        with self._lock:
            self._cursors[archive_id] = value
            self._append({"op": "cursor", "archive": archive_id, "value": value})

    def upsert(self, archive_id, record: mc.MetadataRecord) -> str:
        with self._lock:
            key = (archive_id, record.identifier)
            existing = self._entries.get(key)
            if existing == record:
                return "unchanged"
            self._entries[key] = record
            self._append({"op": "upsert", "archive": archive_id,
                          "xml": mc.serialize_record(record).decode("utf-8")})
            return "added" if existing is None else "updated"

    def delete(self, archive_id, identifier) -> bool:
        with self._lock:
            key = (archive_id, identifier)
            if key not in self._entries:
                return False
            del self._entries[key]
            self._append({"op": "delete", "archive": archive_id,
                          "id": identifier})
            return True

    def compact(self):
        """Rewrite the journal to the current state."""
        if self._journal is None:
            return
        with self._lock:
            self._journal.close()
            tmp = self._journal_path.with_suffix(".tmp")
            with tmp.open("w", encoding="utf-8") as fh:
                for (archive_id, _), record in sorted(self._entries.items()):
                    fh.write(json.dumps(
                        {"op": "upsert", "archive": archive_id,
                         "xml": mc.serialize_record(record).decode("utf-8")},
                        sort_keys=True) + "\n")
                for archive_id, value in sorted(self._cursors.items()):
                    fh.write(json.dumps(
                        {"op": "cursor", "archive": archive_id, "value": value},
                        sort_keys=True) + "\n")
            tmp.replace(self._journal_path)
            self._journal = self._journal_path.open("a", encoding="utf-8")

    def snapshot(self) -> CatalogSnapshot:
        """Wait-free for readers; later harvests never mutate the snapshot."""
        with self._lock:
            return CatalogSnapshot(tuple(sorted(self._entries.items())))


@dataclass
class HarvestSummary:
    archive_id: str
    added: int = 0
    updated: int = 0
    deleted: int = 0
    skipped: int = 0
    failed: bool = False
    error: str | None = None

    @property
    def counts(self):
        return (self.added, self.updated, self.deleted)

    def to_json(self):
        return {"archive": self.archive_id, "added": self.added,
                "updated": self.updated, "deleted": self.deleted,
                "skipped": self.skipped, "failed": self.failed,
                "error": self.error}


class Harvester:
    """Fetches provider pages and applies them to the union catalog."""

    def __init__(self, catalog: UnionCatalog, fetch=None, backoff=0.5,
                 sleep=time.sleep):
        self.catalog = catalog
        self._fetch = fetch or self._http_fetch
        self._backoff = backoff
        self._sleep = sleep

    @staticmethod
    def _http_fetch(url: str) -> bytes:
        with urllib.request.urlopen(url, timeout=30) as resp:
            return resp.read()

    def _fetch_with_retry(self, url: str) -> bytes:
        last = None
        for attempt in range(RETRY_ATTEMPTS):
            try:
                return self._fetch(url)
            except (urllib.error.URLError, OSError) as exc:
                last = exc
                if attempt < RETRY_ATTEMPTS - 1:
                    self._sleep(self._backoff * (2 ** attempt))
        raise HarvestError("provider unreachable after %d attempts: %s"
                           % (RETRY_ATTEMPTS, last))

    def _request(self, provider: ProviderConfig, **params) -> ET.Element:
        query = urllib.parse.urlencode(
            {k: v for k, v in params.items() if v is not None})
        url = "%s/%s/oai?%s" % (provider.base_url.rstrip("/"),
                                provider.archive_id, query)
        body = self._fetch_with_retry(url)
        try:
            root = ET.fromstring(body)
        except ET.ParseError as exc:
            raise HarvestError("unparseable response from %s: %s"
                               % (provider.archive_id, exc))
        return root

    def _iter_pages(self, provider: ProviderConfig, from_stamp=None):
        """Yield (response_stamp, records_element) pages to exhaustion.

        An expired/invalid resumption token mid-stream raises _RestartHarvest;
        noRecordsMatch yields nothing.
        """
        token = None
        while True:
            if token is None:
                root = self._request(provider, verb="ListRecords",
                                     metadataPrefix="olac",
                                     **{"from": from_stamp})
            else:
                root = self._request(provider, verb="ListRecords",
                                     resumptionToken=token)
            error = root.find("error")
            if error is not None:
                code = error.get("code")
                if code == "noRecordsMatch":
                    return
                if code == "badResumptionToken" and token is not None:
                    raise _RestartHarvest()
                raise HarvestError("%s: protocol error %s: %s"
                                   % (provider.archive_id, code,
                                      error.text or ""))
            listing = root.find("ListRecords")
            if listing is None:
                raise HarvestError("%s: response missing ListRecords"
                                   % provider.archive_id)
            yield root.get("responseDate"), listing
            token_el = listing.find("resumptionToken")
            if token_el is None or not (token_el.text or "").strip():
                return
            token = token_el.text.strip()

    def _collect(self, provider: ProviderConfig, from_stamp=None):
        """All (records, deletions, response_stamp) from a paged listing.

        A harvest whose token went stale mid-stream is restarted from
        scratch once."""
        for attempt in range(2):
            try:
                return self._collect_once(provider, from_stamp)
            except _RestartHarvest:
                if attempt == 1:
                    raise HarvestError("%s: resumption token rejected twice"
                                       % provider.archive_id)
                log.warning("%s: stale resumption token; restarting harvest",
                            provider.archive_id)

    def _collect_once(self, provider: ProviderConfig, from_stamp=None):
        records, deletions = [], []
        response_stamp = None
        for stamp, listing in self._iter_pages(provider, from_stamp):
            if response_stamp is None:
                response_stamp = stamp
            for child in listing:
                if child.tag == "record":
                    olac = child.find("olac")
                    if olac is None:
                        log.warning("%s: record payload missing <olac>; skipped",
                                    provider.archive_id)
                        records.append(None)
                        continue
                    try:
                        records.append(mc.parse_record(ET.tostring(olac)))
                    except mc.ParseError as exc:
                        log.warning("%s: skipping unparseable record: %s",
                                    provider.archive_id, exc)
                        records.append(None)
                elif child.tag == "deleted":
                    deletions.append(child.get("identifier"))
        return records, deletions, response_stamp

    def harvest(self, provider: ProviderConfig, mode="full") -> HarvestSummary:
        """Full mode replaces the provider's catalog slice; incremental mode
        applies changes since the stored cursor, then advances it. A failed
        harvest leaves both the slice and the cursor untouched."""
        summary = HarvestSummary(provider.archive_id)
        if mode not in ("full", "incremental"):
            raise ValueError("mode must be 'full' or 'incremental'")
        cursor = self.catalog.cursor(provider.archive_id)
        if mode == "incremental" and cursor is None:
            raise HarvestError("%s: incremental harvest requires a stored "
                               "cursor; run a full harvest first"
                               % provider.archive_id)
        try:
            from_stamp = cursor if mode == "incremental" else None
            records, deletions, response_stamp = self._collect(
                provider, from_stamp)
        except HarvestError as exc:
            summary.failed = True
            summary.error = str(exc)
            return summary

        live = {r.identifier: r for r in records if r is not None}
        summary.skipped = sum(1 for r in records if r is None)

        if mode == "full":
            stale = [key for key in self.catalog.archive_keys(provider.archive_id)
                     if key[1] not in live]
            for _, identifier in stale:
                self.catalog.delete(provider.archive_id, identifier)
                summary.deleted += 1
            for record in live.values():
                outcome = self.catalog.upsert(provider.archive_id, record)
                if outcome == "added":
                    summary.added += 1
                elif outcome == "updated":
                    summary.updated += 1
        else:
            for record in live.values():
                outcome = self.catalog.upsert(provider.archive_id, record)
                if outcome == "added":
                    summary.added += 1
                elif outcome == "updated":
                    summary.updated += 1
            for identifier in deletions:
                if self.catalog.delete(provider.archive_id, identifier):
                    summary.deleted += 1

        if response_stamp is None:
            # noRecordsMatch: ask the provider for the current time instead.
            root = self._request(provider, verb="Identify")
            response_stamp = root.get("responseDate")
        self.catalog.set_cursor(provider.archive_id, response_stamp)
        return summary

    def harvest_all(self, providers, mode="auto",
                    parallelism=DEFAULT_PARALLELISM) -> list:
        """Harvest providers concurrently (bounded). `auto` picks incremental
        when a cursor exists, full otherwise."""
        def one(provider):
            actual = mode
            if mode == "auto":
                actual = ("incremental"
                          if self.catalog.cursor(provider.archive_id)
                          else "full")
            try:
                return self.harvest(provider, actual)
            except HarvestError as exc:
                return HarvestSummary(provider.archive_id, failed=True,
                                      error=str(exc))

        with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
            return list(pool.map(one, providers))


def catalog_snapshot(catalog: UnionCatalog) -> CatalogSnapshot:
    return catalog.snapshot()
