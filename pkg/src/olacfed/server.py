"""Service-provider HTTP front end: the search JSON API, the language
registry API, and static hosting for the web UI.

The registry endpoints (/resolve, /group/..., /scheme/...) are mounted on
the same server as the search API; group registrations take effect on the
next query because groups expand at query time.
"""

from __future__ import annotations

import json
import mimetypes
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import query_engine as qe
from .harvester import UnionCatalog
from .language_registry import (CodeDatabase, GroupRegistry, RegistryError,
                                default_code_database)

DEFAULT_PAGE_SIZE = 20


def record_to_json(archive_id, record):
    return {
        "archive": archive_id,
        "identifier": record.identifier,
        "datestamp": record.datestamp,
        "elements": [
            {"name": el.name, "content": el.content, "refine": el.refine,
             "code": el.code, "lang": el.lang, "scheme": el.scheme,
             "effectiveLang": el.lang or "en"}
            for el in record.sorted_elements()
        ],
    }


class SearchService:
    """Search state shared by the HTTP handler; index swaps are atomic."""

    def __init__(self, catalog: UnionCatalog, registry: GroupRegistry,
                 codes: CodeDatabase | None = None, registry_dir=None,
                 page_size=DEFAULT_PAGE_SIZE):
        self.catalog = catalog
        self.registry = registry
        self.codes = codes or default_code_database()
        self.registry_dir = registry_dir
        self.page_size = page_size
        self._lock = threading.Lock()
        self._index = qe.build_index(catalog.snapshot(), registry)

    @property
    def index(self) -> qe.Index:
        return self._index

    def reindex(self):
        index = qe.build_index(self.catalog.snapshot(), self.registry)
        with self._lock:
            self._index = index

    def _persist_registry(self):
        if self.registry_dir is not None:
            self.registry.save(self.registry_dir)

    # -- API operations ------------------------------------------------------

    def api_search(self, params: dict) -> dict:
        def clean(key):
            value = params.get(key, "")
            return value.strip() or None

        query = qe.Query(
            text=tuple(qe.tokenize(params.get("q", ""))),
            from_lang=clean("from"),
            to_lang=clean("to"),
            any_lang=clean("lang"),
            ling_type=clean("type"),
            archive=clean("archive"),
        )
        results = self.index.search(query)
        try:
            page = max(1, int(params.get("page", "1")))
        except ValueError:
            page = 1
        start = (page - 1) * self.page_size
        hits = results.hits[start:start + self.page_size]
        return {
            "total": len(results),
            "page": page,
            "pageSize": self.page_size,
            "results": [
                {"archive": archive_id, "identifier": key[1], "score": score,
                 "record": record_to_json(archive_id, self.index.records[key])}
                for key, archive_id, score in hits
            ],
            "facets": results.facets,
        }

    def api_record(self, archive_id, identifier) -> dict | None:
        key = (archive_id, identifier)
        record = self.index.records.get(key)
        if record is None:
            return None
        related = [
            {"kind": rel.kind, "target": rel.target,
             "archive": rel.key[0] if rel.key else None,
             "identifier": rel.key[1] if rel.key else None,
             "resolved": rel.key is not None,
             "reciprocal": rel.reciprocal}
            for rel in self.index.related_records(key)
        ]
        body = record_to_json(archive_id, record)
        body["related"] = related
        return body

    def api_resolve(self, name: str) -> dict:
        matches = list(self.codes.resolve_name(name))
        # Raw codes resolve too, with or without the x-sil- prefix, so
        # clients can ask for display names of codes seen in records.
        bare = name.strip()
        if bare.lower().startswith("x-sil-"):
            bare = bare[len("x-sil-"):]
        entry = self.codes.get(bare)
        if entry is not None and all(c != entry.code for c, _ in matches):
            matches.append((entry.code, "code"))
        return {
            "name": name,
            "matches": [
                {"code": code, "kind": kind,
                 "entry": self.codes.get(code).to_json()}
                for code, kind in matches
            ],
        }

    def api_group_get(self, qname: str) -> dict | None:
        if not self.registry.has_group(qname):
            return None
        latest = self.registry.versions(qname)[-1]
        return {
            "name": qname,
            "version": latest.version,
            "members": list(latest.members),
            "expansion": sorted(self.registry.expand_group(qname)),
        }

    def api_group_put(self, qname: str, members) -> dict:
        version = self.registry.register_group(qname, members)
        self._persist_registry()
        return {"name": qname, "version": version.version,
                "expansion": sorted(version.expansion)}

    def api_scheme_put(self, name: str, values) -> dict:
        self.registry.register_scheme(name, values)
        self._persist_registry()
        return {"name": name, "values": list(values)}


class _SearchHTTPHandler(BaseHTTPRequestHandler):
    service: SearchService = None  # set by make_server
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):
        pass

    # -- plumbing -----------------------------------------------------------

    def _send_json(self, payload, status=200):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status, message):
        self._send_json({"error": message}, status=status)

    def _read_json_body(self):
        length = int(self.headers.get("Content-Length", "0"))
        if length == 0:
            return None
        return json.loads(self.rfile.read(length).decode("utf-8"))

    # -- routing --------------------------------------------------------------

    def do_GET(self):
        parsed = urllib.parse.urlparse(self.path)
        params = {k: v[0] for k, v in
                  urllib.parse.parse_qs(parsed.query,
                                        keep_blank_values=True).items()}
        parts = [p for p in parsed.path.split("/") if p]
        try:
            if parsed.path == "/api/search":
                self._send_json(self.service.api_search(params))
            elif len(parts) == 4 and parts[:2] == ["api", "record"]:
                archive_id = urllib.parse.unquote(parts[2])
                identifier = urllib.parse.unquote(parts[3])
                body = self.service.api_record(archive_id, identifier)
                if body is None:
                    self._error(404, "no record %s/%s"
                                % (archive_id, identifier))
                else:
                    self._send_json(body)
            elif len(parts) == 3 and parts[:2] == ["api", "group"]:
                self._group_get(urllib.parse.unquote(parts[2]))
            elif len(parts) == 2 and parts[0] == "group":
                self._group_get(urllib.parse.unquote(parts[1]))
            elif parsed.path == "/resolve":
                if "name" not in params:
                    self._error(400, "missing name parameter")
                else:
                    self._send_json(self.service.api_resolve(params["name"]))
            else:
                self._serve_static(parsed.path)
        except qe.QueryError as exc:
            self._error(400, str(exc))
        except RegistryError as exc:
            self._error(400, str(exc))

    def _group_get(self, qname):
        body = self.service.api_group_get(qname)
        if body is None:
            self._error(404, "unknown group %s" % qname)
        else:
            self._send_json(body)

    def do_PUT(self):
        parsed = urllib.parse.urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        try:
            payload = self._read_json_body()
            if len(parts) == 2 and parts[0] == "group":
                qname = urllib.parse.unquote(parts[1])
                if not isinstance(payload, list):
                    self._error(400, "body must be a JSON list of members")
                    return
                self._send_json(self.service.api_group_put(qname, payload))
            elif len(parts) == 2 and parts[0] == "scheme":
                name = urllib.parse.unquote(parts[1])
                if not isinstance(payload, list):
                    self._error(400, "body must be a JSON list of values")
                    return
                self._send_json(self.service.api_scheme_put(name, payload))
            else:
                self._error(404, "unknown endpoint")
        except RegistryError as exc:
            self._error(400, str(exc))
        except (ValueError, json.JSONDecodeError) as exc:
            self._error(400, "bad request body: %s" % exc)

    # -- static UI --------------------------------------------------------------

    def _serve_static(self, path):
        if self.ui_dir is None:
            self._error(404, "unknown endpoint")
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) \
                or not target.is_file():
            # SPA fallback: unknown paths get the app shell.
            target = self.ui_dir / "index.html"
            if not target.is_file():
                self._error(404, "not found")
                return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(service: SearchService, port=0,
                ui_dir=None) -> ThreadingHTTPServer:
    handler = type("Handler", (_SearchHTTPHandler,), {
        "service": service,
        "ui_dir": Path(ui_dir) if ui_dir else None,
    })
    return ThreadingHTTPServer(("127.0.0.1", port), handler)
