"""Data-provider side: record repository and the HTTP harvesting protocol.

Records are stored one wire-format file per identifier under a content
directory; an in-memory index is rebuilt at startup. Protocol-level errors
travel as machine-readable codes in a 200 response; only malformed HTTP
gets a 400.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
import time
import urllib.parse
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from . import metadata_core as mc

PROTOCOL_VERSION = "1.0"
VERBS = ("Identify", "ListMetadataFormats", "ListIdentifiers",
         "ListRecords", "GetRecord")
EPOCH_STAMP = "1970-01-01T00:00:00Z"

DEFAULT_PAGE_SIZE = 100
TOKEN_TTL_SECONDS = 600


class ValidationFailed(Exception):
    """A record was rejected at ingestion; carries the ValidationReport."""

    def __init__(self, report):
        super().__init__("record %s rejected: %d error(s)"
                         % (report.record_id, len(report.errors)))
        self.report = report


def format_stamp(epoch: float) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc) \
        .strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_stamp(stamp: str) -> float:
    return datetime.strptime(stamp, "%Y-%m-%dT%H:%M:%SZ") \
        .replace(tzinfo=timezone.utc).timestamp()


class HybridClock:
    """Wall clock that never repeats or goes backwards at second granularity."""

    def __init__(self, now=time.time):
        self._now = now
        self._last = 0
        self._lock = threading.Lock()

    def observe(self, stamp: str):
        """Raise the floor to an existing datestamp (startup index rebuild)."""
        with self._lock:
            self._last = max(self._last, int(parse_stamp(stamp)))

    def next_stamp(self) -> str:
        with self._lock:
            self._last = max(int(self._now()), self._last + 1)
            return format_stamp(self._last)

    def now_stamp(self) -> str:
        with self._lock:
            self._last = max(int(self._now()), self._last)
            return format_stamp(self._last)


def _safe_filename(identifier: str) -> str:
    return urllib.parse.quote(identifier, safe="") + ".xml"


class Repository:
    """One archive's record store, persisted as wire-format files."""

    def __init__(self, root, archive_id, clock=None, schemes=None,
                 vocabularies=None):
        self.root = Path(root)
        self.archive_id = archive_id
        self.clock = clock or HybridClock()
        self.vocabularies = vocabularies
        self._records_dir = self.root / "records"
        self._records_dir.mkdir(parents=True, exist_ok=True)
        self._deletions_file = self.root / "deletions.json"
        self._lock = threading.RLock()
        if schemes is not None:
            self.schemes = dict(schemes)
        else:
            self.schemes = self._load_schemes()
        self._index = {}      # identifier -> datestamp
        self._deletions = {}  # identifier -> deletion datestamp
        self._rebuild_index()

    def _load_schemes(self):
        schemes_file = self.root / "schemes.json"
        if schemes_file.exists():
            return json.loads(schemes_file.read_text(encoding="utf-8"))
        return {}

    def _rebuild_index(self):
        for path in self._records_dir.glob("*.xml"):
            record = mc.parse_record(path.read_bytes())
            self._index[record.identifier] = record.datestamp
            if record.datestamp:
                self.clock.observe(record.datestamp)
        if self._deletions_file.exists():
            self._deletions = json.loads(
                self._deletions_file.read_text(encoding="utf-8"))
            for stamp in self._deletions.values():
                self.clock.observe(stamp)

    def __len__(self):
        return len(self._index)

    def identifiers(self):
        return sorted(self._index)

    def record_bytes(self, identifier: str) -> bytes:
        path = self._records_dir / _safe_filename(identifier)
        return path.read_bytes()

    def get(self, identifier: str):
        if identifier not in self._index:
            return None
        return mc.parse_record(self.record_bytes(identifier))

    def deletion_stamp(self, identifier: str):
        return self._deletions.get(identifier)

    def earliest_datestamp(self):
        stamps = list(self._index.values()) + list(self._deletions.values())
        stamps = [s for s in stamps if s]
        return min(stamps) if stamps else EPOCH_STAMP

    def put_record(self, record: mc.MetadataRecord) -> mc.MetadataRecord:
        """Validate and store; errors reject, warnings are echoed via the
        returned report on `last_report`. Datestamp falls back to the server
        clock; overwrites always observe a strictly newer stamp."""
        report = mc.validate_record(record, vocabularies=self.vocabularies,
                                    schemes=self.schemes)
        if not report.is_valid:
            raise ValidationFailed(report)
        with self._lock:
            datestamp = record.datestamp or self.clock.next_stamp()
            stored = mc.MetadataRecord(record.identifier, datestamp,
                                       record.elements)
            path = self._records_dir / _safe_filename(record.identifier)
            path.write_bytes(mc.serialize_record(stored))
            self._index[record.identifier] = datestamp
            self.clock.observe(datestamp)
            if record.identifier in self._deletions:
                del self._deletions[record.identifier]
                self._flush_deletions()
        self.last_report = report
        return stored

    def delete_record(self, identifier: str) -> str:
        with self._lock:
            if identifier not in self._index:
                raise KeyError(identifier)
            (self._records_dir / _safe_filename(identifier)).unlink()
            del self._index[identifier]
            stamp = self.clock.next_stamp()
            self._deletions[identifier] = stamp
            self._flush_deletions()
        return stamp

    def _flush_deletions(self):
        self._deletions_file.write_text(
            json.dumps(self._deletions, indent=2, sort_keys=True),
            encoding="utf-8")

    def listing(self, from_stamp=None, until_stamp=None):
        """Sorted (identifier, datestamp, deleted?) within the inclusive
        window."""
        rows = [(i, s, False) for i, s in self._index.items()]
        rows += [(i, s, True) for i, s in self._deletions.items()]
        rows = [(i, s, d) for i, s, d in rows
                if (from_stamp is None or s >= from_stamp)
                and (until_stamp is None or s <= until_stamp)]
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows


def encode_token(verb, from_stamp, until_stamp, offset, issued_epoch) -> str:
    payload = json.dumps({
        "v": verb, "f": from_stamp, "u": until_stamp,
        "o": offset, "t": int(issued_epoch),
    }, sort_keys=True)
    return base64.urlsafe_b64encode(payload.encode("utf-8")).decode("ascii")


def decode_token(token: str) -> dict:
    try:
        payload = json.loads(base64.urlsafe_b64decode(token.encode("ascii")))
    except (ValueError, binascii.Error) as exc:
        raise ValueError("undecodable token") from exc
    if not isinstance(payload, dict) or {"v", "f", "u", "o", "t"} - set(payload):
        raise ValueError("token missing fields")
    return payload


def _strip_declaration(document: bytes) -> bytes:
    if document.startswith(b"<?xml"):
        end = document.find(b"?>")
        document = document[end + 2:]
    return document.strip()


class ProviderService:
    """Protocol request handling over one Repository."""

    def __init__(self, repository: Repository, page_size=DEFAULT_PAGE_SIZE,
                 token_ttl=TOKEN_TTL_SECONDS, now=time.time):
        self.repo = repository
        self.page_size = page_size
        self.token_ttl = token_ttl
        self._now = now

    # -- response envelope -------------------------------------------------

    def _envelope(self, body: str, response_stamp=None) -> bytes:
        stamp = response_stamp or self.repo.clock.now_stamp()
        doc = ('<?xml version="1.0" encoding="UTF-8"?>\n'
               '<repository archive=%s responseDate=%s>\n%s</repository>\n'
               % (quoteattr(self.repo.archive_id), quoteattr(stamp), body))
        return doc.encode("utf-8")

    def _error(self, code: str, message: str) -> bytes:
        return self._envelope('  <error code=%s>%s</error>\n'
                              % (quoteattr(code), escape(message)))

    # -- request dispatch ----------------------------------------------------

    def handle_request(self, verb: str, params: dict) -> bytes:
        params = {k: v for k, v in params.items() if k != "verb"}
        if verb not in VERBS:
            return self._error("badVerb", "unknown verb %r" % (verb,))
        try:
            handler = getattr(self, "_do_" + verb.lower())
            return handler(params)
        except _BadArgument as exc:
            return self._error("badArgument", str(exc))

    def _check_params(self, params, allowed):
        unknown = set(params) - set(allowed)
        if unknown:
            raise _BadArgument("unexpected argument(s): %s"
                               % ", ".join(sorted(unknown)))
        prefix = params.get("metadataPrefix")
        if prefix is not None and prefix != "olac":
            raise _BadArgument("unsupported metadataPrefix %r" % (prefix,))
        for key in ("from", "until"):
            value = params.get(key)
            if value is not None and not mc.DATESTAMP_RE.match(value):
                raise _BadArgument("bad %s datestamp %r" % (key, value))

    def _do_identify(self, params):
        self._check_params(params, ())
        body = ("  <Identify>\n"
                "    <archiveId>%s</archiveId>\n"
                "    <protocolVersion>%s</protocolVersion>\n"
                "    <earliestDatestamp>%s</earliestDatestamp>\n"
                "  </Identify>\n"
                % (escape(self.repo.archive_id), PROTOCOL_VERSION,
                   self.repo.earliest_datestamp()))
        return self._envelope(body)

    def _do_listmetadataformats(self, params):
        self._check_params(params, ())
        return self._envelope("  <ListMetadataFormats>\n"
                              "    <format>olac</format>\n"
                              "  </ListMetadataFormats>\n")

    def _do_getrecord(self, params):
        self._check_params(params, ("identifier", "metadataPrefix"))
        identifier = params.get("identifier")
        if not identifier:
            raise _BadArgument("GetRecord requires identifier")
        if identifier in self.repo._index:
            inner = _strip_declaration(self.repo.record_bytes(identifier))
            return self._envelope("  <GetRecord>\n  <record>\n%s\n  </record>\n"
                                  "  </GetRecord>\n" % inner.decode("utf-8"))
        stamp = self.repo.deletion_stamp(identifier)
        if stamp:
            return self._envelope(
                "  <GetRecord>\n    <deleted identifier=%s datestamp=%s/>\n"
                "  </GetRecord>\n" % (quoteattr(identifier), quoteattr(stamp)))
        return self._error("idDoesNotExist", "no record %r" % (identifier,))

    def _paged_listing(self, verb, params):
        """Shared ListRecords/ListIdentifiers windowing and pagination."""
        token = params.get("resumptionToken")
        if token is not None:
            if set(params) - {"resumptionToken"}:
                raise _BadArgument("resumptionToken is an exclusive argument")
            try:
                payload = decode_token(token)
            except ValueError as exc:
                return None, self._error("badResumptionToken", str(exc))
            if payload["v"] != verb:
                return None, self._error("badResumptionToken",
                                         "token was issued for %r" % payload["v"])
            if self._now() - payload["t"] > self.token_ttl:
                return None, self._error("badResumptionToken", "token expired")
            from_stamp, until_stamp = payload["f"], payload["u"]
            offset = payload["o"]
        else:
            from_stamp = params.get("from")
            until_stamp = params.get("until")
            offset = 0
        rows = self.repo.listing(from_stamp, until_stamp)
        if not rows:
            return None, self._error("noRecordsMatch",
                                     "no records in the requested window")
        page = rows[offset:offset + self.page_size]
        next_token = ""
        if offset + self.page_size < len(rows):
            next_token = encode_token(verb, from_stamp, until_stamp,
                                      offset + self.page_size, self._now())
        return (page, next_token), None

    def _do_listrecords(self, params):
        self._check_params(params, ("from", "until", "metadataPrefix",
                                    "resumptionToken"))
        result, error = self._paged_listing("ListRecords", params)
        if error is not None:
            return error
        page, next_token = result
        parts = ["  <ListRecords>\n"]
        for identifier, stamp, deleted in page:
            if deleted:
                parts.append("    <deleted identifier=%s datestamp=%s/>\n"
                             % (quoteattr(identifier), quoteattr(stamp)))
            else:
                inner = _strip_declaration(self.repo.record_bytes(identifier))
                parts.append("  <record>\n%s\n  </record>\n"
                             % inner.decode("utf-8"))
        if next_token:
            parts.append("    <resumptionToken>%s</resumptionToken>\n"
                         % escape(next_token))
        parts.append("  </ListRecords>\n")
        return self._envelope("".join(parts))

    def _do_listidentifiers(self, params):
        self._check_params(params, ("from", "until", "metadataPrefix",
                                    "resumptionToken"))
        result, error = self._paged_listing("ListIdentifiers", params)
        if error is not None:
            return error
        page, next_token = result
        parts = ["  <ListIdentifiers>\n"]
        for identifier, stamp, deleted in page:
            status = ' status="deleted"' if deleted else ""
            parts.append("    <header identifier=%s datestamp=%s%s/>\n"
                         % (quoteattr(identifier), quoteattr(stamp), status))
        if next_token:
            parts.append("    <resumptionToken>%s</resumptionToken>\n"
                         % escape(next_token))
        parts.append("  </ListIdentifiers>\n")
        return self._envelope("".join(parts))


class _BadArgument(Exception):
    pass


class _ProviderHTTPHandler(BaseHTTPRequestHandler):
    service: ProviderService = None  # set by make_server

    def log_message(self, fmt, *args):  # quiet; tests assert on responses
        pass

    def do_GET(self):
        parsed = urllib.parse.urlparse(self.path)
        expected = "/%s/oai" % self.service.repo.archive_id
        if parsed.path != expected:
            self.send_error(400, "expected path %s" % expected)
            return
        query = urllib.parse.parse_qs(parsed.query, keep_blank_values=True)
        if any(len(v) > 1 for v in query.values()):
            self.send_error(400, "repeated query parameter")
            return
        params = {k: v[0] for k, v in query.items()}
        verb = params.pop("verb", "")
        body = self.service.handle_request(verb, params)
        self.send_response(200)
        self.send_header("Content-Type", "text/xml; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(repository: Repository, port=0,
                page_size=DEFAULT_PAGE_SIZE) -> ThreadingHTTPServer:
    """Bind a provider HTTP server; port 0 picks a free port."""
    handler = type("Handler", (_ProviderHTTPHandler,),
                   {"service": ProviderService(repository, page_size=page_size)})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)
