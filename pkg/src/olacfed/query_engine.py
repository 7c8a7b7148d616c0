"""Union-catalog search with directional multilingual semantics.

Directionality: a "from" constraint matches Subject.language codes, a "to"
constraint matches Language codes, and "any" matches either. Language
constraint values may be raw `x-sil-XXX` codes or registered group names;
groups are expanded at query time so newly registered groups apply without
reindexing.

Metadata is flat and unordered, so matching is pairing-free by design: a
record carrying Subject.language {X, Y} and Language {X, Y} satisfies every
directional combination of X and Y.
"""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass

from .harvester import CatalogSnapshot

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

CODED_CONSTRAINT_WEIGHT = 2
TEXT_TERM_WEIGHT = 1


class QueryError(Exception):
    pass


def tokenize(text: str) -> list:
    """Case-folded Unicode word tokens; no stemming."""
    return _TOKEN_RE.findall(text.casefold())


def norm_code(code: str) -> str:
    return code.casefold()


def group_to_postings_codes(codes) -> set:
    """Three-letter registry codes in their record-level `x-sil-` form."""
    return {norm_code("x-sil-" + c) for c in codes}


@dataclass(frozen=True)
class Query:
    """Conjunction of predicates; every field is optional."""
    text: tuple = ()
    filters: tuple = ()          # of (element name, code value)
    from_lang: str | None = None  # matched against Subject.language
    to_lang: str | None = None    # matched against Language
    any_lang: str | None = None   # matched against either
    ling_type: str | None = None  # Type.linguistic code or code-path prefix
    archive: str | None = None


@dataclass(frozen=True)
class ResultSet:
    hits: tuple    # of (key, archive_id, score), scores non-increasing
    facets: dict   # element name -> {code -> count}

    def keys(self):
        return [hit[0] for hit in self.hits]

    def __len__(self):
        return len(self.hits)


@dataclass(frozen=True)
class RelatedRecord:
    kind: str            # isPartOf / hasPart
    target: str          # raw Relation content
    key: tuple | None    # resolved (archive, identifier), None when absent
    reciprocal: bool     # target carries the inverse Relation back


class Index:
    """Inverted index over a catalog snapshot. Immutable once built."""

    def __init__(self, snapshot: CatalogSnapshot, registry=None):
        self.registry = registry
        self.records = dict(snapshot.entries)
        self.all_keys = sorted(self.records)
        self._text = defaultdict(set)       # token -> keys
        self._from_lang = defaultdict(set)  # code -> keys (Subject.language)
        self._to_lang = defaultdict(set)    # code -> keys (Language)
        self._coded = defaultdict(set)      # (element name, code) -> keys
        self._by_archive = defaultdict(set)
        self._relations = defaultdict(list)  # key -> [(kind, target)]
        self._ids_by_identifier = defaultdict(list)
        for key, record in snapshot.entries:
            self._add(key, record)

    def _add(self, key, record):
        archive_id, identifier = key
        self._by_archive[archive_id].add(key)
        self._ids_by_identifier[identifier].append(key)
        for el in record.elements:
            for token in tokenize(el.content):
                self._text[token].add(key)
            if el.code is not None:
                code = norm_code(el.code)
                self._coded[(el.name, code)].add(key)
                if el.name == "Language":
                    self._to_lang[code].add(key)
                elif el.name == "Subject.language":
                    self._from_lang[code].add(key)
            if el.name == "Relation" and el.refine in ("isPartOf", "hasPart"):
                self._relations[key].append((el.refine, el.content.strip()))

    # -- query evaluation --------------------------------------------------

    def _expand_lang_value(self, value: str) -> set:
        """A language constraint is a raw code or a group qualified name."""
        if ":" in value:
            if self.registry is None or not self.registry.has_group(value):
                raise QueryError("unresolvable group name: %s" % value)
            return group_to_postings_codes(self.registry.expand_group(value))
        return {norm_code(value)}

    def _lang_postings(self, postings, value) -> set:
        keys = set()
        for code in self._expand_lang_value(value):
            keys |= postings.get(code, set())
        return keys

    def search(self, query: Query, scan=False) -> ResultSet:
        """Evaluate a query; `scan=True` uses a linear scan of the snapshot
        instead of the postings (the index's own correctness oracle)."""
        if scan:
            keys = {k for k in self.all_keys if self._matches(k, query)}
        else:
            keys = self._candidate_keys(query)
        score = self._query_score(query)
        hits = tuple((key, key[0], score) for key in sorted(keys))
        return ResultSet(hits=hits, facets=self._facets(keys))

    def _query_score(self, query: Query) -> int:
        # Conjunctive matching: every hit satisfies every predicate, so the
        # score is uniform; ordering determinism is what matters.
        coded = sum(1 for v in (query.from_lang, query.to_lang, query.any_lang,
                                query.ling_type) if v is not None)
        coded += len(query.filters)
        return (CODED_CONSTRAINT_WEIGHT * coded
                + TEXT_TERM_WEIGHT * len(query.text))

    def _candidate_keys(self, query: Query) -> set:
        sets = []
        for term in query.text:
            sets.append(self._text.get(term.casefold(), set()))
        for name, value in query.filters:
            sets.append(self._coded.get((name, norm_code(value)), set()))
        if query.from_lang is not None:
            sets.append(self._lang_postings(self._from_lang, query.from_lang))
        if query.to_lang is not None:
            sets.append(self._lang_postings(self._to_lang, query.to_lang))
        if query.any_lang is not None:
            sets.append(self._lang_postings(self._from_lang, query.any_lang)
                        | self._lang_postings(self._to_lang, query.any_lang))
        if query.ling_type is not None:
            wanted = norm_code(query.ling_type)
            keys = set()
            for (name, code), posting in self._coded.items():
                if name == "Type.linguistic" and (
                        code == wanted or code.startswith(wanted + "/")):
                    keys |= posting
            sets.append(keys)
        if query.archive is not None:
            sets.append(self._by_archive.get(query.archive, set()))
        if not sets:
            return set(self.all_keys)
        result = set(sets[0])
        for s in sets[1:]:
            result &= s
        return result

    def _matches(self, key, query: Query) -> bool:
        """Direct predicate evaluation over one record (scan oracle)."""
        record = self.records[key]
        archive_id = key[0]
        if query.archive is not None and archive_id != query.archive:
            return False
        tokens = set()
        from_codes, to_codes = set(), set()
        coded = set()
        ling = set()
        for el in record.elements:
            tokens.update(tokenize(el.content))
            if el.code is not None:
                code = norm_code(el.code)
                coded.add((el.name, code))
                if el.name == "Language":
                    to_codes.add(code)
                elif el.name == "Subject.language":
                    from_codes.add(code)
                if el.name == "Type.linguistic":
                    ling.add(code)
        for term in query.text:
            if term.casefold() not in tokens:
                return False
        for name, value in query.filters:
            if (name, norm_code(value)) not in coded:
                return False
        if query.from_lang is not None:
            if not (self._expand_lang_value(query.from_lang) & from_codes):
                return False
        if query.to_lang is not None:
            if not (self._expand_lang_value(query.to_lang) & to_codes):
                return False
        if query.any_lang is not None:
            wanted = self._expand_lang_value(query.any_lang)
            if not (wanted & (from_codes | to_codes)):
                return False
        if query.ling_type is not None:
            wanted = norm_code(query.ling_type)
            if not any(c == wanted or c.startswith(wanted + "/")
                       for c in ling):
                return False
        return True

    # -- facets -------------------------------------------------------------

    def _facets(self, keys) -> dict:
        """Per element name, count of matching records per code. A record
        counts once per distinct code it carries."""
        facets = defaultdict(Counter)
        for key in keys:
            seen = set()
            for el in self.records[key].elements:
                if el.code is not None:
                    pair = (el.name, norm_code(el.code))
                    if pair not in seen:
                        seen.add(pair)
                        facets[el.name][norm_code(el.code)] += 1
        return {name: dict(counts) for name, counts in facets.items()}

    # -- relations ------------------------------------------------------------

    _INVERSE = {"isPartOf": "hasPart", "hasPart": "isPartOf"}

    def related_records(self, key) -> list:
        """Resolved Relation links (isPartOf/hasPart) for one record."""
        if key not in self.records:
            raise KeyError(key)
        out = []
        for kind, target in self._relations.get(key, ()):
            resolved = self._resolve_identifier(key[0], target)
            reciprocal = False
            if resolved is not None:
                reciprocal = any(
                    k == self._INVERSE[kind]
                    and self._resolve_identifier(resolved[0], t) == key
                    for k, t in self._relations.get(resolved, ()))
            out.append(RelatedRecord(kind, target, resolved, reciprocal))
        return out

    def _resolve_identifier(self, archive_id, identifier):
        if (archive_id, identifier) in self.records:
            return (archive_id, identifier)
        candidates = self._ids_by_identifier.get(identifier, [])
        if len(candidates) == 1:
            return candidates[0]
        return None


def build_index(snapshot: CatalogSnapshot, registry=None) -> Index:
    return Index(snapshot, registry)


def search(index: Index, query: Query) -> ResultSet:
    return index.search(query)


def related_records(index: Index, key) -> list:
    return index.related_records(key)


def facet_counts(index: Index, query: Query) -> dict:
    return index.search(query).facets
