"""Metadata records: types, XML wire format, controlled-vocabulary validation.

A record is a flat, unordered multiset of qualified Dublin Core elements.
Element order never affects equality, validation, or retrieval.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from xml.etree import ElementTree as ET
from xml.sax.saxutils import escape, quoteattr

# The 15 Dublin Core element names.
DC_ELEMENTS = (
    "Title", "Creator", "Subject", "Description", "Publisher", "Contributor",
    "Date", "Type", "Format", "Identifier", "Source", "Language", "Relation",
    "Coverage", "Rights",
)

# The nine qualified element names; no other dotted names are accepted.
QUALIFIED_ELEMENTS = (
    "Subject.language",
    "Type.linguistic",
    "Type.functionality",
    "Format.cpu",
    "Format.encoding",
    "Format.markup",
    "Format.os",
    "Format.sourcecode",
    "Rights.software",
)

ALL_ELEMENT_NAMES = DC_ELEMENTS + QUALIFIED_ELEMENTS

# Wire tag (lowercase, "." preserved) -> canonical element name.
TAG_TO_NAME = {name.lower(): name for name in ALL_ELEMENT_NAMES}

ELEMENT_ATTRIBUTES = ("refine", "code", "lang", "scheme")

VOCABULARY_NAMES = (
    "OLAC-Language", "OLAC-Linguistic-Type", "OLAC-CPU", "OLAC-Encoding",
    "OLAC-Format", "OLAC-Functionality", "OLAC-OS", "OLAC-Rights",
    "OLAC-Role", "OLAC-Software-Rights", "OLAC-Sourcecode", "DC-Type",
)

# Which vocabulary constrains the `code` attribute of each element.
ELEMENT_VOCABULARY = {
    "Creator": "OLAC-Role",
    "Contributor": "OLAC-Role",
    "Subject.language": "OLAC-Language",
    "Language": "OLAC-Language",
    "Type": "DC-Type",
    "Type.linguistic": "OLAC-Linguistic-Type",
    "Type.functionality": "OLAC-Functionality",
    "Format": "OLAC-Format",
    "Format.cpu": "OLAC-CPU",
    "Format.encoding": "OLAC-Encoding",
    "Format.os": "OLAC-OS",
    "Format.sourcecode": "OLAC-Sourcecode",
    "Rights": "OLAC-Rights",
    "Rights.software": "OLAC-Software-Rights",
}

# Legal `refine` values per element; refine on any other element is an error.
ELEMENT_REFINEMENTS = {
    "Relation": frozenset({
        "isPartOf", "hasPart", "isVersionOf", "hasVersion",
        "isFormatOf", "hasFormat", "references", "isReferencedBy",
        "requires", "isRequiredBy", "replaces", "isReplacedBy",
    }),
    "Date": frozenset({"created", "issued", "modified", "valid", "available"}),
}

DATESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


class MetadataError(Exception):
    """Base class for record-level problems."""


class ParseError(MetadataError):
    """Raised when a wire-format document cannot be parsed.

    `offset` is the approximate byte offset of the problem when known;
    `element` names the offending element tag when that is the problem.
    """

    def __init__(self, message, offset=None, element=None):
        super().__init__(message)
        self.offset = offset
        self.element = element


@dataclass(frozen=True)
class Element:
    """One qualified Dublin Core element instance."""

    name: str
    content: str = ""
    refine: str | None = None
    code: str | None = None
    lang: str | None = None
    scheme: str | None = None

    def __post_init__(self):
        if self.name not in TAG_TO_NAME.values():
            raise MetadataError("unknown element name: %r" % (self.name,))

    def sort_key(self):
        return (self.name, self.code or "", self.content,
                self.refine or "", self.lang or "", self.scheme or "")


def effective_lang(element: Element) -> str:
    """Language of the element content; defaults to English."""
    return element.lang if element.lang else "en"


class MetadataRecord:
    """One resource description: identifier, datestamp, multiset of elements.

    Equality ignores element order. Zero elements is a valid record.
    """

    __slots__ = ("identifier", "datestamp", "elements")

    def __init__(self, identifier, datestamp=None, elements=()):
        if datestamp is not None and not DATESTAMP_RE.match(datestamp):
            raise MetadataError("bad datestamp %r (want YYYY-MM-DDThh:mm:ssZ)"
                                % (datestamp,))
        self.identifier = identifier
        self.datestamp = datestamp
        self.elements = tuple(elements)

    def sorted_elements(self):
        return tuple(sorted(self.elements, key=Element.sort_key))

    def __eq__(self, other):
        if not isinstance(other, MetadataRecord):
            return NotImplemented
        return (self.identifier == other.identifier
                and self.datestamp == other.datestamp
                and self.sorted_elements() == other.sorted_elements())

    def __hash__(self):
        return hash((self.identifier, self.datestamp, self.sorted_elements()))

    def __repr__(self):
        return "MetadataRecord(%r, %r, %d elements)" % (
            self.identifier, self.datestamp, len(self.elements))


def _byte_offset(data: bytes, line: int, column: int) -> int:
    """Byte offset of a (1-based line, 0-based column) text position."""
    lines = data.split(b"\n")
    offset = sum(len(l) + 1 for l in lines[: line - 1])
    try:
        text_line = lines[line - 1].decode("utf-8", "replace")
        offset += len(text_line[:column].encode("utf-8"))
    except IndexError:
        pass
    return offset


def parse_record(document: bytes) -> MetadataRecord:
    """Parse one wire-format XML document into a MetadataRecord."""
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError("malformed document: %s" % exc,
                         offset=_byte_offset(document, line, column)) from exc
    if root.tag != "olac":
        raise ParseError("expected <olac> envelope, got <%s>" % root.tag,
                         element=root.tag)
    identifier = root.get("identifier")
    if identifier is None:
        raise ParseError("<olac> envelope missing identifier attribute")
    datestamp = root.get("datestamp")
    if datestamp is not None and not DATESTAMP_RE.match(datestamp):
        raise ParseError("bad datestamp %r" % (datestamp,))
    elements = []
    for child in root:
        name = TAG_TO_NAME.get(child.tag)
        if name is None:
            raise ParseError("unknown element name: %r" % (child.tag,),
                             element=child.tag)
        for attr in child.keys():
            if attr not in ELEMENT_ATTRIBUTES:
                raise ParseError("unknown attribute %r on <%s>"
                                 % (attr, child.tag), element=child.tag)
        if len(child):
            raise ParseError("element <%s> must not contain child elements"
                             % child.tag, element=child.tag)
        elements.append(Element(
            name=name,
            content=child.text or "",
            refine=child.get("refine"),
            code=child.get("code"),
            lang=child.get("lang"),
            scheme=child.get("scheme"),
        ))
    return MetadataRecord(identifier, datestamp, elements)


def serialize_record(record: MetadataRecord) -> bytes:
    """Serialize to the wire format; deterministic (elements sorted)."""
    envelope_attrs = " identifier=%s" % quoteattr(record.identifier)
    if record.datestamp is not None:
        envelope_attrs += " datestamp=%s" % quoteattr(record.datestamp)
    out = ['<?xml version="1.0" encoding="UTF-8"?>\n']
    if not record.elements:
        out.append("<olac%s/>\n" % envelope_attrs)
        return "".join(out).encode("utf-8")
    out.append("<olac%s>\n" % envelope_attrs)
    for el in record.sorted_elements():
        attrs = ""
        for attr in ELEMENT_ATTRIBUTES:
            value = getattr(el, attr)
            if value is not None:
                attrs += " %s=%s" % (attr, quoteattr(value))
        tag = el.name.lower()
        if el.content:
            out.append("  <%s%s>%s</%s>\n" % (tag, attrs, escape(el.content), tag))
        else:
            out.append("  <%s%s/>\n" % (tag, attrs))
    out.append("</olac>\n")
    return "".join(out).encode("utf-8")


class Vocabulary:
    """A named enumeration of legal codes with optional "/" subcode paths.

    Matching is case-insensitive on the full code path; the canonical form
    is the stored spelling.
    """

    def __init__(self, name, codes):
        self.name = name
        self._entries = {}
        for code in codes:
            self._entries[code.lower()] = code
        for code in codes:
            if "/" in code:
                parent = code.rsplit("/", 1)[0]
                if parent.lower() not in self._entries:
                    raise MetadataError(
                        "%s: subcode %r has no parent code %r"
                        % (name, code, parent))

    def lookup(self, code: str) -> str | None:
        """Canonical spelling of `code`, or None when absent."""
        return self._entries.get(code.lower())

    def codes(self):
        return sorted(self._entries.values())

    def __contains__(self, code):
        return code.lower() in self._entries

    def __len__(self):
        return len(self._entries)


def load_vocabulary_file(text: str) -> Vocabulary:
    """Parse a vocabulary data file: `# name: X` header, one code per line."""
    name = None
    codes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.lower().startswith("name:"):
                name = body[5:].strip()
            continue
        codes.append(line)
    if name is None:
        raise MetadataError("vocabulary file missing '# name:' header")
    return Vocabulary(name, codes)


@lru_cache(maxsize=1)
def default_vocabularies() -> dict:
    """The 12 shipped vocabularies, keyed by name. Immutable after load."""
    table = {}
    vocab_dir = resources.files("olacfed").joinpath("data", "vocab")
    for entry in sorted(vocab_dir.iterdir(), key=lambda p: p.name):
        if not entry.name.endswith(".txt"):
            continue
        vocab = load_vocabulary_file(entry.read_text(encoding="utf-8"))
        table[vocab.name] = vocab
    missing = set(VOCABULARY_NAMES) - set(table)
    if missing:
        raise MetadataError("missing shipped vocabularies: %s" % sorted(missing))
    return table


def vocab_lookup(vocabulary_name: str, code: str, vocabularies=None):
    """Case-insensitive lookup of a code path; None when not found."""
    table = vocabularies if vocabularies is not None else default_vocabularies()
    if vocabulary_name not in table:
        raise MetadataError("unknown vocabulary: %r" % (vocabulary_name,))
    return table[vocabulary_name].lookup(code)


ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: str
    element_index: int
    message: str


@dataclass
class ValidationReport:
    record_id: str
    findings: list = field(default_factory=list)

    @property
    def errors(self):
        return [f for f in self.findings if f.severity == ERROR]

    @property
    def warnings(self):
        return [f for f in self.findings if f.severity == WARNING]

    @property
    def is_valid(self):
        """Valid means zero error-severity findings; warnings never block."""
        return not self.errors

    def add(self, severity, index, message):
        self.findings.append(Finding(severity, index, message))


def validate_record(record: MetadataRecord, vocabularies=None,
                    schemes=None) -> ValidationReport:
    """Check a record against the vocabularies and registered schemes.

    All problems are findings, never exceptions. Unknown codes in a bound
    vocabulary are warnings (the nearest-item-plus-prose convention);
    illegal refine values and scheme violations are errors.
    """
    table = vocabularies if vocabularies is not None else default_vocabularies()
    schemes = schemes or {}
    report = ValidationReport(record.identifier)
    for i, el in enumerate(record.elements):
        if el.refine is not None:
            legal = ELEMENT_REFINEMENTS.get(el.name, frozenset())
            if el.refine not in legal:
                report.add(ERROR, i, "illegal refine %r for element %s"
                           % (el.refine, el.name))
        if el.code is not None:
            vocab_name = ELEMENT_VOCABULARY.get(el.name)
            if vocab_name is None:
                report.add(WARNING, i, "element %s carries a code (%r) but is "
                           "not vocabulary-bound" % (el.name, el.code))
            elif table[vocab_name].lookup(el.code) is None:
                report.add(WARNING, i, "code %r not in %s (treating as "
                           "nearest-item with prose elaboration)"
                           % (el.code, vocab_name))
        if el.scheme is not None:
            values = schemes.get(el.scheme)
            if values is None:
                report.add(ERROR, i, "scheme %r is not registered" % (el.scheme,))
            elif el.content.lower() not in {v.lower() for v in values}:
                report.add(ERROR, i, "content %r is not in scheme %r"
                           % (el.content, el.scheme))
    return report
