"""Language identification service: code database, name resolution,
group registration, classification schemes, and scheme vocabularies.

The code database is a small hand-built subset shipped as a fixture; it is
immutable after load. Groups and schemes are registered at runtime and can
be persisted to a registry directory as JSON.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

QNAME_RE = re.compile(r"^[A-Za-z0-9_.-]+:[^:]+$")
CODE_RE = re.compile(r"^[A-Z]{3}$")


class RegistryError(Exception):
    """Base class for registry failures."""


class LoadError(RegistryError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class LanguageEntry:
    code: str
    primary_name: str
    alternate_names: frozenset
    country: str
    family_path: tuple

    def to_json(self):
        return {
            "code": self.code,
            "primaryName": self.primary_name,
            "alternateNames": sorted(self.alternate_names),
            "country": self.country,
            "familyPath": list(self.family_path),
        }


class CodeDatabase:
    """Three-letter code database with case-insensitive name resolution."""

    def __init__(self, entries=()):
        self._by_code = {}
        for entry in entries:
            if entry.code in self._by_code:
                raise LoadError("duplicate code: %s" % entry.code)
            self._by_code[entry.code] = entry

    def __len__(self):
        return len(self._by_code)

    def __contains__(self, code):
        return code.upper() in self._by_code

    def get(self, code: str) -> LanguageEntry | None:
        return self._by_code.get(code.upper())

    def entries(self):
        return [self._by_code[c] for c in sorted(self._by_code)]

    def resolve_name(self, name: str):
        """Exact, case-insensitive match against primary and alternate names.

        Returns [(code, kind)] with primary matches first, then alternates,
        each ordered by code. An empty list is the omission case, not an
        error. No fuzzy matching: near-misses are deliberately surfaced as
        misses.
        """
        wanted = name.strip().lower()
        primaries, alternates = [], []
        for code in sorted(self._by_code):
            entry = self._by_code[code]
            if entry.primary_name.lower() == wanted:
                primaries.append((code, "primary"))
            elif any(alt.lower() == wanted for alt in entry.alternate_names):
                alternates.append((code, "alternate"))
        return primaries + alternates


def load_codes(source) -> CodeDatabase:
    """Load the tab-separated code database.

    Columns: CODE, primary name, alternates ("|"-joined, may be empty),
    country, family path ("/"-joined). Duplicate codes and malformed rows
    are load errors carrying the offending code / line number.
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    else:
        text = str(source)
    entries = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise LoadError("line %d: expected 5 tab-separated fields, got %d"
                            % (lineno, len(parts)), line=lineno)
        code, primary, alts, country, family = (p.strip() for p in parts)
        if not CODE_RE.match(code):
            raise LoadError("line %d: bad language code %r" % (lineno, code),
                            line=lineno)
        if code in seen:
            raise LoadError("duplicate code: %s" % code, line=lineno)
        seen.add(code)
        entries.append(LanguageEntry(
            code=code,
            primary_name=primary,
            alternate_names=frozenset(a for a in alts.split("|") if a),
            country=country,
            family_path=tuple(f for f in family.split("/") if f),
        ))
    return CodeDatabase(entries)


def default_code_database() -> CodeDatabase:
    """The shipped fixture subset of the code database."""
    text = resources.files("olacfed").joinpath("data", "languages.tsv") \
        .read_text(encoding="utf-8")
    return load_codes(text)


@dataclass(frozen=True)
class GroupVersion:
    version: int
    members: tuple          # codes and/or qualified group names
    expansion: frozenset    # codes, snapshotted at registration time


@dataclass
class SchemeNode:
    """One node of a classification tree; leaves carry code sets."""
    name: str
    children: list = field(default_factory=list)
    codes: tuple = ()


@dataclass
class ClassificationScheme:
    scheme_id: str
    root: SchemeNode


class GroupRegistry:
    """Named language groups with versioned, acyclic extensional definitions.

    Re-registering a name appends a new version; old expansions stay
    reproducible through the stored per-version snapshot. Expansion of the
    latest version resolves nested groups live, so group updates propagate
    to containing groups.
    """

    def __init__(self, codes: CodeDatabase):
        self._codes = codes
        self._groups = {}   # qname -> [GroupVersion]
        self._schemes = {}  # scheme name -> tuple of legal content values

    # -- groups ----------------------------------------------------------

    def group_names(self):
        return sorted(self._groups)

    def has_group(self, qname):
        return qname in self._groups

    def versions(self, qname):
        if qname not in self._groups:
            raise RegistryError("unknown group: %s" % qname)
        return list(self._groups[qname])

    def register_group(self, qname: str, members) -> GroupVersion:
        if not QNAME_RE.match(qname):
            raise RegistryError("bad group name %r (want namespace:name)"
                                % (qname,))
        members = tuple(members)
        if not members:
            raise RegistryError("group %s: extension must be non-empty" % qname)
        for m in members:
            if ":" in m:
                if m not in self._groups and m != qname:
                    raise RegistryError("group %s: member group %s is not "
                                        "registered" % (qname, m))
            elif m.upper() not in self._codes:
                raise RegistryError("group %s: unknown code %s" % (qname, m))
        self._check_acyclic(qname, members)
        expansion = self._expand_members(members)
        version = GroupVersion(
            version=len(self._groups.get(qname, ())) + 1,
            members=members,
            expansion=frozenset(expansion),
        )
        self._groups.setdefault(qname, []).append(version)
        return version

    def _check_acyclic(self, qname, members):
        # DFS over latest extensions, with the proposed definition in place.
        def latest(name):
            if name == qname:
                return members
            return self._groups[name][-1].members

        stack = [(qname, [qname])]
        while stack:
            name, path = stack.pop()
            for m in latest(name):
                if ":" not in m:
                    continue
                if m in path:
                    raise RegistryError(
                        "cycle: %s" % " -> ".join(path + [m]))
                stack.append((m, path + [m]))

    def _expand_members(self, members):
        out = set()
        for m in members:
            if ":" in m:
                out |= self.expand_group(m)
            else:
                out.add(m.upper())
        return out

    def expand_group(self, qname: str, version: int | None = None) -> set:
        """Transitive closure of a group, flattened to codes.

        With an explicit version, returns the snapshot taken when that
        version was registered; otherwise resolves the latest definitions
        live.
        """
        if qname not in self._groups:
            raise RegistryError("unknown group: %s" % qname)
        if version is not None:
            for gv in self._groups[qname]:
                if gv.version == version:
                    return set(gv.expansion)
            raise RegistryError("group %s has no version %d" % (qname, version))
        return self._expand_members(self._groups[qname][-1].members)

    def register_classification(self, scheme: ClassificationScheme,
                                namespace: str) -> list:
        """Register one group per tree node, bottom-up.

        Each node's group is the union of its leaf code sets and child
        groups; the root's expansion is the union of all leaf codes.
        Returns the registered qualified names, root last.
        """
        registered = []

        def walk(node):
            members = []
            for child in node.children:
                members.append(walk(child))
            for code in node.codes:
                if code.upper() not in self._codes:
                    raise RegistryError("scheme %s: unknown code %s"
                                        % (scheme.scheme_id, code))
                members.append(code)
            qname = "%s:%s" % (namespace, node.name)
            self.register_group(qname, members)
            registered.append(qname)
            return qname

        walk(scheme.root)
        return registered

    # -- scheme vocabularies ----------------------------------------------

    def register_scheme(self, name: str, values) -> tuple:
        """Register an encoding scheme as a controlled vocabulary of content
        values. Duplicate names are rejected."""
        if name in self._schemes:
            raise RegistryError("scheme %r already registered" % (name,))
        values = tuple(values)
        if not values:
            raise RegistryError("scheme %r: value list must be non-empty"
                                % (name,))
        self._schemes[name] = values
        return values

    def scheme_names(self):
        return sorted(self._schemes)

    def scheme_values(self, name):
        if name not in self._schemes:
            raise RegistryError("unknown scheme: %s" % name)
        return self._schemes[name]

    def schemes_table(self) -> dict:
        """Scheme name -> value list, in the shape validate_record expects."""
        return {name: list(values) for name, values in self._schemes.items()}

    # -- persistence -------------------------------------------------------

    def save(self, registry_dir):
        registry_dir = Path(registry_dir)
        registry_dir.mkdir(parents=True, exist_ok=True)
        groups = {
            qname: [{"version": gv.version, "members": list(gv.members),
                     "expansion": sorted(gv.expansion)}
                    for gv in versions]
            for qname, versions in self._groups.items()
        }
        (registry_dir / "groups.json").write_text(
            json.dumps(groups, indent=2, sort_keys=True), encoding="utf-8")
        (registry_dir / "schemes.json").write_text(
            json.dumps(self.schemes_table(), indent=2, sort_keys=True),
            encoding="utf-8")

    @classmethod
    def load(cls, codes: CodeDatabase, registry_dir) -> "GroupRegistry":
        registry = cls(codes)
        registry_dir = Path(registry_dir)
        groups_file = registry_dir / "groups.json"
        if groups_file.exists():
            data = json.loads(groups_file.read_text(encoding="utf-8"))
            for qname, versions in data.items():
                registry._groups[qname] = [
                    GroupVersion(v["version"], tuple(v["members"]),
                                 frozenset(v["expansion"]))
                    for v in sorted(versions, key=lambda v: v["version"])
                ]
        schemes_file = registry_dir / "schemes.json"
        if schemes_file.exists():
            data = json.loads(schemes_file.read_text(encoding="utf-8"))
            for name, values in data.items():
                registry._schemes[name] = tuple(values)
        return registry
