"""Builds the demo federation: three providers holding 100 records total,
seeded from the worked multilingual-cataloging examples (Formosan field
notes, directional MT systems, lexicons, text collections), plus filler.

Used by the test suite and by `olacfed fixtures build` for live demos.
"""

from __future__ import annotations

import json
import shutil
from importlib import resources
from pathlib import Path

from .metadata_core import Element, MetadataRecord
from .provider import Repository, parse_stamp, format_stamp

ARCHIVE_SIZES = {"sinica": 40, "ldc": 35, "elra": 25}
TOTAL_RECORDS = 100

BUNUN_DIALECT_SCHEME = "AS-Bunun-dialects"
BUNUN_DIALECTS = (
    "Northern/Takituduh",
    "Northern/Takibakha",
    "Central/Takbanuaz",
    "Central/Takivatan",
    "Southern/Isbukun",
)

_BASE_EPOCH = parse_stamp("2002-05-20T00:00:00Z")

# Keys of records that the acceptance criteria refer to by name.
FIELDNOTES_KEY = ("sinica", "sinica:fieldnotes-001")
BITEXT_KEY = ("sinica", "sinica:bitext-001")
AMIS_ALV_KEY = ("sinica", "sinica:amis-dictionary-001")
AMIS_AIS_KEY = ("sinica", "sinica:nataoran-texts-001")
UNIDIRECTIONAL_MT_KEY = ("ldc", "ldc:mt-kkn-eng-001")    # Korean -> English
BIDIRECTIONAL_MT_KEY = ("ldc", "ldc:mt-jpn-frn-001")     # Japanese <-> French
UNIDIRECTIONAL_PAIR = ("x-sil-KKN", "x-sil-ENG")         # (S, T)
BIDIRECTIONAL_PAIR = ("x-sil-JPN", "x-sil-FRN")          # (X, Y)


def _el(name, content="", **attrs):
    return Element(name=name, content=content, **attrs)


def _sinica_records():
    recs = [
        ("sinica:fieldnotes-001", [
            _el("Title", "Amis field notes"),
            _el("Title", "阿美語田野筆記", lang="zh"),
            _el("Subject.language", code="x-sil-AIS"),
            _el("Language", code="x-sil-CFR"),
            _el("Language", code="x-sil-ENG"),
            _el("Type.linguistic", code="description/field-notes"),
            _el("Relation", "sinica:bitext-001", refine="hasPart"),
        ]),
        ("sinica:bitext-001", [
            _el("Title", "Amis elicitation bitext"),
            _el("Subject.language", code="x-sil-AIS"),
            _el("Language", code="x-sil-CFR"),
            _el("Type.linguistic", code="transcription"),
            _el("Relation", "sinica:fieldnotes-001", refine="isPartOf"),
        ]),
        ("sinica:amis-dictionary-001", [
            _el("Title", "Amis dictionary"),
            _el("Language", code="x-sil-ALV"),
            _el("Type.linguistic", code="lexicon/monolingual"),
        ]),
        ("sinica:nataoran-texts-001", [
            _el("Title", "Nataoran text collection"),
            _el("Language", code="x-sil-AIS"),
            _el("Type.linguistic", code="transcription"),
        ]),
        ("sinica:formosan-collection-001", [
            _el("Title", "Formosan languages text collection"),
            _el("Type", code="Collection"),
            _el("Language", code="x-sil-TAY"),
            _el("Language", code="x-sil-TRV"),
            _el("Language", code="x-sil-BNN"),
        ]),
        ("sinica:bnn-grammar-001", [
            _el("Title", "A grammar of Bunun"),
            _el("Subject.language", code="x-sil-BNN"),
            _el("Language", code="x-sil-ENG"),
            _el("Type.linguistic", code="description/grammar"),
        ]),
        ("sinica:ipa-tay-001", [
            _el("Title", "Atayal IPA transcriptions"),
            _el("Subject.language", code="x-sil-TAY"),
            _el("Type.linguistic", code="transcription/phonetic"),
        ]),
        ("sinica:annotated-trv-001", [
            _el("Title", "Taroko conversation transcripts with annotations"),
            _el("Subject.language", code="x-sil-TRV"),
            _el("Language", code="x-sil-TRV"),
            _el("Type.linguistic", code="annotation/discourse"),
        ]),
    ]
    for i, dialect in enumerate(BUNUN_DIALECTS, 1):
        recs.append(("sinica:bunun-dialect-%03d" % i, [
            _el("Title", "Bunun recordings %d" % i),
            _el("Language", dialect, code="x-sil-BNN",
                scheme=BUNUN_DIALECT_SCHEME),
        ]))
    return recs


def _ldc_records():
    return [
        ("ldc:mt-kkn-eng-001", [
            _el("Title", "Korean to English translation system"),
            _el("Subject.language", code="x-sil-KKN"),
            _el("Language", code="x-sil-ENG"),
            _el("Type", code="Software"),
        ]),
        ("ldc:mt-jpn-frn-001", [
            _el("Title", "Japanese French bidirectional translation system"),
            _el("Subject.language", code="x-sil-JPN"),
            _el("Subject.language", code="x-sil-FRN"),
            _el("Language", code="x-sil-JPN"),
            _el("Language", code="x-sil-FRN"),
            _el("Type", code="Software"),
        ]),
        ("ldc:lex-eng-001", [
            _el("Title", "English learner dictionary"),
            _el("Language", code="x-sil-ENG"),
            _el("Type.linguistic", code="lexicon/monolingual"),
        ]),
        ("ldc:lex-eng-frn-001", [
            _el("Title", "English French bilingual dictionary"),
            _el("Language", code="x-sil-ENG"),
            _el("Language", code="x-sil-FRN"),
            _el("Subject.language", code="x-sil-ENG"),
            _el("Subject.language", code="x-sil-FRN"),
            _el("Type.linguistic", code="lexicon/bilingual"),
        ]),
        ("ldc:termbank-001", [
            _el("Title", "Multilingual terminology bank"),
            _el("Language", code="x-sil-ENG"),
            _el("Language", code="x-sil-SPN"),
            _el("Language", code="x-sil-FRN"),
            _el("Subject.language", code="x-sil-ENG"),
            _el("Subject.language", code="x-sil-SPN"),
            _el("Subject.language", code="x-sil-FRN"),
            _el("Type.linguistic", code="lexicon/multilingual"),
        ]),
        ("ldc:mt-star-001", [
            _el("Title", "Mandarin to many translation system"),
            _el("Subject.language", code="x-sil-CHN"),
            _el("Language", code="x-sil-ENG"),
            _el("Language", code="x-sil-JPN"),
            _el("Language", code="x-sil-KKN"),
            _el("Type", code="Software"),
        ]),
        ("ldc:wordlists-001", [
            _el("Title", "Comparative Formosan wordlists"),
            _el("Subject.language", code="x-sil-TAY"),
            _el("Subject.language", code="x-sil-BNN"),
            _el("Subject.language", code="x-sil-TRV"),
            _el("Language", code="x-sil-ENG"),
            _el("Type.linguistic", code="lexicon/multilingual"),
        ]),
    ]


def _elra_records():
    return [
        ("elra:eng-corpus-001", [
            _el("Title", "English newswire corpus"),
            _el("Language", code="x-sil-ENG"),
            _el("Type", code="Text"),
        ]),
        ("elra:bnn-phonology-001", [
            _el("Title", "Bunun phonology sketch"),
            _el("Subject.language", code="x-sil-BNN"),
            _el("Language", code="x-sil-ENG"),
            _el("Type.linguistic", code="description"),
        ]),
        ("elra:ocr-tool-001", [
            _el("Title", "Handwriting OCR toolkit"),
            _el("Type", code="Software"),
            _el("Type.functionality", code="written/OCR"),
            _el("Format.os", code="Unix/Linux"),
            _el("Format.cpu", code="sparc"),
            _el("Format.sourcecode", code="Python"),
            _el("Rights.software", code="open-source"),
        ]),
    ]


_FILLER_LANGS = ("x-sil-ENG", "x-sil-JPN", "x-sil-FRN", "x-sil-SPN",
                 "x-sil-GER", "x-sil-CHN", "x-sil-PWN", "x-sil-TAY")
_FILLER_TYPES = ("transcription", "annotation", "description", "lexicon")
_FILLER_TITLES = ("Spoken corpus", "語料集", "Corpus oral", "Textsammlung")


def _filler(archive_id, count, start):
    recs = []
    for i in range(count):
        n = start + i
        lang = _FILLER_LANGS[n % len(_FILLER_LANGS)]
        ltype = _FILLER_TYPES[n % len(_FILLER_TYPES)]
        title = _FILLER_TITLES[n % len(_FILLER_TITLES)]
        recs.append(("%s:filler-%03d" % (archive_id, n), [
            _el("Title", "%s %d" % (title, n)),
            _el("Language", code=lang),
            _el("Type.linguistic", code=ltype),
            _el("Description", "Filler resource number %d" % n),
        ]))
    return recs


def archive_records(archive_id):
    named = {"sinica": _sinica_records, "ldc": _ldc_records,
             "elra": _elra_records}[archive_id]()
    return named + _filler(archive_id, ARCHIVE_SIZES[archive_id] - len(named),
                           start=1)


def build_provider(root, archive_id) -> Repository:
    """Materialize one fixture provider under `root` with deterministic
    datestamps."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    schemes = {BUNUN_DIALECT_SCHEME: list(BUNUN_DIALECTS)}
    (root / "schemes.json").write_text(json.dumps(schemes, indent=2),
                                       encoding="utf-8")
    repo = Repository(root, archive_id)
    offset = {"sinica": 0, "ldc": 1000, "elra": 2000}[archive_id]
    for i, (identifier, elements) in enumerate(archive_records(archive_id)):
        stamp = format_stamp(_BASE_EPOCH + offset + i)
        repo.put_record(MetadataRecord(identifier, stamp, elements))
    return repo


def build_federation(root) -> dict:
    """Build all three providers plus a registry directory; returns the
    repositories keyed by archive id."""
    root = Path(root)
    repos = {}
    for archive_id in ARCHIVE_SIZES:
        repos[archive_id] = build_provider(root / "providers" / archive_id,
                                           archive_id)
    registry_dir = root / "registry"
    registry_dir.mkdir(parents=True, exist_ok=True)
    codes_src = resources.files("olacfed").joinpath("data", "languages.tsv")
    with resources.as_file(codes_src) as src:
        shutil.copy(src, registry_dir / "languages.tsv")
    return repos
