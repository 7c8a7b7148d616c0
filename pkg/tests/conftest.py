import random
import threading

import pytest

from olacfed import fixtures as fx
from olacfed import harvester as hv
from olacfed import metadata_core as mc
from olacfed import provider as pv

CONTENT_POOL = (
    "",
    "plain text",
    "Amis field notes",
    "阿美語田野筆記",
    "données élicitées sur le terrain",
    "Έρευνα πεδίου",
    "angle <brackets> & \"quotes\" 'too'",
    "  leading и trailing  ",
    "mixed ひらがな with ascii",
)
LANG_POOL = (None, "en", "zh", "fr", "ja", "x-sil-AIS")
CODE_POOL = (None, "x-sil-BNN", "x-sil-ENG", "Unix/Linux", "sparc",
             "author", "lexicon/bilingual", "nonesuch")
SCHEME_POOL = (None, None, None, "AS-Bunun-dialects")
REFINE_POOL = {"Relation": ("isPartOf", "hasPart"),
               "Date": ("created", "issued")}


def gen_element(rng: random.Random) -> mc.Element:
    name = rng.choice(mc.ALL_ELEMENT_NAMES)
    refines = REFINE_POOL.get(name)
    return mc.Element(
        name=name,
        content=rng.choice(CONTENT_POOL),
        refine=rng.choice(refines) if refines and rng.random() < 0.5 else None,
        code=rng.choice(CODE_POOL),
        lang=rng.choice(LANG_POOL),
        scheme=rng.choice(SCHEME_POOL),
    )


def gen_record(rng: random.Random, n: int) -> mc.MetadataRecord:
    identifier = rng.choice((
        "arch:rec-%d" % n,
        "oai:example.org/item %d" % n,     # space needs file-safe encoding
        "arch:рес-%d" % n,                 # non-ASCII identifier
    ))
    datestamp = None
    if rng.random() < 0.8:
        datestamp = pv.format_stamp(1_000_000_000 + rng.randrange(10 ** 9))
    elements = [gen_element(rng) for _ in range(rng.randrange(0, 8))]
    return mc.MetadataRecord(identifier, datestamp, elements)


class Federation:
    """The three fixture providers served over live HTTP."""

    def __init__(self, root, page_size=10):
        self.root = root
        self.repos = fx.build_federation(root)
        self.servers = {}
        self.providers = []
        for archive_id in sorted(self.repos):
            srv = pv.make_server(self.repos[archive_id], port=0,
                                 page_size=page_size)
            threading.Thread(target=srv.serve_forever, daemon=True).start()
            self.servers[archive_id] = srv
            url = "http://127.0.0.1:%d" % srv.server_address[1]
            self.providers.append(hv.ProviderConfig(archive_id, url))

    def base_url(self, archive_id):
        for p in self.providers:
            if p.archive_id == archive_id:
                return p.base_url
        raise KeyError(archive_id)

    def stop(self):
        for srv in self.servers.values():
            srv.shutdown()
            srv.server_close()


@pytest.fixture
def federation(tmp_path):
    fed = Federation(tmp_path)
    yield fed
    fed.stop()


def catalog_from_repos(repos) -> hv.UnionCatalog:
    """Build an in-memory catalog directly from repositories (no HTTP)."""
    catalog = hv.UnionCatalog()
    for archive_id, repo in repos.items():
        for identifier in repo.identifiers():
            catalog.upsert(archive_id, repo.get(identifier))
    return catalog


@pytest.fixture
def fixture_catalog(tmp_path):
    return catalog_from_repos(fx.build_federation(tmp_path))


# Acceptance checks register themselves here (test name -> (number, title))
# so the verdict lines print even under output capture.
ACCEPTANCE_TITLES = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    entry = ACCEPTANCE_TITLES.get(report.nodeid.rsplit("::", 1)[-1])
    if entry is not None:
        number, title = entry
        verdict = "PASS" if report.passed else "FAIL"
        print("\ncriterion %d: %s  %s" % (number, verdict, title), end="")


def directional_queries(x: str, y: str):
    """The six directional query forms over a language pair."""
    from olacfed.query_engine import Query
    return (
        Query(from_lang=x),
        Query(from_lang=y),
        Query(to_lang=x),
        Query(to_lang=y),
        Query(from_lang=x, to_lang=y),
        Query(from_lang=y, to_lang=x),
    )
