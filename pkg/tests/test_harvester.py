import urllib.error

import pytest

from olacfed import fixtures as fx
from olacfed import harvester as hv
from olacfed import metadata_core as mc
from conftest import Federation


def fresh_full_catalog(providers):
    catalog = hv.UnionCatalog()
    harvester = hv.Harvester(catalog)
    for summary in harvester.harvest_all(providers, mode="full"):
        assert not summary.failed, summary.error
    return catalog


def entries(catalog):
    return dict(catalog.snapshot().entries)


class TestHarvest:
    def test_full_harvest_counts(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        assert len(catalog) == fx.TOTAL_RECORDS
        for archive_id, size in fx.ARCHIVE_SIZES.items():
            assert len(catalog.archive_keys(archive_id)) == size

    def test_incremental_without_cursor_is_error(self, federation):
        harvester = hv.Harvester(hv.UnionCatalog())
        with pytest.raises(hv.HarvestError):
            harvester.harvest(federation.providers[0], mode="incremental")

    def test_incremental_after_no_mutations_is_noop(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        harvester = hv.Harvester(catalog)
        for provider in federation.providers:
            summary = harvester.harvest(provider, mode="incremental")
            assert summary.counts == (0, 0, 0)

    def test_incremental_sees_exactly_the_mutations(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        harvester = hv.Harvester(catalog)
        repo = federation.repos["sinica"]
        mutated = repo.identifiers()[:7]
        for identifier in mutated:
            record = repo.get(identifier)
            repo.put_record(mc.MetadataRecord(
                identifier, None,
                record.elements + (mc.Element("Description", "revised"),)))
        provider = next(p for p in federation.providers
                        if p.archive_id == "sinica")
        summary = harvester.harvest(provider, mode="incremental")
        assert summary.counts == (0, 7, 0)

    def test_incremental_processes_deletion_stubs(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        harvester = hv.Harvester(catalog)
        repo = federation.repos["sinica"]
        victims = [i for i in repo.identifiers() if "filler" in i][:2]
        for identifier in victims:
            repo.delete_record(identifier)
        provider = next(p for p in federation.providers
                        if p.archive_id == "sinica")
        summary = harvester.harvest(provider, mode="incremental")
        assert summary.counts == (0, 0, 2)
        assert len(catalog) == fx.TOTAL_RECORDS - 2

    def test_convergence_equals_fresh_full_harvest(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        harvester = hv.Harvester(catalog)
        repo = federation.repos["sinica"]
        for identifier in repo.identifiers()[:7]:
            record = repo.get(identifier)
            repo.put_record(mc.MetadataRecord(
                identifier, None,
                record.elements + (mc.Element("Description", "rev"),)))
        for identifier in [i for i in repo.identifiers()
                           if "filler" in i][:2]:
            repo.delete_record(identifier)
        for summary in harvester.harvest_all(federation.providers,
                                             mode="incremental"):
            assert not summary.failed
        assert entries(catalog) == entries(
            fresh_full_catalog(federation.providers))

    def test_failed_provider_isolated(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        before = {k: v for k, v in entries(catalog).items() if k[0] == "ldc"}
        broken = hv.ProviderConfig("sinica", "http://127.0.0.1:1")
        harvester = hv.Harvester(catalog, backoff=0.001)
        summary = harvester.harvest(broken, mode="full")
        assert summary.failed
        assert catalog.cursor("sinica") is not None  # cursor unmoved
        after = {k: v for k, v in entries(catalog).items() if k[0] == "ldc"}
        assert before == after
        assert len(catalog.archive_keys("sinica")) == fx.ARCHIVE_SIZES["sinica"]

    def test_network_failure_retries_then_fails(self):
        attempts = []

        def failing_fetch(url):
            attempts.append(url)
            raise urllib.error.URLError("down")

        harvester = hv.Harvester(hv.UnionCatalog(), fetch=failing_fetch,
                                 backoff=0.001)
        summary = harvester.harvest(hv.ProviderConfig("a", "http://x"),
                                    mode="full")
        assert summary.failed
        assert len(attempts) == hv.RETRY_ATTEMPTS

    def test_unparseable_record_skipped(self, federation):
        real = hv.Harvester(hv.UnionCatalog())

        def corrupting_fetch(url):
            body = real._http_fetch(url)
            return body.replace(b"<title>Amis field notes</title>",
                                b"<banana>oops</banana>", 1)

        catalog = hv.UnionCatalog()
        harvester = hv.Harvester(catalog, fetch=corrupting_fetch)
        provider = next(p for p in federation.providers
                        if p.archive_id == "sinica")
        summary = harvester.harvest(provider, mode="full")
        assert not summary.failed
        assert summary.skipped == 1
        assert len(catalog) == fx.ARCHIVE_SIZES["sinica"] - 1

    def test_cross_archive_identifier_collision(self):
        catalog = hv.UnionCatalog()
        a = mc.MetadataRecord("shared:1", "2002-01-01T00:00:00Z",
                              [mc.Element("Title", "from a")])
        b = mc.MetadataRecord("shared:1", "2002-01-01T00:00:00Z",
                              [mc.Element("Title", "from b")])
        catalog.upsert("arch-a", a)
        catalog.upsert("arch-b", b)
        assert len(catalog) == 2
        assert catalog.get("arch-a", "shared:1") != catalog.get("arch-b",
                                                                "shared:1")

    def test_providers_file_parsing(self, tmp_path):
        path = tmp_path / "providers.txt"
        path.write_text("# comment\nsinica http://localhost:1\n\n"
                        "ldc http://localhost:2\n")
        providers = hv.load_providers_file(path)
        assert [p.archive_id for p in providers] == ["sinica", "ldc"]

    def test_providers_file_duplicate_rejected(self, tmp_path):
        path = tmp_path / "providers.txt"
        path.write_text("a http://x\na http://y\n")
        with pytest.raises(hv.HarvestError):
            hv.load_providers_file(path)


class TestSnapshot:
    def test_snapshot_isolated_from_later_harvests(self, federation):
        catalog = fresh_full_catalog(federation.providers)
        snap = catalog.snapshot()
        count = len(snap)
        repo = federation.repos["sinica"]
        repo.put_record(mc.MetadataRecord("sinica:new-1", None,
                                          [mc.Element("Title", "new")]))
        hv.Harvester(catalog).harvest(
            next(p for p in federation.providers if p.archive_id == "sinica"),
            mode="incremental")
        assert len(snap) == count
        assert len(catalog) == count + 1

    def test_snapshot_count_matches_catalog(self, fixture_catalog):
        assert len(fixture_catalog.snapshot()) == len(fixture_catalog)

    def test_snapshots_equal_without_intervening_harvest(self, fixture_catalog):
        assert (fixture_catalog.snapshot().entries
                == fixture_catalog.snapshot().entries)


class TestJournal:
    def test_catalog_reloads_from_journal(self, federation, tmp_path):
        state = tmp_path / "state"
        catalog = hv.UnionCatalog(state)
        harvester = hv.Harvester(catalog)
        for summary in harvester.harvest_all(federation.providers, mode="full"):
            assert not summary.failed
        reloaded = hv.UnionCatalog(state)
        assert entries(reloaded) == entries(catalog)
        assert reloaded.cursors() == catalog.cursors()

    def test_compaction_preserves_state(self, federation, tmp_path):
        state = tmp_path / "state"
        catalog = hv.UnionCatalog(state)
        hv.Harvester(catalog).harvest_all(federation.providers, mode="full")
        before = entries(catalog)
        catalog.compact()
        reloaded = hv.UnionCatalog(state)
        assert entries(reloaded) == before
