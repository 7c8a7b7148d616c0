import itertools
import random

import pytest

from olacfed import language_registry as lr
from olacfed import metadata_core as mc


@pytest.fixture
def codes():
    return lr.default_code_database()


@pytest.fixture
def registry(codes):
    return lr.GroupRegistry(codes)


class TestLoadCodes:
    def test_taroko_loads_seediq_absent(self, codes):
        trv = codes.get("TRV")
        assert trv.primary_name == "Taroko"
        assert "Seediq" not in trv.alternate_names
        assert codes.resolve_name("Seediq") == []

    def test_nataoran_and_amis_distinct(self, codes):
        assert codes.get("AIS").primary_name == "Nataoran"
        assert codes.get("ALV").primary_name == "Amis"

    def test_empty_file(self):
        assert len(lr.load_codes("")) == 0

    def test_duplicate_code_rejected(self):
        text = ("ZZA\tOne\t\tNowhere\tF\n"
                "ZZA\tTwo\t\tNowhere\tF\n")
        with pytest.raises(lr.LoadError) as exc:
            lr.load_codes(text)
        assert "ZZA" in str(exc.value)

    def test_malformed_row_names_line(self):
        text = "ZZA\tOne\t\tNowhere\tF\nnot-a-row\n"
        with pytest.raises(lr.LoadError) as exc:
            lr.load_codes(text)
        assert exc.value.line == 2

    def test_family_path_parsed(self, codes):
        assert codes.get("BNN").family_path == (
            "Austronesian", "Formosan", "Bunun")


class TestResolveName:
    def test_amis_primary(self, codes):
        assert codes.resolve_name("Amis") == [("ALV", "primary")]

    def test_case_insensitive(self, codes):
        assert codes.resolve_name("amis") == [("ALV", "primary")]

    def test_omitted_language_misses(self, codes):
        assert codes.resolve_name("Luilang") == []
        assert codes.resolve_name("Quaquat") == []

    def test_alternate_match(self, codes):
        assert codes.resolve_name("Truku") == [("TRV", "alternate")]

    def test_primary_before_alternate_ordering(self):
        db = lr.load_codes("AAA\tSame\t\tX\tF\nBBB\tOther\tSame\tX\tF\n")
        assert db.resolve_name("Same") == [("AAA", "primary"),
                                           ("BBB", "alternate")]

    def test_soundness(self, codes):
        for name in ("Amis", "Truku", "Bunun", "English", "Mandarin"):
            for code, _ in codes.resolve_name(name):
                assert codes.get(code) is not None


class TestGroups:
    def test_register_amis_group(self, registry):
        version = registry.register_group("AS:Amis", ["ALV", "AIS"])
        assert version.version == 1
        assert registry.expand_group("AS:Amis") == {"ALV", "AIS"}

    def test_self_cycle_rejected(self, registry):
        with pytest.raises(lr.RegistryError, match="cycle"):
            registry.register_group("G:Self", ["G:Self"])

    def test_indirect_cycle_rejected(self, registry):
        registry.register_group("G:A", ["TAY"])
        registry.register_group("G:B", ["G:A"])
        with pytest.raises(lr.RegistryError, match="cycle"):
            registry.register_group("G:A", ["G:B"])

    def test_unknown_code_rejected_naming_it(self, registry):
        with pytest.raises(lr.RegistryError, match="QQQ"):
            registry.register_group("G:Bad", ["QQQ"])

    def test_unregistered_member_group_rejected(self, registry):
        with pytest.raises(lr.RegistryError):
            registry.register_group("G:Outer", ["G:Missing"])

    def test_singleton(self, registry):
        registry.register_group("G:One", ["BNN"])
        assert registry.expand_group("G:One") == {"BNN"}

    def test_unknown_group_expansion_is_error(self, registry):
        with pytest.raises(lr.RegistryError):
            registry.expand_group("G:Nope")

    def test_three_level_scheme_expands_to_leaf_union(self, registry):
        scheme = lr.ClassificationScheme("as-formosan", lr.SchemeNode(
            "Formosan",
            children=[
                lr.SchemeNode("Atayalic", codes=("TAY", "TRV")),
                lr.SchemeNode("East-Formosan", codes=("ALV", "AIS")),
            ],
            codes=("BNN",),
        ))
        registry.register_classification(scheme, "AS")
        # Independent oracle: brute-force union over the tree's leaves.
        assert registry.expand_group("AS:Formosan") == {
            "TAY", "TRV", "ALV", "AIS", "BNN"}
        assert registry.expand_group("AS:Atayalic") == {"TAY", "TRV"}

    def test_versions_keep_old_expansions(self, registry):
        registry.register_group("AS:Amis", ["ALV"])
        registry.register_group("AS:Amis", ["ALV", "AIS"])
        assert registry.expand_group("AS:Amis", version=1) == {"ALV"}
        assert registry.expand_group("AS:Amis", version=2) == {"ALV", "AIS"}
        assert registry.expand_group("AS:Amis") == {"ALV", "AIS"}

    def test_expansion_monotone_under_member_addition(self, registry):
        registry.register_group("G:Inner", ["TAY"])
        registry.register_group("G:Outer", ["G:Inner", "BNN"])
        before = registry.expand_group("G:Outer")
        registry.register_group("G:Inner", ["TAY", "TRV"])
        after = registry.expand_group("G:Outer")
        assert before <= after

    def test_random_forests_match_reachability_oracle(self, codes):
        rng = random.Random(11)
        pool = [e.code for e in codes.entries()]
        for _ in range(20):
            registry = lr.GroupRegistry(codes)
            defs = {}
            for g in range(12):
                qname = "R:G%d" % g
                members = rng.sample(pool, rng.randrange(1, 4))
                members += rng.sample(sorted(defs), min(len(defs),
                                                        rng.randrange(0, 3)))
                registry.register_group(qname, members)
                defs[qname] = members
            for qname in defs:
                # Brute-force reachability over the definition graph.
                expected, stack = set(), [qname]
                while stack:
                    node = stack.pop()
                    for m in defs[node]:
                        if ":" in m:
                            stack.append(m)
                        else:
                            expected.add(m)
                assert registry.expand_group(qname) == expected

    def test_registration_order_permutations_agree(self, codes):
        definitions = [("P:A", ["TAY"]), ("P:B", ["BNN"]),
                       ("P:C", ["P:A", "P:B", "TRV"])]
        results = []
        for order in itertools.permutations(definitions):
            registry = lr.GroupRegistry(codes)
            ok = True
            try:
                for qname, members in order:
                    registry.register_group(qname, members)
            except lr.RegistryError:
                ok = False  # orders violating register-before-use
            if ok:
                results.append({q: frozenset(registry.expand_group(q))
                                for q, _ in definitions})
        assert results and all(r == results[0] for r in results)

    def test_bad_qname_rejected(self, registry):
        with pytest.raises(lr.RegistryError):
            registry.register_group("NoNamespace", ["TAY"])


class TestSchemeVocabularies:
    FIVE = ["Northern/Takituduh", "Northern/Takibakha", "Central/Takbanuaz",
            "Central/Takivatan", "Southern/Isbukun"]

    def test_registered_scheme_constrains_content(self, registry):
        registry.register_scheme("AS-Bunun-dialects", self.FIVE)
        schemes = registry.schemes_table()
        ok = mc.MetadataRecord("a:1", None, [
            mc.Element("Language", "Southern/Isbukun", code="x-sil-BNN",
                       scheme="AS-Bunun-dialects")])
        assert mc.validate_record(ok, schemes=schemes).is_valid

    def test_non_member_content_rejected(self, registry):
        registry.register_scheme("AS-Bunun-dialects", self.FIVE)
        bad = mc.MetadataRecord("a:1", None, [
            mc.Element("Language", "Eastern/Nonesuch",
                       scheme="AS-Bunun-dialects")])
        assert not mc.validate_record(bad,
                                      schemes=registry.schemes_table()).is_valid

    def test_duplicate_scheme_rejected(self, registry):
        registry.register_scheme("S", ["a"])
        with pytest.raises(lr.RegistryError):
            registry.register_scheme("S", ["b"])

    def test_outcome_independent_of_other_registrations(self, codes):
        record = mc.MetadataRecord("a:1", None, [
            mc.Element("Language", "Southern/Isbukun",
                       scheme="AS-Bunun-dialects")])
        other = [("Zed", ["z1", "z2"]), ("Alpha", ["a1"])]
        outcomes = []
        for order in itertools.permutations(other):
            registry = lr.GroupRegistry(codes)
            for name, values in order[:1]:
                registry.register_scheme(name, values)
            registry.register_scheme("AS-Bunun-dialects", self.FIVE)
            for name, values in order[1:]:
                registry.register_scheme(name, values)
            report = mc.validate_record(record,
                                        schemes=registry.schemes_table())
            outcomes.append(report.is_valid)
        assert outcomes and all(o == outcomes[0] for o in outcomes)

    def test_code_may_be_omitted_with_scheme_content(self, registry):
        # The ambiguity workaround: scheme-constrained content, no code.
        registry.register_scheme("AS-Bunun-dialects", self.FIVE)
        rec = mc.MetadataRecord("a:1", None, [
            mc.Element("Language", "Central/Takivatan",
                       scheme="AS-Bunun-dialects")])
        assert mc.validate_record(rec,
                                  schemes=registry.schemes_table()).is_valid


class TestPersistence:
    def test_save_and_load_round_trip(self, codes, tmp_path):
        registry = lr.GroupRegistry(codes)
        registry.register_group("AS:Amis", ["ALV", "AIS"])
        registry.register_group("AS:Wider", ["AS:Amis", "BNN"])
        registry.register_scheme("S", ["v1", "v2"])
        registry.save(tmp_path)
        loaded = lr.GroupRegistry.load(codes, tmp_path)
        assert loaded.expand_group("AS:Wider") == {"ALV", "AIS", "BNN"}
        assert loaded.scheme_values("S") == ("v1", "v2")
