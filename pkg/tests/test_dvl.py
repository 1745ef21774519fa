from __future__ import annotations

import json

import pytest

from harmonize.dvl import DerivedVariableLibrary, DerivedVariableSpec, DOC_COLUMNS
from harmonize.errors import DvlError, UnknownName


def mmse_cep_spec(**overrides):
    base = dict(
        name="MMSE-CEP",
        components=("MMSE_category", "CEP_bin"),
        functionName="MMSECEPfunction",
        functionBody='MMSE_category ++ "_" ++ CEP_bin',
        outputType="categorical",
    )
    base.update(overrides)
    return DerivedVariableSpec(**base)


class TestSpec:
    def test_canonical_json_is_key_sorted_and_compact(self):
        text = mmse_cep_spec().canonical_json()
        payload = json.loads(text)
        assert list(payload) == sorted(payload)
        assert ": " not in text and ", " not in text

    def test_content_hash_stable(self):
        assert mmse_cep_spec().content_hash() == mmse_cep_spec().content_hash()

    def test_content_hash_sensitive_to_body(self):
        a = mmse_cep_spec()
        b = mmse_cep_spec(functionBody='CEP_bin ++ "_" ++ MMSE_category')
        assert a.content_hash() != b.content_hash()

    def test_rejects_unknown_idents(self):
        with pytest.raises(DvlError):
            mmse_cep_spec(functionBody="MMSE_category ++ ghost")

    def test_rejects_empty_components(self):
        with pytest.raises(DvlError):
            mmse_cep_spec(components=())

    def test_rejects_bad_output_type(self):
        with pytest.raises(DvlError):
            mmse_cep_spec(outputType="string")

    def test_check_types_against_plan(self):
        spec = mmse_cep_spec()
        assert spec.check_types({"MMSE_category": "categorical",
                                 "CEP_bin": "categorical"}) == "categorical"

    def test_check_types_mismatch(self):
        spec = DerivedVariableSpec(
            name="sum", components=("a", "b"), functionName="sumFn",
            functionBody="a + b", outputType="categorical")
        with pytest.raises(DvlError):
            spec.check_types({"a": "continuous", "b": "continuous"})


class TestLibrary:
    def test_add_and_get(self):
        lib = DerivedVariableLibrary()
        digest = lib.add(mmse_cep_spec(), author="alice")
        assert lib.get("MMSE-CEP") == mmse_cep_spec()
        assert lib.get_version("MMSE-CEP").contentHash == digest
        assert lib.names() == ["MMSE-CEP"]

    def test_idempotent_readd(self):
        lib = DerivedVariableLibrary()
        lib.add(mmse_cep_spec(), author="alice")
        lib.add(mmse_cep_spec(), author="bob")
        assert len(lib.catalog()) == 1
        # first author wins since the second add was a no-op
        assert lib.get_version("MMSE-CEP").author == "alice"

    def test_new_body_appends_version(self):
        lib = DerivedVariableLibrary()
        lib.add(mmse_cep_spec(), author="alice")
        changed = mmse_cep_spec(functionBody='CEP_bin ++ "_" ++ MMSE_category')
        lib.add(changed, author="bob")
        assert lib.get_version("MMSE-CEP").version == 2
        assert lib.get("MMSE-CEP") == changed
        assert lib.get("MMSE-CEP", version=1) == mmse_cep_spec()

    def test_unknown_name(self):
        lib = DerivedVariableLibrary()
        with pytest.raises(UnknownName):
            lib.get("nope")
        lib.add(mmse_cep_spec(), author="a")
        with pytest.raises(UnknownName):
            lib.get("MMSE-CEP", version=9)


class TestDocCsv:
    def test_header(self):
        lib = DerivedVariableLibrary()
        first = lib.export_doc().decode().splitlines()[0]
        assert first.split(",") == DOC_COLUMNS

    def test_roundtrip(self):
        lib = DerivedVariableLibrary()
        lib.add(mmse_cep_spec(), author="alice", created_at="2026-01-01T00:00:00+00:00")
        doc = lib.export_doc()
        again = DerivedVariableLibrary.from_doc(doc)
        assert again.get("MMSE-CEP") == mmse_cep_spec()
        assert again.export_doc() == doc

    def test_selected_names_only_latest(self):
        lib = DerivedVariableLibrary()
        lib.add(mmse_cep_spec(), author="a")
        lib.add(mmse_cep_spec(functionBody="CEP_bin ++ MMSE_category"), author="a")
        lines = lib.export_doc(names=["MMSE-CEP"]).decode().splitlines()
        assert len(lines) == 2

    def test_tampered_hash_rejected(self):
        lib = DerivedVariableLibrary()
        lib.add(mmse_cep_spec(), author="a")
        doc = lib.export_doc().decode()
        tampered = doc.replace(mmse_cep_spec().content_hash(), "0" * 64)
        with pytest.raises(DvlError):
            DerivedVariableLibrary.from_doc(tampered)


class TestDirectoryPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        lib = DerivedVariableLibrary()
        lib.add(mmse_cep_spec(), author="alice", created_at="2026-01-01T00:00:00+00:00")
        lib.add(mmse_cep_spec(functionBody="CEP_bin ++ MMSE_category"),
                author="bob", created_at="2026-02-01T00:00:00+00:00")
        lib.save(tmp_path / "dvl")
        loaded = DerivedVariableLibrary.load(tmp_path / "dvl")
        assert loaded.catalog() == lib.catalog()
        assert loaded.export_doc() == lib.export_doc()

    def test_layout(self, tmp_path):
        lib = DerivedVariableLibrary()
        digest = lib.add(mmse_cep_spec(), author="a")
        lib.save(tmp_path / "dvl")
        assert (tmp_path / "dvl" / "catalog.csv").exists()
        assert (tmp_path / "dvl" / "specs" / f"{digest}.json").exists()

    def test_corrupted_spec_file(self, tmp_path):
        lib = DerivedVariableLibrary()
        digest = lib.add(mmse_cep_spec(), author="a")
        lib.save(tmp_path / "dvl")
        spec_file = tmp_path / "dvl" / "specs" / f"{digest}.json"
        spec_file.write_text(spec_file.read_text().replace("MMSECEPfunction", "other"))
        with pytest.raises(DvlError):
            DerivedVariableLibrary.load(tmp_path / "dvl")

    def test_not_a_dvl_dir(self, tmp_path):
        with pytest.raises(DvlError):
            DerivedVariableLibrary.load(tmp_path)
