from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from harmonize.cli import main
from harmonize.manifest import load_manifest

from conftest import PAQUID_CSV, PAQUID_DETAILS, PAQUID_VARIABLES, PAQUID_SELECTED


@pytest.fixture
def runner():
    return CliRunner()


def run_paquid_recode(runner, tmp_path, *extra):
    out = tmp_path / "out.csv"
    result = runner.invoke(main, [
        "recode",
        "--source", str(PAQUID_CSV),
        "--variables", str(PAQUID_VARIABLES),
        "--details", str(PAQUID_DETAILS),
        "--database", "paquid",
        "--select", ",".join(PAQUID_SELECTED),
        "--passthrough", "ID,age,MMSE",
        "--out", str(out),
        *extra,
    ])
    return result, out


class TestValidate:
    def test_golden_ok(self, runner):
        result = runner.invoke(main, [
            "validate",
            "--variables", str(PAQUID_VARIABLES),
            "--details", str(PAQUID_DETAILS),
        ])
        assert result.exit_code == 0
        assert result.output.startswith("ok:")

    def test_broken_sheet_exits_1(self, runner, tmp_path):
        bad = tmp_path / "vars.csv"
        bad.write_text("variable,variableType\nsex,categorical\n")
        result = runner.invoke(main, [
            "validate", "--variables", str(bad), "--details", str(PAQUID_DETAILS),
        ])
        assert result.exit_code == 1
        assert "error:" in result.output

    def test_dangling_details_exits_1(self, runner, tmp_path):
        ds = tmp_path / "details.csv"
        ds.write_text(
            "variable,typeEnd,typeStart,databaseStart,variableStart,recEnd,recStart\n"
            "ghost,categorical,categorical,paquid,male,x,1\n")
        result = runner.invoke(main, [
            "validate", "--variables", str(PAQUID_VARIABLES), "--details", str(ds),
        ])
        assert result.exit_code == 1


class TestSummarize:
    def test_json_output(self, runner):
        result = runner.invoke(main, [
            "summarize", "--source", str(PAQUID_CSV), "--column", "male", "--json",
        ])
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["name"] == "male"
        assert payload["nRows"] == 2250
        assert {e["value"]: e["count"] for e in payload["topCategories"]} \
            == {"0": 998, "1": 1252}

    def test_human_output(self, runner):
        result = runner.invoke(main, [
            "summarize", "--source", str(PAQUID_CSV), "--column", "MMSE",
        ])
        assert result.exit_code == 0
        assert "160 missing" in result.output

    def test_unknown_column_exits_2(self, runner):
        result = runner.invoke(main, [
            "summarize", "--source", str(PAQUID_CSV), "--column", "ghost",
        ])
        assert result.exit_code == 2


class TestRecode:
    def test_golden_run(self, runner, tmp_path):
        result, out = run_paquid_recode(runner, tmp_path)
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert len(lines) == 2251
        assert lines[0] == "sex,MMSE_category,CEP_bin,MMSE-CEP,ID,age,MMSE"
        stats = json.loads((tmp_path / "out.csv.stats.json").read_text())
        assert stats["rowsIn"] == 2250
        assert stats["rowsOut"] == 2250
        manifest = load_manifest(tmp_path / "out.csv.manifest.json")
        assert manifest["schemaVersion"] == 1
        assert manifest["selected"] == PAQUID_SELECTED

    def test_sqlite_sink_by_extension(self, runner, tmp_path):
        import sqlite3
        out = tmp_path / "out.db"
        result = runner.invoke(main, [
            "recode",
            "--source", str(PAQUID_CSV),
            "--variables", str(PAQUID_VARIABLES),
            "--details", str(PAQUID_DETAILS),
            "--database", "paquid",
            "--select", "sex",
            "--out", str(out),
            "--out-table", "recoded",
        ])
        assert result.exit_code == 0, result.output
        conn = sqlite3.connect(out)
        assert conn.execute("SELECT COUNT(*) FROM recoded").fetchone()[0] == 2250
        conn.close()

    def test_unknown_database_exits_3(self, runner, tmp_path):
        result = runner.invoke(main, [
            "recode",
            "--source", str(PAQUID_CSV),
            "--variables", str(PAQUID_VARIABLES),
            "--details", str(PAQUID_DETAILS),
            "--database", "nope",
            "--select", "sex",
            "--out", str(tmp_path / "o.csv"),
        ])
        assert result.exit_code == 3

    def test_chunk_size_does_not_change_output(self, runner, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        _, out_a = run_paquid_recode(runner, tmp_path / "a", "--chunk-size", "1")
        _, out_b = run_paquid_recode(runner, tmp_path / "b", "--chunk-size", "999")
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_config_file_defaults(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "recode": {
                "source": str(PAQUID_CSV),
                "variables": str(PAQUID_VARIABLES),
                "details": str(PAQUID_DETAILS),
                "database": "paquid",
                "select": "sex",
            }
        }))
        out = tmp_path / "out.csv"
        result = runner.invoke(main, [
            "--config", str(cfg), "recode", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert out.read_text().splitlines()[0] == "sex"


class TestVerify:
    def test_fresh_output_verifies(self, runner, tmp_path):
        result, out = run_paquid_recode(runner, tmp_path)
        assert result.exit_code == 0
        check = runner.invoke(main, [
            "verify", "--manifest", str(tmp_path / "out.csv.manifest.json"),
        ])
        assert check.exit_code == 0
        assert "matches" in check.output

    def test_tampered_output_fails(self, runner, tmp_path):
        result, out = run_paquid_recode(runner, tmp_path)
        assert result.exit_code == 0
        out.write_text(out.read_text() + "extra,row,here\n")
        check = runner.invoke(main, [
            "verify", "--manifest", str(tmp_path / "out.csv.manifest.json"),
        ])
        assert check.exit_code == 1


class TestDvlCommands:
    def add_mmse_cep(self, runner, directory):
        return runner.invoke(main, [
            "dvl", "add", "--dir", str(directory),
            "--name", "MMSE-CEP",
            "--components", "MMSE_category,CEP_bin",
            "--function-name", "MMSECEPfunction",
            "--body", 'MMSE_category ++ "_" ++ CEP_bin',
            "--output-type", "categorical",
            "--author", "tester",
        ])

    def test_add_list_show(self, runner, tmp_path):
        d = tmp_path / "dvl"
        assert self.add_mmse_cep(runner, d).exit_code == 0
        listing = runner.invoke(main, ["dvl", "list", "--dir", str(d), "--json"])
        rows = json.loads(listing.output)
        assert [r["name"] for r in rows] == ["MMSE-CEP"]
        shown = runner.invoke(main, ["dvl", "show", "--dir", str(d),
                                     "--name", "MMSE-CEP"])
        payload = json.loads(shown.output)
        assert payload["functionName"] == "MMSECEPfunction"
        assert payload["contentHash"] == rows[0]["contentHash"]

    def test_export_then_merge_elsewhere(self, runner, tmp_path):
        d1, d2 = tmp_path / "one", tmp_path / "two"
        self.add_mmse_cep(runner, d1)
        doc = tmp_path / "doc.csv"
        assert runner.invoke(main, ["dvl", "export", "--dir", str(d1),
                                    "--out", str(doc)]).exit_code == 0
        assert runner.invoke(main, ["dvl", "add", "--dir", str(d2),
                                    "--from-doc", str(doc)]).exit_code == 0
        a = runner.invoke(main, ["dvl", "list", "--dir", str(d1), "--json"]).output
        b = runner.invoke(main, ["dvl", "list", "--dir", str(d2), "--json"]).output
        assert a == b

    def test_recode_with_dvl_derivation(self, runner, tmp_path):
        d = tmp_path / "dvl"
        self.add_mmse_cep(runner, d)
        out = tmp_path / "out.csv"
        result = runner.invoke(main, [
            "recode",
            "--source", str(PAQUID_CSV),
            "--variables", str(PAQUID_VARIABLES),
            "--details", str(PAQUID_DETAILS),
            "--database", "paquid",
            "--select", "sex,MMSE_category,CEP_bin",
            "--out", str(out),
            "--dvl", str(d),
            "--derive", "MMSE-CEP",
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "sex,MMSE_category,CEP_bin,MMSE-CEP"
        assert lines[1].endswith(",normal_graduated")
        manifest = load_manifest(tmp_path / "out.csv.manifest.json")
        assert manifest["dvlEntries"][0]["name"] == "MMSE-CEP"

    def test_bad_body_exits_3(self, runner, tmp_path):
        result = runner.invoke(main, [
            "dvl", "add", "--dir", str(tmp_path / "dvl"),
            "--name", "x", "--components", "a",
            "--function-name", "f", "--body", "a ++",
            "--output-type", "categorical",
        ])
        assert result.exit_code == 3
