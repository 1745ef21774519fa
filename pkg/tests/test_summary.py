from __future__ import annotations

import random
import statistics

import pytest

from harmonize.errors import UnknownColumn
from harmonize.summary import summarize_variable
from harmonize.tabio import open_source

from conftest import PAQUID_CSV


class TestPaquid:
    def test_male_distribution(self):
        # expected counts frozen from an independent one-line pass over the file
        summary = summarize_variable(open_source("csv", PAQUID_CSV), "male")
        assert summary.distinct_count == 2
        counts = dict(summary.top_categories)
        assert counts == {"0": 998, "1": 1252}
        assert counts["0"] + counts["1"] + summary.n_missing == 2250

    def test_mmse_numeric(self):
        summary = summarize_variable(open_source("csv", PAQUID_CSV), "MMSE")
        assert summary.sniffed_type == "numericLike"
        assert summary.n_missing == 160
        assert summary.numeric["min"] >= 0
        assert summary.numeric["max"] <= 30

    def test_counts_partition_rows(self):
        for column in ("male", "MMSE", "HIER"):
            s = summarize_variable(open_source("csv", PAQUID_CSV), column, k=10_000)
            assert s.n_missing + sum(c for _, c in s.top_categories) == s.n_rows

    def test_chunk_invariance(self):
        reference = summarize_variable(open_source("csv", PAQUID_CSV, chunk_size=2250),
                                       "CESD")
        for chunk in (1, 17, 500):
            s = summarize_variable(open_source("csv", PAQUID_CSV, chunk_size=chunk),
                                   "CESD")
            assert s == reference

    def test_unknown_column(self):
        with pytest.raises(UnknownColumn):
            summarize_variable(open_source("csv", PAQUID_CSV), "ghost")


class TestSmallTables:
    def test_constant_column(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("v\n" + "x\n" * 5)
        s = summarize_variable(open_source("csv", f), "v")
        assert s.distinct_count == 1
        assert s.top_categories == (("x", 5),)
        assert s.sniffed_type == "textLike"
        assert s.numeric is None

    def test_top_k_cap_and_tiebreak(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("v\n" + "b\n" * 3 + "a\n" * 3 + "c\n" * 5 + "d\n")
        s = summarize_variable(open_source("csv", f), "v", k=2)
        assert s.top_categories == (("c", 5), ("a", 3))
        assert s.distinct_count == 4

    def test_mixed_type(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("v\n1\n2\nfoo\n3\n")
        s = summarize_variable(open_source("csv", f), "v")
        assert s.sniffed_type == "mixed"

    def test_median_against_sort_oracle(self, tmp_path):
        rng = random.Random(7)
        for trial in range(20):
            values = [rng.randint(0, 50) for _ in range(rng.randint(1, 400))]
            f = tmp_path / f"med{trial}.csv"
            f.write_text("v\n" + "".join(f"{v}\n" for v in values))
            s = summarize_variable(open_source("csv", f, chunk_size=37), "v")
            assert s.numeric["median"] == statistics.median(values)
            assert s.numeric["mean"] == pytest.approx(statistics.mean(values))
            assert s.numeric["min"] == min(values)
            assert s.numeric["max"] == max(values)
