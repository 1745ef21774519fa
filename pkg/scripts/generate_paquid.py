#!/usr/bin/env python3
"""Regenerate data/paquid.csv, the bundled demonstration dataset.

A deterministic synthetic stand-in for the public Paquid mental-health
cohort table: 500 subjects, 2,250 visit rows, 12 columns, and exactly 726
missing cells (2.69% of the 27,000 data cells). Missing values use the
"NA" token, matching the CSV export convention of the source ecosystem.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

COLUMNS = ["ID", "age", "dem", "agedem", "male", "CEP", "age_init",
           "MMSE", "BVRT", "IST", "HIER", "CESD"]

N_SUBJECTS = 500
N_ROWS = 2250
N_MISSING = 726
MISSING_COLUMNS = ["MMSE", "BVRT", "IST", "HIER", "CESD"]
SEED = 20240824


def generate(out_path: Path) -> None:
    rng = random.Random(SEED)

    # visit counts per subject summing to N_ROWS (4 or 5 visits each)
    visits = [4] * N_SUBJECTS
    for i in rng.sample(range(N_SUBJECTS), N_ROWS - 4 * N_SUBJECTS):
        visits[i] += 1

    rows: list[dict[str, str]] = []
    for subject in range(1, N_SUBJECTS + 1):
        male = rng.choice([0, 1])
        cep = rng.choice([0, 1])
        age_init = round(rng.uniform(65.0, 85.0), 2)
        dem = 1 if rng.random() < 0.15 else 0
        last_age = age_init + 2.5 * (visits[subject - 1] - 1)
        agedem = round(last_age + rng.uniform(0.0, 3.0), 2)
        base_mmse = rng.randint(12, 30)
        for visit in range(visits[subject - 1]):
            age = round(age_init + 2.5 * visit + rng.uniform(-0.3, 0.3), 2)
            mmse = max(0, min(30, base_mmse - visit - rng.randint(0, 2)
                              - (3 if dem else 0)))
            rows.append({
                "ID": str(subject),
                "age": f"{age}",
                "dem": str(dem),
                "agedem": f"{agedem}",
                "male": str(male),
                "CEP": str(cep),
                "age_init": f"{age_init}",
                "MMSE": str(mmse),
                "BVRT": str(max(0, min(15, mmse // 2 + rng.randint(-2, 2)))),
                "IST": str(max(0, min(40, mmse + rng.randint(-4, 8)))),
                "HIER": str(rng.randint(0, 3)),
                "CESD": str(max(0, min(52, rng.randint(0, 25)))),
            })

    cells = [(r, c) for r in range(N_ROWS) for c in MISSING_COLUMNS]
    for r, c in rng.sample(cells, N_MISSING):
        rows[r][c] = "NA"

    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


if __name__ == "__main__":
    target = Path(__file__).resolve().parents[1] / "data" / "paquid.csv"
    target.parent.mkdir(exist_ok=True)
    generate(target)
    print(f"wrote {target}")
