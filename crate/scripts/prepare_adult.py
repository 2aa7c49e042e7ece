#!/usr/bin/env python3
"""Convert the UCI Adult files into the CSV + schema layout `fale` reads.

Rows with missing cells ("?") are dropped, the income label becomes a 0/1
`income` column, and every `--every`-th remaining row is kept.

    python3 scripts/prepare_adult.py adult.data --every 5 \
        --out adult.csv --schema-out adult_schema.json
"""
import argparse
import csv
import json

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]
NUMERIC = {"age", "fnlwgt", "education-num", "capital-gain", "capital-loss",
           "hours-per-week", "income"}
IGNORED = {"fnlwgt", "education-num"}
EDUCATION_ORDER = [
    "Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th",
    "12th", "HS-grad", "Some-college", "Assoc-voc", "Assoc-acdm",
    "Bachelors", "Masters", "Prof-school", "Doctorate",
]


def read_rows(path):
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(COLUMNS) or "?" in cells:
                continue
            label = cells[-1].rstrip(".")
            cells[-1] = "1" if label == ">50K" else "0"
            yield cells


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("inputs", nargs="+")
    ap.add_argument("--every", type=int, default=1)
    ap.add_argument("--out", required=True)
    ap.add_argument("--schema-out", required=True)
    args = ap.parse_args()

    rows = [r for path in args.inputs for r in read_rows(path)]
    rows = rows[:: args.every]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        w.writerows(rows)

    seen_education = {r[COLUMNS.index("education")] for r in rows}
    features = []
    for name in COLUMNS:
        entry = {
            "name": name,
            "kind": "numeric" if name in NUMERIC else "categorical",
            "role": "feature",
        }
        if name == "sex":
            entry["role"] = "protected"
        elif name == "income":
            entry["role"] = "target"
        elif name in IGNORED:
            entry["role"] = "ignored"
        if name == "education":
            entry["category_order"] = [e for e in EDUCATION_ORDER if e in seen_education]
        features.append(entry)
    with open(args.schema_out, "w") as fh:
        json.dump({"features": features}, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
