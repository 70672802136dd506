#!/usr/bin/env python3
"""Download the UCI benchmark datasets into data/.

Every file is rewritten into the loader's expected shape: comma-separated
rows, numeric features first, a numeric class label in the last column, no
header.  The script never invents rows; if a download fails or a file does
not parse into the documented shape, nothing is written.

usage: fetch_uci.py [--dest DIR] [--force] [name ...]
"""

import argparse
import sys
import tempfile
import urllib.request
from pathlib import Path

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases"

IRIS_LABELS = {"Iris-setosa": "1", "Iris-versicolor": "2", "Iris-virginica": "3"}


def reshape_iris(row):
    return row[:-1] + [IRIS_LABELS[row[-1]]]


def reshape_label_first(row):
    return row[1:] + [row[0]]


def reshape_glass(row):
    # Drop the running Id column; the type label is already last.
    return row[1:]


DATASETS = {
    "iris": {
        "url": f"{BASE}/iris/iris.data",
        "rows": 150,
        "columns": 5,
        "reshape": reshape_iris,
    },
    "wine": {
        "url": f"{BASE}/wine/wine.data",
        "rows": 178,
        "columns": 14,
        "reshape": reshape_label_first,
    },
    "glass": {
        "url": f"{BASE}/glass/glass.data",
        "rows": 214,
        "columns": 11,
        "reshape": reshape_glass,
    },
    "new-thyroid": {
        "url": f"{BASE}/thyroid-disease/new-thyroid.data",
        "rows": 215,
        "columns": 6,
        "reshape": reshape_label_first,
    },
}


def fetch(name, spec, dest, force):
    target = dest / f"{name}.data"
    if target.exists() and not force:
        print(f"{name}: {target} already present (use --force to refresh)")
        return True

    print(f"{name}: downloading {spec['url']}")
    try:
        with urllib.request.urlopen(spec["url"], timeout=60) as response:
            raw = response.read().decode("utf-8")
    except OSError as error:
        print(f"{name}: download failed: {error}", file=sys.stderr)
        return False

    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        fields = [field.strip() for field in line.split(",")]
        if len(fields) != spec["columns"]:
            print(
                f"{name}: unexpected row with {len(fields)} fields "
                f"(wanted {spec['columns']}): {line!r}",
                file=sys.stderr,
            )
            return False
        reshaped = spec["reshape"](fields)
        for field in reshaped[:-1]:
            float(field)  # raises if a feature is not numeric
        int(reshaped[-1])  # labels must be integers
        rows.append(",".join(reshaped))

    if len(rows) != spec["rows"]:
        print(
            f"{name}: parsed {len(rows)} rows, expected {spec['rows']}; not writing",
            file=sys.stderr,
        )
        return False

    dest.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        "w", dir=dest, prefix=f".{name}.", suffix=".tmp", delete=False
    ) as handle:
        handle.write("\n".join(rows) + "\n")
        temporary = Path(handle.name)
    temporary.replace(target)
    print(f"{name}: wrote {len(rows)} rows to {target}")
    return True


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "names",
        nargs="*",
        default=sorted(DATASETS),
        help="datasets to fetch (default: all of %s)" % ", ".join(sorted(DATASETS)),
    )
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data",
        help="output directory (default: the repository's data/)",
    )
    parser.add_argument("--force", action="store_true", help="refresh existing files")
    arguments = parser.parse_args()

    unknown = [name for name in arguments.names if name not in DATASETS]
    if unknown:
        parser.error(f"unknown dataset(s): {', '.join(unknown)}")

    ok = True
    for name in arguments.names:
        ok = fetch(name, DATASETS[name], arguments.dest, arguments.force) and ok
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
