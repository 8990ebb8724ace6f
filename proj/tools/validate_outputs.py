"""Check CLI outputs against the schemas in schemas/.

Every *.json file is validated with jsonschema against $defs/<kind>; every
*.csv file must match one documented table header and its column types.
Exit status 0 when all files pass, 2 otherwise.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import jsonschema

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"


def json_errors(path, root):
    doc = json.loads(path.read_text(encoding="utf-8"))
    kind = doc.get("kind")
    if kind not in root["$defs"]:
        return [f"unknown kind {kind!r}"]
    schema = {"$schema": root["$schema"], "$defs": root["$defs"], "$ref": f"#/$defs/{kind}"}
    validator = jsonschema.Draft202012Validator(schema)
    return [f"{'/'.join(map(str, e.absolute_path))}: {e.message}" for e in validator.iter_errors(doc)]


def cell_ok(value, kind):
    if kind.endswith("?"):
        if value == "":
            return True
        kind = kind[:-1]
    if kind == "string":
        return value != ""
    if kind == "boolean":
        return value in ("true", "false")
    if kind == "region":
        return value in ("haor", "non_haor")
    if kind == "variant":
        return value in ("fair", "baseline")
    try:
        number = float(value)
    except ValueError:
        return False
    if not math.isfinite(number):
        return False
    return kind == "number" or number == int(number)


def csv_errors(path, tables):
    with path.open(newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        return ["empty file"]
    header = rows[0]
    for table in tables.values():
        names = [c[0] for c in table["columns"]]
        if header == names:
            types = [c[1] for c in table["columns"]]
            break
    else:
        return [f"header matches no documented table: {','.join(header)}"]
    errors = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(types):
            errors.append(f"line {line}: {len(row)} cells, expected {len(types)}")
            continue
        for name, kind, value in zip(header, types, row):
            if not cell_ok(value, kind):
                errors.append(f"line {line}: {name} = {value!r} is not {kind}")
    return errors


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("paths", nargs="+", type=Path, help="files or directories")
    args = parser.parse_args()
    root = json.loads((SCHEMA_DIR / "outputs.schema.json").read_text(encoding="utf-8"))
    tables = json.loads((SCHEMA_DIR / "csv_tables.json").read_text(encoding="utf-8"))["tables"]

    files = []
    for p in args.paths:
        files.extend(sorted(p.rglob("*")) if p.is_dir() else [p])
    checked = failed = 0
    for f in files:
        if f.suffix == ".json":
            errors = json_errors(f, root)
        elif f.suffix == ".csv":
            errors = csv_errors(f, tables)
        else:
            continue
        checked += 1
        if errors:
            failed += 1
            for e in errors[:5]:
                print(f"{f}: {e}")
    print(f"{checked} files checked, {failed} invalid")
    return 0 if checked > 0 and failed == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
