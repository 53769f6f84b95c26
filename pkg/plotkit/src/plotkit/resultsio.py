"""Reader for the simulator's results schema (CSV or JSON).

Rows become plain dicts with numeric fields converted; the reader validates
that every column a figure needs is present.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

NUMERIC = ("value", "value2", "nm", "r", "ts", "w", "ser", "wilson_lo",
           "wilson_hi", "runtime_s")
INTEGER = ("errors", "symbols", "seeds_used", "lod", "master_seed",
           "id_errors", "amp_errors")


class SchemaError(ValueError):
    """Input rows do not carry the columns a figure requires."""


def _convert(key: str, raw):
    if raw is None or raw == "":
        return None
    if key in INTEGER:
        return int(float(raw))
    if key in NUMERIC:
        return float(raw)
    return raw


def load_rows(path) -> list[dict]:
    """Load result rows from a .csv or .json file."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        rows = doc["rows"]
        return [{k: _convert(k, v) for k, v in row.items()} for row in rows]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: _convert(k, v) for k, v in row.items()}
                for row in reader]


def load_many(paths) -> list[dict]:
    rows = []
    for path in paths:
        for row in load_rows(path):
            row["_source"] = Path(path).stem
            rows.append(row)
    return rows


def require_columns(rows: list[dict], columns, figure: str) -> None:
    if not rows:
        raise SchemaError(f"{figure}: no input rows")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise SchemaError(f"{figure}: missing columns {missing}")


def select(rows: list[dict], **criteria) -> list[dict]:
    out = rows
    for key, val in criteria.items():
        if val is not None:
            out = [r for r in out if r.get(key) == val]
    return out
