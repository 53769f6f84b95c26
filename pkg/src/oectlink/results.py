"""Result rows and CSV/JSON serialization.

CSV column order is fixed; JSON carries identical values at full precision
(JSON is authoritative, CSV is formatted to 9 significant digits). Output
is byte-stable for identical inputs: no timestamps, fixed key order.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields

SCHEMA_VERSION = 1

CSV_COLUMNS = ("axis", "value", "value2", "scheme", "ctrl", "nm", "r", "ts",
               "w", "errors", "symbols", "ser", "wilson_lo", "wilson_hi",
               "seeds_used", "lod", "runtime_s", "master_seed",
               "id_errors", "amp_errors")


@dataclass
class ResultRow:
    """One evaluated operating point."""

    axis: str
    value: float | None
    value2: float | None
    scheme: str
    ctrl: str            # "on" / "off"
    nm: float
    r: float
    ts: float
    w: float
    errors: int
    symbols: int
    ser: float
    wilson_lo: float
    wilson_hi: float
    seeds_used: int
    lod: int | None
    runtime_s: float
    master_seed: int
    id_errors: int
    amp_errors: int


def fmt9(value) -> str:
    """Decimal form capped at 9 significant digits (round-trips SER-scale
    quantities while keeping diffs stable)."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".9g")


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        data = asdict(row)
        writer.writerow([fmt9(data[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[ResultRow], metadata: dict) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "metadata": metadata,
        "rows": [asdict(row) for row in rows],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def rows_from_json(text: str) -> tuple[list[ResultRow], dict]:
    doc = json.loads(text)
    names = {f.name for f in fields(ResultRow)}
    rows = [ResultRow(**{k: v for k, v in item.items() if k in names})
            for item in doc["rows"]]
    return rows, doc["metadata"]


def write_results(rows: list[ResultRow], path, fmt: str,
                  metadata: dict | None = None) -> None:
    """Write rows as 'csv' or 'json'; empty row lists are an error and no
    file is created."""
    if not rows:
        raise ValueError("no result rows to write")
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows, metadata or {})
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
