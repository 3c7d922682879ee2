"""Versioned JSON reports and CSV spectrum tables.

A report has a ``stable`` part (config, results, margins) that is a pure
function of the inputs, hashed over its canonical JSON encoding, and an
``envelope`` holding timestamps and timings that are excluded from the hash.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

SCHEMA = "omega-report/1"


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def stable_hash(stable: dict) -> str:
    return hashlib.sha256(canonical_json(stable).encode()).hexdigest()


def build_report(command: str, config: dict, results: dict, margins: dict, timings: dict | None = None) -> dict:
    stable = _plain({"command": command, "config": config, "results": results, "margins": margins})
    return {
        "schema": SCHEMA,
        "stable": stable,
        "hash": stable_hash(stable),
        "envelope": {
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "timings": _plain(timings or {}),
        },
    }


def dumps(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(dumps(report))


CSV_COLUMNS = ("k", "value", "multiplicity", "witness")


def spectrum_rows(values) -> list:
    """Rows (k, value, multiplicity, witness) from OmegaValue-like dicts; k counts with multiplicity."""
    rows, k = [], 1
    for v in values:
        mult = v.get("multiplicity")
        rows.append((k, repr(float(v["value"])), mult, v.get("witness", "")))
        k += mult if isinstance(mult, int) else 1
    return rows


def spectrum_csv(values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(spectrum_rows(values))
    return buf.getvalue()
