"""Deterministic report serialization.

Reports must reproduce byte for byte under the same seed, parameters,
and worker count, so the JSON and CSV emitters are fully canonical:
sorted keys, fixed separators, repr floats, rationals as "p/q"
strings.  Volatile facts (wall-clock timings, host info) go to a
run_meta.json sidecar that is excluded from the determinism contract.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, is_dataclass
from fractions import Fraction


def jsonable(obj):
    """Recursively convert report values to canonical JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(asdict(obj))
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


def canonical_json(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def render_csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    return v


def write_files(out_dir: str, name: str, report: dict, tables: dict) -> dict:
    """Write <name>.json plus one CSV per table; return path -> bytes written.

    ``tables`` maps table name to (header, rows).  A run_meta.json
    sidecar records timing and is deliberately not deterministic.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = {}
    path = os.path.join(out_dir, f"{name}.json")
    data = canonical_json(report)
    with open(path, "w") as fh:
        fh.write(data)
    written[path] = len(data)
    for tname, (header, rows) in sorted(tables.items()):
        tpath = os.path.join(out_dir, f"{name}_{tname}.csv")
        tdata = render_csv(header, rows)
        with open(tpath, "w") as fh:
            fh.write(tdata)
        written[tpath] = len(tdata)
    meta_path = os.path.join(out_dir, f"{name}_run_meta.json")
    meta = {"written_at_unix": time.time(), "files": sorted(written)}
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written
