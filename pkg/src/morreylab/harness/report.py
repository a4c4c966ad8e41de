"""CSV and JSON serialization.

CSV floats are written with 17 significant digits. JSON floats use the
shortest repr that round-trips, which is the same binary value.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from ..grid import Ball


def fmt_float(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    if isinstance(v, (tuple, list, np.ndarray)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def jsonable(v):
    if isinstance(v, Ball):
        return {"center": jsonable(v.center), "radius": jsonable(v.radius)}
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (tuple, list, np.ndarray)):
        return [jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them readable and lossless as strings
        return v if math.isfinite(v) else fmt_float(v)
    if v is None or isinstance(v, str):
        return v
    return repr(v)


def summary_json(result, include_rows: bool = False) -> str:
    doc = {
        "kind": result.kind,
        "summary": jsonable(result.summary),
        "diagnostics": jsonable(result.diagnostics),
        "spec": jsonable(result.spec),
        "wall_time": result.wall_time,
    }
    if include_rows:
        doc["header"] = list(result.header)
        doc["rows"] = [[jsonable(v) for v in row] for row in result.rows]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
