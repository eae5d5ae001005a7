"""Curve files and CSV reports.

A curve file is JSON::

    {"format": "curvetight-curves", "version": 1, "dim": 2,
     "curves": [{"id": "a", "multiplicity": 1, "vertices": [[0, 0], [3, 0]]}]}

Floats are written with ``repr`` (shortest round-trip form), so
``parse(serialize(c)) == c`` bit for bit. Reports are CSV whose first row is
``#schema,<kind>,<version>``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .collection import CurveCollection
from .geometry import Polyline

FORMAT = "curvetight-curves"
VERSION = 1


class CurveFileError(ValueError):
    """Invalid curve file; ``code`` is machine-readable."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise CurveFileError("schema", f"{where}: expected a number, got {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise CurveFileError("schema", f"{where}: non-finite coordinate")
    return v


def parse_curve_file(data: bytes | str) -> CurveCollection:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CurveFileError("parse", f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise CurveFileError("schema", "top level must be an object")
    if doc.get("format", FORMAT) != FORMAT or doc.get("version", VERSION) != VERSION:
        raise CurveFileError("schema", f"unsupported format/version {doc.get('format')!r}/{doc.get('version')!r}")
    dim = doc.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise CurveFileError("schema", "'dim' must be a positive integer")
    items = doc.get("curves")
    if not isinstance(items, list):
        raise CurveFileError("schema", "'curves' must be a list")
    curves, mult, ids = [], [], []
    for n, item in enumerate(items):
        if not isinstance(item, dict):
            raise CurveFileError("schema", f"curve #{n} must be an object")
        cid = str(item.get("id", f"c{n}"))
        m = item.get("multiplicity", 1)
        if isinstance(m, bool) or not isinstance(m, int) or m < 1:
            raise CurveFileError("schema", f"curve {cid!r}: multiplicity must be a positive integer")
        verts = item.get("vertices")
        if not isinstance(verts, list) or not verts:
            raise CurveFileError("schema", f"curve {cid!r}: 'vertices' must be a non-empty list")
        rows = []
        for v in verts:
            if not isinstance(v, list) or len(v) != dim:
                raise CurveFileError("schema", f"curve {cid!r}: dimension mismatch, vertex {v!r} is not {dim}-d")
            rows.append([_num(x, f"curve {cid!r}") for x in v])
        if len(rows) < 2:
            raise CurveFileError("trivial", f"trivial path: curve {cid!r} has a single vertex")
        P = Polyline(np.array(rows))
        if P.is_trivial:
            raise CurveFileError("trivial", f"trivial path: curve {cid!r} has zero length")
        curves.append(P)
        mult.append(m)
        ids.append(cid)
    if len(set(ids)) != len(ids):
        raise CurveFileError("schema", "curve ids must be unique")
    return CurveCollection(tuple(curves), tuple(mult), tuple(ids))


def serialize_collection(coll: CurveCollection, dim: int | None = None) -> str:
    d = coll.dim if coll.dim is not None else dim
    if d is None:
        raise ValueError("an empty collection needs an explicit dim")
    lines = [f'{{"format": "{FORMAT}", "version": {VERSION}, "dim": {d}, "curves": [']
    body = []
    for c, m, cid in zip(coll.curves, coll.multiplicities, coll.ids):
        verts = ", ".join("[" + ", ".join(repr(float(x)) for x in v) + "]" for v in c.vertices)
        body.append(f'  {{"id": {json.dumps(cid)}, "multiplicity": {m}, "vertices": [{verts}]}}')
    lines.append(",\n".join(body))
    lines.append("]}")
    return "\n".join(lines) + "\n"


def fmt(x: Any) -> str:
    """CSV cell text: ``repr`` for floats, ``str`` otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (tuple, list, np.ndarray)):
        return " ".join(fmt(v) for v in x)
    return str(x)


def write_report(kind: str, columns: Sequence[str], rows: Iterable[Mapping[str, Any]], version: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["#schema", kind, version])
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def read_report(text: str) -> tuple[str, int, list[dict[str, str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "#schema":
        raise ValueError("missing schema header row")
    header = rows[1]
    return rows[0][1], int(rows[0][2]), [dict(zip(header, r)) for r in rows[2:]]
