"""Instance files, JSON/CSV serialisation and atomic output.

Instance format (line oriented, ``#`` starts a comment)::

    graph <n>
    param <p|q|gamma|alpha|lambda> <value>     # optional
    v <id> <mu> [<a> <b> <f> <g>]
    e <id1> <id2> <weight>
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError
from .graph import WeightedGraph
from .spaces import CoefficientFields

PARAM_NAMES = ("p", "q", "gamma", "alpha", "lambda")


@dataclass
class LoadedInstance:
    graph: WeightedGraph
    fields: CoefficientFields | None
    params: dict = field(default_factory=dict)


def _float(tok: str, what: str, line: int, path) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", line, path) from None


def parse_instance(text: str, path=None) -> LoadedInstance:
    n = None
    ids: list[str] = []
    index: dict[str, int] = {}
    mu: list[float] = []
    coeffs: list[list[float] | None] = []
    edges: list[tuple[str, str, float, int]] = []
    params: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        if n is None:
            if kind != "graph" or len(tok) != 2:
                raise ParseError("expected header 'graph <n>'", lineno, path)
            try:
                n = int(tok[1])
            except ValueError:
                raise ParseError(f"bad vertex count {tok[1]!r}", lineno, path) from None
            if n < 1:
                raise ParseError("vertex count must be positive", lineno, path)
            continue
        if kind == "param":
            if len(tok) != 3 or tok[1] not in PARAM_NAMES:
                raise ParseError(f"expected 'param <{'|'.join(PARAM_NAMES)}> <value>'", lineno, path)
            params[tok[1]] = _float(tok[2], tok[1], lineno, path)
        elif kind == "v":
            if len(tok) not in (3, 7):
                raise ParseError("vertex line needs 'v <id> <mu>' or 'v <id> <mu> <a> <b> <f> <g>'",
                                 lineno, path)
            vid = tok[1]
            if vid in index:
                raise ParseError(f"duplicate vertex {vid!r}", lineno, path)
            if len(ids) >= n:
                raise ParseError(f"more than {n} vertices", lineno, path)
            index[vid] = len(ids)
            ids.append(vid)
            mu.append(_float(tok[2], "measure", lineno, path))
            if len(tok) == 7:
                coeffs.append([_float(t, name, lineno, path) for t, name in zip(tok[3:], "abfg")])
            else:
                coeffs.append(None)
        elif kind == "e":
            if len(tok) != 4:
                raise ParseError("edge line needs 'e <id1> <id2> <weight>'", lineno, path)
            edges.append((tok[1], tok[2], _float(tok[3], "weight", lineno, path), lineno))
        else:
            raise ParseError(f"unknown record type {kind!r}", lineno, path)
    if n is None:
        raise ParseError("empty instance file", None, path)
    if len(ids) != n:
        raise ParseError(f"header declares {n} vertices, found {len(ids)}", None, path)
    resolved = []
    for x, y, w, lineno in edges:
        for vid in (x, y):
            if vid not in index:
                raise ParseError(f"edge refers to unknown vertex {vid!r}", lineno, path)
        resolved.append((index[x], index[y], w))
    graph = WeightedGraph.from_edges(mu, resolved, ids=ids)
    have = [c is not None for c in coeffs]
    if all(have):
        arr = np.array(coeffs, dtype=float)
        fields = CoefficientFields(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
    elif not any(have):
        fields = None
    else:
        raise ParseError("vertex lines mix 2-column and 6-column forms", None, path)
    return LoadedInstance(graph, fields, params)


def load_instance(path) -> LoadedInstance:
    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), path=str(path))


def format_instance(graph: WeightedGraph, fields: CoefficientFields | None = None,
                    params: dict | None = None) -> str:
    """Inverse of :func:`parse_instance`; floats are written with ``repr`` so reloads are bit-exact."""
    ids = graph.external_ids()
    out = [f"graph {graph.n}"]
    for k in PARAM_NAMES:
        if params and k in params and params[k] is not None:
            out.append(f"param {k} {float(params[k])!r}")
    for i in range(graph.n):
        row = f"v {ids[i]} {float(graph.measure[i])!r}"
        if fields is not None:
            row += " " + " ".join(repr(float(getattr(fields, c)[i])) for c in "abfg")
        out.append(row)
    for x, y, w in graph.edges():
        out.append(f"e {ids[x]} {ids[y]} {float(w)!r}")
    return "\n".join(out) + "\n"


def write_instance(path, graph, fields=None, params=None) -> None:
    atomic_write(path, format_instance(graph, fields, params))


def load_function(path, graph: WeightedGraph) -> np.ndarray:
    """Vertex values from a SolveReport JSON or a text file of '<id> <value>' lines."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    values = np.full(graph.n, np.nan)
    if path.suffix.lower() == ".json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, str(path)) from None
        mapping = payload.get("solution", payload) if isinstance(payload, dict) else None
        if not isinstance(mapping, dict):
            raise ParseError("expected an object mapping vertex id to value", None, str(path))
        items = [(k, v, None) for k, v in mapping.items()]
    else:
        items = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if len(tok) != 2:
                raise ParseError("expected '<id> <value>'", lineno, str(path))
            items.append((tok[0], tok[1], lineno))
    for vid, val, lineno in items:
        try:
            i = graph.index_of(vid)
        except (KeyError, ValueError):
            raise ParseError(f"unknown vertex {vid!r}", lineno, str(path)) from None
        values[i] = _float(str(val), "value", lineno, str(path))
    if np.any(np.isnan(values)):
        raise ParseError("function file does not cover every vertex", None, str(path))
    return values


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps_json(obj) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats, non-finite as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def dumps_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
