"""Reading and writing distance matrices and space descriptors."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .exceptions import DomainError, ParseError
from .spaces import (
    EuclideanLine,
    FiniteMatrix,
    FiniteMetricSpace,
    GraphVm,
    HalfLineAlpha,
    HyperbolicPlane,
    LpSpace,
    Snowflake,
    SpaceSpec,
)


def parse_matrix_text(text: str) -> np.ndarray:
    """Parse a distance matrix from CSV or from ``{"n": .., "dist": [[..]]}`` JSON."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
            rows = obj["dist"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad JSON matrix: {exc}") from exc
        d = _as_square(rows)
        if "n" in obj and obj["n"] != d.shape[0]:
            raise ParseError(f"declared n={obj['n']} but matrix has {d.shape[0]} rows")
        return d
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty matrix file")
    return _as_square(rows)


def _as_square(rows) -> np.ndarray:
    try:
        d = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric matrix entry: {exc}") from exc
    if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
        raise ParseError(f"matrix must be square, got {len(rows)} ragged or non-square rows")
    return d


def read_matrix(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_matrix_text(text)


def matrix_to_csv(d) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(d, dtype=float):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def matrix_to_json(d) -> str:
    d = np.asarray(d, dtype=float)
    return json.dumps({"n": int(d.shape[0]), "dist": d.tolist()})


_KINDS = {
    "EuclideanLine": lambda p: EuclideanLine(),
    "HyperbolicPlane": lambda p: HyperbolicPlane(),
    "LpSpace": lambda p: LpSpace(p["n"], p["p"]),
    "HalfLineAlpha": lambda p: HalfLineAlpha(float(p["alpha"])),
    "GraphVm": lambda p: GraphVm(float(p["m"])),
    "Snowflake": lambda p: Snowflake(space_from_json(p["base"]), float(p["alpha"])),
    "FiniteMatrix": lambda p: FiniteMatrix(
        FiniteMetricSpace(read_matrix(p["path"]) if "path" in p else _as_square(p["dist"]))
    ),
}


def space_from_json(obj) -> SpaceSpec:
    """Build a descriptor from ``{"kind": ..., "params": {...}}`` (dict or JSON text)."""
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad space JSON: {exc}") from exc
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError('space descriptor must be an object with a "kind" field')
    kind = obj["kind"]
    if kind not in _KINDS:
        raise ParseError(f"unknown space kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        return _KINDS[kind](obj.get("params") or {})
    except KeyError as exc:
        raise ParseError(f"{kind} is missing parameter {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ParseError(f"bad parameters for {kind}: {exc}") from exc


def space_to_json(space: SpaceSpec) -> dict:
    return space.to_json()


def jsonable(x):
    """Recursively convert numpy scalars/arrays and non-finite floats for ``json.dumps``."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x
