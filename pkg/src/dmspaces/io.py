"""JSON documents for spaces and witnesses.

A space document looks like::

    {"schema": "dmspace/1", "labels": ["a", "b"],
     "dist": [["0", "1/3"], ["1/3", "0"]], "mass": ["1", "0.5"],
     "metadata": {}}

Entries are JSON numbers (float mode), integers or strings holding exact
rationals ("0.25", "1/3"). The string "inf" is the only infinity token.
Exact spaces are written as strings so a save/load round trip is lossless.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .core import (
    INFINITY,
    FiniteDistanceMeasureSpace,
    InvalidSpaceError,
    StructureError,
    is_inf,
    make_space,
    parse_scalar,
)
from .ghlp import RhoWitness, rho_upper_from_witness
from .gluing import GluedSpace, GluingSpec, equal_matrix, glued_distance

SCHEMA = "dmspace/1"
WITNESS_SCHEMA = "dmwitness/1"
SUPPORTED = (SCHEMA,)


class DocumentError(ValueError):
    """A document that cannot be turned into a space.

    Attributes:
        line: 1-based line of a JSON syntax error, if any.
        column: 1-based column of a JSON syntax error, if any.
        path: JSON path of an offending entry, if any.
        invariant: violated space invariant, if any.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 path: str | None = None, invariant: str | None = None):
        super().__init__(message)
        self.line = line
        self.column = column
        self.path = path
        self.invariant = invariant


# ---------------------------------------------------------------------------
# Scalars


def encode_scalar(x) -> Any:
    """JSON form of a value: ``"inf"``, an exact string, or a float."""
    if is_inf(x):
        return "inf"
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return exact_string(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot encode {x!r}")
    return x


def exact_string(q: Fraction) -> str:
    """Terminating decimal when one exists, otherwise ``p/q``."""
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    k = max(twos, fives)
    scaled = q * 10**k
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def _decode(value, path: str):
    try:
        return parse_scalar(value)
    except StructureError as exc:
        raise DocumentError(f"{path}: {exc}", path=path) from exc


# ---------------------------------------------------------------------------
# Spaces


def space_to_document(space: FiniteDistanceMeasureSpace, metadata: dict | None = None) -> dict:
    return {
        "schema": SCHEMA,
        "labels": list(space.labels),
        "dist": [[encode_scalar(v) for v in row] for row in space.dist],
        "mass": [encode_scalar(v) for v in space.mass],
        "metadata": dict(metadata or {}),
    }


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def save_space(space: FiniteDistanceMeasureSpace, path, metadata: dict | None = None) -> None:
    Path(path).write_text(dumps(space_to_document(space, metadata)), encoding="utf-8")


def parse_json(text: str) -> Any:
    """``json.loads`` with line and column on syntax errors."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                            line=exc.lineno, column=exc.colno) from exc


def document_to_space(doc: Any, tol: float = 1e-9) -> FiniteDistanceMeasureSpace:
    """Check the schema and structure, then validate the space.

    Raises:
        DocumentError: unknown schema, bad structure (with a JSON path), or a
            violated invariant (with its name and the offending indices).
    """
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object", path="$")
    schema = doc.get("schema")
    if schema not in SUPPORTED:
        raise DocumentError(f"unsupported schema {schema!r}; expected one of {list(SUPPORTED)}",
                            path="$.schema")
    for key in ("labels", "dist", "mass"):
        if key not in doc:
            raise DocumentError(f"missing field {key!r}", path=f"$.{key}")
    labels, dist, mass = doc["labels"], doc["dist"], doc["mass"]
    if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
        raise DocumentError("labels must be a list of strings", path="$.labels")
    if not isinstance(dist, list) or not all(isinstance(r, list) for r in dist):
        raise DocumentError("dist must be a list of rows", path="$.dist")
    if not isinstance(mass, list):
        raise DocumentError("mass must be a list", path="$.mass")
    n = len(labels)
    if len(dist) != n:
        raise DocumentError(f"dist has {len(dist)} rows for {n} labels", path="$.dist")
    for i, row in enumerate(dist):
        if len(row) != n:
            raise DocumentError(f"row {i} has {len(row)} entries, expected {n}", path=f"$.dist[{i}]")
    if len(mass) != n:
        raise DocumentError(f"mass has {len(mass)} entries for {n} labels", path="$.mass")
    if "metadata" in doc and not isinstance(doc["metadata"], dict):
        raise DocumentError("metadata must be an object", path="$.metadata")
    D = [[_decode(v, f"$.dist[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(dist)]
    M = [_decode(v, f"$.mass[{i}]") for i, v in enumerate(mass)]
    try:
        return make_space(labels, D, M, tol=tol)
    except InvalidSpaceError as exc:
        v = exc.report.violations[0]
        names = ", ".join(labels[i] for i in v.indices)
        raise DocumentError(f"invalid space: {v.invariant} at ({names}): {v.message}",
                            path="$", invariant=v.invariant) from exc
    except StructureError as exc:
        raise DocumentError(str(exc), path="$") from exc


def loads_space(text: str, tol: float = 1e-9) -> FiniteDistanceMeasureSpace:
    return document_to_space(parse_json(text), tol)


def load_space(path, tol: float = 1e-9) -> FiniteDistanceMeasureSpace:
    """Read and validate one space document.

    Raises:
        DocumentError: syntax error (line/column), unknown schema or invalid space.
        FileNotFoundError: missing file.
    """
    return loads_space(Path(path).read_text(encoding="utf-8"), tol)


# ---------------------------------------------------------------------------
# Witnesses


def witness_to_document(w: RhoWitness) -> dict:
    """Serialize a witness with both spaces and the glued matrix."""
    g = w.glued
    spec = g.spec
    return {
        "schema": WITNESS_SCHEMA,
        "X": space_to_document(g.X),
        "Y": space_to_document(g.Y),
        "pairs": [list(p) for p in spec.pairs] if spec is not None else None,
        "delta": encode_scalar(spec.delta) if spec is not None else None,
        "dist": [[encode_scalar(v) for v in row] for row in g.dist],
        "L": encode_scalar(w.L),
        "eps": encode_scalar(w.eps),
        "removed_x": sorted(int(i) for i in w.removed_x),
        "removed_y": sorted(int(i) for i in w.removed_y),
    }


def document_to_witness(doc: dict, tol: float = 1e-9) -> RhoWitness:
    """Rebuild a witness; the stored glued matrix must match the recomputed gluing."""
    if not isinstance(doc, dict) or doc.get("schema") != WITNESS_SCHEMA:
        raise DocumentError(f"unsupported witness schema {doc.get('schema') if isinstance(doc, dict) else None!r}",
                            path="$.schema")
    X = document_to_space(doc["X"], tol)
    Y = document_to_space(doc["Y"], tol)
    exact = X.exact and Y.exact
    raw = [[_decode(v, f"$.dist[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(doc["dist"])]
    if exact:
        D = np.empty((X.n + Y.n, X.n + Y.n), dtype=object)
        D[:, :] = [[v if is_inf(v) else Fraction(v) for v in r] for r in raw]
    else:
        D = np.array([[float(v) for v in r] for r in raw], dtype=float)
    spec = None
    if doc.get("pairs") is not None:
        spec = GluingSpec.build(doc["pairs"], _decode(doc["delta"], "$.delta"))
        g = glued_distance(X, Y, spec)
        if not np.all(equal_matrix(g.dist, D, tol)):
            raise DocumentError("stored glued matrix differs from the recomputed gluing", path="$.dist")
        D = g.dist
    D.setflags(write=False)
    L = _decode(doc["L"], "$.L")
    eps = _decode(doc["eps"], "$.eps")
    return RhoWitness(GluedSpace(X, Y, spec, D), L, eps, frozenset(doc.get("removed_x", ())),
                      frozenset(doc.get("removed_y", ())))


def revalidate(w: RhoWitness, tol: float = 1e-9):
    """Serialize, parse back and re-validate; return the recomputed objective."""
    doc = parse_json(dumps(witness_to_document(w)))
    w2 = document_to_witness(doc, tol)
    return rho_upper_from_witness(w2.glued.X, w2.glued.Y, w2, tol)


def witness_summary(w: RhoWitness | None) -> dict | None:
    """Compact description used in reports."""
    if w is None:
        return None
    spec = w.glued.spec
    return {
        "pairs": len(spec.pairs) if spec is not None else 0,
        "delta": encode_scalar(spec.delta) if spec is not None else None,
        "L": encode_scalar(w.L),
        "eps": encode_scalar(w.eps),
        "removed_x": sorted(int(i) for i in w.removed_x),
        "removed_y": sorted(int(i) for i in w.removed_y),
        "kind": w.kind,
    }


__all__ = [
    "SCHEMA",
    "WITNESS_SCHEMA",
    "DocumentError",
    "INFINITY",
    "InvalidSpaceError",
    "document_to_space",
    "document_to_witness",
    "dumps",
    "encode_scalar",
    "exact_string",
    "load_space",
    "loads_space",
    "parse_json",
    "revalidate",
    "save_space",
    "space_to_document",
    "witness_summary",
    "witness_to_document",
]
