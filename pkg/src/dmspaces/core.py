"""Extended distances and finite distance measure spaces.

Distances take values in the nonnegative reals extended by ``INFINITY``.
Values are stored either exactly (``int``/``Fraction`` entries in object
arrays) or as float64. Exact mode is selected automatically when every
finite input is rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

INFINITY = math.inf
DEFAULT_TOL = 1e-9


class StructureError(ValueError):
    """Raised when a candidate space is malformed (shapes, label counts)."""


class InvalidSpaceError(ValueError):
    """Raised when a candidate space violates a distance-space invariant."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        first = report.violations[0] if report.violations else None
        super().__init__(f"invalid space: {first.message if first else 'unknown'}")


# ---------------------------------------------------------------------------
# Extended scalar helpers


def is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


def sat_add(a, b):
    """Saturating addition: anything plus INFINITY is INFINITY."""
    if is_inf(a) or is_inf(b):
        return INFINITY
    return a + b


def parse_scalar(value):
    """Convert a document scalar to an exact or float value.

    Strings are parsed exactly ("inf", "0.3", "1/3"); ints stay ints;
    floats stay floats.
    """
    if isinstance(value, bool):
        raise StructureError(f"boolean is not a number: {value!r}")
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INFINITY
        try:
            return Fraction(s)
        except ValueError as exc:
            raise StructureError(f"cannot parse number {value!r}") from exc
    if isinstance(value, (int, Fraction)):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    raise StructureError(f"unsupported number type {type(value).__name__}")


def is_exact_value(x) -> bool:
    return is_inf(x) or isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def to_array(values, exact: bool) -> np.ndarray:
    """Build an object array of exact values or a float64 array."""
    obj = np.asarray(values, dtype=object)
    flat = [parse_scalar(v) for v in obj.reshape(-1)]
    if exact:
        arr = np.empty(len(flat), dtype=object)
        arr[:] = [v if is_inf(v) else Fraction(v) for v in flat]
    else:
        arr = np.array([float(v) for v in flat], dtype=float)
    return arr.reshape(obj.shape)


def detect_exact(*arrays) -> bool:
    """True when every entry of every array is rational or infinite."""
    for arr in arrays:
        a = np.asarray(arr, dtype=object) if not isinstance(arr, np.ndarray) else arr
        if a.dtype != object:
            return False
        for v in a.reshape(-1):
            if isinstance(v, str):
                v = parse_scalar(v)
            if not is_exact_value(v):
                return False
    return True


def to_float(x) -> float:
    return float(x)


def close(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Equality for extended values: exact for rationals, tolerant for floats."""
    if is_inf(a) or is_inf(b):
        return is_inf(a) and is_inf(b)
    if is_exact_value(a) and is_exact_value(b):
        return a == b
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(a)))


def scaled_integer_grid(*arrays) -> tuple[list[np.ndarray], int] | None:
    """Scale exact arrays onto a common integer grid held in float64.

    Integer-valued doubles below 2**53 add and compare exactly, so float
    kernels run exactly on the result. Returns ``None`` when the grid would
    overflow that range.
    """
    denoms = 1
    for arr in arrays:
        for v in arr.reshape(-1):
            if not is_inf(v):
                denoms = math.lcm(denoms, Fraction(v).denominator)
    out = []
    biggest = 0
    for arr in arrays:
        f = np.empty(arr.shape, dtype=float)
        ff = f.reshape(-1)
        for i, v in enumerate(arr.reshape(-1)):
            if is_inf(v):
                ff[i] = math.inf
            else:
                k = Fraction(v) * denoms
                iv = k.numerator
                biggest = max(biggest, abs(iv))
                ff[i] = float(iv)
        out.append(f)
    total = sum(
        float(np.sum(np.where(np.isinf(a), 0.0, np.abs(a)))) for a in out
    )
    if biggest >= 2**50 or total >= 2**50:
        return None
    return out, denoms


# ---------------------------------------------------------------------------
# Spaces


@dataclass(frozen=True)
class Violation:
    invariant: str
    indices: tuple[int, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()


@dataclass(frozen=True, eq=False)
class FiniteDistanceMeasureSpace:
    """A labeled finite distance space with a finite measure.

    Build instances with :func:`make_space`, which validates the input.
    """

    labels: tuple[str, ...]
    dist: np.ndarray
    mass: np.ndarray
    exact: bool = field(default=True)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def total_mass(self):
        return sum_values(self.mass)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def restrict(self, indices: Sequence[int]) -> "FiniteDistanceMeasureSpace":
        idx = list(indices)
        return FiniteDistanceMeasureSpace(
            tuple(self.labels[i] for i in idx),
            _frozen(self.dist[np.ix_(idx, idx)]),
            _frozen(self.mass[idx]),
            self.exact,
        )

    def with_mass(self, mass) -> "FiniteDistanceMeasureSpace":
        arr = to_array(list(mass), self.exact)
        if arr.shape != (self.n,):
            raise StructureError("mass vector length mismatch")
        return FiniteDistanceMeasureSpace(self.labels, self.dist, _frozen(arr), self.exact)

    def relabel(self, labels: Sequence[str]) -> "FiniteDistanceMeasureSpace":
        if len(labels) != self.n:
            raise StructureError("label count mismatch")
        return FiniteDistanceMeasureSpace(tuple(labels), self.dist, self.mass, self.exact)

    def as_float(self) -> "FiniteDistanceMeasureSpace":
        if not self.exact:
            return self
        return FiniteDistanceMeasureSpace(
            self.labels,
            _frozen(self.dist.astype(float)),
            _frozen(self.mass.astype(float)),
            False,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteDistanceMeasureSpace):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.exact == other.exact
            and self.dist.shape == other.dist.shape
            and bool(np.all(self.dist == other.dist))
            and bool(np.all(self.mass == other.mass))
        )

    __hash__ = None  # type: ignore[assignment]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=arr.dtype, copy=True)
    arr.setflags(write=False)
    return arr


def sum_values(values: Iterable):
    total = 0
    for v in values:
        total = sat_add(total, v)
    return total


def _structure_check(labels, dist, mass) -> None:
    n = len(labels)
    shape = np.shape(dist)
    if len(shape) != 2 or shape[0] != shape[1]:
        raise StructureError(f"distance matrix must be square, got shape {shape}")
    if shape[0] != n:
        raise StructureError(f"{n} labels but distance matrix is {shape[0]}x{shape[1]}")
    if np.shape(mass) != (n,):
        raise StructureError(f"{n} labels but {len(mass)} masses")
    if len(set(labels)) != n:
        raise StructureError("labels must be distinct")


def _normalize(labels, dist, mass, exact):
    labels = tuple(str(x) for x in labels)
    dist_list = [list(row) for row in dist]
    mass_list = list(mass)
    _structure_check(labels, dist_list, mass_list)
    if exact is None:
        exact = detect_exact(
            np.asarray(dist_list, dtype=object).reshape(len(labels), len(labels))
            if labels
            else np.empty((0, 0), dtype=object),
            np.asarray(mass_list, dtype=object),
        )
    n = len(labels)
    d = to_array(dist_list, exact) if n else np.empty((0, 0), dtype=object if exact else float)
    m = to_array(mass_list, exact) if n else np.empty((0,), dtype=object if exact else float)
    return labels, d, m, exact


def validate_space(labels, dist, mass, tol: float = DEFAULT_TOL, exact=None) -> ValidationReport:
    """Check every distance-measure-space invariant.

    Args:
        labels: point identifiers.
        dist: square matrix of extended distances.
        mass: nonnegative masses.
        tol: tolerance for float-mode comparisons (ignored for exact input).

    Returns:
        A report listing every violated invariant with the offending indices.

    Raises:
        StructureError: on dimension mismatches, before any invariant check.
    """
    labels, d, m, exact = _normalize(labels, dist, mass, exact)
    return _validate_arrays(labels, d, m, exact, tol)


def _validate_arrays(labels, d, m, exact, tol) -> ValidationReport:
    n = len(labels)
    out: list[Violation] = []
    name = labels

    def le(a, b):
        # a <= b with tolerance in float mode
        if exact:
            return a <= b
        return a <= b + tol * max(1.0, abs(b) if not math.isinf(b) else 1.0)

    for i in range(n):
        if m[i] < 0 or (not exact and math.isnan(m[i])) or is_inf(m[i]):
            out.append(Violation("mass", (i,), f"mass of {name[i]} must be finite and >= 0"))
        if d[i, i] != 0:
            out.append(Violation("zero_diagonal", (i,), f"d({name[i]},{name[i]}) != 0"))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = d[i, j], d[j, i]
            if not exact and (math.isnan(a) or math.isnan(b)):
                out.append(Violation("nonnegative", (i, j), f"d({name[i]},{name[j]}) is NaN"))
                continue
            if a < 0 or b < 0:
                out.append(Violation("nonnegative", (i, j), f"d({name[i]},{name[j]}) < 0"))
            if not close(a, b, tol if not exact else 0.0):
                out.append(
                    Violation("symmetry", (i, j), f"d({name[i]},{name[j]}) != d({name[j]},{name[i]})")
                )
            if a == 0 or b == 0:
                out.append(
                    Violation(
                        "positive_distance",
                        (i, j),
                        f"distinct points {name[i]},{name[j]} at distance 0",
                    )
                )
    if not out and n:
        # triangle inequality, vectorized over k
        for k in range(n):
            via = d[:, k][:, None] + d[k, :][None, :]
            if exact:
                bad = d > via
            else:
                with np.errstate(invalid="ignore"):
                    bad = d > via + tol * np.maximum(1.0, np.where(np.isinf(via), 1.0, via))
            if np.any(bad):
                for i, j in zip(*np.nonzero(bad)):
                    out.append(
                        Violation(
                            "triangle",
                            (int(i), int(j), k),
                            f"d({name[i]},{name[j]}) > d({name[i]},{name[k]}) + d({name[k]},{name[j]})",
                        )
                    )
                    if len(out) >= 20:
                        break
            if len(out) >= 20:
                break
    return ValidationReport(not out, tuple(out))


def make_space(labels, dist, mass, exact: bool | None = None, tol: float = DEFAULT_TOL) -> FiniteDistanceMeasureSpace:
    """Validate and build a :class:`FiniteDistanceMeasureSpace`.

    Args:
        labels: point identifiers.
        dist: square matrix; entries may be numbers, Fractions, "inf" or
            decimal strings.
        mass: nonnegative masses.
        exact: force exact (True) or float (False) storage; detected when None.
        tol: float-mode tolerance used by validation.

    Raises:
        StructureError: malformed shapes.
        InvalidSpaceError: invariant violations.
    """
    labels, d, m, exact = _normalize(labels, dist, mass, exact)
    report = _validate_arrays(labels, d, m, exact, tol)
    if not report.ok:
        raise InvalidSpaceError(report)
    if not exact:
        # symmetrize float noise so downstream code sees an exact mirror
        d = np.minimum(d, d.T)
    return FiniteDistanceMeasureSpace(labels, _frozen(d), _frozen(m), exact)


def space_from_arrays(labels, dist: np.ndarray, mass: np.ndarray, check: bool = True,
                      tol: float = DEFAULT_TOL) -> FiniteDistanceMeasureSpace:
    """Fast constructor for arrays already in canonical storage."""
    exact = dist.dtype == object
    labels = tuple(labels)
    _structure_check(labels, dist, mass)
    if check:
        report = _validate_arrays(labels, dist, mass, exact, tol)
        if not report.ok:
            raise InvalidSpaceError(report)
    return FiniteDistanceMeasureSpace(labels, _frozen(dist), _frozen(mass), exact)


# ---------------------------------------------------------------------------
# Operations


@dataclass(frozen=True)
class ComponentPartition:
    blocks: tuple[tuple[int, ...], ...]

    def block_of(self, i: int) -> int:
        for b, block in enumerate(self.blocks):
            if i in block:
                return b
        raise KeyError(i)


def components(space: FiniteDistanceMeasureSpace) -> ComponentPartition:
    """Partition points into finite-distance classes (union-find)."""
    n = space.n
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if not is_inf(space.dist[i, j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    blocks: dict[int, list[int]] = {}
    for i in range(n):
        blocks.setdefault(find(i), []).append(i)
    return ComponentPartition(tuple(tuple(b) for b in sorted(blocks.values())))


def scale_measure(space: FiniteDistanceMeasureSpace, c) -> FiniteDistanceMeasureSpace:
    """Multiply every mass by ``c >= 0``; distances unchanged."""
    c = parse_scalar(c)
    if c < 0:
        raise ValueError("scale factor must be nonnegative")
    if space.exact and not is_exact_value(c):
        space = space.as_float()
    if space.exact:
        c = Fraction(c)
        mass = np.array([v * c for v in space.mass], dtype=object)
    else:
        mass = space.mass * float(c)
    return FiniteDistanceMeasureSpace(space.labels, space.dist, _frozen(mass), space.exact)


def neighborhood(space: FiniteDistanceMeasureSpace, A: Iterable[int], eps) -> frozenset[int]:
    """Strict ε-neighborhood ``{x : exists s in A, d(x, s) < eps}``."""
    A = list(A)
    if not A:
        return frozenset()
    rows = space.dist[A, :]
    hit = np.any(rows < eps, axis=0)
    return frozenset(int(i) for i in np.nonzero(hit)[0])


def make_log_halfline(points: Sequence, masses: Sequence, labels: Sequence[str] | None = None) -> FiniteDistanceMeasureSpace:
    """Sample of ``[0, inf)`` with ``d(x, y) = |log x - log y|`` and ``d(x, 0) = inf``.

    Raises:
        InvalidSpaceError: duplicate sample values (distinct labels at distance 0).
    """
    pts = [float(p) for p in points]
    if any(p < 0 for p in pts):
        raise ValueError("sample points must be nonnegative")
    if sum(1 for p in pts if p == 0) > 1:
        raise InvalidSpaceError(
            ValidationReport(False, (Violation("positive_distance", (), "two samples at 0"),))
        )
    n = len(pts)
    dist = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if pts[i] == 0 or pts[j] == 0:
                dist[i][j] = INFINITY
            else:
                dist[i][j] = abs(math.log(pts[i]) - math.log(pts[j]))
    labels = labels or [f"x{i}" for i in range(n)]
    return make_space(labels, dist, [float(m) for m in masses], exact=False, tol=0.0)


def finite_support(mass: np.ndarray) -> list[int]:
    return [i for i, v in enumerate(mass) if v > 0]


def diameter(space: FiniteDistanceMeasureSpace):
    if space.n == 0:
        return 0
    return max(space.dist.reshape(-1))
