"""Disjoint unions and slack-δ gluings via the chain formula.

The glued distance between points of ``X ⊔ Y`` is the infimum over chains
``sum d(p_i, q_i) + (k - 1) delta`` where consecutive chain points are
related by the identification map. Equivalently it is the shortest-path
metric of the graph whose edges are the source distances plus a
``delta``-edge between ``p`` and ``q`` whenever ``q = I(p)``, ``p = I(q)`` or
``I(p) = I(q)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._kernels import backend
from .core import (
    DEFAULT_TOL,
    INFINITY,
    FiniteDistanceMeasureSpace,
    _frozen,
    is_exact_value,
    parse_scalar,
    scaled_integer_grid,
)


class InadmissibleGluingError(ValueError):
    """Raised when identified points violate the slack condition."""


@dataclass(frozen=True)
class GluingSpec:
    """Identification map ``I`` on a subset of X, as (x index, y index) pairs."""

    pairs: tuple[tuple[int, int], ...]
    delta: object = 0

    @classmethod
    def build(cls, pairs: Iterable[Sequence[int]], delta=0) -> "GluingSpec":
        return cls(tuple((int(a), int(b)) for a, b in pairs), parse_scalar(delta))


@dataclass(frozen=True, eq=False)
class GluedSpace:
    """``X ⊔ Y`` with a semi-distance; X occupies indices ``0..n-1``."""

    X: FiniteDistanceMeasureSpace
    Y: FiniteDistanceMeasureSpace
    spec: GluingSpec | None
    dist: np.ndarray

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def m(self) -> int:
        return self.Y.n

    @property
    def exact(self) -> bool:
        return self.dist.dtype == object

    def mu(self) -> np.ndarray:
        """Pushforward of the X measure along the inclusion."""
        return _concat(self.X.mass, _zeros(self.m, self.exact), self.exact)

    def nu(self) -> np.ndarray:
        """Pushforward of the Y measure along the inclusion."""
        return _concat(_zeros(self.n, self.exact), self.Y.mass, self.exact)

    def labels(self) -> tuple[str, ...]:
        return tuple(f"X:{l}" for l in self.X.labels) + tuple(f"Y:{l}" for l in self.Y.labels)


def _zeros(k: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(k, dtype=object)
        out[:] = [Fraction(0)] * k
        return out
    return np.zeros(k)


def _concat(a: np.ndarray, b: np.ndarray, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(len(a) + len(b), dtype=object)
        out[: len(a)] = [v if isinstance(v, float) else Fraction(v) for v in a]
        out[len(a):] = [v if isinstance(v, float) else Fraction(v) for v in b]
        return out
    return np.concatenate([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])


def _as_mode(space: FiniteDistanceMeasureSpace, exact: bool) -> FiniteDistanceMeasureSpace:
    return space if space.exact == exact else space.as_float()


def block_diagonal(A: np.ndarray, B: np.ndarray, exact: bool) -> np.ndarray:
    n, m = A.shape[0], B.shape[0]
    out = np.empty((n + m, n + m), dtype=object if exact else float)
    out[:, :] = INFINITY
    out[:n, :n] = A
    out[n:, n:] = B
    return out


def disjoint_union_distance(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace) -> FiniteDistanceMeasureSpace:
    """Block-diagonal union with INFINITY across the blocks.

    Labels are prefixed ``X:``/``Y:``; masses are concatenated.
    """
    exact = X.exact and Y.exact
    X, Y = _as_mode(X, exact), _as_mode(Y, exact)
    dist = block_diagonal(X.dist, Y.dist, exact)
    labels = tuple(f"X:{l}" for l in X.labels) + tuple(f"Y:{l}" for l in Y.labels)
    return FiniteDistanceMeasureSpace(labels, _frozen(dist), _frozen(_concat(X.mass, Y.mass, exact)), exact)


def shortest_paths(G: np.ndarray) -> np.ndarray:
    """Saturating all-pairs shortest paths, exact for rational input."""
    if G.dtype == object:
        grid = scaled_integer_grid(G)
        if grid is not None:
            (Gf,), scale = grid
            R = backend.floyd_warshall(Gf)
            out = np.empty(R.shape, dtype=object)
            flat = out.reshape(-1)
            for i, v in enumerate(R.reshape(-1)):
                flat[i] = INFINITY if np.isinf(v) else Fraction(int(v), scale)
            return out
        D = np.array(G, copy=True)
        for k in range(D.shape[0]):
            D = np.minimum(D, D[:, k][:, None] + D[k, :][None, :])
        return D
    return backend.floyd_warshall(np.asarray(G, dtype=float))


def check_admissible(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace, spec: GluingSpec) -> None:
    """Reject specs that are not maps, are out of range, or break the slack rule.

    Admissibility uses ``d_X(x, x') <= delta`` for points with a shared
    target (the non-strict form used by the inclusion theorems).
    """
    if spec.delta < 0:
        raise InadmissibleGluingError("delta must be nonnegative")
    seen: dict[int, int] = {}
    by_target: dict[int, list[int]] = {}
    for x, y in spec.pairs:
        if not (0 <= x < X.n and 0 <= y < Y.n):
            raise InadmissibleGluingError(f"pair ({x}, {y}) out of range")
        if x in seen and seen[x] != y:
            raise InadmissibleGluingError(f"point {X.labels[x]} mapped twice")
        seen[x] = y
        by_target.setdefault(y, []).append(x)
    for y, xs in by_target.items():
        xs = sorted(set(xs))
        for i, a in enumerate(xs):
            for b in xs[i + 1:]:
                if X.dist[a, b] > spec.delta:
                    raise InadmissibleGluingError(
                        f"pair ({X.labels[a]}, {X.labels[b]}) share target {Y.labels[y]} "
                        f"but d_X = {X.dist[a, b]} > delta = {spec.delta}"
                    )


def glued_distance(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace, spec: GluingSpec) -> GluedSpace:
    """The maximal semi-distance ``d_I^delta`` on ``X ⊔ Y``.

    Raises:
        InadmissibleGluingError: naming the violating pair.
    """
    exact = X.exact and Y.exact and is_exact_value(spec.delta)
    X, Y = _as_mode(X, exact), _as_mode(Y, exact)
    check_admissible(X, Y, spec)
    n = X.n
    delta = Fraction(spec.delta) if exact else float(spec.delta)
    G = block_diagonal(X.dist, Y.dist, exact)
    by_target: dict[int, list[int]] = {}
    for x, y in dict(spec.pairs).items():
        if delta < G[x, n + y]:
            G[x, n + y] = G[n + y, x] = delta
        by_target.setdefault(y, []).append(x)
    for xs in by_target.values():
        for a in xs:
            for b in xs:
                if a != b and delta < G[a, b]:
                    G[a, b] = delta
    D = shortest_paths(G)
    return GluedSpace(X, Y, spec, _frozen(D))


# ---------------------------------------------------------------------------
# Checks


def equal_matrix(A: np.ndarray, B: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Entrywise equality of extended-distance matrices.

    Exact when both are object arrays; otherwise relative tolerance ``tol``.
    """
    if A.dtype == object and B.dtype == object:
        return np.asarray(A == B, dtype=bool)
    a = np.asarray(A, dtype=float)
    b = np.asarray(B, dtype=float)
    both_inf = np.isinf(a) & np.isinf(b)
    with np.errstate(invalid="ignore"):
        diff = np.abs(a - b)
        ok = diff <= tol * np.maximum(1.0, np.where(np.isinf(a), 1.0, np.abs(a)))
    return both_inf | (ok & ~np.isinf(a) & ~np.isinf(b))


def distortion(A: np.ndarray, B: np.ndarray) -> float:
    """Largest ``|A - B|`` entry (INFINITY when exactly one side is infinite)."""
    a = np.asarray(A, dtype=float)
    b = np.asarray(B, dtype=float)
    if a.size == 0:
        return 0.0
    ia, ib = np.isinf(a), np.isinf(b)
    if np.any(ia != ib):
        return INFINITY
    fin = ~ia
    return float(np.max(np.abs(a[fin] - b[fin]), initial=0.0))


@dataclass(frozen=True)
class InclusionReport:
    X_ok: bool
    Y_ok: bool
    max_distortion: float


def check_isometric_inclusions(g: GluedSpace, tol: float = DEFAULT_TOL) -> InclusionReport:
    """Do the inclusions of X and Y into the glued space preserve distances?"""
    n = g.n
    DX = g.dist[:n, :n]
    DY = g.dist[n:, n:]
    X_ok = bool(np.all(equal_matrix(DX, g.X.dist, tol)))
    Y_ok = bool(np.all(equal_matrix(DY, g.Y.dist, tol)))
    dist = max(distortion(DX, g.X.dist), distortion(DY, g.Y.dist))
    return InclusionReport(X_ok, Y_ok, dist)


@dataclass(frozen=True)
class LIsometryReport:
    ok: bool
    first_violation: tuple[int, int, object, object] | None = None


def _matrix(x) -> np.ndarray:
    return x.dist if isinstance(x, FiniteDistanceMeasureSpace) else np.asarray(x)


def _violation_scales(source, target, mapping, removed, tol):
    """Pairs (i<j) outside ``removed`` whose distance changes, with scale min(d, d')."""
    S = _matrix(source)
    T = _matrix(target)
    keep = [i for i in range(S.shape[0]) if i not in set(removed)]
    if len(keep) < 2:
        return []
    idx = np.asarray(keep)
    img = np.asarray([mapping[i] for i in keep])
    A = S[np.ix_(idx, idx)]
    B = T[np.ix_(img, img)]
    bad = ~equal_matrix(A, B, tol)
    iu = np.triu(np.ones(bad.shape, dtype=bool), 1)
    out = []
    for a, b in zip(*np.nonzero(bad & iu)):
        d, dp = A[a, b], B[a, b]
        out.append((keep[a], keep[b], min(d, dp), d, dp))
    return out


def check_L_isometric(source, target, mapping: Sequence[int], L, removed: Iterable[int] = (),
                      tol: float = DEFAULT_TOL) -> LIsometryReport:
    """Is ``mapping`` an L-isometric embedding away from ``removed``?

    Fails iff some pair outside ``removed`` has ``min(d, d') < L`` and
    ``d' != d``.

    Args:
        source: space or matrix of the domain.
        target: space or matrix of the codomain.
        mapping: target index for each source index (removed ones ignored).
        L: positive level, possibly INFINITY.
        removed: source indices excluded from the check.
        tol: float-mode equality tolerance.
    """
    viols = _violation_scales(source, target, mapping, tuple(removed), tol)
    for i, j, scale, d, dp in viols:
        if scale < L:
            return LIsometryReport(False, (i, j, d, dp))
    return LIsometryReport(True, None)


def largest_valid_level(source, target, mapping: Sequence[int], removed: Iterable[int] = (),
                        tol: float = DEFAULT_TOL):
    """Supremum of levels L at which ``mapping`` is L-isometric (INFINITY if isometric)."""
    viols = _violation_scales(source, target, mapping, tuple(removed), tol)
    if not viols:
        return INFINITY
    return min(v[2] for v in viols)


def quotient_zero(g: GluedSpace) -> tuple[FiniteDistanceMeasureSpace, list[int]]:
    """Identify points at glued distance 0 (meaningful when delta = 0).

    Returns the quotient space (masses of both parts summed per class) and
    the class index of every point of ``X ⊔ Y``.
    """
    from .core import FiniteDistanceMeasureSpace as _S

    N = g.n + g.m
    cls = [-1] * N
    reps: list[int] = []
    for i in range(N):
        if cls[i] >= 0:
            continue
        cls[i] = len(reps)
        for j in range(i + 1, N):
            if cls[j] < 0 and g.dist[i, j] == 0:
                cls[j] = len(reps)
        reps.append(i)
    labels = g.labels()
    mass_total = _concat(g.X.mass, g.Y.mass, g.exact)
    k = len(reps)
    mass = _zeros(k, g.exact)
    for i in range(N):
        mass[cls[i]] = mass[cls[i]] + mass_total[i]
    dist = g.dist[np.ix_(reps, reps)]
    names = []
    for r in range(k):
        names.append("=".join(labels[i] for i in range(N) if cls[i] == r))
    return _S(tuple(names), _frozen(np.array(dist)), _frozen(mass), g.exact), cls
