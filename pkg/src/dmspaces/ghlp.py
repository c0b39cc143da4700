"""Witness-certified bounds on the GHLP distance ``d_rho``.

A witness is a common semi-distance on ``X ⊔ Y`` (a glued space) together
with a level ``L``, a slack ``eps`` and removed sets of mass at most ``eps``
such that both inclusions are L-isometric away from the removed sets. Its
objective ``d_pi(mu_X, mu_Y) + 1/L + eps`` is an upper bound for ``d_rho``.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
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
    is_inf,
    make_space,
    scaled_integer_grid,
    sum_values,
)
from .gluing import (
    GluedSpace,
    GluingSpec,
    _concat,
    check_L_isometric,
    equal_matrix,
    glued_distance,
    largest_valid_level,
    shortest_paths,
)
from .prokhorov import MeasurePair, levy_prokhorov_flow, prokhorov_distance

SQRT_HALF = 1 / math.sqrt(2)


class WitnessError(ValueError):
    """Raised when a witness violates one of its defining clauses."""


@dataclass(frozen=True, eq=False)
class RhoWitness:
    """Certificate for an upper bound on ``d_rho(X, Y)``.

    Attributes:
        glued: common semi-distance on ``X ⊔ Y``.
        L: isometry level (INFINITY allowed).
        eps: slack bounding the removed masses.
        removed_x: X indices exempt from the isometry condition.
        removed_y: Y indices exempt from the isometry condition.
    """

    glued: GluedSpace
    L: object
    eps: object
    removed_x: frozenset[int] = frozenset()
    removed_y: frozenset[int] = frozenset()

    @property
    def kind(self) -> str:
        """``"metric"`` when every glued distance is finite, else ``"distance"``."""
        finite = not np.any(np.isinf(np.asarray(self.glued.dist, dtype=float)))
        return "metric" if finite else "distance"

    def transposed(self) -> "RhoWitness":
        """The same certificate read as a witness for ``(Y, X)``."""
        g = self.glued
        n, m = g.n, g.m
        order = list(range(n, n + m)) + list(range(n))
        dist = np.asarray(g.dist)[np.ix_(order, order)]
        spec = None
        if g.spec is not None:
            spec = GluingSpec(tuple((y, x) for x, y in g.spec.pairs), g.spec.delta)
        return RhoWitness(GluedSpace(g.Y, g.X, spec, _frozen(dist)), self.L, self.eps,
                          self.removed_y, self.removed_x)


@dataclass(frozen=True, eq=False)
class RhoEstimate:
    lower: object
    upper: object
    witness: RhoWitness | None = None
    evaluated: int = 0


def _inv(L):
    if is_inf(L):
        return 0
    if is_exact_value(L):
        return 1 / Fraction(L)
    return 1.0 / float(L)


def _same_space(A: FiniteDistanceMeasureSpace, B: FiniteDistanceMeasureSpace, tol: float) -> bool:
    if A.n != B.n:
        return False
    if A.exact and B.exact:
        return bool(np.all(A.dist == B.dist)) and bool(np.all(A.mass == B.mass))
    return bool(np.all(equal_matrix(A.dist, B.dist, tol))) and bool(
        np.all(np.abs(np.asarray(A.mass, dtype=float) - np.asarray(B.mass, dtype=float)) <= tol)
    )


def validate_witness(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace, w: RhoWitness,
                     tol: float = DEFAULT_TOL) -> None:
    """Check every witness clause; raise :class:`WitnessError` naming the first failure."""
    g = w.glued
    n, m = X.n, Y.n
    if not (_same_space(g.X, X, tol) and _same_space(g.Y, Y, tol)):
        raise WitnessError("parts: witness was built for different spaces")
    D = g.dist
    if D.shape != (n + m, n + m):
        raise WitnessError("shape: glued matrix does not cover X ⊔ Y")
    if not (is_inf(w.L) or w.L > 0):
        raise WitnessError("level: L must be positive")
    if w.eps < 0:
        raise WitnessError("eps: must be nonnegative")
    exact = D.dtype == object
    Df = np.asarray(D, dtype=float)
    if np.any(np.diag(Df) != 0) or np.any(Df < 0):
        raise WitnessError("semi-distance: diagonal must vanish and entries be nonnegative")
    if not np.all(equal_matrix(D, D.T, tol)):
        raise WitnessError("semi-distance: matrix not symmetric")
    grid = scaled_integer_grid(D) if exact else None
    if grid is not None:
        # integer-valued doubles: exact comparisons without Fraction arithmetic
        Dg = grid[0][0]
    for k in range(n + m):
        if grid is not None:
            bad = Dg > (Dg[:, k][:, None] + Dg[k, :][None, :])
        elif exact:
            bad = D > (D[:, k][:, None] + D[k, :][None, :])
        else:
            via = Df[:, k][:, None] + Df[k, :][None, :]
            with np.errstate(invalid="ignore"):
                bad = Df > via + tol * np.maximum(1.0, np.where(np.isinf(via), 1.0, via))
        if np.any(bad):
            i, j = (int(v[0]) for v in np.nonzero(bad))
            raise WitnessError(f"semi-distance: triangle inequality fails at ({i}, {j}) via {k}")
    rx = sum_values(X.mass[i] for i in w.removed_x)
    ry = sum_values(Y.mass[i] for i in w.removed_y)
    slack = 0 if (exact and is_exact_value(w.eps)) else tol
    if rx > w.eps + slack or ry > w.eps + slack:
        raise WitnessError(f"removed mass: {rx} / {ry} exceeds eps = {w.eps}")
    rep = check_L_isometric(X.dist, D[:n, :n], list(range(n)), w.L, w.removed_x, tol)
    if not rep.ok:
        raise WitnessError(f"L-isometry (X): pair {rep.first_violation[:2]} changes "
                           f"{rep.first_violation[2]} -> {rep.first_violation[3]} below L")
    rep = check_L_isometric(Y.dist, D[n:, n:], list(range(m)), w.L, w.removed_y, tol)
    if not rep.ok:
        raise WitnessError(f"L-isometry (Y): pair {rep.first_violation[:2]} changes "
                           f"{rep.first_violation[2]} -> {rep.first_violation[3]} below L")


def witness_objective(w: RhoWitness):
    """``d_pi`` of the full pushforwards plus ``1/L`` plus ``eps``."""
    g = w.glued
    pair = MeasurePair(g.dist, g.mu(), g.nu())
    dpi = prokhorov_distance(pair)
    inv = _inv(w.L)
    if isinstance(dpi, Fraction) and isinstance(inv, (int, Fraction)) and is_exact_value(w.eps):
        return dpi + inv + Fraction(w.eps)
    return float(dpi) + float(inv) + float(w.eps)


def rho_upper_from_witness(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace, w: RhoWitness,
                           tol: float = DEFAULT_TOL):
    """Validate ``w`` and return its objective.

    Raises:
        WitnessError: naming the violated clause.
    """
    validate_witness(X, Y, w, tol)
    return witness_objective(w)


def rho_lower(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace):
    """Mass-gap lower bound ``|mu_X(X) - mu_Y(Y)|``."""
    a, b = X.total_mass, Y.total_mass
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b))
    return abs(Fraction(a) - Fraction(b))


# ---------------------------------------------------------------------------
# Search


@dataclass(frozen=True)
class SearchBudget:
    """Limits for :func:`rho_search`.

    Attributes:
        max_matchings: matchings evaluated in the exhaustive phase.
        exhaustive_limit: largest ``|X|*|Y|`` searched exhaustively.
        max_deltas: slack values tried per matching (quantiles of the distortions).
        delta_grid: extra slack values tried for every matching.
        max_removed: longest removal prefix swept per side.
        local_steps: local-search proposals in the non-exhaustive phase.
        time_cap: optional wall-clock cap in seconds; when it triggers the
            result depends on machine speed.
    """

    max_matchings: int = 20000
    exhaustive_limit: int = 30
    max_deltas: int = 6
    delta_grid: tuple = ()
    max_removed: int = 4
    local_steps: int = 200
    time_cap: float | None = None


DEFAULT_BUDGET = SearchBudget()


@dataclass
class _Best:
    objective: float = math.inf
    pairs: tuple = ()
    delta: float = 0.0
    removed_x: tuple = ()
    removed_y: tuple = ()
    L: float = math.inf


class _Searcher:
    """Float (or exact integer-grid) evaluation engine for one ordered pair."""

    def __init__(self, X, Y, budget: SearchBudget, tol: float):
        self.X, self.Y = X, Y
        self.n, self.m = X.n, Y.n
        self.budget = budget
        self.tol = tol
        self.exact = X.exact and Y.exact
        if self.exact:
            grid = scaled_integer_grid(X.dist, Y.dist, X.mass, Y.mass)
            if grid is None:
                self.exact = False
        if self.exact:
            (DX, DY, mx, my), self.scale = grid
        else:
            self.scale = 1
            DX = np.asarray(X.dist, dtype=float)
            DY = np.asarray(Y.dist, dtype=float)
            mx = np.asarray(X.mass, dtype=float)
            my = np.asarray(Y.mass, dtype=float)
        self.DX, self.DY, self.mx, self.my = DX, DY, mx, my
        N = self.n + self.m
        self.mu = np.concatenate([mx, np.zeros(self.m)])
        self.nu = np.concatenate([np.zeros(self.n), my])
        self.S_mu = sorted([i for i in range(N) if self.mu[i] > 0], key=lambda i: (-self.mu[i], i))
        self.S_nu = sorted([i for i in range(N) if self.nu[i] > 0], key=lambda i: (-self.nu[i], i))
        self.gap = abs(float(mx.sum()) - float(my.sum()))
        base = np.full((N, N), np.inf)
        base[: self.n, : self.n] = DX
        base[self.n:, self.n:] = DY
        self.base = base
        self.best = _Best()
        self.evaluated = 0
        self.started = time.monotonic()
        self._cache: dict = {}

    # -- helpers ---------------------------------------------------------
    def out_of_time(self) -> bool:
        cap = self.budget.time_cap
        return cap is not None and time.monotonic() - self.started > cap

    def real_objective(self, dpi, L, eps) -> float:
        s = self.scale
        inv = 0.0 if math.isinf(L) else s / L
        return (dpi + eps) / s + inv

    def _equal(self, A, B):
        if self.exact:
            return A == B
        both = np.isinf(A) & np.isinf(B)
        with np.errstate(invalid="ignore"):
            ok = np.abs(A - B) <= self.tol * np.maximum(1.0, np.where(np.isinf(A), 1.0, np.abs(A)))
        return both | (ok & ~np.isinf(A) & ~np.isinf(B))

    def deltas_for(self, pairs) -> list[float]:
        vals = {0.0}
        for (a, b), (c, d) in itertools.combinations(pairs, 2):
            u, v = self.DX[a, c], self.DY[b, d]
            if math.isinf(u) or math.isinf(v):
                continue
            vals.add(abs(u - v))
        vals = sorted(vals)
        k = self.budget.max_deltas
        if len(vals) > k:
            idx = sorted({round(i * (len(vals) - 1) / (k - 1)) for i in range(k)})
            vals = [vals[i] for i in idx]
        extra = [float(x) * self.scale for x in self.budget.delta_grid]
        return sorted(set(vals) | set(extra))

    def removal_options(self, viols, masses, offset):
        """Pareto options (eps, L) per side: mass-sorted and scale-greedy prefixes."""
        if not viols:
            return [(0.0, math.inf, ())]
        pts = sorted({v[0] for v in viols} | {v[1] for v in viols})
        orders = [sorted(pts, key=lambda i: (masses[i], i))]
        # greedy: repeatedly drop the lighter endpoint of the smallest-scale violation
        rem: list[int] = []
        live = list(viols)
        while live and len(rem) < self.budget.max_removed:
            i, j, _ = min(live, key=lambda v: (v[2], v[0], v[1]))
            pick = i if (masses[i], i) <= (masses[j], j) else j
            rem.append(pick)
            live = [v for v in live if v[0] != pick and v[1] != pick]
        orders.append(rem + [p for p in orders[0] if p not in rem])
        opts = {}
        for order in orders:
            for k in range(0, min(len(order), self.budget.max_removed) + 1):
                removed = tuple(sorted(order[:k]))
                if removed in opts:
                    continue
                rs = set(removed)
                eps = float(sum(masses[i] for i in removed))
                scales = [v[2] for v in viols if v[0] not in rs and v[1] not in rs]
                L = min(scales) if scales else math.inf
                opts[removed] = (eps, L, removed)
        return list(opts.values())

    def violations(self, A, B):
        bad = ~self._equal(A, B)
        iu = np.triu(bad, 1)
        out = []
        for i, j in zip(*np.nonzero(iu)):
            out.append((int(i), int(j), float(min(A[i, j], B[i, j]))))
        return out

    def dpi(self, G) -> float:
        if max(len(self.S_mu), len(self.S_nu)) <= 16:
            best = backend.lp_direction(G, self.mu, self.nu, self.S_mu, self.S_nu, 0.0)
            return float(backend.lp_direction(G, self.nu, self.mu, self.S_nu, self.S_mu, best))
        pair = MeasurePair(G, self.mu, self.nu)
        return float(levy_prokhorov_flow(pair))

    # -- evaluation --------------------------------------------------------
    def evaluate(self, pairs: tuple, delta: float) -> float:
        key = (pairs, delta)
        if key in self._cache:
            return self._cache[key]
        self.evaluated += 1
        n = self.n
        G = self.base.copy()
        by_target: dict[int, list[int]] = {}
        for x, y in pairs:
            G[x, n + y] = G[n + y, x] = min(G[x, n + y], delta)
            by_target.setdefault(y, []).append(x)
        for xs in by_target.values():
            for a in xs:
                for b in xs:
                    if a != b:
                        G[a, b] = min(G[a, b], delta)
        G = backend.floyd_warshall(G)
        vx = self.violations(self.DX, G[:n, :n])
        vy = self.violations(self.DY, G[n:, n:])
        ox = self.removal_options(vx, self.mx, 0)
        oy = self.removal_options(vy, self.my, n)
        best_pen = math.inf
        choice = None
        for ex, Lx, rx in ox:
            for ey, Ly, ry in oy:
                pen = self.real_objective(0.0, min(Lx, Ly), max(ex, ey))
                if pen < best_pen:
                    best_pen, choice = pen, (rx, ry, min(Lx, Ly))
        if self.gap / self.scale + best_pen >= self.best.objective:
            self._cache[key] = math.inf
            return math.inf
        d = self.dpi(G)
        obj = d / self.scale + best_pen
        self._cache[key] = obj
        if obj < self.best.objective:
            rx, ry, L = choice
            self.best = _Best(obj, pairs, delta, rx, ry, L)
        return obj

    def evaluate_matching(self, pairs) -> float:
        pairs = tuple(sorted(pairs))
        best = math.inf
        for delta in self.deltas_for(pairs):
            best = min(best, self.evaluate(pairs, delta))
        return best

    def done(self) -> bool:
        return self.best.objective <= self.gap / self.scale or self.out_of_time()

    # -- strategies ------------------------------------------------------
    def greedy(self, first: tuple[int, int]) -> tuple:
        pairs = [first]
        used_x = np.zeros(self.n, dtype=bool)
        used_y = np.zeros(self.m, dtype=bool)
        # cost[x, y]: worst distortion of adding (x, y) to the current pairs
        cost = np.zeros((self.n, self.m))
        mass_gap = np.abs(self.mx[:, None] - self.my[None, :])

        def absorb(a, b):
            used_x[a] = used_y[b] = True
            u, v = self.DX[:, a][:, None], self.DY[:, b][None, :]
            iu, iv = np.isinf(u), np.isinf(v)
            with np.errstate(invalid="ignore"):
                d = np.where(iu | iv, 0.0, np.abs(u - v))
            d = np.where(iu != iv, np.inf, d)
            np.maximum(cost, d, out=cost)

        absorb(*first)
        while len(pairs) < min(self.n, self.m):
            c = np.where(used_x[:, None] | used_y[None, :], np.inf, cost)
            lo = c.min()
            if math.isinf(lo):
                break
            xs, ys = np.nonzero(c == lo)
            best = min(zip(mass_gap[xs, ys], xs, ys))
            a, b = int(best[1]), int(best[2])
            pairs.append((a, b))
            absorb(a, b)
        return tuple(sorted(pairs))

    def seeds(self, extra: Sequence[tuple]) -> list[tuple]:
        out = [tuple(sorted(p)) for p in extra if p]
        firsts = sorted(
            ((abs(self.mx[x] - self.my[y]), x, y) for x in range(self.n) for y in range(self.m)),
        )[: min(4, self.n * self.m)]
        for _, x, y in firsts:
            out.append(self.greedy((x, y)))
        uniq = []
        for s in out:
            if s not in uniq:
                uniq.append(s)
        return uniq

    def all_matchings(self):
        xs, ys = range(self.n), range(self.m)
        for k in range(min(self.n, self.m), -1, -1):
            for sub in itertools.combinations(xs, k):
                for img in itertools.permutations(ys, k):
                    yield tuple(zip(sub, img))

    def matching_score(self, pairs) -> float:
        dis = 0.0
        for (a, b), (c, d) in itertools.combinations(pairs, 2):
            u, v = self.DX[a, c], self.DY[b, d]
            if math.isinf(u) != math.isinf(v):
                return math.inf
            if not math.isinf(u):
                dis = max(dis, abs(u - v))
        return dis

    def exhaustive(self):
        cands = list(itertools.islice(self.all_matchings(), self.budget.max_matchings))
        cands.sort(key=lambda p: (self.matching_score(p), -len(p), p))
        for pairs in cands:
            if self.done():
                return
            self.evaluate_matching(pairs)

    def local_search(self, start: tuple, rng: random.Random):
        cur = tuple(sorted(start))
        cur_obj = self.evaluate_matching(cur)
        for _ in range(self.budget.local_steps):
            if self.done():
                return
            pairs = list(cur)
            used_x = {a for a, _ in pairs}
            used_y = {b for _, b in pairs}
            free_x = [x for x in range(self.n) if x not in used_x]
            free_y = [y for y in range(self.m) if y not in used_y]
            move = rng.randrange(4)
            if move == 0 and len(pairs) >= 2:
                i, j = rng.sample(range(len(pairs)), 2)
                (a, b), (c, d) = pairs[i], pairs[j]
                pairs[i], pairs[j] = (a, d), (c, b)
            elif move == 1 and pairs and free_y:
                i = rng.randrange(len(pairs))
                pairs[i] = (pairs[i][0], rng.choice(free_y))
            elif move == 2 and free_x and free_y:
                pairs.append((rng.choice(free_x), rng.choice(free_y)))
            elif move == 3 and pairs:
                pairs.pop(rng.randrange(len(pairs)))
            else:
                continue
            cand = tuple(sorted(pairs))
            obj = self.evaluate_matching(cand)
            if obj < cur_obj:
                cur, cur_obj = cand, obj


def _canonical_key(S: FiniteDistanceMeasureSpace):
    return (
        S.n,
        tuple(sorted(repr(v) for v in S.mass)),
        tuple(repr(v) for v in S.mass),
        tuple(repr(v) for v in np.asarray(S.dist).reshape(-1)),
        S.labels,
    )


def rho_search(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace,
               budget: SearchBudget = DEFAULT_BUDGET, seed: int = 0,
               initial: Sequence[Sequence[tuple[int, int]]] = (),
               tol: float = DEFAULT_TOL) -> RhoEstimate:
    """Bracket ``d_rho(X, Y)`` by a certified witness and the mass gap.

    The pair is first put in a canonical order so that swapping the
    arguments yields the transposed witness and the same upper bound.

    Args:
        X: first space.
        Y: second space.
        budget: search limits.
        seed: seed for local-search proposals.
        initial: extra candidate matchings (lists of (x, y) index pairs).
        tol: float-mode comparison tolerance.

    Returns:
        ``RhoEstimate`` whose upper bound is recomputed from the witness.
    """
    if _canonical_key(X) > _canonical_key(Y):
        flipped = [tuple((y, x) for x, y in p) for p in initial]
        est = rho_search(Y, X, budget, seed, flipped, tol)
        w = est.witness.transposed() if est.witness is not None else None
        return RhoEstimate(est.lower, est.upper, w, est.evaluated)
    lower = rho_lower(X, Y)
    s = _Searcher(X, Y, budget, tol)
    extra = [tuple(p) for p in initial]
    eq = is_equivalent_zero_distance(X, Y, tol)
    if eq is not None:
        extra.insert(0, tuple(sorted(eq.items())))
    shared = [(X.labels.index(l), Y.labels.index(l)) for l in X.labels if l in set(Y.labels)]
    if shared:
        extra.append(tuple(shared))
    seeds = s.seeds(extra)
    for p in seeds:
        if s.done():
            break
        s.evaluate_matching(p)
    if not s.done():
        if X.n * Y.n <= budget.exhaustive_limit:
            s.exhaustive()
        else:
            rng = random.Random(seed)
            start = s.best.pairs if s.best.pairs else (seeds[0] if seeds else ())
            s.local_search(start, rng)
    if not s.best.pairs and math.isinf(s.best.objective):
        s.evaluate(tuple(), 0.0)
    w = _build_witness(X, Y, s)
    upper = rho_upper_from_witness(X, Y, w, tol)
    if upper < lower:
        upper = lower
    return RhoEstimate(lower, upper, w, s.evaluated)


def _build_witness(X, Y, s: _Searcher) -> RhoWitness:
    b = s.best
    if s.exact:
        delta = Fraction(int(b.delta), s.scale)
        L = INFINITY if math.isinf(b.L) else Fraction(int(b.L), s.scale)
        eps_x = sum_values(X.mass[i] for i in b.removed_x)
        eps_y = sum_values(Y.mass[i] for i in b.removed_y)
    else:
        delta = float(b.delta)
        L = b.L
        eps_x = float(sum(float(X.mass[i]) for i in b.removed_x))
        eps_y = float(sum(float(Y.mass[i]) for i in b.removed_y))
    g = glued_distance(X, Y, GluingSpec(tuple(b.pairs), delta))
    eps = max(eps_x, eps_y)
    if not s.exact:
        # recompute the level on the final matrix so float noise cannot invalidate it
        n = X.n
        Lx = largest_valid_level(X.dist, g.dist[:n, :n], list(range(n)), b.removed_x, s.tol)
        Ly = largest_valid_level(Y.dist, g.dist[n:, n:], list(range(Y.n)), b.removed_y, s.tol)
        L = min(Lx, Ly)
    return RhoWitness(g, L, eps, frozenset(b.removed_x), frozenset(b.removed_y))


def identity_witness(X: FiniteDistanceMeasureSpace) -> RhoWitness:
    """Witness for ``(X, X)`` gluing each point to its copy with slack 0."""
    spec = GluingSpec(tuple((i, i) for i in range(X.n)), 0 if X.exact else 0.0)
    return RhoWitness(glued_distance(X, X, spec), INFINITY, 0 if X.exact else 0.0)


# ---------------------------------------------------------------------------
# Composition


def compose_witnesses(w1: RhoWitness, w2: RhoWitness, tol: float = DEFAULT_TOL) -> RhoWitness:
    """Chain a witness for ``(X, Y)`` with one for ``(Y, Z)``.

    The two glued spaces are joined by identifying the two copies of every
    middle point that neither witness removed (slack 0); the result is
    restricted to ``X ⊔ Z``. Level ``min(L1, L2)`` and slack
    ``max(eps1, eps2)`` remain valid: a middle detour shorter than the level
    coincides with the original middle distance, so no new shortcut appears
    below it.

    Raises:
        WitnessError: the middle spaces differ.
    """
    g1, g2 = w1.glued, w2.glued
    if not _same_space(g1.Y, g2.X, tol):
        raise WitnessError("middle spaces differ")
    X, Y, Z = g1.X, g1.Y, g2.Y
    n, m, k = X.n, Y.n, Z.n
    exact = g1.exact and g2.exact
    N = n + 2 * m + k
    G = np.empty((N, N), dtype=object if exact else float)
    G[:, :] = INFINITY
    D1 = g1.dist if exact else np.asarray(g1.dist, dtype=float)
    D2 = g2.dist if exact else np.asarray(g2.dist, dtype=float)
    G[: n + m, : n + m] = D1
    G[n + m:, n + m:] = D2
    zero = Fraction(0) if exact else 0.0
    skip = set(w1.removed_y) | set(w2.removed_x)
    for y in range(m):
        if y not in skip:
            G[n + y, n + m + y] = G[n + m + y, n + y] = zero
    D = shortest_paths(G)
    keep = list(range(n)) + list(range(n + 2 * m, N))
    dist = np.array(D[np.ix_(keep, keep)])
    L = min(w1.L, w2.L)
    eps = max(w1.eps, w2.eps)
    if not exact:
        Lx = largest_valid_level(X.dist, dist[:n, :n], list(range(n)), w1.removed_x, tol)
        Lz = largest_valid_level(Z.dist, dist[n:, n:], list(range(k)), w2.removed_y, tol)
        L = min(L, Lx, Lz)
    g = GluedSpace(X, Z, None, _frozen(dist))
    return RhoWitness(g, L, eps, frozenset(w1.removed_x), frozenset(w2.removed_y))


# ---------------------------------------------------------------------------
# Zero distance


def is_equivalent_zero_distance(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace,
                                tol: float = DEFAULT_TOL) -> dict[int, int] | None:
    """Find a measure-preserving isometry between the massive parts.

    Zero-mass points are dropped first. Returns a map from X indices to Y
    indices, or ``None`` when no bijection preserves distances and masses.
    """
    exact = X.exact and Y.exact
    ix = [i for i in range(X.n) if X.mass[i] > 0]
    iy = [j for j in range(Y.n) if Y.mass[j] > 0]
    if len(ix) != len(iy):
        return None

    def eq(a, b):
        if exact:
            return a == b
        if is_inf(a) or is_inf(b):
            return is_inf(a) and is_inf(b)
        return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(a)))

    if not eq(sum_values(X.mass[i] for i in ix), sum_values(Y.mass[j] for j in iy)):
        return None

    def signature(S, idx, i):
        row = [S.dist[i, j] for j in idx if j != i]
        return sorted(float(v) for v in row)

    def sig_eq(s1, s2):
        return len(s1) == len(s2) and all(eq(a, b) for a, b in zip(s1, s2))

    sx = {i: signature(X, ix, i) for i in ix}
    sy = {j: signature(Y, iy, j) for j in iy}
    cand = {
        i: [j for j in iy if eq(X.mass[i], Y.mass[j]) and sig_eq(sx[i], sy[j])] for i in ix
    }
    order = sorted(ix, key=lambda i: (len(cand[i]), i))
    assign: dict[int, int] = {}
    used: set[int] = set()

    def bt(t):
        if t == len(order):
            return True
        i = order[t]
        for j in cand[i]:
            if j in used:
                continue
            if all(eq(X.dist[i, a], Y.dist[j, b]) for a, b in assign.items()):
                assign[i] = j
                used.add(j)
                if bt(t + 1):
                    return True
                del assign[i]
                used.discard(j)
        return False

    return dict(sorted(assign.items())) if bt(0) else None


# ---------------------------------------------------------------------------
# Quasi-isometry extraction


@dataclass(frozen=True)
class QuasiIsometryResult:
    mapping: dict
    excluded: frozenset
    clauses: dict
    ok: bool
    details: dict = field(default_factory=dict)


def extract_quasi_isometry(X: FiniteDistanceMeasureSpace, Y: FiniteDistanceMeasureSpace, w: RhoWitness,
                           delta, tol: float = DEFAULT_TOL, max_subsets: int = 16) -> QuasiIsometryResult:
    """Nearest-point map from a witness, with every clause of the statement checked.

    Clauses reported:

    * ``excluded_mass``: ``mu(X_hat) < delta``.
    * ``distance``: for kept ``x, x'`` with ``d_Y(fx, fx') < 1/delta - 2 delta``
      or ``d_X(x, x') < 1/delta - 2 delta``, both one-sided inequalities with
      slack ``2 delta`` hold.
    * ``measure_forward`` / ``measure_backward``: the two measure inequalities
      over every subset ``E`` of Y.
    * ``surjectivity``: ``nu(Y) <= nu(f(X - X_hat)^{2 delta}) + 2 delta``.

    Raises:
        ValueError: unless ``objective(w) < delta < 1/sqrt(2)``.
    """
    obj = rho_upper_from_witness(X, Y, w, tol)
    if not (float(obj) < float(delta) < SQRT_HALF):
        raise ValueError(f"need objective ({float(obj):.6g}) < delta ({float(delta):.6g}) < 1/sqrt(2)")
    n, m = X.n, Y.n
    D = np.asarray(w.glued.dist, dtype=float)
    dlt = float(delta)
    ykeep = [j for j in range(m) if j not in w.removed_y] or list(range(m))
    mapping: dict[int, int] = {}
    excluded = set(w.removed_x)
    for x in range(n):
        row = [(D[x, n + j], j) for j in ykeep]
        dmin, j = min(row)
        if dmin > dlt:
            excluded.add(x)
        if x not in excluded:
            mapping[x] = j
    DX = np.asarray(X.dist, dtype=float)
    DY = np.asarray(Y.dist, dtype=float)
    mx = np.asarray(X.mass, dtype=float)
    my = np.asarray(Y.mass, dtype=float)
    two = 2 * dlt
    scale = 1 / dlt - two
    slack = tol
    clauses: dict[str, bool] = {}
    details: dict[str, object] = {}
    ex_mass = float(sum(mx[i] for i in excluded))
    clauses["excluded_mass"] = ex_mass < dlt + slack
    details["excluded_mass"] = ex_mass
    dist_ok = True
    kept = sorted(mapping)
    for a, b in itertools.combinations(kept, 2):
        dx, dy = DX[a, b], DY[mapping[a], mapping[b]]
        if dy < scale or dx < scale:
            if not (dy < dx + two + slack and dx < dy + two + slack):
                dist_ok = False
                details["distance"] = (a, b, dx, dy)
                break
    clauses["distance"] = dist_ok
    if m > max_subsets:
        raise ValueError(f"subset enumeration over {m} points exceeds {max_subsets}")
    fwd = bwd = True
    for code in range(1 << m):
        E = [j for j in range(m) if code >> j & 1]
        Es = set(E)
        pre = [x for x in kept if mapping[x] in Es]
        mu_pre = float(sum(mx[x] for x in pre))
        E_nb = [j for j in range(m) if E and min(DY[j, e] for e in E) < two]
        if mu_pre > float(sum(my[j] for j in E_nb)) + two + slack:
            fwd = False
            details["measure_forward"] = E
        pre_nb = [x for x in range(n) if pre and min(DX[x, p] for p in pre) < two]
        if float(sum(my[j] for j in E)) > float(sum(mx[x] for x in pre_nb)) + two + slack:
            bwd = False
            details["measure_backward"] = E
        if not (fwd or bwd):
            break
    clauses["measure_forward"] = fwd
    clauses["measure_backward"] = bwd
    img = sorted(set(mapping.values()))
    img_nb = [j for j in range(m) if img and min(DY[j, e] for e in img) < two]
    clauses["surjectivity"] = float(my.sum()) <= float(sum(my[j] for j in img_nb)) + two + slack
    return QuasiIsometryResult(mapping, frozenset(excluded), clauses, all(clauses.values()), details)


# ---------------------------------------------------------------------------
# Limits


class NonConvergentError(ValueError):
    """Raised when a sequence entry neither stabilizes nor diverges."""


def limit_of_finite_sequence(seq: Sequence[FiniteDistanceMeasureSpace], tol: float,
                             divergence_threshold: float = 1e6, window: int | None = None
                             ) -> FiniteDistanceMeasureSpace:
    """Limit of a sequence of spaces over common labels.

    Each distance entry either stabilizes (the last ``window`` terms lie
    within ``tol`` of each other; the limit is the last term), or diverges
    (the tail is strictly increasing and ends above
    ``divergence_threshold``; the limit is INFINITY). Points whose limit
    distance is below ``tol`` are identified and their masses summed.

    Raises:
        NonConvergentError: naming the first entry that does neither.
    """
    if not seq:
        raise ValueError("empty sequence")
    labels = seq[0].labels
    for S in seq:
        if S.labels != labels:
            raise ValueError("all spaces must share labels in the same order")
    K = len(seq)
    w = window or max(2, K // 2)
    w = min(w, K)
    n = len(labels)
    last = seq[-1]
    exact = all(S.exact for S in seq)

    def limit(values, what):
        tail = values[-w:]
        if all(is_inf(v) for v in tail):
            return INFINITY
        if any(is_inf(v) for v in tail):
            raise NonConvergentError(f"{what} mixes finite and infinite values in the tail")
        lo, hi = min(tail), max(tail)
        if float(hi) - float(lo) <= tol:
            return tail[-1]
        if all(b > a for a, b in zip(tail, tail[1:])) and float(tail[-1]) > divergence_threshold:
            return INFINITY
        raise NonConvergentError(f"{what} does not stabilize within tol={tol}")

    lim = np.empty((n, n), dtype=object)
    for i in range(n):
        lim[i, i] = last.dist[i, i]
        for j in range(i + 1, n):
            v = limit([S.dist[i, j] for S in seq], f"entry ({labels[i]}, {labels[j]})")
            lim[i, j] = lim[j, i] = v
    mass = [limit([S.mass[i] for S in seq], f"mass of {labels[i]}") for i in range(n)]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if not is_inf(lim[i, j]) and float(lim[i, j]) < tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    reps = sorted({find(i) for i in range(n)})
    cls_mass = []
    names = []
    for r in reps:
        members = [i for i in range(n) if find(i) == r]
        names.append("~".join(labels[i] for i in members))
        cls_mass.append(sum_values(mass[i] for i in members))
    dist = [[0 if a == b else lim[a, b] for b in reps] for a in reps]
    return make_space(names, dist, cls_mass, exact=exact if exact else False, tol=max(tol, DEFAULT_TOL))
