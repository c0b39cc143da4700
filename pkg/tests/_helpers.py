"""Random instances and independent brute-force oracles for the tests."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from dmspaces.core import INFINITY, is_inf, make_space
from dmspaces.gluing import GluingSpec


def random_metric(n: int, rng: np.random.Generator, inf_prob: float = 0.0, top: int = 10) -> list[list]:
    """Shortest-path closure of random integer weights, as exact values.

    With ``inf_prob > 0`` some edges are missing, which can split the
    space into components at distance INFINITY.
    """
    W = [[0 if i == j else INFINITY for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() >= inf_prob:
                w = Fraction(int(rng.integers(1, top + 1)), int(rng.integers(1, 4)))
                W[i][j] = W[j][i] = w
    for k in range(n):
        for i in range(n):
            for j in range(n):
                via = INFINITY if is_inf(W[i][k]) or is_inf(W[k][j]) else W[i][k] + W[k][j]
                if via < W[i][j]:
                    W[i][j] = via
    return W


def random_masses(n: int, rng: np.random.Generator, zero_prob: float = 0.0) -> list[Fraction]:
    return [Fraction(0) if rng.random() < zero_prob else Fraction(int(rng.integers(1, 9)), 8)
            for _ in range(n)]


def random_space(n: int, rng: np.random.Generator, inf_prob: float = 0.0, zero_prob: float = 0.0,
                 prefix: str = "p"):
    return make_space([f"{prefix}{i}" for i in range(n)], random_metric(n, rng, inf_prob),
                      random_masses(n, rng, zero_prob))


def random_spec(X, Y, rng: np.random.Generator, delta) -> GluingSpec:
    """Random admissible partial map X -> Y (shared targets only within delta)."""
    pairs = []
    used: dict[int, list[int]] = {}
    for x in rng.permutation(X.n)[: int(rng.integers(0, X.n + 1))]:
        y = int(rng.integers(0, Y.n))
        if all(X.dist[x, x2] <= delta for x2 in used.get(y, [])):
            pairs.append((int(x), y))
            used.setdefault(y, []).append(int(x))
    return GluingSpec.build(sorted(pairs), delta)


def plus(a, b):
    return INFINITY if is_inf(a) or is_inf(b) else a + b


# ---------------------------------------------------------------------------
# Levy-Prokhorov by candidate enumeration


def naive_prokhorov(D, mu, nu):
    """Smallest candidate ``c`` with ``mu(A) <= nu({d(., A) <= c}) + c`` both ways for all ``A``.

    Feasibility at every ``eps > c`` tends to this closed condition, so the
    infimum is the least feasible candidate. Candidates are the distances
    and every deficit value the constraints can produce.
    """
    n = len(mu)
    dists = sorted({D[i][j] for i in range(n) for j in range(n) if not is_inf(D[i][j])})
    subsets = [A for r in range(1, n + 1) for A in itertools.combinations(range(n), r)]

    def closed_nbhd(A, c):
        return [x for x in range(n) if any(not is_inf(D[x][a]) and D[x][a] <= c for a in A)]

    cands = set(dists)
    for A in subsets:
        for t in dists:
            N = closed_nbhd(A, t)
            cands.add(sum(mu[a] for a in A) - sum(nu[x] for x in N))
            cands.add(sum(nu[a] for a in A) - sum(mu[x] for x in N))

    def feasible(c):
        for A in subsets:
            N = closed_nbhd(A, c)
            if sum(mu[a] for a in A) > sum(nu[x] for x in N) + c:
                return False
            if sum(nu[a] for a in A) > sum(mu[x] for x in N) + c:
                return False
        return True

    for c in sorted(v for v in cands if v >= 0):
        if feasible(c):
            return c
    raise AssertionError("no feasible candidate")


# ---------------------------------------------------------------------------
# Gluing by explicit chains


def chain_glued(X, Y, spec: GluingSpec, max_hops: int) -> list[list]:
    """Chain-formula distances with at most ``max_hops`` identification hops.

    A chain from ``a`` to ``b`` is ``d(a, q_1) + delta + d(p_2, q_2) + ... +
    delta + d(p_k, b)`` over related pairs ``q_i R p_{i+1}``, using only the
    block-diagonal distance of the disjoint union.
    """
    n, m = X.n, Y.n
    N = n + m
    D0 = [[INFINITY] * N for _ in range(N)]
    for i in range(n):
        for j in range(n):
            D0[i][j] = X.dist[i, j]
    for i in range(m):
        for j in range(m):
            D0[n + i][n + j] = Y.dist[i, j]
    I = dict(spec.pairs)
    R = set()
    for x, y in I.items():
        R.add((x, n + y))
        R.add((n + y, x))
    for x, y in I.items():
        for x2, y2 in I.items():
            if x != x2 and y == y2:
                R.add((x, x2))
    R = sorted(R)
    delta = spec.delta
    out = [[D0[a][b] for b in range(N)] for a in range(N)]
    for a in range(N):
        # best[k][p]: cheapest chain from a ending at p right after k hops
        frontier = {a: 0}
        for _ in range(max_hops):
            nxt: dict[int, object] = {}
            for p, cost in frontier.items():
                for q, r in R:
                    c = plus(plus(cost, D0[p][q]), delta)
                    if not is_inf(c) and (r not in nxt or c < nxt[r]):
                        nxt[r] = c
            frontier = nxt
            for p, cost in frontier.items():
                for b in range(N):
                    v = plus(cost, D0[p][b])
                    if v < out[a][b]:
                        out[a][b] = v
    return out


# ---------------------------------------------------------------------------
# Misc oracles


def brute_bijection_exists(X, Y) -> bool:
    """Permutation search for a mass- and distance-preserving bijection of massive points."""
    ix = [i for i in range(X.n) if X.mass[i] > 0]
    iy = [j for j in range(Y.n) if Y.mass[j] > 0]
    if len(ix) != len(iy):
        return False
    for perm in itertools.permutations(iy):
        if all(X.mass[i] == Y.mass[j] for i, j in zip(ix, perm)) and all(
            X.dist[a, b] == Y.dist[c, d] for (a, c), (b, d) in itertools.product(zip(ix, perm), repeat=2)
        ):
            return True
    return False


def strict_ball_mass(space, i, r):
    return sum((space.mass[j] for j in range(space.n) if space.dist[i, j] < r), Fraction(0))


def log_ratio(a: float, b: float) -> float:
    return abs(math.log(a) - math.log(b))
