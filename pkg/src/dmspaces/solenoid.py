"""Cover towers, ultrametric transversals and the collapse-to-interval experiment.

A tower of degrees ``d_1, ..., d_n`` gives a rooted tree whose level-``k``
vertices are digit strings ``t_1 ... t_k`` with ``0 <= t_j < d_j``; the bonding
map drops the last digit. Leaves at a common level carry the distance
``2^{-(x|y)}``, which equals ``1 / (d_1 ... d_m)`` for a common prefix of length
``m``, so every distance and mass is an exact rational.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import FiniteDistanceMeasureSpace, make_space, scaled_integer_grid, space_from_arrays
from .ghlp import RhoWitness, rho_upper_from_witness
from .gluing import GluingSpec, check_isometric_inclusions, glued_distance


class TowerError(ValueError):
    """Raised for invalid degrees, addresses or levels."""


# ---------------------------------------------------------------------------
# Towers


@dataclass(frozen=True)
class CoverTower:
    """Degrees ``d_1, ..., d_n`` of successive regular covers (each at least 2)."""

    degrees: tuple[int, ...]

    def __post_init__(self):
        degs = tuple(self.degrees)
        for d in degs:
            if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 2:
                raise TowerError(f"degrees must be integers >= 2, got {d!r}")
        object.__setattr__(self, "degrees", tuple(int(d) for d in degs))

    @property
    def depth(self) -> int:
        return len(self.degrees)

    def zeta(self, n: int) -> Fraction:
        """``1 / (d_1 ... d_n)``; 1 for ``n = 0``."""
        if not 0 <= n <= self.depth:
            raise TowerError(f"level {n} outside 0..{self.depth}")
        out = Fraction(1)
        for d in self.degrees[:n]:
            out /= d
        return out

    def leaves(self, level: int) -> list[tuple[int, ...]]:
        if not 0 <= level <= self.depth:
            raise TowerError(f"level {level} exceeds the tower depth {self.depth}")
        return list(itertools.product(*(range(d) for d in self.degrees[:level])))

    def address(self, x) -> tuple[int, ...]:
        """Normalize a digit string or tuple and check every digit."""
        digits = tuple(int(c) for c in x) if isinstance(x, str) else tuple(int(c) for c in x)
        if len(digits) > self.depth:
            raise TowerError(f"address {x!r} is deeper than the tower")
        for k, t in enumerate(digits):
            if not 0 <= t < self.degrees[k]:
                raise TowerError(f"digit {t} at level {k + 1} is outside [0, {self.degrees[k]})")
        return digits


def delta_bound(tower: CoverTower, n: int) -> Fraction:
    """``delta_n = 1 / (d_1 ... d_n)``."""
    return tower.zeta(n)


def truncate(x: Sequence[int], level: int) -> tuple[int, ...]:
    """Bonding map down to ``level``: keep the first ``level`` digits."""
    return tuple(x[:level])


def common_level(tower: CoverTower, x, y) -> int:
    """Largest ``m`` at which the images of ``x`` and ``y`` agree (common prefix length)."""
    a, b = tower.address(x), tower.address(y)
    m = 0
    for s, t in zip(a, b):
        if s != t:
            break
        m += 1
    return m


def gromov_product(tower: CoverTower, x, y) -> float:
    """Length of the path from the meeting vertex to the root (edge ``k`` has length ``log2 d_k``)."""
    m = common_level(tower, x, y)
    return math.fsum(math.log2(d) for d in tower.degrees[:m])


def tree_distance(tower: CoverTower, x, y) -> Fraction:
    """``2^{-(x|y)}`` for distinct points, 0 for equal ones, as an exact rational."""
    a, b = tower.address(x), tower.address(y)
    if a == b:
        return Fraction(0)
    return tower.zeta(common_level(tower, a, b))


def _label(addr: tuple[int, ...], wide: bool) -> str:
    if not addr:
        return "root"
    return ".".join(map(str, addr)) if wide else "".join(map(str, addr))


@dataclass(frozen=True, eq=False)
class TransversalSpace:
    """Leaves of one level with ultrametric distances and product masses."""

    level: int
    points: tuple[tuple[int, ...], ...]
    space: FiniteDistanceMeasureSpace
    tower: CoverTower | None = None
    common: np.ndarray | None = None

    def distance_ranks(self) -> np.ndarray:
        """Integer matrix order-isomorphic to the distances (0 on the diagonal).

        Distances are ``zeta[common]`` with ``zeta`` strictly decreasing, so
        ``level + 1 - common`` orders pairs exactly as the distances do.
        """
        if self.common is None:
            raise ValueError("no prefix matrix stored")
        return (self.level + 1 - self.common).astype(float)


def _prefix_lengths(A: np.ndarray) -> np.ndarray:
    """Common-prefix lengths of the rows of an integer digit array."""
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], A.shape[0]), dtype=np.int64)
    eq = A[:, None, :] == A[None, :, :]
    return np.cumprod(eq, axis=2).sum(axis=2)


def build_transversal(tower: CoverTower, level: int) -> TransversalSpace:
    """All level-``level`` leaves with exact distances and masses ``zeta_level``.

    Raises:
        TowerError: ``level`` exceeds the depth.
    """
    leaves = tower.leaves(level)
    wide = any(d > 10 for d in tower.degrees)
    n = len(leaves)
    zetas = np.empty(level + 2, dtype=object)
    zetas[: level + 1] = [tower.zeta(k) for k in range(level + 1)]
    zetas[level + 1] = Fraction(0)
    M = _prefix_lengths(np.array(leaves, dtype=np.int64).reshape(n, level))
    np.fill_diagonal(M, level + 1)
    D = zetas[M]
    mass = np.empty(n, dtype=object)
    mass[:] = [zetas[level]] * n
    space = space_from_arrays([_label(a, wide) for a in leaves], D, mass, check=False)
    M.setflags(write=False)
    return TransversalSpace(level, tuple(leaves), space, tower, M)


def subdominant_ultrametric(D: np.ndarray) -> np.ndarray:
    """Largest ultrametric below ``D`` (minimax path distances along a Prim tree)."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    U = np.zeros((n, n))
    if n < 2:
        return U
    cand = D[0].astype(float, copy=True)
    cand[0] = np.inf
    parent = np.zeros(n, dtype=np.int64)
    order = np.zeros(n, dtype=np.int64)
    for k in range(1, n):
        v = int(np.argmin(cand))
        u, w = int(parent[v]), cand[v]
        prev = order[:k]
        row = np.maximum(U[u, prev], w)
        U[v, prev] = row
        U[prev, v] = row
        order[k] = v
        closer = D[v] < cand
        closer[order[: k + 1]] = False
        cand[closer] = D[v][closer]
        parent[closer] = v
        cand[v] = np.inf
    return U


def is_ultrametric(space: FiniteDistanceMeasureSpace | TransversalSpace) -> bool:
    """Strong triangle inequality over all triples, exact on rational input.

    ``D`` is an ultrametric iff it equals its subdominant ultrametric, an
    O(n^2) test. Exact input is first moved onto an integer grid so the
    comparisons are exact. A transversal is checked on its distance ranks.
    """
    if isinstance(space, TransversalSpace):
        if space.common is not None:
            D = space.distance_ranks()
            return bool(np.array_equal(subdominant_ultrametric(D), D))
        space = space.space
    if space.n < 3:
        return True
    if space.exact:
        grid = scaled_integer_grid(space.dist)
        if grid is None:
            raise ValueError("rational distances too fine for the exact grid")
        D = grid[0][0]
    else:
        D = np.asarray(space.dist, dtype=float)
    return bool(np.array_equal(subdominant_ultrametric(D), D))


def is_ultrametric_cubic(space: FiniteDistanceMeasureSpace) -> bool:
    """Direct check of ``d(x, z) <= max(d(x, y), d(y, z))`` over every triple (reference)."""
    D = space.dist
    for k in range(space.n):
        if np.any(D > np.maximum(D[:, k][:, None], D[k, :][None, :])):
            return False
    return True


def bonding_nonincreasing(tower: CoverTower, level: int) -> bool:
    """``d(h(x), h(y)) <= d(x, y)`` for all leaves at ``level`` (exact)."""
    if level == 0:
        return True
    leaves = tower.leaves(level)
    for a, b in itertools.combinations(leaves, 2):
        if tree_distance(tower, a[:-1], b[:-1]) > tree_distance(tower, a, b):
            return False
    return True


# ---------------------------------------------------------------------------
# Level comparison


@dataclass(frozen=True, eq=False)
class LevelBound:
    """Witness for ``d_rho(T_n, T_m)`` from the truncation map.

    Attributes:
        n: coarse level.
        m: fine level.
        delta: gluing slack ``delta_n``.
        objective: validated witness objective.
        claim: ``2 delta_n``.
        ok: inclusions isometric and ``objective <= claim``.
        witness: the gluing witness.
    """

    n: int
    m: int
    delta: Fraction
    objective: Fraction
    claim: Fraction
    ok: bool
    witness: RhoWitness | None = None


def rho_bound_levels(tower: CoverTower, n: int, m: int) -> LevelBound:
    """Glue ``T_m`` to ``T_n`` along truncation with slack ``delta_n`` and evaluate the witness.

    Raises:
        TowerError: unless ``0 <= n <= m <= depth``.
    """
    if not 0 <= n <= m <= tower.depth:
        raise TowerError(f"need 0 <= n <= m <= {tower.depth}, got n={n}, m={m}")
    Tn, Tm = build_transversal(tower, n), build_transversal(tower, m)
    delta = delta_bound(tower, n)
    if n == m:
        return LevelBound(n, m, delta, Fraction(0), 2 * delta, True)
    pos = {a: i for i, a in enumerate(Tn.points)}
    pairs = [(j, pos[truncate(b, n)]) for j, b in enumerate(Tm.points)]
    g = glued_distance(Tm.space, Tn.space, GluingSpec.build(pairs, delta))
    inc = check_isometric_inclusions(g)
    w = RhoWitness(g, math.inf, Fraction(0))
    objective = rho_upper_from_witness(Tm.space, Tn.space, w)
    ok = inc.X_ok and inc.Y_ok and objective <= 2 * delta
    return LevelBound(n, m, delta, objective, 2 * delta, ok, w)


# ---------------------------------------------------------------------------
# Ball masses


@dataclass(frozen=True)
class BallMassResult:
    """Outcome of the ball-mass lower bound at one level.

    Attributes:
        eps: radius of the strict balls.
        level: level checked exhaustively.
        n_eps: smallest ``n`` with ``zeta_n < eps`` (``None`` in the full-space case).
        bound: claimed lower bound (1 in the full-space case).
        min_mass: smallest actual ball mass at ``level``.
        verified: every ball mass is at least ``bound``.
        full_space: ``eps >= 1/d_1``, where every ball is claimed to be all of ``T_n``.
        extended: ``n_eps`` lies beyond the tower, reached by repeating the last degree.
    """

    eps: Fraction
    level: int
    n_eps: int | None
    bound: Fraction
    min_mass: Fraction
    verified: bool
    full_space: bool
    extended: bool = False


def n_of_eps(tower: CoverTower, eps) -> tuple[int, int, bool]:
    """``(n(eps), deg at n(eps), extended)``; the tower repeats its last degree past its depth."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = Fraction(1)
    k = 0
    while True:
        k += 1
        d = tower.degrees[k - 1] if k <= tower.depth else tower.degrees[-1]
        z /= d
        if z < eps:
            return k, d, k > tower.depth


def ball_masses(T: TransversalSpace, eps) -> list[Fraction]:
    """Mass of the strict ball ``{s : d(s, t) < eps}`` around every leaf."""
    D = T.space.dist
    M = T.space.mass
    return [sum((M[j] for j in range(T.space.n) if D[i, j] < eps), Fraction(0)) for i in range(T.space.n)]


def ball_mass_lower(tower: CoverTower, n: int, eps) -> BallMassResult:
    """Check ``nu_n(B(t, eps)) >= eps / d_{n(eps)}`` at every leaf of level ``n``.

    For ``eps >= 1/d_1`` the complementary claim ``B(t, eps) = T_n`` is checked
    instead; it holds exactly when every pairwise distance is below ``eps``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    T = build_transversal(tower, n)
    masses = ball_masses(T, eps)
    low = min(masses)
    if tower.depth == 0 or eps >= Fraction(1, tower.degrees[0]):
        return BallMassResult(eps, n, None, Fraction(1), low, low >= 1, True)
    k, d, extended = n_of_eps(tower, eps)
    bound = eps / d
    return BallMassResult(eps, n, k, bound, low, low >= bound, False, extended)


def finite_cover_space(N: int) -> TransversalSpace:
    """``N`` sheets, pairwise distance ``1/N``, each of mass ``1/N``."""
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise TowerError("N must be a positive integer")
    N = int(N)
    w = Fraction(1, N)
    D = [[Fraction(0) if i == j else w for j in range(N)] for i in range(N)]
    space = make_space([str(i) for i in range(N)], D, [w] * N)
    return TransversalSpace(1, tuple((i,) for i in range(N)), space, None)


def finite_cover_ball_check(N: int, eps) -> bool:
    """``nu(B(t, eps)) >= min(1, eps)`` at every sheet (exact)."""
    T = finite_cover_space(N)
    eps = Fraction(eps)
    return min(ball_masses(T, eps)) >= min(Fraction(1), eps)


# ---------------------------------------------------------------------------
# Collapse to an interval


def uniform_profile(x: float) -> float:
    return 1.0


@dataclass(frozen=True)
class CollapseSpec:
    """Parameters of the ``n``-sheet collapse experiment.

    Attributes:
        C_m: transversal scale; the ``n`` sheets are pairwise ``C_m/n`` apart.
        n: number of sheets.
        l: half-length of the target interval ``[-l, l]``.
        density: interval samples per unit length.
        profile: mass density along the interval (default uniform).
    """

    C_m: float = 1.0
    n: int = 1
    l: float = 1.0
    density: float = 10.0
    profile: Callable[[float], float] = field(default=uniform_profile, compare=False)

    def __post_init__(self):
        if not (self.C_m > 0 and self.l > 0 and self.density > 0):
            raise ValueError("C_m, l and density must be positive")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")


@dataclass(frozen=True, eq=False)
class CollapseResult:
    """One row of the collapse table.

    Attributes:
        n: sheets.
        delta: gluing slack (``C_m/n``, or 0 for a single sheet).
        objective: validated witness objective.
        discretization: ``spacing / 2``, the distance from the interval sample to the interval.
        bound: ``delta + discretization``.
        ok: ``objective <= bound``.
        size: number of sheet samples.
    """

    n: int
    delta: float
    objective: float
    discretization: float
    bound: float
    ok: bool
    size: int
    witness: RhoWitness | None = None


def interval_sample(spec: CollapseSpec) -> tuple[np.ndarray, np.ndarray, float]:
    """Bin midpoints of ``[-l, l]``, bin masses (midpoint rule) and the spacing."""
    K = max(1, int(math.ceil(2 * spec.l * spec.density - 1e-9)))
    step = 2 * spec.l / K
    xs = -spec.l + (np.arange(K) + 0.5) * step
    w = np.array([spec.profile(float(x)) * step for x in xs], dtype=float)
    if np.any(w < 0):
        raise ValueError("the mass profile must be nonnegative")
    return xs, w, step


def collapse_spaces(spec: CollapseSpec) -> tuple[FiniteDistanceMeasureSpace, FiniteDistanceMeasureSpace, list[int]]:
    """The sheeted space, the interval sample and the projection between them.

    Sheet points ``(k, i)`` are at distance ``|x_k - x_j|`` on one sheet and
    ``|x_k - x_j| + C_m/n`` across sheets; each carries ``1/n`` of the bin mass.
    """
    xs, w, _ = interval_sample(spec)
    K, n = len(xs), int(spec.n)
    leaf = np.abs(xs[:, None] - xs[None, :])
    sheet = np.repeat(np.arange(n), K)
    base = np.tile(np.arange(K), n)
    D = leaf[np.ix_(base, base)] + np.where(sheet[:, None] != sheet[None, :], spec.C_m / n, 0.0)
    np.fill_diagonal(D, 0.0)
    X = make_space([f"s{i}_{k}" for i, k in zip(sheet, base)], D, np.repeat(w[None, :] / n, n, axis=0).reshape(-1),
                   exact=False)
    Y = make_space([f"x{k}" for k in range(K)], leaf, w, exact=False)
    return X, Y, [int(k) for k in base]


def collapse_experiment(spec: CollapseSpec) -> CollapseResult:
    """Glue the ``n``-sheet space to the interval along the projection and evaluate the witness."""
    X, Y, f = collapse_spaces(spec)
    _, _, step = interval_sample(spec)
    n = int(spec.n)
    delta = spec.C_m / n if n > 1 else 0.0
    g = glued_distance(X, Y, GluingSpec.build(list(enumerate(f)), delta))
    w = RhoWitness(g, math.inf, 0.0)
    objective = float(rho_upper_from_witness(X, Y, w))
    disc = step / 2
    bound = delta + disc
    return CollapseResult(n, delta, objective, disc, bound, objective <= bound + 1e-9, X.n, w)


def collapse_table(ns: Sequence[int], C_m: float = 1.0, l: float = 1.0, density: float = 10.0,
                   profile: Callable[[float], float] = uniform_profile) -> list[CollapseResult]:
    """Rows for each sheet count, sorted by ``n``."""
    return [collapse_experiment(CollapseSpec(C_m, int(n), l, density, profile)) for n in sorted(set(ns))]


def ball_growth_exponent(space: FiniteDistanceMeasureSpace, radii: Sequence[float]) -> float:
    """Least-squares slope of log(mean ball mass) against log(radius)."""
    D = np.asarray(space.dist, dtype=float)
    M = np.asarray(space.mass, dtype=float)
    ys = []
    for r in radii:
        ys.append(math.log(float(np.mean((D < r).astype(float) @ M))))
    xs = np.log(np.asarray(radii, dtype=float))
    slope = np.polyfit(xs, np.asarray(ys), 1)[0]
    return float(slope)
