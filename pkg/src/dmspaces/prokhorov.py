"""Lévy-Prokhorov distance between finite measures on a finite distance space.

Three routes are provided:

* :func:`levy_prokhorov` - exact, subset enumeration (supports up to the cap).
* :func:`dpi_bisection_oracle` - independent bisection on the feasibility
  predicate, used to cross-check the exact value.
* :func:`levy_prokhorov_flow` - exact for any support size via the max-flow
  form of the deficiency ``max_A mu(A) - nu(A^eps)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np

from ._kernels import backend, python_backend
from .core import FiniteDistanceMeasureSpace, detect_exact, is_inf, scaled_integer_grid, to_array

ENUMERATION_CAP = 20


class CapabilityError(RuntimeError):
    """Raised when an input exceeds what exact enumeration can handle."""


@dataclass(frozen=True, eq=False)
class MeasurePair:
    """Two measures on one finite distance (or semi-distance) matrix."""

    dist: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    @property
    def exact(self) -> bool:
        return self.dist.dtype == object and self.mu.dtype == object and self.nu.dtype == object

    @classmethod
    def on_space(cls, space: FiniteDistanceMeasureSpace, mu, nu) -> "MeasurePair":
        return cls.build(space.dist, mu, nu)

    @classmethod
    def build(cls, dist, mu, nu) -> "MeasurePair":
        dist = np.asarray(dist) if isinstance(dist, np.ndarray) else np.asarray(dist, dtype=object)
        mu_o = np.asarray(mu, dtype=object) if not isinstance(mu, np.ndarray) else mu
        nu_o = np.asarray(nu, dtype=object) if not isinstance(nu, np.ndarray) else nu
        exact = detect_exact(dist.astype(object) if dist.dtype == object else dist, mu_o, nu_o)
        d = to_array(dist, exact)
        m = to_array(mu_o, exact)
        v = to_array(nu_o, exact)
        n = d.shape[0]
        if d.shape != (n, n) or m.shape != (n,) or v.shape != (n,):
            raise ValueError("measure vectors must match the distance matrix size")
        if any(x < 0 for x in m) or any(x < 0 for x in v):
            raise ValueError("measures must be nonnegative")
        return cls(d, m, v)

    def swapped(self) -> "MeasurePair":
        return MeasurePair(self.dist, self.nu, self.mu)


def pushforward(mapping: Sequence[int], measure, target_size: int) -> np.ndarray:
    """Push a measure forward along ``mapping`` (source index -> target index)."""
    measure = np.asarray(measure, dtype=object) if not isinstance(measure, np.ndarray) else measure
    exact = measure.dtype == object
    out = np.zeros(target_size, dtype=object if exact else float)
    if exact:
        out[:] = [Fraction(0)] * target_size
    for i, j in enumerate(mapping):
        if measure[i] != 0:
            out[j] = out[j] + measure[i]
    return out


def _support_desc(w) -> list[int]:
    idx = [i for i in range(len(w)) if w[i] > 0]
    return sorted(idx, key=lambda i: (-w[i], i))


def _check_cap(pair: MeasurePair, cap: int) -> tuple[list[int], list[int]]:
    S_mu = _support_desc(pair.mu)
    S_nu = _support_desc(pair.nu)
    if max(len(S_mu), len(S_nu)) > cap:
        raise CapabilityError(
            f"support sizes {len(S_mu)}/{len(S_nu)} exceed the enumeration cap {cap}; "
            "use dpi_bisection_oracle for a bound or levy_prokhorov_flow for an exact value"
        )
    return S_mu, S_nu


def levy_prokhorov(pair: MeasurePair, cap: int = ENUMERATION_CAP):
    """Exact Lévy-Prokhorov distance by subset enumeration.

    The infimum convention applies: when the optimum sits on the boundary of
    a strict-neighborhood step, the infimum (not attained) is returned.

    Args:
        pair: the two measures and the distance matrix.
        cap: largest support size enumerated.

    Returns:
        A ``Fraction`` in exact mode, a float otherwise.

    Raises:
        CapabilityError: a support exceeds ``cap``.
    """
    S_mu, S_nu = _check_cap(pair, cap)
    if pair.exact:
        grid = scaled_integer_grid(pair.dist, pair.mu, pair.nu)
        if grid is not None:
            (D, mu, nu), scale = grid
            best = backend.lp_direction(D, mu, nu, S_mu, S_nu, 0.0)
            best = backend.lp_direction(D, nu, mu, S_nu, S_mu, best)
            return Fraction(int(best), scale)
        D = pair.dist.tolist()
        best = python_backend.lp_direction(D, list(pair.mu), list(pair.nu), S_mu, S_nu, Fraction(0))
        best = python_backend.lp_direction(D, list(pair.nu), list(pair.mu), S_nu, S_mu, best)
        return Fraction(best)
    D = np.ascontiguousarray(pair.dist, dtype=float)
    mu = np.ascontiguousarray(pair.mu, dtype=float)
    nu = np.ascontiguousarray(pair.nu, dtype=float)
    best = backend.lp_direction(D, mu, nu, S_mu, S_nu, 0.0)
    best = backend.lp_direction(D, nu, mu, S_nu, S_mu, best)
    return float(best)


# ---------------------------------------------------------------------------
# Oracle


def _masks(u: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(u, dtype=np.int64)[None, :]) & 1).astype(float)


def _feasible(D: np.ndarray, mu: np.ndarray, nu: np.ndarray, eps: float) -> bool:
    """Both constraint families at ``eps``, over every subset of the points."""
    u = D.shape[0]
    adj = (D < eps).astype(float)
    chunk = 1 << 14
    total = 1 << u
    for start in range(0, total, chunk):
        M = _masks(u, start, min(total, start + chunk))
        reach = (M @ adj) > 0
        reach_f = reach.astype(float)
        if np.any((M @ mu) - (reach_f @ nu) > eps):
            return False
        if np.any((M @ nu) - (reach_f @ mu) > eps):
            return False
    return True


def dpi_bisection_oracle(pair: MeasurePair, tol: float = 1e-9, cap: int = ENUMERATION_CAP):
    """Bracket the Lévy-Prokhorov distance by bisection on feasibility.

    Feasibility at a probe ``eps`` is evaluated directly: every subset ``A``
    of the points carrying mass is tested in both directions with strict
    ``eps``-neighborhoods. In exact mode the data are scaled to an integer
    grid so every comparison is exact and the endpoints are returned as
    Fractions.

    Returns:
        ``(lo, hi)`` with ``hi - lo <= tol`` and the distance in ``[lo, hi]``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    U = [i for i in range(len(pair.mu)) if pair.mu[i] > 0 or pair.nu[i] > 0]
    if len(U) > cap:
        raise CapabilityError(f"{len(U)} massive points exceed the oracle cap {cap}")
    scale = 1
    if pair.exact:
        grid = scaled_integer_grid(pair.dist, pair.mu, pair.nu)
        if grid is None:
            raise CapabilityError("rational data too fine for the exact oracle grid")
        (D, mu, nu), scale = grid
    else:
        D = np.asarray(pair.dist, dtype=float)
        mu = np.asarray(pair.mu, dtype=float)
        nu = np.asarray(pair.nu, dtype=float)
    D = D[np.ix_(U, U)]
    mu = mu[U]
    nu = nu[U]
    hi = float(max(mu.sum(), nu.sum()))
    lo = 0.0
    step = tol * scale
    while hi - lo > step:
        mid = lo + (hi - lo) / 2
        if mid <= lo or mid >= hi:
            break
        if _feasible(D, mu, nu, mid):
            hi = mid
        else:
            lo = mid
    if pair.exact:
        return Fraction(lo) / scale, Fraction(hi) / scale
    return lo, hi


# ---------------------------------------------------------------------------
# Flow route


def _deficiency(D, p, q, Sp, Tq, t) -> object:
    """``max_A p(A) - q({x : d(x, A) <= t})`` via min cut."""
    # integer node ids keep the flow (and float rounding) independent of string hashing
    n = len(D)
    src, snk = 2 * n, 2 * n + 1
    G = nx.DiGraph()
    G.add_node(src)
    G.add_node(snk)
    for a in Sp:
        G.add_edge(src, a, capacity=p[a])
    for x in Tq:
        G.add_edge(n + x, snk, capacity=q[x])
    for a in Sp:
        for x in Tq:
            if D[a][x] <= t:
                G.add_edge(a, n + x)
    flow = nx.maximum_flow_value(G, src, snk)
    return sum(p[a] for a in Sp) - flow


def levy_prokhorov_flow(pair: MeasurePair):
    """Exact Lévy-Prokhorov distance for any support size.

    For ``eps`` in ``(t_k, t_{k+1}]`` the binding constraint is the
    deficiency ``F_k = max_A mu(A) - nu({d(., A) <= t_k})``, a bipartite
    max-flow/min-cut quantity (Hall-type, no equal-mass requirement). The
    distance is ``min_k max(t_k, F_k)``; ``F`` is nonincreasing so a binary
    search over thresholds suffices.
    """
    Sp = [i for i in range(len(pair.mu)) if pair.mu[i] > 0]
    Tq = [i for i in range(len(pair.nu)) if pair.nu[i] > 0]
    scale = 1
    if pair.exact:
        grid = scaled_integer_grid(pair.dist, pair.mu, pair.nu)
        if grid is not None:
            (Df, muf, nuf), scale = grid
            D = [[v if math.isinf(v) else int(v) for v in row] for row in Df.tolist()]
            mu = [int(v) for v in muf]
            nu = [int(v) for v in nuf]
        else:
            D, mu, nu = pair.dist.tolist(), list(pair.mu), list(pair.nu)
    else:
        D = np.asarray(pair.dist, dtype=float).tolist()
        mu = [float(v) for v in pair.mu]
        nu = [float(v) for v in pair.nu]
    vals = {0}
    for a in Sp:
        for x in Tq:
            if not is_inf(D[a][x]):
                vals.add(D[a][x])
    thresholds = sorted(vals)

    def F(k):
        t = thresholds[k]
        return max(_deficiency(D, mu, nu, Sp, Tq, t), _deficiency(D, nu, mu, Tq, Sp, t), 0)

    cache: dict[int, object] = {}

    def Fc(k):
        if k not in cache:
            cache[k] = F(k)
        return cache[k]

    lo, hi = 0, len(thresholds)
    while lo < hi:
        mid = (lo + hi) // 2
        if Fc(mid) <= thresholds[mid]:
            hi = mid
        else:
            lo = mid + 1
    k_star = lo
    if k_star == len(thresholds):
        best = Fc(len(thresholds) - 1)
    elif k_star == 0:
        best = thresholds[0]
    else:
        best = min(thresholds[k_star], Fc(k_star - 1))
    if pair.exact:
        return Fraction(best) / scale
    return float(best)


def prokhorov_distance(pair: MeasurePair, cap: int = ENUMERATION_CAP):
    """Exact distance by enumeration when supports fit the cap, else by flow."""
    n_mu = int(sum(1 for v in pair.mu if v > 0))
    n_nu = int(sum(1 for v in pair.nu if v > 0))
    if max(n_mu, n_nu) <= min(cap, 16):
        return levy_prokhorov(pair, cap)
    return levy_prokhorov_flow(pair)
