"""Pure-Python kernels (fallback for the compiled extension).

Every routine works on plain Python numbers, so it also serves exact
``Fraction`` inputs that do not fit the integer float grid.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf


def constraint_infimum(dA, w, pA):
    """Smallest ε satisfying ``pA <= w({x : dA[x] < ε}) + ε``.

    ``dA`` holds distances from the constraint set to the target support,
    ``w`` the target masses. Thresholds are the distinct finite values of
    ``dA`` together with 0; on ``(t_k, t_{k+1}]`` the strict neighborhood is
    ``{dA <= t_k}``, so the infimum there is ``max(t_k, deficit_k)``.
    """
    order = sorted(range(len(dA)), key=lambda i: dA[i])
    cum = 0
    i = 0
    t = len(order)
    while i < t and dA[order[i]] <= 0:
        cum += w[order[i]]
        i += 1
    best = max(0, pA - cum)
    while i < t:
        thr = dA[order[i]]
        if thr == INF or thr >= best:
            break
        while i < t and dA[order[i]] == thr:
            cum += w[order[i]]
            i += 1
        val = max(thr, pA - cum)
        if val < best:
            best = val
    return best


def lp_direction(D, p, q, S, T, best):
    """Max over subsets A of S of the per-constraint infimum, at least ``best``.

    Depth-first include/exclude enumeration with an incremental
    distance-to-A table; a subtree is skipped once the largest reachable
    ``p(A)`` cannot beat the running maximum.
    """
    s = len(S)
    rows = [[D[a][x] for x in T] for a in S]
    pw = [p[a] for a in S]
    qw = [q[x] for x in T]
    tail = [0] * (s + 1)
    for i in range(s - 1, -1, -1):
        tail[i] = tail[i + 1] + pw[i]
    state = {"best": best}

    def rec(i, pA, dA):
        if i == s or pA + tail[i] <= state["best"]:
            return
        new = [min(u, v) for u, v in zip(dA, rows[i])]
        pB = pA + pw[i]
        if pB > state["best"]:
            g = constraint_infimum(new, qw, pB)
            if g > state["best"]:
                state["best"] = g
        rec(i + 1, pB, new)
        rec(i + 1, pA, dA)

    rec(0, 0, [INF] * len(T))
    return state["best"]


def floyd_warshall(D: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths with saturating addition (vectorized rows)."""
    D = np.array(D, copy=True)
    n = D.shape[0]
    for k in range(n):
        D = np.minimum(D, D[:, k][:, None] + D[k, :][None, :])
    return D
