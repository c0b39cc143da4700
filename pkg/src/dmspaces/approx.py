"""Greedy epsilon-nets, the inductive atomic approximation and precompactness certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import FiniteDistanceMeasureSpace, is_exact_value, is_inf, sum_values


@dataclass(frozen=True, eq=False)
class NetResult:
    """An epsilon-net and its atomic approximation.

    Attributes:
        centers: ordered point indices of the net.
        epsilon: net radius.
        approx: the centers with their inductive masses.
    """

    centers: tuple[int, ...]
    epsilon: object
    approx: FiniteDistanceMeasureSpace


def _ball(space: FiniteDistanceMeasureSpace, i: int, eps) -> list[int]:
    row = space.dist[i]
    return [j for j in range(space.n) if not is_inf(row[j]) and row[j] < eps]


def greedy_epsilon_net(space: FiniteDistanceMeasureSpace, eps) -> tuple[int, ...]:
    """Centers pairwise at distance at least ``eps`` whose strict balls cover the space.

    The next center is always the lowest-index point not yet covered.

    Raises:
        ValueError: ``eps <= 0``.
    """
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    covered = [False] * space.n
    centers = []
    for i in range(space.n):
        if covered[i]:
            continue
        centers.append(i)
        for j in _ball(space, i, eps):
            covered[j] = True
    return tuple(centers)


def net_measure(space: FiniteDistanceMeasureSpace, centers: Sequence[int], eps) -> FiniteDistanceMeasureSpace:
    """Give center ``x_k`` the mass of its ball minus the balls of earlier centers.

    Distances are restricted from the source.
    """
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    taken = [False] * space.n
    masses = []
    for c in centers:
        if not 0 <= c < space.n:
            raise IndexError(f"center {c} out of range")
        fresh = [j for j in _ball(space, c, eps) if not taken[j]]
        for j in fresh:
            taken[j] = True
        masses.append(sum_values(space.mass[j] for j in fresh))
    sub = space.restrict(list(centers))
    return sub.with_mass(masses)


def epsilon_net_approximation(space: FiniteDistanceMeasureSpace, eps) -> NetResult:
    """Greedy net plus inductive masses."""
    centers = greedy_epsilon_net(space, eps)
    return NetResult(centers, eps, net_measure(space, centers, eps))


# ---------------------------------------------------------------------------
# Certificates


@dataclass(frozen=True)
class SpaceCertificate:
    """Outcome of the packing argument for one space of a family.

    Attributes:
        index: position of the space in the family.
        ok: hypotheses verified and certificate produced.
        centers: the set S (empty when flagged).
        size: ``|S|``.
        bound: ``ceil(A / B(eps/2))``.
        uncovered: mass outside the strict eps-neighborhood of S.
        reasons: failed hypotheses, if any.
    """

    index: int
    ok: bool
    centers: tuple[int, ...]
    size: int
    bound: int
    uncovered: object
    reasons: tuple[str, ...] = field(default_factory=tuple)


def _ceil(x) -> int:
    if is_exact_value(x):
        return math.ceil(Fraction(x))
    x = float(x)
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def ball_mass_check(space: FiniteDistanceMeasureSpace, radius, B: Callable) -> list[str]:
    """Points whose strict ball of ``radius`` has mass below ``B(radius)``."""
    need = B(radius)
    bad = []
    for i in range(space.n):
        m = sum_values(space.mass[j] for j in _ball(space, i, radius))
        if m < need:
            bad.append(f"ball mass {m} < B({radius}) = {need} at {space.labels[i]}")
    return bad


def precompact_certificate(family: Sequence[FiniteDistanceMeasureSpace], eps, A, B: Callable,
                           probes: Sequence = ()) -> list[SpaceCertificate]:
    """Per-space certificates of total boundedness at scale ``eps``.

    Each space must have total mass at most ``A`` and satisfy
    ``mu(B(x, r)) >= B(r)`` at ``r = eps/2`` and at every probe radius.
    A space failing either hypothesis is flagged and gets no certificate.
    Otherwise a greedy eps-separated set S is built; its eps/2-balls are
    disjoint, which forces ``|S| <= ceil(A / B(eps/2))``.

    Args:
        family: spaces to certify.
        eps: scale.
        A: mass cap.
        B: ball-mass lower bound, a function of the radius.
        probes: additional radii at which the ball-mass hypothesis is checked.
    """
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    half = eps / 2
    bound = _ceil(A / B(half))
    out = []
    for k, S in enumerate(family):
        reasons = []
        if S.total_mass > A:
            reasons.append(f"total mass {S.total_mass} exceeds A = {A}")
        for r in [half, *probes]:
            bad = ball_mass_check(S, r, B)
            if bad:
                reasons.append(bad[0])
        if reasons:
            out.append(SpaceCertificate(k, False, (), 0, bound, None, tuple(reasons)))
            continue
        centers = greedy_epsilon_net(S, eps)
        covered = set()
        for c in centers:
            covered.update(_ball(S, c, eps))
        uncovered = sum_values(S.mass[j] for j in range(S.n) if j not in covered)
        ok = len(centers) <= bound and uncovered <= eps
        if not ok:
            reasons.append(f"packing bound violated: |S| = {len(centers)} > {bound}")
        out.append(SpaceCertificate(k, ok, centers, len(centers), bound, uncovered, tuple(reasons)))
    return out


def unbounded_mass_family(count: int) -> list[FiniteDistanceMeasureSpace]:
    """Single points of mass 1, 2, ..., count (no convergent subsequence)."""
    from .core import make_space

    return [make_space(["x"], [[0]], [k]) for k in range(1, count + 1)]
