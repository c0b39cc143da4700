from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmspaces.core import make_space
from dmspaces.solenoid import (
    CollapseSpec,
    CoverTower,
    TowerError,
    ball_growth_exponent,
    ball_mass_lower,
    bonding_nonincreasing,
    build_transversal,
    collapse_experiment,
    collapse_spaces,
    collapse_table,
    common_level,
    delta_bound,
    finite_cover_ball_check,
    finite_cover_space,
    gromov_product,
    interval_sample,
    is_ultrametric,
    is_ultrametric_cubic,
    n_of_eps,
    rho_bound_levels,
    subdominant_ultrametric,
    tree_distance,
    truncate,
)

from _helpers import random_space, strict_ball_mass

F = Fraction
towers = st.lists(st.integers(2, 4), min_size=1, max_size=4).map(lambda d: CoverTower(tuple(d)))


# ---------------------------------------------------------------------------
# towers and the tree metric


def test_tower_validation():
    with pytest.raises(TowerError):
        CoverTower((2, 1))
    with pytest.raises(TowerError):
        CoverTower((2, True))
    T = CoverTower((2, 3))
    with pytest.raises(TowerError, match="digit 3 at level 2"):
        T.address("03")
    with pytest.raises(TowerError):
        T.address("010")
    with pytest.raises(TowerError):
        T.zeta(3)


def test_gromov_examples():
    T = CoverTower((2, 2))
    assert gromov_product(T, "00", "10") == 0 and tree_distance(T, "00", "10") == 1
    assert gromov_product(T, "00", "01") == 1 and tree_distance(T, "00", "01") == F(1, 2)
    assert tree_distance(T, "01", "01") == 0
    assert common_level(T, (1, 1), "11") == 2


@settings(max_examples=100)
@given(towers, st.data())
def test_distance_is_two_to_minus_gromov(T, data):
    digit = lambda k: data.draw(st.integers(0, T.degrees[k] - 1))
    a = tuple(digit(k) for k in range(T.depth))
    b = tuple(digit(k) for k in range(T.depth))
    if a != b:
        assert float(tree_distance(T, a, b)) == pytest.approx(2.0 ** -gromov_product(T, a, b), rel=1e-12)


def test_delta_bound_and_truncate():
    T = CoverTower((2, 3, 5))
    assert [delta_bound(T, n) for n in range(4)] == [1, F(1, 2), F(1, 6), F(1, 30)]
    assert truncate((1, 2, 4), 1) == (1,)


# ---------------------------------------------------------------------------
# transversals


def test_transversal_level_zero():
    T = build_transversal(CoverTower((3, 2)), 0)
    assert T.space.n == 1 and T.space.mass[0] == 1 and T.space.labels == ("root",)


def test_transversal_examples():
    T = build_transversal(CoverTower((2, 2)), 2)
    assert T.space.n == 4 and all(m == F(1, 4) for m in T.space.mass)
    assert T.space.dist[0, 1] == F(1, 2) and T.space.dist[0, 3] == 1
    wide = build_transversal(CoverTower((11,)), 1)
    assert wide.space.labels[10] == "10"
    with pytest.raises(TowerError):
        build_transversal(CoverTower((2,)), 2)


@settings(max_examples=60, deadline=None)
@given(towers, st.data())
def test_transversal_is_ultrametric_probability(T, data):
    level = data.draw(st.integers(0, T.depth))
    S = build_transversal(T, level)
    assert sum(S.space.mass) == 1
    assert is_ultrametric(S) and is_ultrametric(S.space) and is_ultrametric_cubic(S.space)
    assert bonding_nonincreasing(T, level)
    # distances recomputed pairwise from addresses
    for i, j in itertools.combinations(range(S.space.n), 2):
        assert S.space.dist[i, j] == tree_distance(T, S.points[i], S.points[j])


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_ultrametric_checks_agree(seed, n):
    rng = np.random.default_rng(seed)
    S = random_space(n, rng, inf_prob=0.0)
    assert is_ultrametric(S) == is_ultrametric_cubic(S)
    U = subdominant_ultrametric(np.asarray(S.dist, dtype=float))
    Su = make_space(S.labels, U, S.mass, exact=False)
    assert is_ultrametric_cubic(Su)
    assert np.all(U <= np.asarray(S.dist, dtype=float) + 1e-12)


def test_non_ultrametric_detected():
    S = make_space(["a", "b", "c"], [[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1, 1, 1])
    assert not is_ultrametric(S) and not is_ultrametric_cubic(S)


# ---------------------------------------------------------------------------
# level comparison


def test_rho_bound_levels_examples():
    T = CoverTower((2, 2, 2))
    b = rho_bound_levels(T, 2, 3)
    assert b.ok and b.objective <= F(1, 2) and b.claim == F(1, 2)
    assert rho_bound_levels(T, 2, 2).objective == 0
    with pytest.raises(TowerError):
        rho_bound_levels(T, 3, 2)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=2, max_size=4))
def test_rho_bound_levels_property(degrees):
    T = CoverTower(tuple(degrees))
    for n in range(T.depth + 1):
        prev = None
        for m in range(n, T.depth + 1):
            b = rho_bound_levels(T, n, m)
            assert b.ok and b.objective <= 2 * delta_bound(T, n)
            if prev is not None:
                assert b.claim == prev.claim


# ---------------------------------------------------------------------------
# ball masses


def test_n_of_eps():
    T = CoverTower((2, 2, 2))
    assert n_of_eps(T, F(3, 10)) == (2, 2, False)
    assert n_of_eps(T, F(1, 100)) == (7, 2, True)
    with pytest.raises(ValueError):
        n_of_eps(T, 0)


def test_ball_mass_example():
    r = ball_mass_lower(CoverTower((2, 2, 2)), 3, F(3, 10))
    assert r.n_eps == 2 and r.bound == F(3, 20) and r.min_mass == F(1, 4) and r.verified


def test_ball_mass_full_space():
    T = CoverTower((2, 2))
    r = ball_mass_lower(T, 2, 2)
    assert r.full_space and r.verified and r.min_mass == 1
    # between 1/d_1 and 1 the strict ball misses the far half
    r = ball_mass_lower(T, 2, F(3, 4))
    assert r.full_space and not r.verified and r.min_mass == F(1, 2)


@settings(max_examples=60, deadline=None)
@given(towers, st.data(), st.fractions(F(1, 200), F(1, 2), max_denominator=200))
def test_ball_mass_matches_oracle(T, data, eps):
    level = data.draw(st.integers(0, T.depth))
    r = ball_mass_lower(T, level, eps)
    S = build_transversal(T, level).space
    assert r.min_mass == min(strict_ball_mass(S, i, eps) for i in range(S.n))
    if not r.full_space:
        assert r.verified


def test_finite_covers():
    assert finite_cover_space(1).space.n == 1
    S = finite_cover_space(5).space
    assert sum(S.mass) == 1 and S.dist[0, 1] == F(1, 5)
    for N in (1, 2, 3, 7):
        for eps in (F(1, 10), F(1, 3), 1, 2):
            assert finite_cover_ball_check(N, eps)
    with pytest.raises(TowerError):
        finite_cover_space(0)


# ---------------------------------------------------------------------------
# collapse


def test_interval_sample_mass():
    xs, w, step = interval_sample(CollapseSpec(l=1.0, density=10.0))
    assert len(xs) == 20 and step == pytest.approx(0.1) and w.sum() == pytest.approx(2.0)


def test_collapse_single_sheet_is_exact():
    r = collapse_experiment(CollapseSpec(n=1, density=5.0))
    assert r.delta == 0 and r.objective == 0 and r.ok


def test_collapse_spaces_shape():
    X, Y, f = collapse_spaces(CollapseSpec(n=3, density=2.0))
    assert X.n == 3 * Y.n and len(f) == X.n
    assert float(sum(X.mass)) == pytest.approx(float(sum(Y.mass)))
    assert X.dist[0, Y.n] == pytest.approx(1 / 3)


def test_collapse_table():
    rows = collapse_table([8, 2, 4, 2], density=5.0)
    assert [r.n for r in rows] == [2, 4, 8]
    assert all(r.ok for r in rows)
    objs = [r.objective for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))


def test_collapse_spec_validation():
    with pytest.raises(ValueError):
        CollapseSpec(n=0)
    with pytest.raises(ValueError):
        CollapseSpec(C_m=-1)


def test_growth_exponent_of_interval():
    _, Y, _ = collapse_spaces(CollapseSpec(n=1, l=5.0, density=40.0))
    assert ball_growth_exponent(Y, [0.05, 0.1, 0.2, 0.4]) == pytest.approx(1.0, abs=0.1)
