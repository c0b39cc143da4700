from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmspaces.core import (
    INFINITY,
    InvalidSpaceError,
    StructureError,
    components,
    diameter,
    is_inf,
    make_log_halfline,
    make_space,
    neighborhood,
    parse_scalar,
    sat_add,
    scale_measure,
    scaled_integer_grid,
    validate_space,
)

from _helpers import random_space

LINE3 = make_space(["a", "b", "c"], [[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1, 1, 1])
TWO_AT_INF = make_space(["a", "b"], [[0, "inf"], ["inf", 0]], [1, 1])


# ---------------------------------------------------------------------------
# validate_space


def test_single_point_valid():
    assert validate_space(["a"], [[0]], [1]).ok


def test_triangle_violation_names_triple():
    rep = validate_space(["a", "b", "c"], [[0, 1, 5], [1, 0, 1], [5, 1, 0]], [1, 1, 1])
    assert not rep.ok
    tri = [v for v in rep.violations if v.invariant == "triangle"]
    assert (0, 2, 1) in {v.indices for v in tri}


def test_infinite_distance_valid():
    assert validate_space(["a", "b"], [[0, "inf"], ["inf", 0]], [1, 1]).ok


@pytest.mark.parametrize(
    "dist, mass, invariant",
    [
        ([[0, 1], [2, 0]], [1, 1], "symmetry"),
        ([[0, 0], [0, 0]], [1, 1], "positive_distance"),
        ([[1, 1], [1, 0]], [1, 1], "zero_diagonal"),
        ([[0, -1], [-1, 0]], [1, 1], "nonnegative"),
        ([[0, 1], [1, 0]], [1, -1], "mass"),
    ],
)
def test_each_invariant_reported(dist, mass, invariant):
    rep = validate_space(["a", "b"], dist, mass)
    assert invariant in {v.invariant for v in rep.violations}


def test_dimension_mismatch_is_structural():
    with pytest.raises(StructureError):
        validate_space(["a", "b"], [[0, 1, 1], [1, 0, 1]], [1, 1])
    with pytest.raises(StructureError):
        validate_space(["a", "b"], [[0, 1], [1, 0]], [1])


def test_make_space_rejects_invalid():
    with pytest.raises(InvalidSpaceError) as exc:
        make_space(["a", "b"], [[0, 1], [2, 0]], [1, 1])
    assert exc.value.report.violations[0].invariant == "symmetry"


def test_exact_mode_detection():
    assert make_space(["a", "b"], [[0, "1/3"], ["1/3", 0]], [1, Fraction(1, 2)]).exact
    assert not make_space(["a", "b"], [[0, 0.5], [0.5, 0]], [1.0, 1.0]).exact


def test_float_tolerance():
    # 1e-12 asymmetry is accepted in float mode and symmetrized
    S = make_space(["a", "b"], [[0, 1.0], [1.0 + 1e-12, 0]], [1.0, 1.0])
    assert S.dist[0, 1] == S.dist[1, 0]


# ---------------------------------------------------------------------------
# components


def test_components_single_block():
    assert components(LINE3).blocks == ((0, 1, 2),)


def test_components_two_singletons():
    assert components(TWO_AT_INF).blocks == ((0,), (1,))


def test_components_two_pairs():
    I = "inf"
    S = make_space("abcd", [[0, 1, I, I], [1, 0, I, I], [I, I, 0, 2], [I, I, 2, 0]], [1] * 4)
    part = components(S)
    assert part.blocks == ((0, 1), (2, 3))
    assert part.block_of(3) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_components_mutually_unreachable(seed, n):
    S = random_space(n, np.random.default_rng(seed), inf_prob=0.6)
    part = components(S)
    assert sorted(i for b in part.blocks for i in b) == list(range(n))
    for a, A in enumerate(part.blocks):
        for B in part.blocks[a + 1:]:
            assert all(is_inf(S.dist[i, j]) for i in A for j in B)
        assert all(not is_inf(S.dist[i, j]) for i in A for j in A)


# ---------------------------------------------------------------------------
# scale_measure and neighborhood


def test_scale_identity_zero_and_product():
    S = make_space(["a", "b"], [[0, 1], [1, 0]], [1, "0.5"])
    assert scale_measure(S, 1) == S
    assert list(scale_measure(S, 0).mass) == [0, 0]
    assert list(scale_measure(S, 2).mass) == [2, 1]
    with pytest.raises(ValueError):
        scale_measure(S, -1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.fractions(0, 5, max_denominator=20), st.fractions(0, 5, max_denominator=20))
def test_scale_composition_exact(seed, a, b):
    S = random_space(5, np.random.default_rng(seed))
    assert scale_measure(scale_measure(S, a), b) == scale_measure(S, a * b)


def test_neighborhood_examples():
    assert neighborhood(LINE3, range(3), Fraction(1, 10)) == {0, 1, 2}
    assert neighborhood(TWO_AT_INF, [0], 10**6) == {0}
    assert neighborhood(LINE3, [0], Fraction(3, 2)) == {0, 1}
    # strict inequality: the point at distance exactly 1 is excluded
    assert neighborhood(LINE3, [0], 1) == {0}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.fractions(Fraction(1, 10), 10), st.fractions(0, 5))
def test_neighborhood_monotone(seed, n, eps, extra):
    rng = np.random.default_rng(seed)
    S = random_space(n, rng, inf_prob=0.3)
    A = [i for i in range(n) if rng.random() < 0.5]
    B = A + [i for i in range(n) if rng.random() < 0.3]
    small = neighborhood(S, A, eps)
    assert small <= neighborhood(S, A, eps + extra)
    assert small <= neighborhood(S, B, eps)
    assert set(A) <= small


# ---------------------------------------------------------------------------
# extended arithmetic


def test_sat_add():
    assert sat_add(1, INFINITY) == INFINITY
    assert sat_add(INFINITY, INFINITY) == INFINITY
    assert sat_add(Fraction(1, 3), Fraction(2, 3)) == 1


ext = st.one_of(st.just(INFINITY), st.fractions(0, 100, max_denominator=50))


@given(ext, ext, ext)
def test_sat_add_associative_commutative(a, b, c):
    assert sat_add(a, b) == sat_add(b, a)
    assert sat_add(sat_add(a, b), c) == sat_add(a, sat_add(b, c))
    assert (sat_add(a, b) <= sat_add(a, sat_add(b, c)))


def test_parse_scalar():
    assert parse_scalar("inf") == INFINITY
    assert parse_scalar("1/3") == Fraction(1, 3)
    assert parse_scalar("0.25") == Fraction(1, 4)
    assert parse_scalar(2) == 2
    with pytest.raises(StructureError):
        parse_scalar("abc")
    with pytest.raises(StructureError):
        parse_scalar(True)


def test_scaled_integer_grid_is_exact():
    D = np.empty((2, 2), dtype=object)
    D[:, :] = [[Fraction(0), Fraction(1, 3)], [Fraction(1, 3), INFINITY]]
    (G,), scale = scaled_integer_grid(D)
    assert scale == 3
    assert G[0, 1] == 1.0 and math.isinf(G[1, 1])


# ---------------------------------------------------------------------------
# log half-line


def test_log_halfline_examples():
    S = make_log_halfline([1, math.e], [1, 1])
    assert S.dist[0, 1] == pytest.approx(1.0, abs=1e-15)
    S0 = make_log_halfline([0, 1], [1, 1])
    assert is_inf(S0.dist[0, 1])
    assert len(components(S0).blocks) == 2
    with pytest.raises(InvalidSpaceError):
        make_log_halfline([2, 2], [1, 1])
    with pytest.raises(InvalidSpaceError):
        make_log_halfline([0, 0], [1, 1])


def test_restrict_relabel_and_diameter():
    S = LINE3.restrict([0, 2])
    assert S.labels == ("a", "c") and S.dist[0, 1] == 2
    assert LINE3.relabel(["x", "y", "z"]).index("z") == 2
    assert diameter(LINE3) == 2
    assert LINE3.total_mass == 3
