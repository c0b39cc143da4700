from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmspaces.approx import epsilon_net_approximation
from dmspaces.core import INFINITY, is_inf, make_space
from dmspaces.ghlp import (
    NonConvergentError,
    RhoWitness,
    SearchBudget,
    WitnessError,
    compose_witnesses,
    extract_quasi_isometry,
    identity_witness,
    is_equivalent_zero_distance,
    limit_of_finite_sequence,
    rho_lower,
    rho_search,
    rho_upper_from_witness,
    validate_witness,
)
from dmspaces.gluing import GluingSpec, glued_distance

from _helpers import brute_bijection_exists, random_space

F = Fraction
EPS0 = F(1, 5)
QUICK = SearchBudget(max_matchings=2000, max_deltas=4, max_removed=2, local_steps=40)


def at_inf(m1, m2, prefix):
    return make_space([f"{prefix}1", f"{prefix}2"], [[0, "inf"], ["inf", 0]], [m1, m2])


def example3():
    return at_inf(1, 0, "x"), at_inf(1, EPS0, "y")


def example4():
    X = make_space(["x1", "x2"], [[0, 10], [10, 0]], [1, 1])
    return X, at_inf(1, 1, "y")


def hand_witness(X, Y, L):
    return RhoWitness(glued_distance(X, Y, GluingSpec.build([(0, 0), (1, 1)], 0)), L, 0)


# ---------------------------------------------------------------------------
# witness objective


def test_identity_witness_zero():
    X = random_space(4, np.random.default_rng(0))
    assert rho_upper_from_witness(X, X, identity_witness(X)) == 0


def test_example3_hand_witness():
    X, Y = example3()
    assert rho_upper_from_witness(X, Y, hand_witness(X, Y, INFINITY)) == EPS0


def test_example4_hand_witness():
    X, Y = example4()
    assert rho_upper_from_witness(X, Y, hand_witness(X, Y, 10)) == F(1, 10)
    with pytest.raises(WitnessError, match="L-isometry"):
        rho_upper_from_witness(X, Y, hand_witness(X, Y, 11))


def test_witness_rejections():
    X, Y = example3()
    g = hand_witness(X, Y, INFINITY).glued
    with pytest.raises(WitnessError, match="removed mass"):
        validate_witness(X, Y, RhoWitness(g, INFINITY, 0, frozenset({0})))
    with pytest.raises(WitnessError, match="eps"):
        validate_witness(X, Y, RhoWitness(g, INFINITY, -1))
    with pytest.raises(WitnessError, match="level"):
        validate_witness(X, Y, RhoWitness(g, 0, 0))
    with pytest.raises(WitnessError, match="parts"):
        validate_witness(Y, X, RhoWitness(g, INFINITY, 0))


def test_removed_mass_counts_in_objective():
    X, Y = example3()
    w = RhoWitness(hand_witness(X, Y, INFINITY).glued, INFINITY, F(1, 4), frozenset(), frozenset({1}))
    # the full measures are still pushed forward, so d_pi stays EPS0
    assert rho_upper_from_witness(X, Y, w) == EPS0 + F(1, 4)


# ---------------------------------------------------------------------------
# rho_lower and rho_search


def test_rho_lower_examples():
    X = random_space(3, np.random.default_rng(1))
    assert rho_lower(X, X) == 0
    one = make_space(["a"], [[0]], [1])
    assert rho_lower(one, make_space(["a"], [[0]], [2])) == 1
    assert rho_lower(make_space(["a"], [[0]], ["0.25"]), make_space(["a"], [[0]], ["0.75"])) == F(1, 2)


def test_search_identity_zero():
    X = random_space(4, np.random.default_rng(2))
    est = rho_search(X, X)
    assert est.upper == 0 and est.lower == 0


def test_search_mass_gap():
    X = make_space(["a", "b"], [[0, 1], [1, 0]], ["0.5", "0.5"])
    Y = make_space(["a", "b"], [[0, 3], [3, 0]], [1, 1])
    est = rho_search(X, Y)
    assert est.lower >= 1 and est.upper >= est.lower


def test_search_finds_hand_witnesses():
    X, Y = example3()
    assert rho_search(X, Y).upper <= EPS0 + F(1, 10**9)
    X, Y = example4()
    assert rho_search(X, Y).upper <= F(1, 10) + F(1, 10**9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_search_sound_and_symmetric(seed, n, m):
    rng = np.random.default_rng(seed)
    X = random_space(n, rng, inf_prob=0.3, zero_prob=0.2, prefix="x")
    Y = random_space(m, rng, inf_prob=0.3, zero_prob=0.2, prefix="y")
    a = rho_search(X, Y, QUICK, seed=3)
    b = rho_search(Y, X, QUICK, seed=3)
    assert a.lower <= a.upper
    assert rho_upper_from_witness(X, Y, a.witness) == a.upper
    assert rho_upper_from_witness(X, Y, a.witness) == rho_upper_from_witness(X, Y, a.witness)
    assert abs(float(a.upper) - float(b.upper)) <= 1e-9


def test_search_deterministic():
    rng = np.random.default_rng(5)
    X = random_space(7, rng, prefix="x")
    Y = random_space(6, rng, prefix="y")
    a = rho_search(X, Y, QUICK, seed=7)
    b = rho_search(X, Y, QUICK, seed=7)
    assert a.upper == b.upper and a.evaluated == b.evaluated
    assert a.witness.glued.spec == b.witness.glued.spec


def test_search_float_spaces(kernel_backend):
    X = make_space(["a", "b", "c"], [[0, 1.0, 2.0], [1.0, 0, 1.5], [2.0, 1.5, 0]], [0.3, 0.3, 0.4])
    Y = make_space(["a", "b", "c"], [[0, 1.1, 2.0], [1.1, 0, 1.5], [2.0, 1.5, 0]], [0.3, 0.3, 0.4])
    est = rho_search(X, Y)
    assert 0 <= est.upper <= 0.2
    assert abs(float(rho_upper_from_witness(X, Y, est.witness)) - float(est.upper)) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_approximation_consistency(seed, n):
    rng = np.random.default_rng(seed)
    S = random_space(n, rng, inf_prob=0.2)
    eps = F(int(rng.integers(1, 8)), 2)
    A = epsilon_net_approximation(S, eps).approx
    centers = epsilon_net_approximation(S, eps).centers
    est = rho_search(S, A, QUICK, initial=[[(c, k) for k, c in enumerate(centers)]])
    assert est.upper <= eps + F(1, 10**9)


# ---------------------------------------------------------------------------
# composition


def test_compose_with_identity():
    X, Y = example3()
    w1 = hand_witness(X, Y, INFINITY)
    w = compose_witnesses(w1, identity_witness(Y))
    assert rho_upper_from_witness(X, Y, w) <= EPS0
    assert is_inf(w.L) and w.eps == 0


def test_compose_chains_examples():
    X, Y = example3()
    Z = at_inf(1, F(2, 5), "z")
    w1 = hand_witness(X, Y, INFINITY)
    w2 = hand_witness(Y, Z, INFINITY)
    w = compose_witnesses(w1, w2)
    validate_witness(X, Z, w)
    assert rho_upper_from_witness(X, Z, w) <= EPS0 + F(1, 5)


def test_compose_rejects_different_middle():
    X, Y = example3()
    with pytest.raises(WitnessError, match="middle"):
        compose_witnesses(hand_witness(X, Y, INFINITY), identity_witness(X.with_mass([1, 1])))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compose_triangle_bound(seed):
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_space(int(rng.integers(1, 4)), rng, inf_prob=0.2, prefix=p) for p in "xyz")
    e1, e2 = rho_search(X, Y, QUICK), rho_search(Y, Z, QUICK)
    w = compose_witnesses(e1.witness, e2.witness)
    obj = rho_upper_from_witness(X, Z, w)
    assert obj <= e1.upper + e2.upper + e1.witness.eps + e2.witness.eps + F(1, 10**9)


# ---------------------------------------------------------------------------
# zero distance


def test_equivalence_permutation():
    rng = np.random.default_rng(8)
    X = random_space(5, rng)
    perm = [int(i) for i in rng.permutation(5)]
    Y = make_space([f"q{i}" for i in range(5)], X.dist[np.ix_(perm, perm)], X.mass[perm])
    m = is_equivalent_zero_distance(X, Y)
    assert m is not None
    assert all(X.dist[a, b] == Y.dist[m[a], m[b]] for a in m for b in m)


def test_equivalence_zero_mass_point():
    X = make_space(["a", "b"], [[0, 1], [1, 0]], [1, 2])
    Y = make_space(["a", "b", "z"], [[0, 1, "inf"], [1, 0, "inf"], ["inf", "inf", 0]], [1, 2, 0])
    assert is_equivalent_zero_distance(X, Y) == {0: 0, 1: 1}
    assert rho_search(X, Y).upper == 0


def test_equivalence_totals_differ():
    X = make_space(["a"], [[0]], [1])
    assert is_equivalent_zero_distance(X, X.with_mass([2])) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_equivalence_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    X = random_space(n, rng, inf_prob=0.3, zero_prob=0.3)
    if rng.random() < 0.5:
        perm = [int(i) for i in rng.permutation(n)]
        Y = make_space([f"q{i}" for i in range(n)], X.dist[np.ix_(perm, perm)], X.mass[perm])
    else:
        Y = random_space(n, rng, inf_prob=0.3, zero_prob=0.3)
    assert (is_equivalent_zero_distance(X, Y) is not None) == brute_bijection_exists(X, Y)


# ---------------------------------------------------------------------------
# quasi-isometry extraction


def test_quasi_isometry_identity():
    X = random_space(4, np.random.default_rng(9))
    for d in (0.1, 0.4, 0.7):
        q = extract_quasi_isometry(X, X, identity_witness(X), d)
        assert q.ok and q.mapping == {i: i for i in range(4)} and not q.excluded


def test_quasi_isometry_example3():
    X, Y = example3()
    q = extract_quasi_isometry(X, Y, hand_witness(X, Y, INFINITY), 0.21)
    assert q.ok
    assert q.excluded <= {1}


def test_quasi_isometry_precondition():
    X, Y = example3()
    with pytest.raises(ValueError):
        extract_quasi_isometry(X, Y, hand_witness(X, Y, INFINITY), 0.2)
    with pytest.raises(ValueError):
        extract_quasi_isometry(X, X, identity_witness(X), 0.8)


# ---------------------------------------------------------------------------
# limits


def test_limit_constant_sequence():
    X = random_space(3, np.random.default_rng(10))
    assert limit_of_finite_sequence([X] * 5, 1e-9) == X


def test_limit_collapsing_pair():
    seq = [make_space(["a", "b"], [[0, F(1, k)], [F(1, k), 0]], [F(1, 2), F(1, 2)]) for k in range(1, 201)]
    L = limit_of_finite_sequence(seq, 0.01)
    assert L.n == 1 and L.total_mass == 1


def test_limit_diverging_pair():
    seq = [make_space(["a", "b"], [[0, 10**k], [10**k, 0]], [1, 1]) for k in range(1, 10)]
    L = limit_of_finite_sequence(seq, 1e-9)
    assert L.n == 2 and is_inf(L.dist[0, 1])


def test_limit_nonconvergent():
    seq = [make_space(["a", "b"], [[0, 1 + k % 2], [1 + k % 2, 0]], [1, 1]) for k in range(10)]
    with pytest.raises(NonConvergentError, match="a, b"):
        limit_of_finite_sequence(seq, 1e-9)
