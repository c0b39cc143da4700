from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmspaces.core import INFINITY, components, is_inf, make_space
from dmspaces.gluing import (
    GluingSpec,
    InadmissibleGluingError,
    check_isometric_inclusions,
    check_L_isometric,
    disjoint_union_distance,
    distortion,
    glued_distance,
    largest_valid_level,
    quotient_zero,
    shortest_paths,
)

from _helpers import chain_glued, plus, random_space, random_spec

F = Fraction


def two_points(d, prefix):
    return make_space([f"{prefix}1", f"{prefix}2"], [[0, d], [d, 0]], [1, 1])


def triangle_ok(D) -> bool:
    N = D.shape[0]
    return all(D[i, j] <= plus(D[i, k], D[k, j]) for i in range(N) for j in range(N) for k in range(N))


# ---------------------------------------------------------------------------
# disjoint union


def test_disjoint_union_singletons():
    a = make_space(["a"], [[0]], [1])
    U = disjoint_union_distance(a, a)
    assert is_inf(U.dist[0, 1]) and U.labels == ("X:a", "Y:a")


def test_disjoint_union_copies_and_components():
    X = random_space(4, np.random.default_rng(1), inf_prob=0.5)
    U = disjoint_union_distance(X, X)
    assert np.all(U.dist[:4, :4] == X.dist) and np.all(U.dist[4:, 4:] == X.dist)
    assert len(components(U).blocks) == 2 * len(components(X).blocks)


# ---------------------------------------------------------------------------
# glued_distance examples


def test_identity_gluing_zero():
    X = random_space(4, np.random.default_rng(2))
    g = glued_distance(X, X, GluingSpec.build([(i, i) for i in range(4)], 0))
    assert all(g.dist[i, 4 + i] == 0 for i in range(4))
    Q, cls = quotient_zero(g)
    assert Q.n == 4 and cls[:4] == cls[4:]
    assert Q.total_mass == 2 * X.total_mass


def test_slack_example():
    g = glued_distance(two_points(2, "x"), two_points(F(5, 2), "y"), GluingSpec.build([(0, 0), (1, 1)], F(1, 2)))
    assert g.dist[0, 3] == F(5, 2)
    assert g.dist[0, 2] == F(1, 2)


def test_no_pairs_is_disjoint_union():
    X, Y = two_points(1, "x"), two_points(3, "y")
    g = glued_distance(X, Y, GluingSpec.build([], 1))
    assert np.all(g.dist == disjoint_union_distance(X, Y).dist)


def test_inadmissible_rejected():
    X, Y = two_points(2, "x"), make_space(["y"], [[0]], [1])
    with pytest.raises(InadmissibleGluingError, match="x1, x2"):
        glued_distance(X, Y, GluingSpec.build([(0, 0), (1, 0)], 1))
    with pytest.raises(InadmissibleGluingError):
        glued_distance(X, Y, GluingSpec.build([(0, 0), (0, 0), (5, 0)], 1))
    with pytest.raises(InadmissibleGluingError):
        glued_distance(X, Y, GluingSpec.build([(0, 0)], -1))
    # equal to delta is admissible (non-strict form)
    g = glued_distance(X, Y, GluingSpec.build([(0, 0), (1, 0)], 2))
    assert g.dist[0, 1] == 2


# ---------------------------------------------------------------------------
# inclusions


def test_inclusions_with_small_distortion():
    g = glued_distance(two_points(2, "x"), two_points(F(5, 2), "y"), GluingSpec.build([(0, 0), (1, 1)], F(1, 2)))
    rep = check_isometric_inclusions(g)
    assert rep.X_ok and rep.Y_ok and rep.max_distortion == 0


def test_shortcut_breaks_x_inclusion():
    g = glued_distance(two_points(10, "x"), two_points(1, "y"), GluingSpec.build([(0, 0), (1, 1)], F(1, 10)))
    rep = check_isometric_inclusions(g)
    assert not rep.X_ok and rep.Y_ok
    assert g.dist[0, 1] == F(6, 5)
    assert rep.max_distortion == pytest.approx(10 - 1.2)


def test_no_pairs_both_ok():
    rep = check_isometric_inclusions(glued_distance(two_points(1, "x"), two_points(7, "y"), GluingSpec.build([], 0)))
    assert rep.X_ok and rep.Y_ok


# ---------------------------------------------------------------------------
# L-isometric check


def test_L_isometric_examples():
    X = random_space(3, np.random.default_rng(3))
    assert check_L_isometric(X, X, [0, 1, 2], INFINITY).ok
    X10 = two_points(10, "x")
    Yinf = make_space(["y1", "y2"], [[0, "inf"], ["inf", 0]], [1, 1])
    assert check_L_isometric(X10, Yinf, [0, 1], 10).ok
    rep = check_L_isometric(X10, Yinf, [0, 1], 11)
    assert not rep.ok and rep.first_violation[:2] == (0, 1)
    assert largest_valid_level(X10, Yinf, [0, 1]) == 10
    assert check_L_isometric(X10, Yinf, [0, 1], 11, removed=[1]).ok


def test_distortion():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = np.array([[0.0, 1.5], [1.5, 0.0]])
    assert distortion(A, B) == 0.5
    assert distortion(A, np.array([[0.0, np.inf], [np.inf, 0.0]])) == INFINITY


# ---------------------------------------------------------------------------
# properties


def instance(seed: int, n: int, m: int):
    rng = np.random.default_rng(seed)
    X = random_space(n, rng, inf_prob=0.3, prefix="x")
    Y = random_space(m, rng, inf_prob=0.3, prefix="y")
    delta = F(int(rng.integers(0, 7)), 2)
    return X, Y, random_spec(X, Y, rng, delta), rng


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.integers(1, 7))
def test_glued_is_semi_metric(seed, n, m):
    X, Y, spec, _ = instance(seed, n, m)
    g = glued_distance(X, Y, spec)
    D = g.dist
    assert np.all(D == D.T)
    assert all(D[i, i] == 0 for i in range(n + m))
    assert triangle_ok(D)
    assert all(D[x, n + y] <= spec.delta for x, y in spec.pairs)
    assert np.all(D[:n, :n] <= X.dist) and np.all(D[n:, n:] <= Y.dist)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
def test_chain_formula_brute_force(seed, n, m):
    X, Y, spec, _ = instance(seed, n, m)
    g = glued_distance(X, Y, spec)
    brute = chain_glued(X, Y, spec, max_hops=3)
    assert all(g.dist[a, b] == brute[a][b] for a in range(n + m) for b in range(n + m))


@pytest.mark.parametrize("seed", range(12))
def test_chain_formula_both_backends(kernel_backend, seed):
    X, Y, spec, _ = instance(seed, 4, 3)
    g = glued_distance(X, Y, spec)
    brute = chain_glued(X, Y, spec, max_hops=3)
    assert all(g.dist[a, b] == brute[a][b] for a in range(7) for b in range(7))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_maximality(seed, n, m):
    X, Y, spec, rng = instance(seed, n, m)
    g = glued_distance(X, Y, spec)
    N = n + m
    # admissible competitors: the defining edges plus random extra shortcuts, then closure
    for _ in range(3):
        G = np.array(g.dist, dtype=object)
        G[:, :] = INFINITY
        G[:n, :n] = X.dist
        G[n:, n:] = Y.dist
        for x, y in spec.pairs:
            G[x, n + y] = G[n + y, x] = spec.delta
        for a in range(N):
            for b in range(a + 1, N):
                if rng.random() < 0.2:
                    G[a, b] = G[b, a] = F(int(rng.integers(0, 20)), 2)
        C = shortest_paths(G)
        ok = (all(C[x, n + y] <= spec.delta for x, y in spec.pairs)
              and np.all(C[:n, :n] <= X.dist) and np.all(C[n:, n:] <= Y.dist))
        if ok:
            assert all(C[a, b] <= g.dist[a, b] for a in range(N) for b in range(N))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6))
def test_inclusion_theorem(seed, n, m):
    X, Y, spec, _ = instance(seed, n, m)
    pairs = spec.pairs
    dist_ok = all(
        (is_inf(X.dist[a, b]) and is_inf(Y.dist[c, d]))
        or (not is_inf(X.dist[a, b]) and not is_inf(Y.dist[c, d]) and abs(X.dist[a, b] - Y.dist[c, d]) <= spec.delta)
        for a, c in pairs for b, d in pairs
    )
    if dist_ok:
        rep = check_isometric_inclusions(glued_distance(X, Y, spec))
        assert rep.X_ok and rep.Y_ok


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6), st.integers(1, 12))
def test_L_isometric_inclusion_theorem(seed, n, m, L):
    X, Y, spec, _ = instance(seed, n, m)
    dom = [x for x, _ in spec.pairs]
    img = [y for _, y in spec.pairs]
    if not check_L_isometric(X.dist[np.ix_(dom, dom)], Y.dist, img, L).ok:
        return
    for delta in (0, F(1, 4), F(1, 2), 1, 4):
        g = glued_distance(X, Y, GluingSpec(spec.pairs, delta))
        assert check_L_isometric(X, g.dist, list(range(n)), L).ok
        assert check_L_isometric(Y, g.dist, list(range(n, n + m)), L).ok


def test_float_gluing_matches_exact():
    X, Y, spec, _ = instance(11, 4, 4)
    ge = glued_distance(X, Y, spec)
    gf = glued_distance(X.as_float(), Y.as_float(), GluingSpec(spec.pairs, float(spec.delta)))
    assert not gf.exact
    assert np.allclose(np.asarray(ge.dist, dtype=float), gf.dist)
