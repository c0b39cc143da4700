from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmspaces.approx import (
    ball_mass_check,
    epsilon_net_approximation,
    greedy_epsilon_net,
    net_measure,
    precompact_certificate,
    unbounded_mass_family,
)
from dmspaces.core import make_space
from dmspaces.prokhorov import MeasurePair, levy_prokhorov, pushforward

from _helpers import random_space, strict_ball_mass

F = Fraction
LINE3 = make_space(["a", "b", "c"], [[0, 1, 2], [1, 0, 1], [2, 1, 0]], [1, 1, 1])


def uniform(n):
    return make_space([f"u{i}" for i in range(n)], [[0 if i == j else 1 for j in range(n)] for i in range(n)],
                      [F(1, n)] * n)


# ---------------------------------------------------------------------------
# nets


def test_single_center_when_eps_exceeds_diameter():
    assert greedy_epsilon_net(LINE3, 3) == (0,)


def test_components_never_share_a_center():
    S = make_space(["a", "b"], [[0, "inf"], ["inf", 0]], [1, 1])
    assert greedy_epsilon_net(S, 10**9) == (0, 1)


def test_equidistant_points_all_centers():
    assert greedy_epsilon_net(uniform(3), F(1, 2)) == (0, 1, 2)


def test_nonpositive_eps_rejected():
    with pytest.raises(ValueError):
        greedy_epsilon_net(LINE3, 0)
    with pytest.raises(ValueError):
        net_measure(LINE3, [0], 0)


def test_net_measure_examples():
    S = random_space(5, np.random.default_rng(0))
    same = net_measure(S, range(5), F(1, 100))
    assert list(same.mass) == list(S.mass)
    A = net_measure(LINE3, [0, 2], F(3, 2))
    assert list(A.mass) == [2, 1]
    assert A.dist[0, 1] == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 50), st.fractions(F(1, 4), 12, max_denominator=8))
def test_net_covers_and_separates(seed, n, eps):
    S = random_space(n, np.random.default_rng(seed), inf_prob=0.05)
    C = greedy_epsilon_net(S, eps)
    for a in C:
        for b in C:
            assert a == b or S.dist[a, b] >= eps
    for x in range(n):
        assert any(S.dist[x, c] < eps for c in C)
    res = epsilon_net_approximation(S, eps)
    assert res.approx.total_mass == S.total_mass


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.fractions(F(1, 4), 8, max_denominator=8))
def test_net_within_eps_in_prokhorov(seed, n, eps):
    S = random_space(n, np.random.default_rng(seed), inf_prob=0.2)
    res = epsilon_net_approximation(S, eps)
    nu = pushforward(list(res.centers), res.approx.mass, n)
    assert levy_prokhorov(MeasurePair(S.dist, S.mass, nu)) <= eps


# ---------------------------------------------------------------------------
# certificates


def test_single_point_certificate():
    S = make_space(["x"], [[0]], [1])
    (c,) = precompact_certificate([S], F(1, 2), 1, lambda r: F(1, 2))
    assert c.ok and c.size == 1 and c.uncovered == 0


def test_unbounded_family_flagged():
    fam = unbounded_mass_family(6)
    certs = precompact_certificate(fam, F(1, 2), 3, lambda r: F(1))
    assert [c.ok for c in certs] == [True, True, True, False, False, False]
    assert "exceeds A" in certs[-1].reasons[0]


def test_uniform_spaces_meet_bound_with_equality():
    for n in (1, 2, 5, 9):
        (c,) = precompact_certificate([uniform(n)], F(1, 2), 1, lambda r, n=n: F(1, n))
        assert c.ok and c.size == c.bound == n


def test_ball_hypothesis_failure():
    bad = ball_mass_check(LINE3.with_mass([1, 1, 0]), F(1, 2), lambda r: F(1, 2))
    assert len(bad) == 1 and "c" in bad[0]
    (cert,) = precompact_certificate([LINE3.with_mass([1, 1, 0])], 1, 10, lambda r: F(1, 2))
    assert not cert.ok and cert.centers == ()


def test_probe_radii_checked():
    (cert,) = precompact_certificate([LINE3], F(1, 2), 10, lambda r: 2 * F(r), probes=[F(3)])
    assert not cert.ok


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.fractions(F(1, 2), 6, max_denominator=4))
def test_certificate_cardinality_bound(seed, count, eps):
    rng = np.random.default_rng(seed)
    fam = [random_space(int(rng.integers(1, 9)), rng, inf_prob=0.2) for _ in range(count)]
    A = max(S.total_mass for S in fam)
    floor = min(strict_ball_mass(S, i, eps / 2) for S in fam for i in range(S.n))
    if floor == 0:
        return
    certs = precompact_certificate(fam, eps, A, lambda r: floor)
    bound = math.ceil(A / floor)
    for c in certs:
        assert c.ok
        assert c.size <= bound == c.bound
        assert c.uncovered <= eps
