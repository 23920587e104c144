import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ustcollide.lattice import ORIGIN
from ustcollide.network import (
    green_diagonal,
    green_diagonal_all,
    green_series,
    killed_transition,
    resistance_general,
    resistance_profile,
    resistance_region_general,
    resistance_threshold,
    resistance_tree,
    resistances_all,
)
from ustcollide.treemetrics import IntrinsicBall, intrinsic_ball, tree_distance

from conftest import line_ball, sampled_ball, sampled_tree


def test_general_examples():
    assert resistance_general([[1], [0, 2], [1]], [0], [2]) == pytest.approx(2, rel=1e-12)
    assert resistance_general([[1, 3], [0, 2], [1, 3], [2, 0]], [0], [2]) == pytest.approx(1, rel=1e-12)
    assert resistance_general([[1], [0]], [0], [1]) == pytest.approx(1, rel=1e-12)
    # parallel edges count with multiplicity
    assert resistance_general([[1, 1], [0, 0]], [0], [1]) == pytest.approx(0.5, rel=1e-12)
    assert resistance_general([[1], [0], [3], [2]], [0], [2]) == math.inf
    with pytest.raises(ValueError):
        resistance_general([[1], [0]], [0], [0])


def test_general_sets():
    # K4 between a vertex and the other three: 1/3
    K4 = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]
    assert resistance_general(K4, [0], [1, 2, 3]) == pytest.approx(1 / 3, rel=1e-12)
    # K4 between two vertices: 1/2
    assert resistance_general(K4, [0], [1]) == pytest.approx(0.5, rel=1e-12)


def test_tree_examples():
    # path of length L to one absorbing vertex
    for L in (1, 2, 7):
        b = IntrinsicBall.from_structure([-1] + list(range(L - 1)), [L - 1])
        assert resistance_tree(b) == pytest.approx(L, rel=1e-14)
    # star with k absorbing neighbours
    for k in (1, 3, 6):
        assert resistance_tree(IntrinsicBall.from_structure([-1], [0] * k)) == pytest.approx(1 / k)
    assert resistance_tree(line_ball()) == pytest.approx(1.0)


def test_green_examples():
    for k in (1, 3, 6):
        single = IntrinsicBall.from_structure([-1], [0] * k)
        assert green_diagonal(single) == pytest.approx(1.0)
        assert green_series(single) == pytest.approx(1.0)
    assert green_diagonal(line_ball()) == pytest.approx(2.0)
    assert green_series(line_ball(), tol=1e-12) == pytest.approx(2.0, rel=1e-10)


def test_sweep_vs_laplacian(small_balls):
    for b in small_balls:
        all_r = resistances_all(b)
        assert resistance_tree(b) == pytest.approx(resistance_region_general(b), rel=1e-9)
        for x in range(0, len(b), max(1, len(b) // 5)):
            assert all_r[x] == pytest.approx(resistance_region_general(b, x), rel=1e-9)


def test_green_identity(small_balls):
    for b in small_balls:
        gd = green_diagonal_all(b)
        for x in range(0, len(b), max(1, len(b) // 4)):
            series = green_series(b, x, tol=1e-9)
            assert abs(gd[x] - series) / series < 1e-6


def _matrix_series(ball, x, tol):
    P = killed_transition(ball).T.tocsr()
    v = np.zeros(len(ball))
    v[x] = 1.0
    total = 1.0
    while v.sum() >= tol:
        v = P @ v
        total += v[x]
    return total


def test_tree_kernel_matches_sparse_matrix_iteration(small_balls):
    for b in small_balls:
        for x in (0, len(b) - 1):
            assert green_series(b, x, tol=1e-12) == pytest.approx(_matrix_series(b, x, 1e-12), rel=1e-12)


def test_killed_kernel_is_substochastic(small_balls):
    for b in small_balls:
        P = killed_transition(b)
        rows = np.asarray(P.sum(axis=1)).ravel()
        assert np.all(rows <= 1 + 1e-12)
        assert np.allclose(1 - rows, b.exit_count / b.degrees)


def test_series_law_on_branches():
    t = sampled_tree(8, 0)
    b = intrinsic_ball(t, ORIGIN, 8)
    m = len(b)
    adj = [[] for _ in range(m)]
    for c, p in b.edges():
        adj[c].append(p)
        adj[p].append(c)
    g = np.random.default_rng(0)
    for _ in range(20):
        x, y = (int(v) for v in g.integers(0, m, size=2))
        if x == y:
            continue
        d = tree_distance(t, t.point(b.members[x]), t.point(b.members[y]))
        assert resistance_general(adj, [x], [y]) == pytest.approx(d, rel=1e-9)


def test_rayleigh_monotone_in_radius():
    for i in range(4):
        t = sampled_tree(15, i)
        rs = [resistance_tree(intrinsic_ball(t, ORIGIN, r)) for r in range(16)]
        assert all(a <= b + 1e-12 for a, b in zip(rs, rs[1:]))


@given(st.integers(0, 10**6))
def test_profile_bounds(seed):
    from ustcollide.rng import RngStream
    from ustcollide.wilson import WilsonConfig, wilson_infinity_approx

    r = 5
    cfg = WilsonConfig(region_radius=r, order="intrinsic", cover_component=True)
    t = wilson_infinity_approx(cfg, RngStream(seed))
    rep = resistance_profile(t, r)
    assert 0 < rep.r_eff_origin <= r + 1
    assert rep.green_origin == pytest.approx(rep.degree_origin * rep.r_eff_origin)
    assert rep.r_eff_Ur > 0
    assert set(rep.to_dict()) >= {"r_eff_origin", "r_eff_Ur", "green_origin"}


def test_threshold_decreasing_in_lambda():
    th = [resistance_threshold(50, lam) for lam in (2, 4, 8, 16)]
    assert th == sorted(th, reverse=True)
    assert resistance_threshold(50, 1, beta=1.0) == pytest.approx(50)
