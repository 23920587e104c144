import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ustcollide.collision import (
    CEMETERY,
    BallTooLarge,
    KilledWalkState,
    ball_adjacency,
    even_return_series,
    exact_moments,
    first_moment_bound,
    infinite_collision_demo,
    moment_report,
    sample_Z,
    sample_Z_many,
    second_moment_bound,
    step_killed_walk,
    tail_probabilities,
    moment_bound_experiment,
)
from ustcollide.network import green_diagonal, resistance_tree, resistances_all
from ustcollide.rng import RngStream
from ustcollide.treemetrics import IntrinsicBall

from conftest import hub_ball, line_ball, sampled_ball, sampled_tree

single = IntrinsicBall.from_structure([-1], [0, 0, 0])


def _mc(ball, runs, seed):
    z = sample_Z_many(ball, runs, RngStream(seed)).astype(float)
    return z.mean(), z.std(ddof=1) / math.sqrt(runs), (z * z).mean(), (z * z).std(ddof=1) / math.sqrt(runs)


def test_cemetery_absorbs():
    s = KilledWalkState(CEMETERY, 4)
    assert step_killed_walk(s, line_ball(), RngStream(1)) == KilledWalkState(CEMETERY, 5)
    assert step_killed_walk(KilledWalkState(0), single, RngStream(1)).dead


def test_one_step_uniform_at_degree_three():
    b = IntrinsicBall.from_structure([-1, 0, 0, 0], [1, 2, 3])
    adj = ball_adjacency(b)
    g = RngStream(2).generator()
    n = 10**6
    hits = np.zeros(4, dtype=np.int64)
    for _ in range(n):
        hits[step_killed_walk(KilledWalkState(0), b, g, adj).position] += 1
    sigma = math.sqrt(n * (1 / 3) * (2 / 3))
    assert hits[0] == 0
    assert np.all(np.abs(hits[1:] - n / 3) < 4 * sigma)


def test_sample_Z_examples():
    for i in range(100):
        s = sample_Z(single, RngStream(3, i))
        assert s.z == 1 and s.lifetime_x == s.lifetime_y == 1
    for i in range(500):
        s = sample_Z(line_ball(), RngStream(4, i))
        assert 1 <= s.z <= min(s.lifetime_x, s.lifetime_y) + 1
    mean, se, _, _ = _mc(line_ball(), 40_000, 5)
    assert abs(mean - 2) < 3 * se


def test_many_matches_single_runs():
    # sample_Z_many stops at the first death, sample_Z runs to both deaths;
    # on identical draws the counts agree because nothing collides after a death
    b = sampled_ball(5, 0)
    for i in range(300):
        assert sample_Z(b, RngStream(7, i)).z == sample_Z_many(b, 1, RngStream(7, i))[0]


def test_streams_exchangeable():
    b = sampled_ball(6, 1)
    a, c = RngStream(8).child(0), RngStream(8).child(1)
    z1 = sample_Z_many(b, 2000, (a.generator(), c.generator()))
    z2 = sample_Z_many(b, 2000, (c.generator(), a.generator()))
    assert np.array_equal(z1, z2)


def test_exact_examples():
    m = exact_moments(single)
    assert m.EZ == pytest.approx(1.0) and m.EZ2 == pytest.approx(1.0)
    for method in ("iterate", "resolvent"):
        m = exact_moments(line_ball(), method=method, tol=1e-13)
        assert m.EZ == pytest.approx(2.0, rel=1e-10)
        # E Z^2 = 16/3: Z - 1 is geometric-like with the walks meeting w.p. 1/4 every two steps
        assert m.EZ2 == pytest.approx(16 / 3, rel=1e-10)


def test_uncorrected_second_moment_formula_is_off():
    # sum_x V(x) h(x) without the -1 gives 3 on the single ball; Z = 1 there
    m = exact_moments(single)
    assert m.EZ + 2 * float((m.V * m.h).sum()) == pytest.approx(3.0)
    assert m.EZ2 == pytest.approx(1.0)


def test_hub_counterexample_to_green_sandwich():
    b = hub_ball()
    G = green_diagonal(b)
    for method in ("iterate", "resolvent"):
        m = exact_moments(b, method=method, tol=1e-13)
        assert m.EZ == pytest.approx(52 / 11, rel=1e-9)
    assert G == pytest.approx(2.0)
    assert even_return_series(b, tol=1e-13) == pytest.approx(G, rel=1e-9)
    mean, se, _, _ = _mc(b, 100_000, 9)
    assert abs(mean - 52 / 11) < 4 * se
    assert mean > G + 10 * se


def test_routes_agree_and_match_monte_carlo(small_balls):
    for i, b in enumerate(small_balls[::3]):
        a = exact_moments(b, method="iterate", tol=1e-12)
        c = exact_moments(b, method="resolvent")
        assert a.EZ == pytest.approx(c.EZ, rel=1e-8)
        assert a.EZ2 == pytest.approx(c.EZ2, rel=1e-8)
        assert np.allclose(a.V, c.V, rtol=1e-7, atol=1e-13)
        mean, se, m2, se2 = _mc(b, 20_000, 100 + i)
        assert abs(mean - c.EZ) < 4 * se
        assert abs(m2 - c.EZ2) < 4 * se2


def test_even_return_series_is_green(small_balls):
    for b in small_balls:
        assert even_return_series(b, tol=1e-12) == pytest.approx(green_diagonal(b), rel=1e-8)


def test_resistance_sandwich(small_balls):
    """Reversibility bounds R min(mu) <= E Z <= R max(mu) on every ball."""
    for b in small_balls + [hub_ball(), line_ball()]:
        m = exact_moments(b)
        R = resistance_tree(b)
        assert R * b.degrees.min() * (1 - 1e-9) <= m.EZ <= R * b.degrees.max() * (1 + 1e-9)
        assert m.EZ2 <= m.EZ * (2 * b.degrees.max() * resistances_all(b).max() - 1) * (1 + 1e-9)


def test_member_cap():
    with pytest.raises(BallTooLarge):
        exact_moments(sampled_ball(6, 0), member_cap=3)
    with pytest.raises(ValueError):
        exact_moments(single, method="bogus")


def test_bound_helpers():
    assert first_moment_bound(10) == 60
    assert second_moment_bound(10) == 14460


def test_report_verdicts():
    b = sampled_ball(10, 2)
    rep = moment_report(b, 10, mc_runs=2000, rng=RngStream(11))
    assert rep.upper_first and rep.upper_second
    assert rep.sandwich_resistance and rep.second_resistance
    assert rep.lower[0.02]
    assert abs(rep.mc_EZ - rep.exact_EZ) < 4 * rep.mc_EZ_se
    d = rep.to_dict()
    assert d["lower"]["0.5"] == rep.lower[0.5]


def test_moment_bound_experiment_deterministic():
    reps, summary = moment_bound_experiment(6, 8, rng=RngStream(12), mc_runs=200)
    reps2, _ = moment_bound_experiment(6, 8, rng=RngStream(12), mc_runs=200)
    assert [r.to_dict() for r in reps] == [r.to_dict() for r in reps2]
    assert summary.upper_first_violations == 0 and summary.upper_second_violations == 0
    fr = [summary.lower_failure_fraction[e] for e in (0.5, 0.2, 0.1, 0.05, 0.02)]
    assert fr == sorted(fr, reverse=True) and fr[-1] == 0


def test_infinite_collision_demo():
    t = sampled_tree(40, 0)
    certs = infinite_collision_demo(t, [1, 2, 4], RngStream(13), eps=0.1, runs=2000)
    assert certs[0].p_hat == 1.0
    assert [c.radius for c in certs] == [10, 20, 40]
    with pytest.raises(ValueError):
        infinite_collision_demo(t, [4, 2], RngStream(13))


@given(st.lists(st.integers(1, 50), min_size=1, max_size=200))
def test_tail_probabilities_monotone(z):
    p = tail_probabilities(np.array(z), [1, 2, 5, 10, 20, 40])
    assert p[0] == 1.0
    assert np.all(np.diff(p) <= 0)
