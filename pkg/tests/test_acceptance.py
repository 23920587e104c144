"""Acceptance criteria at their stated tolerances; each prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy import stats

from ustcollide import cli
from ustcollide.cli import ExperimentConfig, data_section, exhaustive_paths, main, random_traces
from ustcollide.collision import DEFAULT_EPS_GRID, exact_moments, sample_Z_many
from ustcollide.network import (
    green_diagonal,
    green_series,
    resistance_region_general,
    resistance_threshold,
    resistance_tree,
)
from ustcollide.rng import RngStream
from ustcollide.treemetrics import intrinsic_ball
from ustcollide.walk import loop_erase, loop_erase_naive
from ustcollide.wilson import spanning_tree_count, tree_edges, wilson_graph

from conftest import report

SEED = 20241018
CYCLE4 = [[1, 3], [0, 2], [1, 3], [2, 0]]
K4 = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]


def _ball(r, i, seed=SEED):
    return intrinsic_ball(cli.sample_tree(r, i, seed, 4.0), (0, 0, 0), r)


# ---------------------------------------------------------------------------


def test_criterion_1_loop_erasure_oracle():
    t0 = time.time()
    n = bad = 0
    for path in random_traces(100_000, 200, RngStream(SEED).child(1)):
        n += 1
        bad += loop_erase(path) != loop_erase_naive(path)
    short = 0
    for path in exhaustive_paths(6):
        short += 1
        bad += loop_erase(path) != loop_erase_naive(path)
    dt = time.time() - t0
    ok = bad == 0 and dt < 60
    report(1, "loop erasure vs naive recursion", ok,
           f"{n} random traces + {short} exhaustive paths, {bad} mismatches, {dt:.1f}s")
    assert bad == 0
    assert dt < 60


def test_criterion_2_wilson_uniformity():
    t0 = time.time()
    details, ok = [], True
    for name, adj, count in (("4-cycle", CYCLE4, 4), ("K4", K4, 16)):
        det = spanning_tree_count(adj)
        g = RngStream(SEED).child(2).child(count).generator()
        n = 100_000
        freq = {}
        for _ in range(n):
            k = tree_edges(wilson_graph(adj, 0, g))
            freq[k] = freq.get(k, 0) + 1
        obs = np.array(list(freq.values()), dtype=float)
        dev = float(np.max(np.abs(obs / n - 1 / count)))
        p = float(stats.chisquare(obs).pvalue)
        good = det == count and len(freq) == count and dev <= 0.01 and p > 1e-3
        ok &= good
        details.append(f"{name}: det={det}, trees={len(freq)}, max|f-1/{count}|={dev:.4f}, chi2 p={p:.3f}")
    dt = time.time() - t0
    ok &= dt < 60
    report(2, "Wilson uniformity", ok, "; ".join(details) + f", {dt:.1f}s")
    assert ok


def test_criterion_3_electrical_identities():
    t0 = time.time()
    radii = (10, 20, 30, 40, 50)
    worst_green = worst_lap = 0.0
    count = 0
    for k in range(1000):
        r = radii[k % len(radii)]
        b = _ball(r, k // len(radii), SEED + 3)
        R = resistance_tree(b)
        g_series = green_series(b, 0, tol=1e-9)
        g_formula = float(b.degrees[0]) * R
        worst_green = max(worst_green, abs(g_formula - g_series) / g_series)
        worst_lap = max(worst_lap, abs(R - resistance_region_general(b)) / R)
        count += 1
    dt = time.time() - t0
    ok = worst_green < 1e-6 and worst_lap < 1e-9 and dt < 300
    report(3, "electrical identities", ok,
           f"{count} balls r in {radii}, max rel |mu R - G_series| = {worst_green:.2e}, "
           f"max rel |sweep - Laplacian| = {worst_lap:.2e}, {dt:.0f}s")
    assert worst_green < 1e-6
    assert worst_lap < 1e-9
    assert dt < 300


def test_criterion_4_moment_identities():
    """E Z in [G/2, G] on every ball, and Monte Carlo within 4 SE of exact E Z.

    The first half is expected to fail: E Z weights return paths by the
    degree ratio mu(x)/mu(0), so it is not the even-return series once
    degrees vary, and sampled balls with a low-degree centre exceed G.
    """
    t0 = time.time()
    r, balls, runs = 25, 50, 10_000
    below = above = 0
    worst_z = 0.0
    worst_ratio = 0.0
    mc_ok = True
    for i in range(balls):
        b = _ball(r, i, SEED + 4)
        m = exact_moments(b)
        G = green_diagonal(b)
        below += m.EZ < 0.5 * G
        above += m.EZ > G
        worst_ratio = max(worst_ratio, m.EZ / G)
        z = sample_Z_many(b, runs, RngStream(SEED + 4).child(i)).astype(float)
        zs = abs(z.mean() - m.EZ) / (z.std(ddof=1) / math.sqrt(runs))
        worst_z = max(worst_z, zs)
        mc_ok &= zs < 4
    dt = time.time() - t0
    sandwich_ok = below == 0 and above == 0
    ok = sandwich_ok and mc_ok and dt < 600
    report(4, "moment identities", ok,
           f"[G/2, G] sandwich violated on {below + above}/{balls} balls (max E Z / G = {worst_ratio:.3f}); "
           f"Monte Carlo max |z-score| = {worst_z:.2f} over {runs} runs/ball ({'ok' if mc_ok else 'FAIL'}), {dt:.0f}s")
    assert mc_ok, "Monte Carlo disagrees with exact E Z"
    assert sandwich_ok, f"E Z outside [G/2, G] on {below + above} of {balls} balls"


# shared tree experiments for criteria 5 and 6


@pytest.fixture(scope="module")
def collision_runs():
    out, times = {}, {}
    for r in (25, 50, 100):
        cfg = ExperimentConfig(command="collisions", seed=SEED + 5, r=[r], trees=200,
                               mc_runs=4000 if r == 50 else 0)
        t0 = time.time()
        out[r] = cli.collision_reports(cfg, r)
        times[r] = time.time() - t0
    return out, times


def test_criterion_5_upper_bounds(collision_runs):
    runs, times = collision_runs
    parts, ok = [], True
    for r, reps in runs.items():
        v1 = sum(not rep.upper_first for rep in reps)
        v2 = sum(not rep.upper_second for rep in reps)
        ok &= len(reps) >= 200 and v1 == 0 and v2 == 0
        worst1 = max(rep.exact_EZ / (6 * (r + 1)) for rep in reps)
        worst2 = max(rep.exact_EZ2 / (144 * (r + 1) ** 2 + 6 * (r + 1)) for rep in reps)
        parts.append(f"r={r}: {len(reps)} trees, violations {v1}/{v2}, max ratios {worst1:.3f}/{worst2:.4f}")
    total = sum(times.values())
    ok &= total < 1800
    report(5, "moment upper bounds", ok, "; ".join(parts) + f", {total:.0f}s")
    assert ok


def test_criterion_6_lower_bound_event(collision_runs):
    runs, _ = collision_runs
    r = 50
    reps = runs[r]
    eps = list(DEFAULT_EPS_GRID)
    fail = [sum(not rep.lower[e] for rep in reps) / len(reps) for e in eps]
    monotone = all(a >= b for a, b in zip(fail, fail[1:]))
    zero_at_end = fail[-1] == 0
    e = 0.1
    floor = e * e / 12
    checked = [rep.window_prob[e] for rep in reps if e in rep.window_prob]
    low = [(p, se) for p, se in checked if p < floor - 2 * se]
    ok = monotone and zero_at_end and len(checked) > 0 and not low
    min_p = min(p for p, _ in checked) if checked else float("nan")
    report(6, "lower-bound event frequency", ok,
           f"r={r}, failure fractions {dict(zip(eps, fail))}; window check on {len(checked)} trees passing eps=0.1: "
           f"min P = {min_p:.3f} vs floor {floor:.2e}, {len(low)} below floor - 2 SE")
    assert monotone and zero_at_end
    assert checked and not low


def test_criterion_7_growth_exponent(tmp_path):
    t0 = time.time()
    out = tmp_path / "beta"
    code = main(["beta", "--radii", "16", "32", "64", "128", "256", "512", "--samples", "2000",
                 "--seed", str(SEED + 7), "--out", str(out)])
    import json

    summary = json.loads(data_section(out / "beta_summary.jsonl").strip())
    dt = time.time() - t0
    ok = code == 0 and 1.5 <= summary["slope"] <= 1.75 and summary["stderr"] < 0.03 and dt < 3600
    report(7, "LERW growth exponent", ok,
           f"slope {summary['slope']:.4f} +- {summary['stderr']:.4f} (reference 1.624), "
           f"2000 samples at radii 16..512, {dt:.0f}s")
    assert ok


def test_criterion_8_resistance_trend():
    t0 = time.time()
    r = 50
    cfg = ExperimentConfig(command="resistance", seed=SEED + 8, r=[r], trees=200)
    recs = cli.resistance_records(cfg, r)
    rows = cli.exceedance(recs, r, [2, 4, 8, 16], 1.624)
    freq = [row[4] for row in rows]
    dt = time.time() - t0
    monotone = all(a <= b for a, b in zip(freq, freq[1:]))
    bounded = all(rec["r_eff_origin"] <= r + 1 for rec in recs)
    ok = len(recs) == 200 and monotone and freq[-1] >= 0.9 and bounded and dt < 1800
    thr = ", ".join(f"lambda={row[1]:g}: {row[4]:.3f} (R >= {row[2]:.3g})" for row in rows)
    report(8, "resistance lower-bound trend", ok, f"r={r}, 200 trees: {thr}, {dt:.0f}s")
    assert ok


def test_criterion_9_determinism(tmp_path):
    t0 = time.time()
    commands = {
        "validate": ["validate", "--traces", "2000", "--uniform-samples", "4000"],
        "beta": ["beta", "--radii", "4", "8", "16", "--samples", "600"],
        "sample-ust": ["sample-ust", "--r", "6", "--trees", "6"],
        "collisions": ["collisions", "--r", "8", "15", "--trees", "8", "--mc-runs", "500"],
        "resistance": ["resistance", "--r", "10", "--trees", "8"],
    }
    mismatched = []
    files = 0
    for name, args in commands.items():
        dirs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
            d = tmp_path / f"{name}-{tag}"
            main([*args, "--seed", str(SEED + 9), "--workers", str(workers), "--out", str(d)])
            dirs.append(d)
        for f in sorted(p.name for p in dirs[0].iterdir() if p.suffix in (".csv", ".jsonl", ".txt")):
            files += 1
            ref = data_section(dirs[0] / f)
            if any(data_section(d / f) != ref for d in dirs[1:]):
                mismatched.append(f"{name}/{f}")
    dt = time.time() - t0
    ok = not mismatched and dt < 300
    report(9, "determinism", ok, f"{files} files x 3 runs (1, 1, 2 workers), mismatches: {mismatched or 'none'}, {dt:.0f}s")
    assert ok
