"""Command-line harness: validation oracles and the experiments.

Subcommands ``validate | beta | sample-ust | collisions | resistance``.  Every
random task is addressed by an index into a derived stream, so the data
written does not depend on ``--workers``.  Output files start with a block of
``#`` header lines (version, seed, config, timestamp) followed by the data.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .collision import DEFAULT_EPS_GRID, exact_moments, moment_report, sample_Z_many, summarize
from .lattice import DIRECTIONS, LatticePath
from .network import (
    green_diagonal,
    green_series,
    resistance_profile,
    resistance_region_general,
    resistance_threshold,
    resistance_tree,
)
from .rng import RngStream
from .treemetrics import IntrinsicBall, TruncationError, intrinsic_ball
from .walk import InvalidConfiguration, check_radii, fit_growth_exponent, lerw_lengths, loop_erase, loop_erase_naive
from .wilson import (
    LatticeWilson,
    WilsonConfig,
    spanning_tree_count,
    tree_edges,
    wilson_graph,
    wilson_infinity_approx,
)

log = logging.getLogger("ustcollide")

WORKERS_ENV = "USTCOLLIDE_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentConfig:
    command: str = "validate"
    seed: int = 0
    workers: int = 1
    container_factor: float = 4.0
    out: str = "results"
    plot: bool = False
    # validate
    validate_traces: int = 20000
    validate_max_len: int = 200
    validate_exhaustive_len: int = 5
    validate_uniform_samples: int = 20000
    validate_trees: int = 20
    validate_radius: int = 8
    corrupt_loop_erase: bool = False
    # beta
    radii: list = field(default_factory=lambda: [16, 32, 64, 128, 256, 512])
    samples: int = 2000
    chunk: int = 250
    # sample-ust / collisions / resistance
    r: list = field(default_factory=lambda: [25])
    trees: int = 200
    order: str = "intrinsic"
    mc_runs: int = 0
    eps: list = field(default_factory=lambda: list(DEFAULT_EPS_GRID))
    method: str = "auto"
    lambdas: list = field(default_factory=lambda: [2, 4, 8, 16])
    beta: float = 1.624

    def data_config(self) -> dict:
        """The fields that determine the data (everything but throughput and paths)."""
        d = asdict(self)
        for k in ("workers", "out", "plot"):
            d.pop(k)
        return d


_LIST_FIELDS = {f.name for f in fields(ExperimentConfig) if f.type == "list"}


def _coerce(name: str, value):
    proto = ExperimentConfig()
    cur = getattr(proto, name)
    if name in _LIST_FIELDS:
        if isinstance(value, str):
            value = [v for v in value.replace(",", " ").split() if v]
        if not isinstance(value, (list, tuple)):
            value = [value]
        elem = type(cur[0]) if cur else float
        return [elem(v) for v in value]
    if isinstance(cur, bool):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    return type(cur)(value)


def load_config_file(path) -> dict:
    """JSON object, or ``key = value`` lines (``#`` comments allowed)."""
    text = Path(path).read_text()
    stripped = text.strip()
    if stripped.startswith("{"):
        raw = json.loads(stripped)
    else:
        raw = {}
        for ln in text.splitlines():
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if "=" not in ln:
                raise InvalidConfiguration(f"bad config line: {ln!r}")
            k, v = (s.strip() for s in ln.split("=", 1))
            try:
                raw[k] = json.loads(v)
            except json.JSONDecodeError:
                raw[k] = v
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    for k, v in raw.items():
        k = k.replace("-", "_")
        if k not in known:
            raise InvalidConfiguration(f"unknown config key {k!r}")
        out[k] = _coerce(k, v)
    return out


def resolve_config(command: str, file_values: dict, cli_values: dict) -> ExperimentConfig:
    """Defaults, then the config file, then explicit command-line flags."""
    cfg = ExperimentConfig(command=command, workers=default_workers())
    for src in (file_values, cli_values):
        for k, v in src.items():
            if v is None or k == "command":
                continue
            setattr(cfg, k, _coerce(k, v))
    if cfg.workers < 1:
        raise InvalidConfiguration("workers must be positive")
    if cfg.seed < 0:
        raise InvalidConfiguration("seed must be nonnegative")
    return cfg


# ---------------------------------------------------------------------------
# output


def header_lines(cfg: ExperimentConfig, timestamp: str | None = None) -> list[str]:
    ts = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    return [
        f"# ustcollide {__version__}",
        f"# seed: {cfg.seed}",
        "# config: " + json.dumps(asdict(cfg), sort_keys=True),
        f"# timestamp: {ts}",
    ]


def data_section(path) -> str:
    """File contents with the header block removed."""
    lines = Path(path).read_text().splitlines(keepends=True)
    return "".join(ln for ln in lines if not ln.startswith("#"))


class Writer:
    """Single writer for one run; every file gets the same header block."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.header = header_lines(cfg)
        self.written: list[Path] = []

    def _open(self, name: str):
        p = self.dir / name
        self.written.append(p)
        fh = open(p, "w", newline="")
        fh.write("\n".join(self.header) + "\n")
        return fh

    def jsonl(self, name: str, records: Sequence[dict]) -> Path:
        with self._open(name) as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return self.written[-1]

    def csv(self, name: str, columns: Sequence[str], rows: Sequence[Sequence]) -> Path:
        with self._open(name) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return self.written[-1]

    def text(self, name: str, body: str) -> Path:
        with self._open(name) as fh:
            fh.write(body)
        return self.written[-1]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# task execution


def run_tasks(fn: Callable, tasks: Sequence, workers: int) -> list:
    """Map ``fn`` over ``tasks`` in order; results are collected in task order."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


_SAMPLERS: dict = {}


def _sampler(radius: int) -> LatticeWilson:
    # one reusable lattice state per process and container size
    s = _SAMPLERS.get(radius)
    if s is None:
        _SAMPLERS.clear()
        s = _SAMPLERS[radius] = LatticeWilson(radius)
    return s


def radius_stream(seed: int, r: int) -> RngStream:
    """Stream for all trees at radius r; keyed by r so adding radii changes nothing."""
    return RngStream(seed).child(int(r))


def sample_tree(r: int, i: int, seed: int, container_factor: float, order: str = "intrinsic",
                cover_component: bool = False):
    wcfg = WilsonConfig(region_radius=int(r), container_factor=container_factor, order=order,
                        cover_component=cover_component)
    stream = radius_stream(seed, r).child(i)
    meta = {"seed": seed, "r": int(r), "tree_index": int(i)}
    return wilson_infinity_approx(wcfg, stream, sampler=_sampler(wcfg.container_radius), meta=meta)


# ---------------------------------------------------------------------------
# validate


def corrupted_loop_erase(path) -> LatticePath:
    """Negative control: only erases immediate back-steps, missing longer loops."""
    verts = path.vertices if isinstance(path, LatticePath) else tuple(map(tuple, path))
    out: list = []
    for v in verts:
        if len(out) >= 2 and out[-2] == v:
            out.pop()
        elif not out or out[-1] != v:
            out.append(v)
    return LatticePath(tuple(out))


@dataclass
class CheckResult:
    check: str
    passed: bool
    detail: dict

    def to_dict(self) -> dict:
        return {"check": self.check, "passed": bool(self.passed), "detail": self.detail}


def random_traces(count: int, max_len: int, rng: RngStream):
    """SRW traces from the origin with lengths uniform on 0..max_len."""
    g = rng.generator()
    lens = g.integers(0, max_len + 1, size=count)
    for n in lens:
        steps = DIRECTIONS[g.integers(0, 6, size=int(n))]
        pts = np.vstack([np.zeros((1, 3), dtype=np.int64), np.cumsum(steps, axis=0)])
        yield LatticePath.from_array(pts)


def exhaustive_paths(max_len: int):
    """Every nearest-neighbour path from the origin with at most ``max_len`` steps."""
    for n in range(max_len + 1):
        for seq in itertools.product(range(6), repeat=n):
            steps = DIRECTIONS[list(seq)].reshape(-1, 3)
            pts = np.vstack([np.zeros((1, 3), dtype=np.int64), np.cumsum(steps, axis=0)])
            yield LatticePath.from_array(pts)


def check_loop_erasure(cfg: ExperimentConfig, impl=None) -> CheckResult:
    impl = impl or (corrupted_loop_erase if cfg.corrupt_loop_erase else loop_erase)
    rng = RngStream(cfg.seed).child(101)
    n = bad = 0
    first_bad = None
    for path in itertools.chain(random_traces(cfg.validate_traces, cfg.validate_max_len, rng),
                                exhaustive_paths(cfg.validate_exhaustive_len)):
        n += 1
        a, b = impl(path), loop_erase_naive(path)
        if a != b:
            bad += 1
            if first_bad is None:
                first_bad = [list(v) for v in path.vertices]
    return CheckResult("loop_erasure_oracle", bad == 0,
                       {"paths": n, "mismatches": bad, "first_mismatch": first_bad})


CYCLE4 = [[1, 3], [0, 2], [1, 3], [2, 0]]
K4 = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]


def uniformity_counts(adj, samples: int, rng: RngStream) -> dict:
    """Frequencies of each spanning tree produced by Wilson's algorithm rooted at 0."""
    g = rng.generator()
    counts: dict = {}
    for _ in range(samples):
        key = tree_edges(wilson_graph(adj, 0, g))
        counts[key] = counts.get(key, 0) + 1
    return counts


def check_uniformity(name: str, adj, expected: int, cfg: ExperimentConfig, stream: int) -> CheckResult:
    n = cfg.validate_uniform_samples
    det = spanning_tree_count(adj)
    counts = uniformity_counts(adj, n, RngStream(cfg.seed).child(stream))
    obs = np.array(sorted(counts.values()), dtype=float)
    full = np.zeros(max(expected, len(obs)))
    full[: len(obs)] = obs
    chi2, p = stats.chisquare(full)
    freq = obs / n
    dev = float(np.max(np.abs(freq - 1.0 / expected))) if len(obs) == expected else 1.0
    # the +-0.01 band is the large-sample criterion; small runs get a 5 sigma band
    band = max(0.01, 5 * math.sqrt((1 / expected) * (1 - 1 / expected) / n))
    ok = det == expected and len(counts) == expected and dev <= band and p > 1e-3
    return CheckResult(f"uniformity_{name}", ok, {"matrix_tree_count": det, "distinct_trees": len(counts),
                                                  "samples": n, "max_freq_deviation": dev, "band": band,
                                                  "chi2": float(chi2), "p_value": float(p)})


def _validation_balls(cfg: ExperimentConfig) -> list[IntrinsicBall]:
    r = cfg.validate_radius
    out = []
    for i in range(cfg.validate_trees):
        tree = sample_tree(r, i, cfg.seed, cfg.container_factor)
        out.append(intrinsic_ball(tree, (0, 0, 0), r))
    return out


def check_resistance(balls) -> CheckResult:
    worst = 0.0
    for b in balls:
        a, c = resistance_tree(b), resistance_region_general(b)
        worst = max(worst, abs(a - c) / c)
    return CheckResult("laplacian_vs_tree_sweep", worst < 1e-9, {"balls": len(balls), "max_rel_diff": worst})


def check_green(balls) -> CheckResult:
    worst = 0.0
    for b in balls:
        g = green_series(b, 0, tol=1e-12)
        worst = max(worst, abs(green_diagonal(b, 0) - g) / g)
    return CheckResult("green_degree_times_resistance", worst < 1e-6, {"balls": len(balls), "max_rel_diff": worst})


def check_line_tree() -> CheckResult:
    line = IntrinsicBall.from_structure([-1, 0, 0], [1, 2])
    single = IntrinsicBall.from_structure([-1], [0, 0])
    a = exact_moments(line, method="iterate", tol=1e-13)
    b = exact_moments(line, method="resolvent")
    s = exact_moments(single, method="iterate")
    ok = (abs(a.EZ - 2) < 1e-9 and abs(b.EZ - 2) < 1e-9 and abs(a.EZ2 - 16 / 3) < 1e-9
          and abs(b.EZ2 - 16 / 3) < 1e-9 and s.EZ == 1.0 and s.EZ2 == 1.0)
    return CheckResult("line_tree_moments", ok, {"EZ_iterate": a.EZ, "EZ_resolvent": b.EZ,
                                                 "EZ2_iterate": a.EZ2, "EZ2_resolvent": b.EZ2,
                                                 "single_EZ": s.EZ, "single_EZ2": s.EZ2})


def check_moment_routes(balls, cfg: ExperimentConfig) -> CheckResult:
    """Iteration and resolvent quadrature agree; Monte Carlo agrees with both."""
    worst = 0.0
    worst_z = 0.0
    rng = RngStream(cfg.seed).child(103)
    for i, b in enumerate(balls[:5]):
        a = exact_moments(b, method="iterate", tol=1e-12)
        c = exact_moments(b, method="resolvent")
        worst = max(worst, abs(a.EZ - c.EZ) / c.EZ, abs(a.EZ2 - c.EZ2) / c.EZ2)
        z = sample_Z_many(b, 4000, rng.child(i)).astype(float)
        worst_z = max(worst_z, abs(z.mean() - c.EZ) / (z.std(ddof=1) / math.sqrt(len(z))))
    return CheckResult("moment_routes_agree", worst < 1e-7 and worst_z < 4.5,
                       {"max_rel_diff": worst, "max_mc_z_score": worst_z})


def check_determinism(cfg: ExperimentConfig) -> CheckResult:
    a = sample_tree(cfg.validate_radius, 0, cfg.seed, cfg.container_factor).dumps()
    b = sample_tree(cfg.validate_radius, 0, cfg.seed, cfg.container_factor).dumps()
    return CheckResult("sampler_determinism", a == b, {"bytes": len(a)})


def cmd_validate(cfg: ExperimentConfig) -> int:
    balls = _validation_balls(cfg)
    results = [
        check_loop_erasure(cfg),
        check_uniformity("4cycle", CYCLE4, 4, cfg, 201),
        check_uniformity("K4", K4, 16, cfg, 202),
        check_resistance(balls),
        check_green(balls),
        check_line_tree(),
        check_moment_routes(balls, cfg),
        check_determinism(cfg),
    ]
    failed = [r.check for r in results if not r.passed]
    w = Writer(cfg)
    recs = [r.to_dict() for r in results]
    recs.append({"summary": {"checks": len(results), "failed": failed, "passed": not failed}})
    w.jsonl("validate.jsonl", recs)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# beta


def _beta_task(task):
    seed, j, n, start, count = task
    return lerw_lengths(n, count, RngStream(seed).child(j), start=start)


def cmd_beta(cfg: ExperimentConfig) -> int:
    radii = [int(r) for r in cfg.radii]
    check_radii(radii, cfg.samples)
    tasks = [(cfg.seed, j, n, s, min(cfg.chunk, cfg.samples - s))
             for j, n in enumerate(radii) for s in range(0, cfg.samples, cfg.chunk)]
    parts = run_tasks(_beta_task, tasks, cfg.workers)
    per = {n: [] for n in radii}
    for (_, _, n, _, _), arr in zip(tasks, parts):
        per[n].append(arr)
    rows, means = [], []
    for n in radii:
        m = np.concatenate(per[n])
        mu = float(m.mean())
        se = float(m.std(ddof=1) / math.sqrt(len(m)))
        means.append(mu)
        rows.append([n, len(m), mu, se, mu - 1.96 * se, mu + 1.96 * se])
    slope, stderr, icept = fit_growth_exponent(radii, means)
    w = Writer(cfg)
    w.csv("beta.csv", ["radius", "samples", "mean_M", "se", "ci_low", "ci_high"], rows)
    summary = {"slope": slope, "stderr": stderr, "intercept": icept, "reference": 1.624,
               "slope_in_range": 1.5 <= slope <= 1.75, "radii": radii, "samples_per_radius": cfg.samples}
    w.jsonl("beta_summary.jsonl", [summary])
    w.jsonl("beta_samples.jsonl", [{"radius": n, "M": np.concatenate(per[n]).tolist()} for n in radii])
    print(f"slope {slope:.4f} +- {stderr:.4f} (reference 1.624)")
    if cfg.plot:
        _plot_beta(cfg, radii, means, slope, icept)
    return 0


# ---------------------------------------------------------------------------
# sample-ust


def _sample_task(task):
    seed, r, i, factor, order, outdir = task
    tree = sample_tree(r, i, seed, factor, order)
    tree.check()
    name = f"ust_r{r}_{i:05d}.txt"
    tree.save(Path(outdir) / name)
    try:
        ball = intrinsic_ball(tree, (0, 0, 0), r)
        size, deg0 = len(ball), int(ball.degrees[0])
    except TruncationError:
        # spiral order covers B(0, r) only, so boundary degrees may be unknown
        size, deg0 = "", ""
    return [r, i, name, len(tree), size, deg0, int(tree.complete.sum())]


def cmd_sample_ust(cfg: ExperimentConfig) -> int:
    w = Writer(cfg)
    tasks = [(cfg.seed, int(r), i, cfg.container_factor, cfg.order, str(w.dir))
             for r in cfg.r for i in range(cfg.trees)]
    rows = run_tasks(_sample_task, tasks, cfg.workers)
    w.csv("trees.csv", ["r", "tree_index", "file", "vertices", "ball_size", "degree_origin", "complete"], rows)
    print(f"wrote {len(rows)} trees to {w.dir}")
    return 0


# ---------------------------------------------------------------------------
# collisions


def _collision_task(task):
    seed, r, i, factor, eps, mc_runs, method = task
    tree = sample_tree(r, i, seed, factor)
    ball = intrinsic_ball(tree, (0, 0, 0), r)
    s = radius_stream(seed, r).child(i)
    return moment_report(ball, r, eps, mc_runs, s.child(1 << 32), i, s.seed, method)


def collision_reports(cfg: ExperimentConfig, r: int):
    tasks = [(cfg.seed, int(r), i, cfg.container_factor, list(cfg.eps), cfg.mc_runs, cfg.method)
             for i in range(cfg.trees)]
    return run_tasks(_collision_task, tasks, cfg.workers)


def cmd_collisions(cfg: ExperimentConfig) -> int:
    if cfg.trees <= 0:
        log.warning("no trees requested; nothing to do")
        return 0
    w = Writer(cfg)
    all_reports, summaries, rows = [], [], []
    eps = [float(e) for e in cfg.eps]
    for r in cfg.r:
        reps = collision_reports(cfg, r)
        all_reports += reps
        summaries.append(summarize(reps, int(r), eps).to_dict())
        for rep in reps:
            rows.append([rep.r, rep.tree_index, rep.tree_seed, rep.ball_size, rep.exact_EZ, rep.exact_EZ2,
                         rep.green_origin, rep.r_eff, int(rep.upper_first), int(rep.upper_second),
                         int(rep.upper_first_r), int(rep.upper_second_r), int(rep.sandwich_green),
                         int(rep.sandwich_resistance), int(rep.second_green), int(rep.second_resistance)]
                        + [int(rep.lower[e]) for e in eps])
    w.jsonl("collisions.jsonl", [rep.to_dict() for rep in all_reports])
    w.csv("collisions.csv", ["r", "tree_index", "tree_seed", "ball_size", "EZ_exact", "EZ2_exact", "G00", "Reff",
                             "upper_first", "upper_second", "upper_first_r", "upper_second_r",
                             "sandwich_green", "sandwich_resistance", "second_green",
                             "second_resistance"] + [f"lower_eps_{e}" for e in eps], rows)
    w.jsonl("collisions_summary.jsonl", summaries)
    for s in summaries:
        print(f"r={s['r']}: trees={s['trees']} upper violations {s['upper_first_violations']}/"
              f"{s['upper_second_violations']}, G-sandwich violations {s['sandwich_green_violations']}, "
              f"resistance-sandwich violations {s['sandwich_resistance_violations']}")
    if cfg.plot:
        _plot_eps(cfg, summaries)
    return 0


# ---------------------------------------------------------------------------
# resistance


def _resistance_task(task):
    seed, r, i, factor = task
    tree = sample_tree(r, i, seed, factor, cover_component=True)
    d = resistance_profile(tree, r).to_dict()
    d["tree_index"] = i
    return d


def resistance_records(cfg: ExperimentConfig, r: int) -> list[dict]:
    tasks = [(cfg.seed, int(r), i, cfg.container_factor) for i in range(cfg.trees)]
    return run_tasks(_resistance_task, tasks, cfg.workers)


def exceedance(records: Sequence[dict], r: int, lambdas: Sequence[float], beta: float) -> list[list]:
    rows = []
    for lam in lambdas:
        th = resistance_threshold(r, lam, beta)
        hits = sum(rec["r_eff_Ur"] >= th for rec in records)
        rows.append([int(r), float(lam), th, len(records), hits / len(records) if records else 0.0])
    return rows


def cmd_resistance(cfg: ExperimentConfig) -> int:
    if cfg.trees <= 0:
        log.warning("no trees requested; nothing to do")
        return 0
    w = Writer(cfg)
    recs, rows = [], []
    for r in cfg.r:
        rr = resistance_records(cfg, r)
        recs += rr
        rows += exceedance(rr, int(r), cfg.lambdas, cfg.beta)
    w.jsonl("resistance.jsonl", recs)
    w.csv("resistance.csv", ["r", "lambda", "threshold", "trees", "exceedance"], rows)
    for row in rows:
        print(f"r={row[0]} lambda={row[1]:g}: P(R >= {row[2]:.4g}) = {row[4]:.3f}")
    if cfg.plot:
        _plot_lambda(cfg, rows)
    return 0


# ---------------------------------------------------------------------------
# plots


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _plot_beta(cfg, radii, means, slope, icept):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(radii, means, "o", label="mean $M_n$")
    xs = np.array([radii[0], radii[-1]], dtype=float)
    ax.loglog(xs, np.exp(icept) * xs**slope, "-", label=f"slope {slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("mean LERW length")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(cfg.out) / "beta.png", dpi=120)
    plt.close(fig)


def _plot_eps(cfg, summaries):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    for s in summaries:
        es = sorted(float(e) for e in s["lower_failure_fraction"])
        ax.plot(es, [s["lower_failure_fraction"][str(e)] for e in es], "o-", label=f"r={s['r']}")
    ax.set_xscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("fraction of trees with E Z < epsilon r")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(cfg.out) / "eps_failure.png", dpi=120)
    plt.close(fig)


def _plot_lambda(cfg, rows):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 4))
    for r in sorted({row[0] for row in rows}):
        sel = [row for row in rows if row[0] == r]
        ax.plot([row[1] for row in sel], [row[4] for row in sel], "o-", label=f"r={r}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("lambda")
    ax.set_ylabel("exceedance frequency")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(cfg.out) / "lambda_exceedance.png", dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "validate": cmd_validate,
    "beta": cmd_beta,
    "sample-ust": cmd_sample_ust,
    "collisions": cmd_collisions,
    "resistance": cmd_resistance,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    common.add_argument("--container-factor", dest="container_factor", type=float)
    common.add_argument("--out")
    common.add_argument("--config", help="JSON or key = value file; flags override it")
    common.add_argument("--plot", action="store_true", default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ustcollide", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="run the oracle checks")
    v.add_argument("--traces", dest="validate_traces", type=int)
    v.add_argument("--uniform-samples", dest="validate_uniform_samples", type=int)
    v.add_argument("--corrupt-loop-erase", dest="corrupt_loop_erase", action="store_true", default=None,
                   help="negative control: swap in a broken loop erasure")

    b = sub.add_parser("beta", parents=[common], help="LERW growth exponent")
    b.add_argument("--radii", type=int, nargs="+")
    b.add_argument("--samples", type=int)

    for name, helptext in (("sample-ust", "sample and save trees"),
                           ("collisions", "moment bounds for the collision count"),
                           ("resistance", "resistance lower-bound survey")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--r", type=int, nargs="+")
        s.add_argument("--trees", type=int)
        if name == "sample-ust":
            s.add_argument("--order", choices=["spiral", "intrinsic"])
        if name == "collisions":
            s.add_argument("--mc-runs", dest="mc_runs", type=int)
            s.add_argument("--eps", type=float, nargs="+")
            s.add_argument("--method", choices=["auto", "iterate", "resolvent"])
        if name == "resistance":
            s.add_argument("--lambdas", type=float, nargs="+")
            s.add_argument("--beta", type=float)
    return p


def config_from_args(argv: Sequence[str] | None = None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    ns = vars(args)
    command = ns.pop("command")
    cfg_path = ns.pop("config")
    verbose = ns.pop("verbose")
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    file_values = load_config_file(cfg_path) if cfg_path else {}
    return resolve_config(command, file_values, ns)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
        return COMMANDS[cfg.command](cfg)
    except InvalidConfiguration as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
