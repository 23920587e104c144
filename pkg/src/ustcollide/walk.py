"""Simple random walk on Z^3, chronological loop erasure and LERW lengths."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .lattice import DIRECTIONS, LatticePath, LatticePoint
from .rng import RngStream, as_generator

log = logging.getLogger(__name__)

DEFAULT_STEP_BUDGET = 10**10


class StepBudgetExceeded(RuntimeError):
    """A walk ran longer than its configured step budget."""


class InvalidConfiguration(ValueError):
    pass


def srw_until(
    start,
    stop: Callable[[LatticePoint], bool],
    rng,
    budget: int = DEFAULT_STEP_BUDGET,
) -> LatticePath:
    """Run a simple random walk from ``start`` until ``stop`` holds.

    The returned path ends at the first vertex satisfying ``stop``; if the
    start already satisfies it the path has length 0.
    """
    gen = as_generator(rng)
    cur = LatticePoint(*map(int, start))
    trace = [cur]
    steps = 0
    while not stop(cur):
        block = gen.random(4096)
        for u in block:
            if steps >= budget:
                raise StepBudgetExceeded(f"walk exceeded {budget} steps")
            d = DIRECTIONS[int(u * 6.0)]
            cur = LatticePoint(cur.x + int(d[0]), cur.y + int(d[1]), cur.z + int(d[2]))
            trace.append(cur)
            steps += 1
            if stop(cur):
                break
    return LatticePath(tuple(trace))


def exits_ball(radius: float, center=(0, 0, 0)) -> Callable[[LatticePoint], bool]:
    r2 = radius * radius

    def stop(p) -> bool:
        return (p[0] - center[0]) ** 2 + (p[1] - center[1]) ** 2 + (p[2] - center[2]) ** 2 > r2

    return stop


def loop_erase(path) -> LatticePath:
    """Chronological loop erasure.

    Walks the trace once, keeping the current erased path on a stack and the
    stack position of every vertex on it; revisiting a stacked vertex pops
    the loop closed by that visit.
    """
    verts = path.vertices if isinstance(path, LatticePath) else tuple(map(tuple, path))
    stack: list = []
    where: dict = {}
    for v in verts:
        i = where.get(v)
        if i is None:
            where[v] = len(stack)
            stack.append(v)
        else:
            for w in stack[i + 1 :]:
                del where[w]
            del stack[i + 1 :]
    return LatticePath(tuple(stack))


def loop_erase_naive(path) -> LatticePath:
    """Loop erasure by the last-visit recursion, straight from the definition.

    T(0) is the last visit to the start; T(i) is the last visit to the
    vertex following T(i-1).  Shares no code with ``loop_erase``; kept as
    an independent oracle.
    """
    verts = path.vertices if isinstance(path, LatticePath) else tuple(map(tuple, path))
    k = len(verts) - 1
    last: dict = {}
    for j, v in enumerate(verts):
        last[v] = j           # overwritten until it holds sup{j : verts[j] = v}

    def last_visit(v):
        return last[v]

    t = last_visit(verts[0])
    out = [verts[t]]
    while t != k:
        t = last_visit(verts[t + 1])
        out.append(verts[t])
    return LatticePath(tuple(out))


# ---------------------------------------------------------------------------
# Fast LERW lengths
#
# Sites are packed into int64 keys and kept in an open-addressing table that
# maps a site to its position on the current erased path.  Entries are never
# deleted: an entry (key, i) is live only while i < len(path) and
# path[i] == key, so popping a loop is just truncating the path.

_OFF = 1 << 20


@numba.njit(cache=True, inline="always")
def _key(x, y, z):
    return ((x + _OFF) << 42) | ((y + _OFF) << 21) | (z + _OFF)


@numba.njit(cache=True, inline="always")
def _slot(key, mask):
    h = (key * np.int64(-7046029254386353131)) & np.int64(0x7FFFFFFFFFFFFFFF)
    return (h >> 17) & mask


@numba.njit(cache=True)
def _lerw_exit_length(gen, radius, budget, keys, vals, stamp, cur_stamp, path):
    """Loop-erased length of an SRW from 0 stopped on leaving B(0, radius)."""
    mask = keys.shape[0] - 1
    r2 = radius * radius
    x = 0
    y = 0
    z = 0
    plen = 0
    steps = 0
    k0 = _key(0, 0, 0)
    s = _slot(k0, mask)
    keys[s] = k0
    vals[s] = 0
    stamp[s] = cur_stamp
    path[0] = k0
    plen = 1
    while x * x + y * y + z * z <= r2:
        if steps >= budget:
            return -1, steps
        d = int(gen.random() * 6.0)
        if d == 0:
            x += 1
        elif d == 1:
            x -= 1
        elif d == 2:
            y += 1
        elif d == 3:
            y -= 1
        elif d == 4:
            z += 1
        else:
            z -= 1
        steps += 1
        k = _key(x, y, z)
        s = _slot(k, mask)
        found = -1
        while stamp[s] == cur_stamp:
            if keys[s] == k:
                found = s
                break
            s = (s + 1) & mask
        if found >= 0:
            i = vals[found]
            if i < plen and path[i] == k:
                plen = i + 1
                continue
            vals[found] = plen
        else:
            keys[s] = k
            vals[s] = plen
            stamp[s] = cur_stamp
        if plen >= path.shape[0]:
            return -2, steps
        path[plen] = k
        plen += 1
    return plen - 1, steps


@dataclass(frozen=True)
class LerwSample:
    n: int
    length: int
    walk_steps: int


class _LerwWorkspace:
    def __init__(self, log2_size: int = 21, max_path: int = 1 << 22):
        size = 1 << log2_size
        self.keys = np.zeros(size, dtype=np.int64)
        self.vals = np.zeros(size, dtype=np.int64)
        self.stamp = np.zeros(size, dtype=np.int64)
        self.path = np.zeros(max_path, dtype=np.int64)
        self.counter = 0

    def run(self, gen, n: int, budget: int) -> LerwSample:
        self.counter += 1
        length, steps = _lerw_exit_length(
            gen, n, budget, self.keys, self.vals, self.stamp, self.counter, self.path
        )
        if length == -1:
            raise StepBudgetExceeded(f"LERW at radius {n} exceeded {budget} steps")
        if length == -2:
            raise MemoryError("erased path outgrew its buffer")
        return LerwSample(n=n, length=int(length), walk_steps=int(steps))


def _workspace_for(n: int) -> _LerwWorkspace:
    # distinct sites visited before exit ~ n^2; keep the table at most half full
    need = max(1 << 12, int(4 * (n + 2) ** 2 * 2))
    return _LerwWorkspace(log2_size=max(12, math.ceil(math.log2(need))))


def lerw_length_sample(n: int, rng, budget: int = DEFAULT_STEP_BUDGET) -> LerwSample:
    """Length M_n of the loop erasure of an SRW from 0 run until it leaves B(0, n)."""
    if n < 1:
        raise InvalidConfiguration("radius must be at least 1")
    return _workspace_for(n).run(as_generator(rng), n, budget)


def lerw_lengths(n: int, count: int, rng: RngStream, budget: int = DEFAULT_STEP_BUDGET,
                 start: int = 0) -> np.ndarray:
    """M_n for samples ``start .. start + count - 1``; sample i uses stream ``rng.child(i)``."""
    if n < 1:
        raise InvalidConfiguration("radius must be at least 1")
    ws = _workspace_for(n)
    out = np.empty(count, dtype=np.int64)
    for k in range(count):
        out[k] = ws.run(rng.child(start + k).generator(), n, budget).length
    return out


@dataclass
class BetaEstimate:
    slope: float
    stderr: float
    intercept: float
    radii: list[int]
    means: list[float]
    ci_low: list[float]
    ci_high: list[float]
    samples_per_radius: int
    reference: float = 1.624
    raw: dict = field(default_factory=dict, repr=False)


def fit_growth_exponent(radii: Sequence[float], means: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope of log(mean) on log(radius) with its standard error."""
    lx = np.log(np.asarray(radii, dtype=float))
    ly = np.log(np.asarray(means, dtype=float))
    if len(lx) < 3:
        raise InvalidConfiguration("need at least three radii")
    X = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    dof = len(lx) - 2
    s2 = float(resid @ resid) / dof
    sxx = float(((lx - lx.mean()) ** 2).sum())
    return float(coef[1]), math.sqrt(s2 / sxx), float(coef[0])


def check_radii(radii: Sequence[int], samples_per_radius: int) -> None:
    rs = sorted(set(int(r) for r in radii))
    if len(rs) < 3:
        raise InvalidConfiguration("need at least three distinct radii")
    if rs[0] < 1 or rs[-1] < 4 * rs[0]:
        raise InvalidConfiguration("radii must span at least two octaves")
    if samples_per_radius < 100:
        raise InvalidConfiguration("need at least 100 samples per radius")


def estimate_beta(
    radii: Sequence[int],
    samples_per_radius: int,
    rng: RngStream,
    budget: int = DEFAULT_STEP_BUDGET,
) -> BetaEstimate:
    """Fit the LERW growth exponent from sample means of M_n.

    Radius ``radii[j]`` draws its samples from ``rng.child(j)``.
    """
    check_radii(radii, samples_per_radius)
    radii = [int(r) for r in radii]
    means, lo, hi, raw = [], [], [], {}
    for j, n in enumerate(radii):
        m = lerw_lengths(n, samples_per_radius, rng.child(j), budget)
        mu = float(m.mean())
        se = float(m.std(ddof=1)) / math.sqrt(len(m))
        means.append(mu)
        lo.append(mu - 1.96 * se)
        hi.append(mu + 1.96 * se)
        raw[n] = m
        log.info("radius %d: mean M_n = %.2f +- %.2f", n, mu, se)
    slope, stderr, icept = fit_growth_exponent(radii, means)
    return BetaEstimate(slope, stderr, icept, radii, means, lo, hi, samples_per_radius, raw=raw)


def fit_tail_rate(samples: np.ndarray, kappas: Sequence[float] = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0)):
    """Empirical exponential tail rate of P(M >= kappa * mean M).

    Returns (c, kappas, frequencies) where c is the least-squares decay rate
    of log P against kappa over the kappas with nonzero frequency.
    """
    m = np.asarray(samples, dtype=float)
    mean = m.mean()
    ks = np.asarray(kappas, dtype=float)
    freq = np.array([(m >= k * mean).mean() for k in ks])
    ok = freq > 0
    if ok.sum() < 2:
        return float("inf"), ks, freq
    slope = np.polyfit(ks[ok], np.log(freq[ok]), 1)[0]
    return float(-slope), ks, freq
