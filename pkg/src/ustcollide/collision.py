"""Collisions of two independent walks killed on leaving a ball of the tree.

For walks X, Y started together at the centre, Z_B counts the times n at
which both are alive and X_n = Y_n.  Writing p_n = P^0(X_n = .) and
V(x) = sum_n p_n(x)^2, h(x) = E_{x,x} Z_B, the Markov property gives

    E Z_B   = sum_x V(x)
    E Z_B^2 = E Z_B + 2 sum_x V(x) (h(x) - 1)

(the -1 removes the collision at the common start of the later block).

Two exact routes compute V and h:

* ``iterate``: propagate the substochastic kernel until the live mass is
  below a tolerance; h needs the whole matrix power, so this is for small
  balls and cross-checks.
* ``resolvent``: with S = D^{-1/2} A D^{-1/2} symmetric and P^n(x, y) =
  sqrt(mu_y / mu_x) S^n(x, y), Parseval turns sum_n S^n(x, y)^2 into an
  integral over theta of |(I - e^{i theta} S)^{-1}(x, y)|^2.  On a tree the
  resolvent column and the weighted row sums sum_y mu_y |R(x, y)|^2 come out
  of two O(m) elimination sweeps, and the integrand is pi-periodic and even
  because trees are bipartite, so a quarter period suffices.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.integrate import quad_vec

from .network import green_diagonal, green_diagonal_all, resistance_tree, resistances_all
from .rng import RngStream, as_generator
from .treemetrics import IntrinsicBall, TruncationError, intrinsic_ball

log = logging.getLogger(__name__)

CEMETERY = -1
DEFAULT_EPS_GRID = (0.5, 0.2, 0.1, 0.05, 0.02)
DEFAULT_MEMBER_CAP = 200_000


class BallTooLarge(RuntimeError):
    """Exact moments were requested for a ball above the member cap."""


# ---------------------------------------------------------------------------
# walks on a ball


def ball_adjacency(ball: IntrinsicBall):
    """CSR neighbour lists of the members; exit slots hold CEMETERY.

    Row k has exactly ``ball.degrees[k]`` entries, so a uniform pick from
    the row is one step of the walk on the full tree.
    """
    m = len(ball.members)
    rows: list[list[int]] = [[] for _ in range(m)]
    for k in range(1, m):
        p = int(ball.member_pred[k])
        rows[k].append(p)
        rows[p].append(k)
    for o in ball.exit_owner.tolist():
        rows[o].append(CEMETERY)
    indptr = np.zeros(m + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    nbr = np.array([v for r in rows for v in r], dtype=np.int64)
    if np.any(np.diff(indptr) != ball.degrees):
        raise ValueError("ball degrees disagree with its edges and exits")
    return indptr, nbr


@dataclass(frozen=True)
class KilledWalkState:
    position: int
    step: int = 0

    @property
    def dead(self) -> bool:
        return self.position == CEMETERY


def step_killed_walk(state: KilledWalkState, ball: IntrinsicBall, rng, adjacency=None) -> KilledWalkState:
    """One step of the walk on the tree, killed when it leaves the ball.

    Positions are member positions in ``ball``; CEMETERY is absorbing.
    """
    if state.dead:
        return KilledWalkState(CEMETERY, state.step + 1)
    indptr, nbr = adjacency if adjacency is not None else ball_adjacency(ball)
    gen = as_generator(rng)
    v = state.position
    deg = indptr[v + 1] - indptr[v]
    nxt = int(nbr[indptr[v] + int(gen.random() * deg)])
    return KilledWalkState(nxt, state.step + 1)


@dataclass(frozen=True)
class CollisionSample:
    z: int
    lifetime_x: int
    lifetime_y: int


@numba.njit(cache=True)
def _collide_full(indptr, nbr, gx, gy):
    x = 0
    y = 0
    n = 0
    z = 1
    lx = -1
    ly = -1
    while lx < 0 or ly < 0:
        n += 1
        if lx < 0:
            d = indptr[x + 1] - indptr[x]
            x = nbr[indptr[x] + int(gx.random() * d)]
            if x < 0:
                lx = n
        if ly < 0:
            d = indptr[y + 1] - indptr[y]
            y = nbr[indptr[y] + int(gy.random() * d)]
            if y < 0:
                ly = n
        if x >= 0 and y >= 0 and lx < 0 and ly < 0 and x == y:
            z += 1
    return z, lx, ly


@numba.njit(cache=True)
def _collide_many(indptr, nbr, gx, gy, runs, out):
    # stops each run at the first death: no collision can follow it
    for i in range(runs):
        x = 0
        y = 0
        z = 1
        while True:
            d = indptr[x + 1] - indptr[x]
            x = nbr[indptr[x] + int(gx.random() * d)]
            d = indptr[y + 1] - indptr[y]
            y = nbr[indptr[y] + int(gy.random() * d)]
            if x < 0 or y < 0:
                break
            if x == y:
                z += 1
        out[i] = z


def sample_Z(ball: IntrinsicBall, rng, adjacency=None) -> CollisionSample:
    """Run both walks from the centre until both are dead and count collisions.

    ``rng`` is an RngStream (X uses child 0 and Y child 1) or a pair of
    generators ``(gen_x, gen_y)``.
    """
    gx, gy = _two_generators(rng)
    indptr, nbr = adjacency if adjacency is not None else ball_adjacency(ball)
    z, lx, ly = _collide_full(indptr, nbr, gx, gy)
    return CollisionSample(int(z), int(lx), int(ly))


def _two_generators(rng):
    if isinstance(rng, RngStream):
        return rng.child(0).generator(), rng.child(1).generator()
    if isinstance(rng, tuple) and len(rng) == 2:
        return as_generator(rng[0]), as_generator(rng[1])
    raise TypeError("expected an RngStream or a pair of generators")


def sample_Z_many(ball: IntrinsicBall, runs: int, rng, adjacency=None) -> np.ndarray:
    """``runs`` independent collision counts from the centre."""
    gx, gy = _two_generators(rng)
    indptr, nbr = adjacency if adjacency is not None else ball_adjacency(ball)
    out = np.empty(int(runs), dtype=np.int64)
    _collide_many(indptr, nbr, gx, gy, int(runs), out)
    return out


# ---------------------------------------------------------------------------
# exact moments: substochastic iteration


@numba.njit(cache=True)
def _iterate_V(indptr, nbr, deg, tol, max_steps):
    m = deg.shape[0]
    p = np.zeros(m)
    q = np.zeros(m)
    p[0] = 1.0
    V = np.zeros(m)
    for it in range(max_steps):
        mass = 0.0
        for v in range(m):
            V[v] += p[v] * p[v]
            mass += p[v]
        if mass < tol:
            return V, it
        q[:] = 0.0
        for v in range(m):
            pv = p[v]
            if pv == 0.0:
                continue
            w = pv / deg[v]
            for t in range(indptr[v], indptr[v + 1]):
                u = nbr[t]
                if u >= 0:
                    q[u] += w
        p, q = q, p
    return V, -1


@numba.njit(cache=True)
def _iterate_h(indptr, nbr, deg, tol, max_steps):
    """h(x) = sum_n sum_y P^n(x, y)^2 for all x, by propagating every row."""
    m = deg.shape[0]
    Q = np.eye(m)
    R = np.zeros((m, m))
    h = np.zeros(m)
    for it in range(max_steps):
        worst = 0.0
        for x in range(m):
            s = 0.0
            mass = 0.0
            for y in range(m):
                s += Q[x, y] * Q[x, y]
                mass += Q[x, y]
            h[x] += s
            if mass > worst:
                worst = mass
        if worst < tol:
            return h, it
        R[:, :] = 0.0
        for y in range(m):
            w = 1.0 / deg[y]
            for t in range(indptr[y], indptr[y + 1]):
                u = nbr[t]
                if u >= 0:
                    for x in range(m):
                        R[x, u] += Q[x, y] * w
        Q, R = R, Q
    return h, -1


# ---------------------------------------------------------------------------
# exact moments: resolvent sweeps


@numba.njit(cache=True)
def _resolvent_terms(theta, pred, mu, out):
    """Fill out[:m] with |R(x, 0)|^2 and out[m:] with sum_y mu_y |R(x, y)|^2.

    R = (I - e^{i theta} S)^{-1}.  Elimination runs leaves-to-root for the
    subtree pivots and back down for the complementary ones.
    """
    m = pred.shape[0]
    z2 = complex(math.cos(2.0 * theta), math.sin(2.0 * theta))
    z = complex(math.cos(theta), math.sin(theta))
    pd = np.empty(m, dtype=np.complex128)     # pivot of v's own subtree
    acc = np.zeros(m, dtype=np.complex128)
    s2 = np.empty(m)                         # S(v, pred v)^2
    for v in range(1, m):
        s2[v] = 1.0 / (mu[v] * mu[pred[v]])
    s2[0] = 0.0
    for v in range(m - 1, 0, -1):
        pd[v] = 1.0 - acc[v]
        acc[pred[v]] += z2 * s2[v] / pd[v]
    pd[0] = 1.0 - acc[0]
    tot = np.empty(m, dtype=np.complex128)
    pu = np.empty(m, dtype=np.complex128)     # pivot of pred(v)'s side, cut at v
    tot[0] = pd[0]
    for v in range(1, m):
        p = pred[v]
        e = z2 * s2[v]
        pu[v] = tot[p] + e / pd[v]
        tot[v] = pd[v] - e / pu[v]
    # column of the centre
    u = np.empty(m, dtype=np.complex128)
    u[0] = 1.0 / tot[0]
    for v in range(1, m):
        u[v] = z * math.sqrt(s2[v]) / pd[v] * u[pred[v]]
    # weighted row sums
    adown = mu.astype(np.float64).copy()
    for v in range(m - 1, 0, -1):
        a = abs(pd[v])
        adown[pred[v]] += s2[v] / (a * a) * adown[v]
    atot = np.empty(m)
    atot[0] = adown[0]
    for v in range(1, m):
        p = pred[v]
        a = abs(pd[v])
        aup = atot[p] - s2[v] / (a * a) * adown[v]
        b = abs(pu[v])
        atot[v] = adown[v] + s2[v] / (b * b) * aup
    for v in range(m):
        uv = u[v]
        out[v] = uv.real * uv.real + uv.imag * uv.imag
        g = 1.0 / tot[v]
        out[m + v] = (g.real * g.real + g.imag * g.imag) * atot[v]


def resolvent_integrand(ball: IntrinsicBall, theta: float) -> np.ndarray:
    out = np.empty(2 * len(ball.members))
    _resolvent_terms(float(theta), ball.member_pred.astype(np.int64), ball.degrees.astype(np.float64), out)
    return out


def _resolvent_moments(ball: IntrinsicBall, epsrel: float):
    m = len(ball.members)
    pred = ball.member_pred.astype(np.int64)
    mu = ball.degrees.astype(np.float64)
    buf = np.empty(2 * m)

    def f(theta):
        _resolvent_terms(theta, pred, mu, buf)
        return buf.copy()

    # the integrand peaks at theta = 0 with width ~ spectral gap of the killed walk
    pts = [10.0 ** (-k) for k in range(14, 0, -1)]
    val, err = quad_vec(f, 0.0, math.pi / 2, epsabs=0.0, epsrel=epsrel, norm="max", points=pts, limit=20000)
    val = val * (2.0 / math.pi)
    V = mu / mu[0] * val[:m]
    h = val[m:] / mu
    return V, h, float(err) * (2.0 / math.pi)


@dataclass
class ExactMoments:
    EZ: float
    EZ2: float
    V: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    method: str = "resolvent"


def exact_moments(ball: IntrinsicBall, method: str = "auto", tol: float = 1e-9,
                  member_cap: int = DEFAULT_MEMBER_CAP, epsrel: float = 1e-11) -> ExactMoments:
    """E Z_B and E Z_B^2 for two walks started at the centre.

    ``method`` is ``iterate`` (truncate once the live mass is below ``tol``),
    ``resolvent`` (adaptive quadrature to relative accuracy ``epsrel``) or
    ``auto`` (iterate for balls of at most 24 members).
    """
    m = len(ball.members)
    if m > member_cap:
        raise BallTooLarge(f"ball has {m} members, cap is {member_cap}; use Monte Carlo")
    if method == "auto":
        method = "iterate" if m <= 24 else "resolvent"
    if method == "iterate":
        indptr, nbr = ball_adjacency(ball)
        deg = ball.degrees.astype(np.float64)
        V, it = _iterate_V(indptr, nbr, deg, tol, 10**9)
        h, it2 = _iterate_h(indptr, nbr, deg, tol, 10**9)
        if it < 0 or it2 < 0:
            raise RuntimeError("substochastic iteration did not reach the tolerance")
    elif method == "resolvent":
        V, h, _ = _resolvent_moments(ball, epsrel)
    else:
        raise ValueError(f"unknown method {method!r}")
    EZ = float(V.sum())
    EZ2 = EZ + 2.0 * float((V * (h - 1.0)).sum())
    return ExactMoments(EZ, EZ2, V, h, method)


def even_return_series(ball: IntrinsicBall, tol: float = 1e-9) -> float:
    """sum_n P^0(X_2n = 0): on a tree this equals G_B(0, 0), odd returns being impossible."""
    indptr, nbr = ball_adjacency(ball)
    return float(_even_returns(indptr, nbr, ball.degrees.astype(np.float64), tol, 10**9))


@numba.njit(cache=True)
def _even_returns(indptr, nbr, deg, tol, max_steps):
    m = deg.shape[0]
    p = np.zeros(m)
    q = np.zeros(m)
    p[0] = 1.0
    total = 0.0
    for it in range(max_steps):
        if it % 2 == 0:
            total += p[0]
        mass = 0.0
        for v in range(m):
            mass += p[v]
        if mass < tol:
            return total
        q[:] = 0.0
        for v in range(m):
            pv = p[v]
            if pv == 0.0:
                continue
            w = pv / deg[v]
            for t in range(indptr[v], indptr[v + 1]):
                u = nbr[t]
                if u >= 0:
                    q[u] += w
        p, q = q, p
    return -1.0


# ---------------------------------------------------------------------------
# experiments


def first_moment_bound(r: int) -> float:
    return 6.0 * r


def second_moment_bound(r: int) -> float:
    return 144.0 * r * r + 6.0 * r


def window(eps: float, r: int) -> tuple[float, float]:
    """The collision window [eps r, 72 eps^-2 r] and its probability floor eps^2/12."""
    return eps * r, 72.0 * r / (eps * eps)


@dataclass
class MomentReport:
    r: int
    tree_index: int
    tree_seed: int
    ball_size: int
    degree_origin: int
    exact_EZ: float
    exact_EZ2: float
    green_origin: float
    r_eff: float
    max_green: float
    mc_runs: int
    mc_EZ: float | None = None
    mc_EZ_se: float | None = None
    mc_EZ2: float | None = None
    mc_EZ2_se: float | None = None
    upper_first: bool = True          # E Z <= 6 (r + 1)
    upper_second: bool = True         # E Z^2 <= 144 (r + 1)^2 + 6 (r + 1)
    upper_first_r: bool = True        # same with r in place of r + 1
    upper_second_r: bool = True
    sandwich_green: bool = True       # G/2 <= E Z <= G
    sandwich_resistance: bool = True  # R min(mu) <= E Z <= R max(mu)
    second_green: bool = True         # E Z^2 <= G + 2 G max_x G(x, x)
    second_resistance: bool = True    # E Z^2 <= E Z (2 max(mu) max_x R(x) - 1)
    lower: dict = field(default_factory=dict)        # eps -> E Z >= eps r
    window_prob: dict = field(default_factory=dict)  # eps -> [p_hat, se]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lower"] = {str(k): v for k, v in self.lower.items()}
        d["window_prob"] = {str(k): v for k, v in self.window_prob.items()}
        return d


def moment_report(ball: IntrinsicBall, r: int, eps_list: Sequence[float] = DEFAULT_EPS_GRID,
                  mc_runs: int = 0, rng: RngStream | None = None, tree_index: int = 0,
                  tree_seed: int = 0, method: str = "auto") -> MomentReport:
    """Exact moments, bound verdicts and optional Monte Carlo for one ball."""
    mom = exact_moments(ball, method=method)
    R = resistance_tree(ball)
    G = float(ball.degrees[0]) * R
    gmax = float(green_diagonal_all(ball).max())
    rep = MomentReport(
        r=int(r), tree_index=int(tree_index), tree_seed=int(tree_seed), ball_size=len(ball),
        degree_origin=int(ball.degrees[0]), exact_EZ=mom.EZ, exact_EZ2=mom.EZ2,
        green_origin=G, r_eff=R, max_green=gmax, mc_runs=int(mc_runs),
    )
    rep.upper_first = bool(mom.EZ <= first_moment_bound(r + 1))
    rep.upper_second = bool(mom.EZ2 <= second_moment_bound(r + 1))
    rep.upper_first_r = bool(mom.EZ <= first_moment_bound(r))
    rep.upper_second_r = bool(mom.EZ2 <= second_moment_bound(r))
    rep.sandwich_green = bool(0.5 * G <= mom.EZ <= G)
    mu = ball.degrees
    slack = 1e-9 * mom.EZ
    rep.sandwich_resistance = bool(R * mu.min() - slack <= mom.EZ <= R * mu.max() + slack)
    rep.second_green = bool(mom.EZ2 <= G + 2.0 * G * gmax)
    # h(x) <= max(mu) R(x <-> exits) by reversibility
    rmax = float(resistances_all(ball).max())
    rep.second_resistance = bool(mom.EZ2 <= mom.EZ * (2.0 * mu.max() * rmax - 1.0) * (1 + 1e-9))
    rep.lower = {float(e): bool(mom.EZ >= e * r) for e in eps_list}
    if mc_runs > 0:
        if rng is None:
            raise ValueError("Monte Carlo needs an rng")
        z = sample_Z_many(ball, mc_runs, rng)
        n = len(z)
        zf = z.astype(float)
        rep.mc_EZ = float(zf.mean())
        rep.mc_EZ_se = float(zf.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rep.mc_EZ2 = float((zf * zf).mean())
        rep.mc_EZ2_se = float((zf * zf).std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        for e in eps_list:
            if not rep.lower[float(e)]:
                continue
            lo, hi = window(e, r)
            hit = (zf >= lo) & (zf <= hi)
            p = float(hit.mean())
            rep.window_prob[float(e)] = [p, math.sqrt(max(p * (1 - p), 0.0) / n)]
    return rep


@dataclass
class ExperimentSummary:
    r: int
    trees: int
    upper_first_violations: int
    upper_second_violations: int
    sandwich_green_violations: int
    sandwich_resistance_violations: int
    second_green_violations: int
    second_resistance_violations: int
    lower_failure_fraction: dict
    window_checks: dict   # eps -> [trees checked, trees below eps^2/12 - 2 se]
    max_EZ_over_r1: float
    max_EZ2_over_bound: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lower_failure_fraction"] = {str(k): v for k, v in self.lower_failure_fraction.items()}
        d["window_checks"] = {str(k): v for k, v in self.window_checks.items()}
        return d


def summarize(reports: Sequence[MomentReport], r: int, eps_list: Sequence[float]) -> ExperimentSummary:
    n = len(reports)
    fail = {float(e): (sum(not rep.lower[float(e)] for rep in reports) / n if n else 0.0) for e in eps_list}
    checks = {}
    for e in eps_list:
        e = float(e)
        floor = e * e / 12.0
        rows = [rep.window_prob[e] for rep in reports if e in rep.window_prob]
        below = sum(p < floor - 2 * se for p, se in rows)
        checks[e] = [len(rows), below]
    return ExperimentSummary(
        r=int(r),
        trees=n,
        upper_first_violations=sum(not rep.upper_first for rep in reports),
        upper_second_violations=sum(not rep.upper_second for rep in reports),
        sandwich_green_violations=sum(not rep.sandwich_green for rep in reports),
        sandwich_resistance_violations=sum(not rep.sandwich_resistance for rep in reports),
        second_green_violations=sum(not rep.second_green for rep in reports),
        second_resistance_violations=sum(not rep.second_resistance for rep in reports),
        lower_failure_fraction=fail,
        window_checks=checks,
        max_EZ_over_r1=max((rep.exact_EZ / (r + 1) for rep in reports), default=0.0),
        max_EZ2_over_bound=max((rep.exact_EZ2 / second_moment_bound(r + 1) for rep in reports), default=0.0),
    )


def moment_bound_experiment(trees: int, r: int, eps_list: Sequence[float] = DEFAULT_EPS_GRID,
                            rng: RngStream | None = None, mc_runs: int = 0, container_factor: float = 4.0,
                            tree_source=None, method: str = "auto"):
    """Moment bounds over ``trees`` independent trees at radius ``r``.

    Tree ``i`` is sampled from stream ``rng.child(i)`` (its Monte Carlo uses
    a further child), so results do not depend on how trees are scheduled.
    Returns (reports, summary).
    """
    from .wilson import LatticeWilson, WilsonConfig, wilson_infinity_approx

    if r < 1:
        raise ValueError("r must be at least 1")
    rng = rng or RngStream(0)
    cfg = WilsonConfig(region_radius=r, container_factor=container_factor, order="intrinsic")
    sampler = LatticeWilson(cfg.container_radius)
    reports = []
    for i in range(trees):
        ball = ball_for_tree(cfg, rng, i, sampler) if tree_source is None else tree_source(i)
        s = rng.child(i)
        reports.append(moment_report(ball, r, eps_list, mc_runs, s.child(1 << 32), i, s.seed, method))
    return reports, summarize(reports, r, eps_list)


theorem1_experiment = moment_bound_experiment


def ball_for_tree(cfg, rng: RngStream, i: int, sampler=None) -> IntrinsicBall:
    from .wilson import wilson_infinity_approx

    tree = wilson_infinity_approx(cfg, rng.child(i), sampler=sampler)
    return intrinsic_ball(tree, (0, 0, 0), cfg.region_radius)


@dataclass
class CollisionCertificate:
    N: int
    radius: int
    runs: int
    p_hat: float
    se: float
    floor: float

    def to_dict(self) -> dict:
        return asdict(self)


def infinite_collision_demo(tree, Ns: Sequence[int], rng: RngStream, eps: float = 0.1,
                            runs: int = 4000) -> list[CollisionCertificate]:
    """Estimate P(Z_{B_{N/eps}} >= N) on one tree for each N.

    A lower bound of eps^2/12 that does not decay as N grows is what makes
    collisions recur forever.
    """
    Ns = [int(n) for n in Ns]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("N values must be increasing")
    out = []
    for j, N in enumerate(Ns):
        radius = int(math.ceil(N / eps))
        ball = intrinsic_ball(tree, (0, 0, 0), radius)
        z = sample_Z_many(ball, runs, rng.child(j))
        p = float((z >= N).mean())
        out.append(CollisionCertificate(N, radius, runs, p, math.sqrt(max(p * (1 - p), 0.0) / runs), eps * eps / 12))
    return out


def tail_probabilities(z: np.ndarray, Ns: Sequence[int]) -> np.ndarray:
    """Empirical P(Z >= N) from one sample of collision counts."""
    z = np.asarray(z)
    return np.array([(z >= n).mean() for n in Ns])
