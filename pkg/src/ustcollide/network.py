"""Electrical-network quantities of sampled trees.

All edges carry unit resistance.  On a ball of the tree the exit layer is
shorted into one absorbing terminal, so R(x <-> exits) is a series-parallel
reduction, and the Green function of the walk killed on leaving the ball
satisfies G(x, x) = deg(x) * R(x <-> exits).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .treemetrics import IntrinsicBall, component_Ur, intrinsic_ball
from .wilson import SpanningTree

INFINITE = math.inf


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# general graphs


def _laplacian(adj) -> sp.csr_matrix:
    n = len(adj)
    rows = [u for u, nb in enumerate(adj) for _ in nb]
    cols = [v for nb in adj for v in nb]
    A = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    A.setdiag(0)
    A.eliminate_zeros()
    return sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A


def resistance_general(adj, A, B, rtol: float = 1e-10) -> float:
    """Effective resistance between disjoint vertex sets of a finite graph.

    Solves the Dirichlet problem (potential 1 on A, 0 on B) by Jacobi
    preconditioned conjugate gradients and returns the inverse of the
    Dirichlet energy.  ``adj`` is an adjacency list; parallel edges are
    counted with multiplicity.  Returns ``math.inf`` when no path joins A
    to B.
    """
    A = sorted(set(int(a) for a in A))
    B = sorted(set(int(b) for b in B))
    if not A or not B:
        raise ValueError("A and B must be nonempty")
    if set(A) & set(B):
        raise ValueError("A and B must be disjoint")
    L = _laplacian(adj).tocsr()
    n = L.shape[0]
    fixed = np.zeros(n, dtype=bool)
    fixed[A] = True
    fixed[B] = True
    free = np.nonzero(~fixed)[0]
    f = np.zeros(n)
    f[A] = 1.0
    if len(free):
        Lff = L[free][:, free].tocsr()
        rhs = -(L[free][:, A] @ np.ones(len(A)))
        # free vertices cut off from both terminals make Lff singular: pin them
        nc, lab = connected_components(Lff, directed=False)
        touches = np.zeros(nc, dtype=bool)
        boundary_link = np.asarray(abs(L[free][:, np.nonzero(fixed)[0]]).sum(axis=1)).ravel() > 0
        touches[lab[boundary_link]] = True
        live = touches[lab]
        x = np.zeros(len(free))
        if live.any():
            idx = np.nonzero(live)[0]
            K = Lff[idx][:, idx].tocsr()
            b = rhs[idx]
            dinv = 1.0 / K.diagonal()
            M = spla.LinearOperator(K.shape, matvec=lambda v: dinv * v, dtype=float)
            sol, info = spla.cg(K, b, rtol=rtol * 1e-2, atol=0.0, M=M, maxiter=50 * len(idx) + 1000)
            res = np.linalg.norm(b - K @ sol) / max(np.linalg.norm(b), 1e-300)
            if info != 0 or res > rtol:
                sol = spla.spsolve(K.tocsc(), b)
                res = np.linalg.norm(b - K @ sol) / max(np.linalg.norm(b), 1e-300)
                if res > rtol:
                    raise SolverError(f"Dirichlet solve stalled at relative residual {res:.2e}")
            x[idx] = sol
        f[free] = x
    Lc = L.tocoo()
    mask = Lc.row < Lc.col
    w = -Lc.data[mask]
    energy = float((w * (f[Lc.row[mask]] - f[Lc.col[mask]]) ** 2).sum())
    if energy == 0.0:
        return INFINITE
    return 1.0 / energy


# ---------------------------------------------------------------------------
# trees


@numba.njit(cache=True)
def _subtree_conductance(pred, exit_count):
    """Conductance from each member down its own subtree to the exits."""
    m = pred.shape[0]
    C = exit_count.astype(np.float64)
    for v in range(m - 1, 0, -1):
        c = C[v]
        if c > 0.0:
            C[pred[v]] += c / (1.0 + c)
    return C


@numba.njit(cache=True)
def _all_conductances(pred, exit_count):
    """Total conductance from every member to the exits (two-pass rerooting)."""
    m = pred.shape[0]
    down = _subtree_conductance(pred, exit_count)
    total = np.empty(m, dtype=np.float64)
    total[0] = down[0]
    for v in range(1, m):
        p = pred[v]
        dv = down[v]
        own = dv / (1.0 + dv) if dv > 0.0 else 0.0
        side = total[p] - own          # p's side of the edge (v, p)
        if side < 0.0:
            side = 0.0
        total[v] = dv + (side / (1.0 + side) if side > 0.0 else 0.0)
    return total


def _as_region(pred, exit_owner, m):
    pred = np.asarray(pred, dtype=np.int64)
    counts = np.bincount(np.asarray(exit_owner, dtype=np.int64), minlength=m).astype(np.int64)
    return pred, counts


def resistance_tree(region: IntrinsicBall, source: int = 0) -> float:
    """R(source <-> exits) on a ball by one leaves-to-root series-parallel sweep.

    ``source`` is a member position (0 is the centre).
    """
    m = len(region.members)
    pred, counts = _as_region(region.member_pred, region.exit_owner, m)
    if source == 0:
        c = _subtree_conductance(pred, counts)[0]
    else:
        c = _all_conductances(pred, counts)[source]
    return INFINITE if c == 0.0 else float(1.0 / c)


def resistances_all(region: IntrinsicBall) -> np.ndarray:
    """R(x <-> exits) for every member x."""
    m = len(region.members)
    pred, counts = _as_region(region.member_pred, region.exit_owner, m)
    c = _all_conductances(pred, counts)
    with np.errstate(divide="ignore"):
        return np.where(c > 0, 1.0 / c, np.inf)


def green_diagonal(ball: IntrinsicBall, x: int = 0) -> float:
    """G_B(x, x) = deg(x) * R(x <-> exits) for the member at position ``x``."""
    return float(ball.degrees[x]) * resistance_tree(ball, x)


def green_diagonal_all(ball: IntrinsicBall) -> np.ndarray:
    return ball.degrees.astype(float) * resistances_all(ball)


def resistance_region_general(region: IntrinsicBall, source: int = 0) -> float:
    """Same quantity through the Laplacian solver on the shorted region graph."""
    adj = region.local_graph()
    return resistance_general(adj, [source], [len(region.members)])


# ---------------------------------------------------------------------------
# the killed walk as a matrix


def killed_transition(ball: IntrinsicBall) -> sp.csr_matrix:
    """Substochastic transition matrix of the walk killed on leaving the ball."""
    m = len(ball.members)
    k = np.arange(1, m)
    p = ball.member_pred[1:]
    rows = np.concatenate([k, p])
    cols = np.concatenate([p, k])
    vals = 1.0 / ball.degrees[rows].astype(float)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))


def green_series(ball: IntrinsicBall, x: int = 0, tol: float = 1e-9, max_steps: int = 10**9) -> float:
    """G_B(x, x) = sum_n P^x(X_n = x) by iterating the killed kernel.

    Stops once the surviving mass drops below ``tol``.
    """
    m = len(ball.members)
    pred = ball.member_pred.astype(np.int64).copy()
    pred[0] = m                 # dummy slot whose outflow stays zero
    deg = ball.degrees.astype(np.float64)
    keep = 1.0 - ball.exit_count / deg
    # trees are bipartite, so the walk alternates between the parity classes
    side = (ball.member_depth - ball.member_depth[x]) % 2
    own, other = np.nonzero(side == 0)[0], np.nonzero(side == 1)[0]
    val = _green_series_tree(pred, 1.0 / deg, keep, own, other, x, tol, max_steps)
    if val < 0:
        raise RuntimeError("Green series did not converge within max_steps")
    return float(val)


@numba.njit(cache=True)
def _green_series_tree(pred, inv_deg, keep, own, other, x, tol, max_steps):
    v = np.zeros(pred.shape[0] + 1)
    u = np.zeros(pred.shape[0] + 1)     # v / deg: what each vertex sends per edge
    v[x] = 1.0
    total = 1.0
    for n in range(1, max_steps + 1):
        if n % 2 == 1:
            src, dst = own, other
        else:
            src, dst = other, own
        mass = 0.0                      # mass after this step
        for i in src:
            u[i] = v[i] * inv_deg[i]
            mass += v[i] * keep[i]
        for j in dst:
            v[j] = u[pred[j]]
        for i in src:
            v[pred[i]] += u[i]
        if n % 2 == 0:
            total += v[x]
        if mass < tol:
            return total
    return -1.0


# ---------------------------------------------------------------------------
# reports


@dataclass
class ResistanceReport:
    r: int
    r_eff_origin: float
    r_eff_Ur: float
    green_origin: float
    degree_origin: int
    ball_size: int
    component_size: int
    component_intrinsic_radius: int
    green_diagonal: list[float] | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["green_diagonal"] is None:
            d.pop("green_diagonal")
        return d


def resistance_profile(tree: SpanningTree, r: int, with_diagonal: bool = False) -> ResistanceReport:
    """R(0 <-> B_U(0, r)^c) and R(0 <-> U \\ U_r) on one sampled tree."""
    ball = intrinsic_ball(tree, (0, 0, 0), r)
    comp = component_Ur(tree, r)
    r_ball = resistance_tree(ball)
    r_comp = resistance_tree(comp.as_ball())
    diag = green_diagonal_all(ball).tolist() if with_diagonal else None
    return ResistanceReport(
        r=int(r),
        r_eff_origin=r_ball,
        r_eff_Ur=r_comp,
        green_origin=float(ball.degrees[0]) * r_ball,
        degree_origin=int(ball.degrees[0]),
        ball_size=len(ball),
        component_size=len(comp),
        component_intrinsic_radius=comp.intrinsic_radius,
        green_diagonal=diag,
    )


def resistance_threshold(r: int, lam: float, beta: float = 1.624) -> float:
    """The level r^beta / lam^(1 + 4 beta) of the resistance lower bound."""
    return r**beta / lam ** (1 + 4 * beta)
