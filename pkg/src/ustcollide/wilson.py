"""Uniform spanning trees by Wilson's algorithm.

Two samplers share the same cycle-popping kernel:

* :func:`wilson_graph` / :func:`wilson_wired` run the finite-graph algorithm on
  an explicit adjacency structure (small test graphs, or a lattice box with
  every exit edge wired to one super-vertex).
* :class:`LatticeWilson` keeps one byte per site of a cube and grows the tree
  of a wired Euclidean container around the origin on demand.  It backs
  :func:`wilson_infinity_approx`, whose first branch is the loop-erased walk
  from the origin to the container exit, standing in for the infinite LERW.

Loop erasure uses the usual last-exit pointers: while walking, every vertex
remembers the direction in which it was last left; retracing those pointers
from the start yields the chronological loop erasure of the trace.
"""

from __future__ import annotations

import functools
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numba
import numpy as np
from numba.typed import List as NumbaList

from .lattice import DIRECTIONS, Box, LatticePath, LatticePoint, encode
from .rng import as_generator
from .walk import DEFAULT_STEP_BUDGET, InvalidConfiguration, StepBudgetExceeded

WIRED = "wired"

_DX = np.array([1, -1, 0, 0, 0, 0], dtype=np.int64)
_DY = np.array([0, 0, 1, -1, 0, 0], dtype=np.int64)
_DZ = np.array([0, 0, 0, 0, 1, -1], dtype=np.int64)

IN_TREE = 8
VISITED = 16


def hitting_time(path, A) -> int | None:
    """First index i with path[i] in A, or None."""
    S = A if isinstance(A, (set, frozenset, dict)) else set(map(tuple, A))
    verts = path.vertices if isinstance(path, LatticePath) else path
    for i, v in enumerate(verts):
        if tuple(v) in S:
            return i
    return None


# ---------------------------------------------------------------------------
# finite graphs


@numba.njit(cache=True)
def _wilson_csr(indptr, indices, is_root, order, gen, budget):
    """Cycle-popping Wilson on a CSR multigraph.

    Returns ``slot``: for each non-root vertex the CSR position of its parent
    edge; roots get -1.  ``steps`` is -1 if the budget ran out.
    """
    n = indptr.shape[0] - 1
    in_tree = is_root.copy()
    nxt = np.full(n, -1, dtype=np.int64)
    slot = np.full(n, -1, dtype=np.int64)
    steps = 0
    for s in order:
        u = s
        while not in_tree[u]:
            deg = indptr[u + 1] - indptr[u]
            j = indptr[u] + int(gen.random() * deg)
            nxt[u] = j
            u = indices[j]
            steps += 1
            if steps > budget:
                return slot, -1
        u = s
        while not in_tree[u]:
            in_tree[u] = True
            slot[u] = nxt[u]
            u = indices[nxt[u]]
    return slot, steps


def _to_csr(adj: Sequence[Sequence[int]]):
    indptr = np.zeros(len(adj) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(a) for a in adj])
    indices = np.array([v for a in adj for v in a], dtype=np.int64)
    return indptr, indices


def wilson_graph(adj, root: int, rng, order: Sequence[int] | None = None,
                 budget: int = DEFAULT_STEP_BUDGET) -> np.ndarray:
    """Uniform spanning tree of a finite connected graph.

    ``adj[v]`` lists the neighbours of ``v`` (repeat entries for parallel
    edges).  Returns the parent array, with ``-1`` at the root.
    """
    n = len(adj)
    indptr, indices = _to_csr(adj)
    is_root = np.zeros(n, dtype=np.bool_)
    is_root[root] = True
    order_arr = np.arange(n, dtype=np.int64) if order is None else np.asarray(order, dtype=np.int64)
    slot, steps = _wilson_csr(indptr, indices, is_root, order_arr, as_generator(rng), budget)
    if steps < 0:
        raise StepBudgetExceeded(f"Wilson walk exceeded {budget} steps")
    parent = np.where(slot >= 0, indices[np.maximum(slot, 0)], -1)
    return parent


def tree_edges(parent: np.ndarray) -> frozenset:
    """Undirected edge set of a parent array."""
    return frozenset(frozenset((int(v), int(p))) for v, p in enumerate(parent) if p >= 0)


def spanning_tree_count(graph) -> int:
    """Number of spanning trees via the matrix-tree theorem (exact integers).

    ``graph`` is a square adjacency (multiplicity) matrix as a numpy array, or
    an adjacency list.  Disconnected graphs give 0.
    """
    import sympy

    if isinstance(graph, np.ndarray):
        A = graph.astype(np.int64)
    else:
        n = len(graph)
        A = np.zeros((n, n), dtype=np.int64)
        for u, nb in enumerate(graph):
            for v in nb:
                A[u, v] += 1
    n = A.shape[0]
    if n <= 1:
        return 1
    A = A.copy()
    np.fill_diagonal(A, 0)
    L = np.diag(A.sum(axis=1)) - A
    return int(sympy.Matrix(L[1:, 1:].tolist()).det(method="bareiss"))


# ---------------------------------------------------------------------------
# spanning trees of lattice regions


@dataclass
class SpanningTree:
    """A (possibly partial) spanning tree of a lattice container.

    ``parent[i]`` indexes ``points``; ``-1`` means the parent edge goes to the
    wired super-vertex, in which case ``parent_point[i]`` is the lattice
    point outside the container that the edge leads to.  ``complete[i]`` is
    True when every lattice neighbour of vertex ``i`` has been placed in the
    tree, so that ``degree[i]`` is final.
    """

    points: np.ndarray
    parent: np.ndarray
    parent_point: np.ndarray
    degree: np.ndarray
    complete: np.ndarray
    container: Box | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._keys = encode(self.points)
        self._sorter = np.argsort(self._keys, kind="stable")
        self._sorted = self._keys[self._sorter]
        self._children = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def root(self) -> str:
        return WIRED

    def index_of(self, pts) -> np.ndarray:
        """Vertex indices of the given points; -1 where absent."""
        k = encode(np.asarray(pts, dtype=np.int64).reshape(-1, 3))
        pos = np.searchsorted(self._sorted, k)
        pos = np.minimum(pos, len(self._sorted) - 1)
        hit = self._sorted[pos] == k
        return np.where(hit, self._sorter[pos], -1)

    def index(self, p) -> int:
        i = int(self.index_of([tuple(p)])[0])
        if i < 0:
            raise KeyError(f"{tuple(p)} is not a vertex of the tree")
        return i

    def __contains__(self, p) -> bool:
        return int(self.index_of([tuple(p)])[0]) >= 0

    def point(self, i: int) -> LatticePoint:
        return LatticePoint(*map(int, self.points[i]))

    @property
    def n_edges(self) -> int:
        # every vertex owns exactly one edge: the one to its parent
        return len(self.points)

    def children(self):
        """CSR (indptr, indices) of child lists."""
        if self._children is None:
            par = self.parent
            has = par >= 0
            kids = np.nonzero(has)[0]
            order = np.argsort(par[has], kind="stable")
            kids = kids[order]
            counts = np.bincount(par[has], minlength=len(par))
            indptr = np.zeros(len(par) + 1, dtype=np.int64)
            indptr[1:] = np.cumsum(counts)
            self._children = (indptr, kids.astype(np.int64))
        return self._children

    def neighbors_of(self, i: int) -> list[int]:
        """Tree neighbours of vertex i inside the vertex set (root excluded)."""
        indptr, kids = self.children()
        out = [int(k) for k in kids[indptr[i]:indptr[i + 1]]]
        if self.parent[i] >= 0:
            out.append(int(self.parent[i]))
        return out

    def edges(self) -> set[frozenset]:
        out = set()
        for i in range(len(self.points)):
            a = self.point(i)
            b = LatticePoint(*map(int, self.parent_point[i]))
            out.add(frozenset((a, b)))
        return out

    def path_to_root(self, i: int) -> list[int]:
        out = [i]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
            if len(out) > len(self.points):
                raise RuntimeError("parent pointers contain a cycle")
        return out

    def check(self) -> None:
        """Raise if the parent structure is not a forest rooted at the super-vertex."""
        n = len(self.points)
        if n and np.any(np.abs(self.points - self.parent_point).sum(axis=1) != 1):
            raise AssertionError("parent edges must be lattice edges")
        par = self.parent
        known = par >= 0
        if np.any(self.index_of(self.parent_point[known]) != par[known]):
            raise AssertionError("parent index and parent point disagree")
        if np.any((~known) & (self.index_of(self.parent_point) >= 0)):
            raise AssertionError("a root edge points at a vertex of the tree")
        # acyclicity: label vertices by the distance to the root
        depth = _root_depths(par)
        if np.any(depth < 0):
            raise AssertionError("parent pointers contain a cycle")
        indptr, _ = self.children()
        deg = np.diff(indptr) + 1
        if np.any(deg != self.degree):
            raise AssertionError("degree map disagrees with the edges")
        if np.any((self.degree < 1) | (self.degree > 6)):
            raise AssertionError("degree out of [1, 6]")

    # -- serialization -----------------------------------------------------

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write("# ust-tree v1\n")
        buf.write("# meta: " + json.dumps(self.meta, sort_keys=True) + "\n")
        cont = None if self.container is None else {
            "center": list(self.container.center), "radius": self.container.radius,
            "norm": self.container.norm}
        buf.write("# container: " + json.dumps(cont, sort_keys=True) + "\n")
        buf.write(f"# vertices: {len(self.points)}\n")
        buf.write("# x y z px py pz complete\n")
        rows = np.column_stack([self.points, self.parent_point, self.complete.astype(np.int64)])
        for r in rows:
            buf.write(" ".join(str(int(v)) for v in r) + "\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "SpanningTree":
        lines = text.splitlines()
        if not lines or lines[0] != "# ust-tree v1":
            raise ValueError("not a ust-tree v1 file")
        meta = json.loads(lines[1].split(": ", 1)[1])
        cont = json.loads(lines[2].split(": ", 1)[1])
        n = int(lines[3].split(": ", 1)[1])
        body = lines[5:5 + n]
        if len(body) != n:
            raise ValueError(f"expected {n} vertex lines, found {len(body)}")
        data = np.array([list(map(int, ln.split())) for ln in body], dtype=np.int64).reshape(n, 7)
        container = None if cont is None else Box(LatticePoint(*cont["center"]), cont["radius"], cont["norm"])
        return _assemble(data[:, :3], data[:, 3:6], container, meta, complete=data[:, 6].astype(bool))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "SpanningTree":
        with open(path) as fh:
            return cls.loads(fh.read())


def _root_depths(parent: np.ndarray) -> np.ndarray:
    return _root_depths_nb(parent.astype(np.int64))


@numba.njit(cache=True)
def _root_depths_nb(parent):
    n = parent.shape[0]
    depth = np.full(n, -2, dtype=np.int64)  # -2 unknown, -3 on current chain
    chain = np.empty(n, dtype=np.int64)
    for s in range(n):
        if depth[s] != -2:
            continue
        m = 0
        u = s
        while u >= 0 and depth[u] == -2:
            depth[u] = -3
            chain[m] = u
            m += 1
            u = parent[u]
        if u >= 0 and depth[u] == -3:
            for i in range(m):
                depth[chain[i]] = -1
            continue
        base = 0 if u < 0 else depth[u] + 1
        if u >= 0 and depth[u] == -1:
            for i in range(m):
                depth[chain[i]] = -1
            continue
        for i in range(m - 1, -1, -1):
            depth[chain[i]] = base + (m - 1 - i)
    return depth


def _assemble(points, parent_point, container, meta, complete=None) -> SpanningTree:
    points = np.asarray(points, dtype=np.int64).reshape(-1, 3)
    parent_point = np.asarray(parent_point, dtype=np.int64).reshape(-1, 3)
    n = len(points)
    tree = SpanningTree(points, np.full(n, -1, dtype=np.int64), parent_point,
                        np.ones(n, dtype=np.int64), np.zeros(n, dtype=bool), container, meta)
    par = tree.index_of(parent_point) if n else np.zeros(0, dtype=np.int64)
    tree.parent = par.astype(np.int64)
    tree._children = None
    indptr, _ = tree.children()
    tree.degree = np.diff(indptr) + 1
    if complete is None:
        complete = _completeness(tree)
    tree.complete = np.asarray(complete, dtype=bool)
    return tree


def _completeness(tree: SpanningTree) -> np.ndarray:
    n = len(tree.points)
    if n == 0:
        return np.zeros(0, dtype=bool)
    ok = np.ones(n, dtype=bool)
    for d in DIRECTIONS:
        nb = tree.points + d
        present = tree.index_of(nb) >= 0
        outside = ~tree.container.contains_array(nb) if tree.container is not None else np.zeros(n, bool)
        ok &= present | outside
    return ok


def box_graph(box: Box):
    """Adjacency list of ``box`` plus a wired super-vertex (the last index).

    Each lattice edge leaving the box becomes its own edge to the
    super-vertex, so the walk keeps its lattice transition probabilities.
    Also returns the box points and, per adjacency slot, the lattice point
    the slot leads to.
    """
    pts = box.points()
    n = len(pts)
    keys = encode(pts)
    sorter = np.argsort(keys)
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    targets: list[list[tuple]] = [[] for _ in range(n + 1)]
    for d in DIRECTIONS:
        nb = pts + d
        k = encode(nb)
        pos = np.minimum(np.searchsorted(keys[sorter], k), n - 1)
        hit = keys[sorter][pos] == k
        idx = np.where(hit, sorter[pos], n)
        for i in range(n):
            adj[i].append(int(idx[i]))
            targets[i].append(tuple(int(c) for c in nb[i]))
            if idx[i] == n:
                adj[n].append(i)
                targets[n].append(tuple(int(c) for c in pts[i]))
    return adj, pts, targets


@functools.lru_cache(maxsize=8)
def _wired_structure(center, radius, norm):
    adj, pts, targets = box_graph(Box(center, radius, norm))
    indptr, indices = _to_csr(adj)
    flat_targets = np.array([t for ts in targets for t in ts], dtype=np.int64)
    for arr in (pts, indptr, indices, flat_targets):
        arr.setflags(write=False)
    return pts, indptr, indices, flat_targets


def wilson_wired(box: Box, rng, order: Sequence[int] | None = None,
                 budget: int = DEFAULT_STEP_BUDGET, meta: dict | None = None) -> SpanningTree:
    """Exact UST of ``box`` with its outer boundary wired into one root.

    ``order`` permutes the box vertices (indices into ``box.points()``);
    the default is spiral order.
    """
    pts, indptr, indices, flat_targets = _wired_structure(box.center, box.radius, box.norm)
    n = len(pts)
    is_root = np.zeros(n + 1, dtype=np.bool_)
    is_root[n] = True
    order_arr = np.arange(n, dtype=np.int64) if order is None else np.asarray(order, dtype=np.int64)
    slot, steps = _wilson_csr(indptr, indices, is_root, order_arr, as_generator(rng), budget)
    if steps < 0:
        raise StepBudgetExceeded(f"Wilson walk exceeded {budget} steps")
    parent_point = flat_targets[slot[:n]]
    return _assemble(pts, parent_point, box, dict(meta or {}), complete=np.ones(n, dtype=bool))


# ---------------------------------------------------------------------------
# lattice containers


@numba.njit(cache=True, inline="always")
def _inside(x, y, z, C, C2, norm_inf):
    if norm_inf:
        return abs(x) <= C and abs(y) <= C and abs(z) <= C
    return x * x + y * y + z * z <= C2


@numba.njit(cache=True)
def _branch(state, L, off, C, C2, norm_inf, sx, sy, sz, gen, budget, added):
    """Add LE(walk from (sx,sy,sz) until it hits the tree or leaves the container).

    Returns the number of walk steps, or -1 if the budget ran out.
    """
    x = sx
    y = sy
    z = sz
    idx = ((x + off) * L + (y + off)) * L + (z + off)
    if state[idx] >= IN_TREE:
        return 0
    steps = 0
    while True:
        d = int(gen.random() * 6.0)
        state[idx] = d
        x += _DX[d]
        y += _DY[d]
        z += _DZ[d]
        steps += 1
        if not _inside(x, y, z, C, C2, norm_inf):
            break
        idx = ((x + off) * L + (y + off)) * L + (z + off)
        if state[idx] >= IN_TREE:
            break
        if steps >= budget:
            return -1
    x = sx
    y = sy
    z = sz
    while True:
        idx = ((x + off) * L + (y + off)) * L + (z + off)
        d = state[idx]
        state[idx] = IN_TREE | d
        added.append(idx)
        x += _DX[d]
        y += _DY[d]
        z += _DZ[d]
        if not _inside(x, y, z, C, C2, norm_inf):
            break
        if state[((x + off) * L + (y + off)) * L + (z + off)] >= IN_TREE:
            break
    return steps


@numba.njit(cache=True)
def _cover(state, L, off, C, C2, norm_inf, starts, gen, budget, added):
    total = 0
    for i in range(starts.shape[0]):
        s = _branch(state, L, off, C, C2, norm_inf, starts[i, 0], starts[i, 1], starts[i, 2],
                    gen, budget - total, added)
        if s < 0:
            return -1
        total += s
    return total


@numba.njit(cache=True)
def _explore(state, L, off, C, C2, norm_inf, gen, budget, added, max_depth, max_norm2, visited):
    """Breadth-first search of the tree from the origin, growing it as needed.

    A vertex at tree depth <= max_depth and squared norm <= max_norm2 is
    expanded: each of its lattice neighbours is first put in the tree (by a
    Wilson branch), after which its tree neighbours are final and get queued.
    Returns (walk steps, flag); flag 1 means an expanded vertex had its parent
    edge leaving the container, flag -1 means the budget ran out.
    """
    qi = NumbaList()
    qd = NumbaList()
    o = ((0 + off) * L + (0 + off)) * L + (0 + off)
    state[o] |= VISITED
    visited.append(o)
    qi.append(o)
    qd.append(0)
    head = 0
    total = 0
    flag = 0
    while head < len(qi):
        idx = qi[head]
        dep = qd[head]
        head += 1
        z = idx % L - off
        y = (idx // L) % L - off
        x = idx // (L * L) - off
        if dep > max_depth or x * x + y * y + z * z > max_norm2:
            continue
        for k in range(6):
            nx = x + _DX[k]
            ny = y + _DY[k]
            nz = z + _DZ[k]
            if _inside(nx, ny, nz, C, C2, norm_inf):
                s = _branch(state, L, off, C, C2, norm_inf, nx, ny, nz, gen, budget - total, added)
                if s < 0:
                    return total, -1
                total += s
        for k in range(6):
            nx = x + _DX[k]
            ny = y + _DY[k]
            nz = z + _DZ[k]
            if not _inside(nx, ny, nz, C, C2, norm_inf):
                if (state[idx] & 7) == k:
                    flag = 1
                continue
            nidx = ((nx + off) * L + (ny + off)) * L + (nz + off)
            sv = state[nidx]
            is_parent = (state[idx] & 7) == k
            is_child = (sv & 7) == (k ^ 1)
            if (is_parent or is_child) and (sv & VISITED) == 0:
                state[nidx] = sv | VISITED
                visited.append(nidx)
                qi.append(nidx)
                qd.append(dep + 1)
    return total, flag


class ContainerTooSmall(RuntimeError):
    """An exploration reached the wired boundary of its container."""


class LatticeWilson:
    """Wired UST of a lattice container, grown lazily around the origin.

    By order-independence of Wilson's algorithm (which also holds when the
    next start vertex is chosen from what has been built so far), the
    partial tree at any moment has the law of the restriction of the wired
    UST of the container.
    """

    def __init__(self, radius: int, norm: str = "2", budget: int = DEFAULT_STEP_BUDGET):
        self.box = Box(LatticePoint(0, 0, 0), int(radius), norm)
        self.C = int(radius)
        self.off = self.C + 1
        self.L = 2 * self.C + 3
        self.norm_inf = norm == "inf"
        self.budget = budget
        self.state = np.full(self.L ** 3, -1, dtype=np.int8)
        self.added = NumbaList.empty_list(numba.int64)
        self.gen = None
        self.steps = 0

    def _args(self):
        return self.state, self.L, self.off, self.C, self.C * self.C, self.norm_inf

    def reset(self, rng) -> None:
        if len(self.added):
            idx = np.asarray(self.added, dtype=np.int64)
            self.state[idx] = -1
        self.added = NumbaList.empty_list(numba.int64)
        self.gen = as_generator(rng)
        self.steps = 0

    def _spent(self, s: int) -> None:
        if s < 0:
            raise StepBudgetExceeded(f"Wilson walk exceeded {self.budget} steps")
        self.steps += s

    def cover(self, points) -> None:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, 3)
        if pts.size and not np.all(self.box.contains_array(pts)):
            raise ValueError("start points must lie in the container")
        self._spent(_cover(*self._args(), pts, self.gen, self.budget - self.steps, self.added))

    def explore(self, max_depth: int = 2**62, max_norm2: int = 2**62) -> None:
        visited = NumbaList.empty_list(numba.int64)
        self.cover([(0, 0, 0)])
        steps, flag = _explore(*self._args(), self.gen, self.budget - self.steps, self.added,
                               int(max_depth), int(max_norm2), visited)
        if len(visited):
            v = np.asarray(visited, dtype=np.int64)
            self.state[v] &= ~np.int8(VISITED)
        self._spent(-1 if flag < 0 else steps)
        if flag == 1:
            raise ContainerTooSmall("exploration reached the container boundary")

    def parent_directions(self, points) -> np.ndarray:
        """Direction code (index into DIRECTIONS) of each point's parent edge; -1 if not yet in the tree."""
        p = np.asarray(points, dtype=np.int64).reshape(-1, 3) + self.off
        st = self.state[(p[:, 0] * self.L + p[:, 1]) * self.L + p[:, 2]]
        return np.where(st >= IN_TREE, st & 7, -1).astype(np.int64)

    def tree(self, meta: dict | None = None) -> SpanningTree:
        idx = np.asarray(self.added, dtype=np.int64)
        L, off = self.L, self.off
        pts = np.column_stack([idx // (L * L) - off, (idx // L) % L - off, idx % L - off])
        d = (self.state[idx] & 7).astype(np.int64)
        parent_point = pts + DIRECTIONS[d]
        return _assemble(pts, parent_point, self.box, dict(meta or {}))


@dataclass
class WilsonConfig:
    region_radius: int
    container_factor: float = 4.0
    boundary_mode: str = "infinity_approx"
    order: str = "spiral"
    container_norm: str = "2"
    cover_component: bool = False

    def __post_init__(self):
        if self.region_radius < 0:
            raise InvalidConfiguration("region_radius must be nonnegative")
        if Fraction(self.container_factor).limit_denominator() < 2:
            raise InvalidConfiguration("container_factor must be at least 2")
        if self.boundary_mode not in ("wired", "infinity_approx"):
            raise InvalidConfiguration(f"unknown boundary_mode {self.boundary_mode!r}")
        if self.order not in ("spiral", "intrinsic"):
            raise InvalidConfiguration(f"unknown order {self.order!r}")
        if self.container_radius < self.region_radius + 2:
            raise InvalidConfiguration("container must exceed the region by at least 2")

    @property
    def container_radius(self) -> int:
        return max(int(math.ceil(self.container_factor * self.region_radius)), self.region_radius + 2)

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_infinity_approx(config: WilsonConfig, rng, sampler: LatticeWilson | None = None,
                           meta: dict | None = None) -> SpanningTree:
    """Sample the UST near the origin, approximating Z^3 by a wired container.

    The first branch is the loop-erased walk from the origin to the
    container exit.  With ``order="spiral"`` every vertex of the Euclidean
    region ball is then attached in spiral order; with ``order="intrinsic"``
    only the vertices needed to determine the intrinsic ball of radius
    ``region_radius`` (and its exit layer and degrees) are attached, plus
    with ``cover_component`` also those needed for the component of the
    tree inside the Euclidean region ball that contains the origin.
    """
    if sampler is None or sampler.C != config.container_radius or sampler.box.norm != config.container_norm:
        sampler = LatticeWilson(config.container_radius, config.container_norm)
    sampler.reset(rng)
    sampler.cover([(0, 0, 0)])
    r = config.region_radius
    if config.order == "spiral":
        sampler.cover(Box(LatticePoint(0, 0, 0), r).points())
    else:
        sampler.explore(max_depth=r)
        if config.cover_component:
            sampler.explore(max_norm2=r * r)
    m = {"config": config.to_dict()}
    m.update(meta or {})
    return sampler.tree(m)
