"""Intrinsic geometry of a sampled tree: paths, distances, balls, components."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .lattice import LatticePath, LatticePoint
from .wilson import ContainerTooSmall, SpanningTree


class NotInTree(KeyError):
    pass


class TruncationError(ContainerTooSmall):
    """The requested region needs tree information beyond what was sampled."""


def _idx(tree: SpanningTree, p) -> int:
    i = int(tree.index_of([tuple(p)])[0])
    if i < 0:
        raise NotInTree(f"{tuple(p)} is not a vertex of the tree")
    return i


def tree_path(tree: SpanningTree, x, y) -> LatticePath:
    """The unique simple path from x to y in the tree."""
    i, j = _idx(tree, x), _idx(tree, y)
    up_i = tree.path_to_root(i)
    up_j = tree.path_to_root(j)
    if up_i[-1] != up_j[-1]:
        raise TruncationError("x and y are joined only through the wired boundary")
    # strip the common tail
    a, b = len(up_i) - 1, len(up_j) - 1
    while a > 0 and b > 0 and up_i[a - 1] == up_j[b - 1]:
        a -= 1
        b -= 1
    chain = up_i[: a + 1] + up_j[:b][::-1]
    return LatticePath(tuple(tree.point(k) for k in chain))


def tree_distance(tree: SpanningTree, x, y) -> int:
    return len(tree_path(tree, x, y))


@numba.njit(cache=True)
def _bfs(parent, indptr, kids, points, center, max_depth, max_norm2):
    """Breadth-first search along tree edges.

    Vertices with depth <= max_depth and squared norm <= max_norm2 are
    members and get expanded; their other tree neighbours are recorded as
    exits.  Returns (members, member_pred, member_depth, exits, exit_owner,
    root_edges) where predecessors/owners are positions in ``members`` and
    ``root_edges`` counts members whose parent edge goes to the super-vertex.
    """
    n = parent.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    members = np.empty(n, dtype=np.int64)
    pred = np.empty(n, dtype=np.int64)
    depth = np.empty(n, dtype=np.int64)
    exits = np.empty(n, dtype=np.int64)
    owner = np.empty(n, dtype=np.int64)
    nm = 0
    ne = 0
    root_edges = 0
    members[0] = center
    pred[0] = -1
    depth[0] = 0
    seen[center] = True
    nm = 1
    head = 0
    while head < nm:
        v = members[head]
        d = depth[head]
        p = parent[v]
        if p < 0:
            root_edges += 1
        for t in range(indptr[v], indptr[v + 1] + 1):
            if t < indptr[v + 1]:
                w = kids[t]
            else:
                w = p
            if w < 0 or seen[w]:
                continue
            seen[w] = True
            nrm = points[w, 0] ** 2 + points[w, 1] ** 2 + points[w, 2] ** 2
            if d + 1 <= max_depth and nrm <= max_norm2:
                members[nm] = w
                pred[nm] = head
                depth[nm] = d + 1
                nm += 1
            else:
                exits[ne] = w
                owner[ne] = head
                ne += 1
        head += 1
    return members[:nm], pred[:nm], depth[:nm], exits[:ne], owner[:ne], root_edges


@dataclass
class IntrinsicBall:
    """Tree ball B_U(center, r) with its absorbing exit layer.

    Members are listed in breadth-first order from the centre, so
    ``member_pred[k] < k`` for every ``k > 0``.  ``exit_count[k]`` is the
    number of tree neighbours of member ``k`` outside the ball and
    ``degrees[k]`` its full tree degree.
    """

    center: LatticePoint
    radius: int
    members: np.ndarray          # indices into the tree
    member_points: np.ndarray
    member_pred: np.ndarray      # position of the BFS parent, -1 for the centre
    member_depth: np.ndarray
    exits: np.ndarray            # indices into the tree
    exit_owner: np.ndarray       # member position each exit hangs from
    degrees: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def from_structure(cls, pred, exit_owner, points=None, radius: int | None = None) -> "IntrinsicBall":
        """Build a ball from a rooted tree given in breadth-first order.

        ``pred[k]`` is the position of the parent of member ``k`` (``-1`` for
        the centre, and ``pred[k] < k``); ``exit_owner`` lists, once per exit
        edge, the member it hangs from.  Degrees follow from the edges.
        """
        pred = np.asarray(pred, dtype=np.int64)
        owner = np.asarray(exit_owner, dtype=np.int64)
        m = len(pred)
        if pred[0] != -1 or np.any(pred[1:] < 0) or np.any(pred[1:] >= np.arange(1, m)):
            raise ValueError("pred must list parents before children, with the centre first")
        depth = np.zeros(m, dtype=np.int64)
        for k in range(1, m):
            depth[k] = depth[pred[k]] + 1
        deg = np.bincount(pred[1:], minlength=m) + (pred >= 0) + np.bincount(owner, minlength=m)
        pts = np.zeros((m, 3), dtype=np.int64) if points is None else np.asarray(points, dtype=np.int64)
        r = int(depth.max()) if radius is None else int(radius)
        return cls(LatticePoint(*map(int, pts[0])), r, np.arange(m), pts, pred, depth,
                   np.arange(m, m + len(owner)), owner, deg.astype(np.int64))

    @property
    def exit_count(self) -> np.ndarray:
        return np.bincount(self.exit_owner, minlength=len(self.members))

    def member_set(self) -> set[LatticePoint]:
        return {LatticePoint(*map(int, p)) for p in self.member_points}

    def edges(self) -> list[tuple[int, int]]:
        """Member-member edges as position pairs (child, parent)."""
        k = np.arange(1, len(self.members))
        return list(zip(k.tolist(), self.member_pred[1:].tolist()))

    def local_graph(self):
        """Adjacency lists over members plus one absorbing vertex (last index).

        Every exit edge becomes an edge to the absorbing vertex, so parallel
        edges appear when a member has several exits.
        """
        m = len(self.members)
        adj: list[list[int]] = [[] for _ in range(m + 1)]
        for c, p in self.edges():
            adj[c].append(p)
            adj[p].append(c)
        for o in self.exit_owner.tolist():
            adj[o].append(m)
            adj[m].append(o)
        return adj


def _bfs_region(tree: SpanningTree, center_idx: int, max_depth: int, max_norm2: int):
    indptr, kids = tree.children()
    return _bfs(tree.parent, indptr, kids, tree.points, center_idx, max_depth, max_norm2)


def _require_complete(tree: SpanningTree, members, root_edges, what: str) -> None:
    if root_edges:
        raise TruncationError(f"{what} reaches the wired container boundary")
    if not np.all(tree.complete[members]):
        raise TruncationError(f"{what} contains vertices whose neighbourhood was not sampled")


def intrinsic_ball(tree: SpanningTree, center, r: int) -> IntrinsicBall:
    """B_U(center, r) by breadth-first search to depth r; exits sit at depth r + 1."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    c = _idx(tree, center)
    members, pred, depth, exits, owner, root_edges = _bfs_region(tree, c, r, 2**62)
    _require_complete(tree, members, root_edges, "intrinsic ball")
    return IntrinsicBall(
        center=tree.point(c),
        radius=int(r),
        members=members,
        member_points=tree.points[members],
        member_pred=pred,
        member_depth=depth,
        exits=exits,
        exit_owner=owner,
        degrees=tree.degree[members].astype(np.int64),
    )


@dataclass
class TreeComponent:
    """Component of U restricted to the Euclidean ball B(0, r) containing 0.

    ``attachments`` are the tree neighbours of the component lying outside
    the ball, each hanging from ``attach_owner`` (position in ``vertices``).
    """

    radius: int
    vertices: np.ndarray
    points: np.ndarray
    pred: np.ndarray
    depth: np.ndarray
    attachments: np.ndarray
    attach_owner: np.ndarray
    degrees: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def intrinsic_radius(self) -> int:
        return int(self.depth.max()) if len(self.depth) else 0

    def as_ball(self) -> IntrinsicBall:
        """View as an absorbing region for the network computations."""
        return IntrinsicBall(
            center=LatticePoint(*map(int, self.points[0])),
            radius=self.intrinsic_radius,
            members=self.vertices,
            member_points=self.points,
            member_pred=self.pred,
            member_depth=self.depth,
            exits=self.attachments,
            exit_owner=self.attach_owner,
            degrees=self.degrees,
            meta={"kind": "component", "euclidean_radius": self.radius},
        )


def component_Ur(tree: SpanningTree, r: int) -> TreeComponent:
    """Vertices reachable from the origin along tree edges inside B(0, r)."""
    c = _idx(tree, (0, 0, 0))
    members, pred, depth, exits, owner, root_edges = _bfs_region(tree, c, 2**62, int(r) * int(r))
    _require_complete(tree, members, root_edges, "component U_r")
    return TreeComponent(int(r), members, tree.points[members], pred, depth, exits, owner,
                         tree.degree[members].astype(np.int64))


def bfs_distances(tree: SpanningTree, source) -> np.ndarray:
    """Tree distance from ``source`` to every vertex in its component (-1 elsewhere)."""
    c = _idx(tree, source)
    members, pred, depth, *_ = _bfs_region(tree, c, 2**62, 2**62)
    out = np.full(len(tree), -1, dtype=np.int64)
    out[members] = depth
    return out
