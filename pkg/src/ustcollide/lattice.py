"""Geometry of the cubic lattice Z^3."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class LatticePoint(NamedTuple):
    x: int
    y: int
    z: int

    def __add__(self, other):  # type: ignore[override]
        return LatticePoint(self.x + other[0], self.y + other[1], self.z + other[2])

    def __sub__(self, other):
        return LatticePoint(self.x - other[0], self.y - other[1], self.z - other[2])

    def norm2(self) -> int:
        return self.x * self.x + self.y * self.y + self.z * self.z


ORIGIN = LatticePoint(0, 0, 0)

# +x, -x, +y, -y, +z, -z.  Direction k and k ^ 1 are opposite.
DIRECTIONS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=np.int64
)
_DIR_TUPLES = tuple(LatticePoint(*map(int, d)) for d in DIRECTIONS)


def neighbors(p) -> tuple[LatticePoint, ...]:
    """The six nearest neighbours of ``p`` in the order +x, -x, +y, -y, +z, -z."""
    x, y, z = p
    return (
        LatticePoint(x + 1, y, z),
        LatticePoint(x - 1, y, z),
        LatticePoint(x, y + 1, z),
        LatticePoint(x, y - 1, z),
        LatticePoint(x, y, z + 1),
        LatticePoint(x, y, z - 1),
    )


def euclidean_distance(p, q) -> float:
    return float(np.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2))


def adjacent(p, q) -> bool:
    return abs(p[0] - q[0]) + abs(p[1] - q[1]) + abs(p[2] - q[2]) == 1


def _check_steps(arr: np.ndarray) -> None:
    if len(arr) > 1:
        bad = np.nonzero(np.abs(np.diff(arr, axis=0)).sum(axis=1) != 1)[0]
        if len(bad):
            i = int(bad[0])
            raise ValueError(f"{tuple(arr[i])} and {tuple(arr[i + 1])} are not lattice neighbours")


@dataclass(frozen=True)
class LatticePath:
    """A nearest-neighbour path; ``len(path)`` is the number of steps."""

    vertices: tuple[LatticePoint, ...]

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("a path has at least one vertex")
        vs = self.vertices
        if not all(type(v) is LatticePoint for v in vs):
            vs = tuple(LatticePoint(*map(int, v)) for v in vs)
        _check_steps(np.array(vs, dtype=np.int64).reshape(-1, 3))
        object.__setattr__(self, "vertices", tuple(vs))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "LatticePath":
        arr = np.asarray(arr, dtype=np.int64).reshape(-1, 3)
        if len(arr) == 0:
            raise ValueError("a path has at least one vertex")
        _check_steps(arr)
        obj = object.__new__(cls)
        object.__setattr__(obj, "vertices", tuple(map(LatticePoint._make, arr.tolist())))
        return obj

    def to_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.int64).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.vertices) - 1

    def __iter__(self):
        return iter(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    @property
    def start(self) -> LatticePoint:
        return self.vertices[0]

    @property
    def end(self) -> LatticePoint:
        return self.vertices[-1]

    def is_simple(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)


@dataclass(frozen=True)
class Box:
    """Lattice points within ``radius`` of ``center``.

    ``norm`` is ``"2"`` for the Euclidean ball B(x, r) or ``"inf"`` for the
    cube [x - r, x + r]^3.
    """

    center: LatticePoint = ORIGIN
    radius: int = 0
    norm: str = "2"

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.norm not in ("2", "inf"):
            raise ValueError(f"unknown norm {self.norm!r}")
        object.__setattr__(self, "center", LatticePoint(*map(int, self.center)))

    def __contains__(self, p) -> bool:
        dx, dy, dz = p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]
        if self.norm == "inf":
            return max(abs(dx), abs(dy), abs(dz)) <= self.radius
        return dx * dx + dy * dy + dz * dz <= self.radius * self.radius

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        d = np.asarray(pts, dtype=np.int64) - np.asarray(self.center, dtype=np.int64)
        if self.norm == "inf":
            return np.abs(d).max(axis=-1) <= self.radius
        return (d * d).sum(axis=-1) <= self.radius * self.radius

    def points(self) -> np.ndarray:
        """All member points as an (n, 3) array in spiral order."""
        r = self.radius
        ax = np.arange(-r, r + 1, dtype=np.int64)
        g = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
        d2 = (g * g).sum(axis=1)
        if self.norm == "2":
            keep = d2 <= r * r
            g, d2 = g[keep], d2[keep]
        # np.lexsort sorts by the last key first
        order = np.lexsort((g[:, 2], g[:, 1], g[:, 0], d2))
        return g[order] + np.asarray(self.center, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.points())


def spiral_order(box: Box) -> list[LatticePoint]:
    """Box vertices sorted by distance from the centre, ties broken lexicographically."""
    return [LatticePoint(int(a), int(b), int(c)) for a, b, c in box.points()]


def _as_set(A: Iterable) -> set[LatticePoint]:
    return {LatticePoint(*map(int, a)) for a in A}


def inner_boundary(A: Iterable) -> set[LatticePoint]:
    """Points of A with at least one neighbour outside A."""
    S = _as_set(A)
    return {x for x in S if any(y not in S for y in neighbors(x))}


def outer_boundary(A: Iterable) -> set[LatticePoint]:
    """Points outside A with at least one neighbour in A."""
    S = _as_set(A)
    return {y for x in S for y in neighbors(x) if y not in S}


def encode(points: np.ndarray, offset: int = 1 << 20) -> np.ndarray:
    """Pack (n, 3) integer coordinates with |c| < 2^20 into int64 keys."""
    p = np.asarray(points, dtype=np.int64) + offset
    return (p[..., 0] << 42) | (p[..., 1] << 21) | p[..., 2]


def path_from_points(points: Sequence) -> LatticePath:
    return LatticePath(tuple(points))
