"""Points, boxes, seeded randomness and the uniform-grid neighbor index.

Everything downstream (front generation, quality metrics, RBF stencils)
works on plain float64 numpy arrays: a point is a shape ``(d,)`` array and
a point cloud is a shape ``(N, d)`` array with ``d`` in {2, 3}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundingBox",
    "PointSet",
    "Rng",
    "SpatialIndex",
    "knn",
    "range_query",
    "max_node_bound",
    "unit_ball_volume",
    "read_points",
    "write_points",
]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with strictly positive extent along every axis."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box corners must be finite")
        if not np.all(lo < hi):
            raise ValueError("box must satisfy lo < hi on every axis")

    @property
    def dimension(self) -> int:
        return self.lo.size

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of ``points`` inside the closed box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def shrink(self, margin: float) -> "BoundingBox":
        """Box inset by ``margin`` from every face; errors if degenerate."""
        lo = self.lo + margin
        hi = self.hi - margin
        if not np.all(lo < hi):
            raise ValueError(f"inset {margin} leaves an empty box")
        return BoundingBox(lo, hi)


@dataclass
class PointSet:
    """Generated nodes in placement order plus generation metadata."""

    dimension: int
    points: np.ndarray  # (N, d), rows in emission order
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, self.dimension)

    def __len__(self) -> int:
        return self.points.shape[0]


class Rng:
    """Seeded PCG64 stream.

    The algorithm is pinned so that a given seed reproduces the same
    node sets on every platform.
    """

    algorithm = "pcg64"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)


class SpatialIndex:
    """Uniform hash grid over a point cloud.

    Cells are cubes of side ``cell_size`` keyed by their integer lattice
    coordinates; queries gather the buckets overlapping the search ball
    and filter by exact Euclidean distance, so results are exact for any
    cell size.  Bulk insertion is single-writer; a fully built index is
    safe to query from many threads.
    """

    def __init__(self, cell_size: float, dimension: int):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        self.cell_size = float(cell_size)
        self.dimension = dimension
        self._points = np.empty((0, dimension), dtype=float)
        self._buckets: dict[tuple, np.ndarray] = {}
        self._cell_lo = np.zeros(dimension, dtype=np.int64)
        self._cell_hi = np.full(dimension, -1, dtype=np.int64)

    @classmethod
    def from_points(cls, points: np.ndarray, cell_size: float) -> "SpatialIndex":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        index = cls(cell_size, points.shape[1])
        index.insert_many(points)
        return index

    def __len__(self) -> int:
        return self._points.shape[0]

    @property
    def points(self) -> np.ndarray:
        return self._points

    def insert_many(self, points: np.ndarray) -> None:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dimension:
            raise ValueError("point dimension does not match index")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        offset = self._points.shape[0]
        self._points = np.vstack([self._points, points]) if offset else points.copy()
        keys = np.floor(points / self.cell_size).astype(np.int64)
        if offset == 0:
            self._cell_lo = keys.min(axis=0)
            self._cell_hi = keys.max(axis=0)
        else:
            self._cell_lo = np.minimum(self._cell_lo, keys.min(axis=0))
            self._cell_hi = np.maximum(self._cell_hi, keys.max(axis=0))
        # Group rows by cell without a per-point python loop.
        order = np.lexsort(keys.T[::-1])
        sorted_keys = keys[order]
        boundaries = np.nonzero(np.any(np.diff(sorted_keys, axis=0) != 0, axis=1))[0] + 1
        starts = np.concatenate([[0], boundaries])
        ends = np.concatenate([boundaries, [len(order)]])
        for s, e in zip(starts, ends):
            key = tuple(int(v) for v in sorted_keys[s])
            idx = order[s:e] + offset
            prev = self._buckets.get(key)
            self._buckets[key] = idx if prev is None else np.concatenate([prev, idx])

    def _cell_of(self, point: np.ndarray) -> np.ndarray:
        return np.floor(np.asarray(point, dtype=float) / self.cell_size).astype(np.int64)

    def _gather(self, cell_lo: np.ndarray, cell_hi: np.ndarray) -> np.ndarray:
        """Concatenated bucket contents for cells in [cell_lo, cell_hi]."""
        chunks = []
        ranges = [range(int(a), int(b) + 1) for a, b in zip(cell_lo, cell_hi)]
        if self.dimension == 2:
            for i in ranges[0]:
                for j in ranges[1]:
                    hit = self._buckets.get((i, j))
                    if hit is not None:
                        chunks.append(hit)
        else:
            for i in ranges[0]:
                for j in ranges[1]:
                    for k in ranges[2]:
                        hit = self._buckets.get((i, j, k))
                        if hit is not None:
                            chunks.append(hit)
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(chunks)

    def range_query(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Indices of stored points within the closed ball around ``center``."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        center = np.asarray(center, dtype=float)
        if len(self) == 0:
            return np.empty(0, dtype=np.int64)
        lo = np.maximum(np.floor((center - radius) / self.cell_size).astype(np.int64), self._cell_lo)
        hi = np.minimum(np.floor((center + radius) / self.cell_size).astype(np.int64), self._cell_hi)
        if np.any(hi < lo):
            return np.empty(0, dtype=np.int64)
        if np.prod(hi - lo + 1) > 4 * len(self) + 64:
            cand = np.arange(len(self), dtype=np.int64)
        else:
            cand = self._gather(lo, hi)
        if cand.size == 0:
            return cand
        d2 = np.sum((self._points[cand] - center) ** 2, axis=1)
        return cand[d2 <= radius * radius]

    def knn(self, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k nearest stored points to ``query``.

        Returns ``(indices, distances)`` ascending by distance, ties broken
        by lower point index.  If the query coincides with a stored point,
        that one stored copy is excluded.
        """
        if k <= 0:
            raise ValueError("k must be positive")
        query = np.asarray(query, dtype=float)
        n = len(self)
        if n < k:
            raise ValueError(f"k-NN query needs at least {k} stored points, index holds {n}")
        cell = self._cell_of(query)
        # Expand Chebyshev rings until the k-th best distance is certified:
        # every point within (ring-1)*cell_size of the query lies in a
        # gathered cell, so a k-th distance below that bound is final.
        max_ring = int(np.max(np.maximum(np.abs(self._cell_lo - cell), np.abs(self._cell_hi - cell))))
        ring = 2
        while True:
            if ring >= max_ring or (2 * ring + 1) ** self.dimension > 4 * n + 64:
                cand = np.arange(n, dtype=np.int64)
            else:
                cand = self._gather(cell - ring, cell + ring)
            exhaustive = cand.size == n
            dist = np.empty(0)
            if cand.size:
                dist = np.sqrt(np.sum((self._points[cand] - query) ** 2, axis=1))
                order = np.lexsort((cand, dist))
                cand, dist = cand[order], dist[order]
                if dist.size and dist[0] == 0.0:
                    cand, dist = cand[1:], dist[1:]
                if dist.size >= k and (exhaustive or dist[k - 1] <= (ring - 1) * self.cell_size):
                    return cand[:k], dist[:k]
            if exhaustive:
                raise ValueError(f"k-NN query needs at least {k} stored points, found {cand.size}")
            ring *= 2


def knn(index: SpatialIndex, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The k nearest stored points to ``query`` as (index, distance) pairs."""
    idx, dist = index.knn(query, k)
    return [(int(i), float(d)) for i, d in zip(idx, dist)]


def range_query(index: SpatialIndex, center: np.ndarray, radius: float) -> np.ndarray:
    """Indices of stored points within distance ``radius`` of ``center``."""
    return index.range_query(center, radius)


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional unit ball."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def max_node_bound(box: BoundingBox, r_min: float, d: int) -> float:
    """Upper bound on how many nodes with minimum spacing ``r_min`` fit in ``box``.

    Packing balls of radius ``r_min / 2`` cannot exceed the box volume, so the
    count is below ``Vol(box) / (V_d * (r_min / 2)**d)`` with ``V_d`` the unit
    ball volume.
    """
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    if d != box.dimension:
        raise ValueError("d must match the box dimension")
    return box.volume / (unit_ball_volume(d) * (r_min / 2.0) ** d)


def write_points(path, points, comments: list[str] | None = None) -> None:
    """Write points as plain text, one point per line, >= 15 significant digits."""
    if isinstance(points, PointSet):
        points = points.points
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", encoding="ascii") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        for row in points:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_points(path) -> PointSet:
    """Read a text point file; dimension is inferred from the first data line."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValueError(f"no data lines in {path}")
    dim = len(rows[0])
    if dim not in (2, 3):
        raise ValueError(f"unsupported point dimension {dim}")
    if any(len(r) != dim for r in rows):
        raise ValueError("inconsistent coordinate counts between lines")
    return PointSet(dim, np.array(rows, dtype=float))
