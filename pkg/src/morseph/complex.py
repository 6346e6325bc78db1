"""Clique (flag) complexes of simple graphs, truncated at a dimension cap."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .graph import Graph

__all__ = [
    "CliqueComplex",
    "build_clique_complex",
    "degeneracy_order",
    "euler_characteristic",
    "faces",
    "write_complex",
]

Simplex = tuple[int, ...]


def faces(s: Simplex) -> list[Simplex]:
    """Codimension-1 faces, the i-th one obtained by deleting vertex i."""
    if len(s) <= 1:
        return []
    return [s[:i] + s[i + 1:] for i in range(len(s))]


@dataclass(frozen=True, eq=False)
class CliqueComplex:
    """All cliques of a graph with at most ``cap + 1`` vertices.

    ``simplices[p]`` is an ``(n_p, p + 1)`` integer array whose rows are
    strictly increasing vertex lists in lexicographic order. ``face_index[p]``
    is an ``(n_p, p + 1)`` array; entry ``[j, i]`` is the row in
    ``simplices[p - 1]`` of simplex ``j`` with vertex ``i`` deleted
    (``face_index[0]`` is empty).
    """

    cap: int
    vertex_count: int
    simplices: tuple[np.ndarray, ...]
    face_index: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        """Largest p with at least one p-simplex (-1 for the empty complex)."""
        for p in range(len(self.simplices) - 1, -1, -1):
            if len(self.simplices[p]):
                return p
        return -1

    @property
    def counts(self) -> list[int]:
        return [len(s) for s in self.simplices]

    @property
    def size(self) -> int:
        return sum(self.counts)

    def simplex(self, p: int, j: int) -> Simplex:
        return tuple(int(v) for v in self.simplices[p][j])

    def iter_simplices(self):
        """Yield ``(p, j, simplex)`` in canonical dimension-major order."""
        for p, arr in enumerate(self.simplices):
            for j, row in enumerate(arr.tolist()):
                yield p, j, tuple(row)

    def index_of(self, s: Simplex) -> tuple[int, int]:
        """Return ``(dimension, row)`` of a stored simplex; KeyError otherwise."""
        p = len(s) - 1
        if not 0 <= p < len(self.simplices):
            raise KeyError(s)
        arr = self.simplices[p]
        target = np.asarray(s)
        lo, hi = 0, len(arr)
        while lo < hi:
            mid = (lo + hi) // 2
            if tuple(arr[mid]) < s:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(arr) and np.array_equal(arr[lo], target):
            return p, lo
        raise KeyError(s)

    def __contains__(self, s) -> bool:
        try:
            self.index_of(tuple(s))
        except KeyError:
            return False
        return True

    def cofaces(self) -> list[list[list[int]]]:
        """For each dimension p < top, the list of (p+1)-coface rows per p-simplex."""
        out = []
        for p in range(len(self.simplices) - 1):
            co: list[list[int]] = [[] for _ in range(len(self.simplices[p]))]
            for j, row in enumerate(self.face_index[p + 1].tolist()):
                for f in row:
                    co[f].append(j)
            out.append(co)
        return out


def degeneracy_order(g: Graph) -> list[int]:
    """Vertices in smallest-last (degeneracy) order, via a bucket queue."""
    n = g.vertex_count
    deg = [len(a) for a in g.adjacency]
    maxd = max(deg, default=0)
    buckets: list[set[int]] = [set() for _ in range(maxd + 1)]
    for v, d in enumerate(deg):
        buckets[d].add(v)
    removed = [False] * n
    order = []
    lo = 0
    for _ in range(n):
        lo = max(lo - 1, 0)
        while not buckets[lo]:
            lo += 1
        v = min(buckets[lo])
        buckets[lo].remove(v)
        removed[v] = True
        order.append(v)
        for u in g.adjacency[v]:
            if not removed[u]:
                buckets[deg[u]].remove(u)
                deg[u] -= 1
                buckets[deg[u]].add(u)
    return order


def _list_cliques(g: Graph, max_size: int) -> list[list[Simplex]]:
    """Every clique with 1..max_size vertices, each listed once (unsorted)."""
    by_size: list[list[Simplex]] = [[] for _ in range(max_size)]
    if max_size == 0:
        return by_size
    order = degeneracy_order(g)
    rank = [0] * g.vertex_count
    for i, v in enumerate(order):
        rank[v] = i
    forward = [{u for u in g.adjacency[v] if rank[u] > rank[v]} for v in range(g.vertex_count)]

    def extend(clique: list[int], cand: set[int]) -> None:
        by_size[len(clique) - 1].append(tuple(sorted(clique)))
        if len(clique) == max_size:
            return
        for u in cand:
            clique.append(u)
            extend(clique, cand & forward[u])
            clique.pop()

    for v in range(g.vertex_count):
        extend([v], forward[v])
    return by_size


def _lex_sorted(rows: list[Simplex], width: int) -> np.ndarray:
    if not rows:
        return np.empty((0, width), dtype=np.int64)
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), width)
    order = np.lexsort(arr.T[::-1])
    return arr[order]


def _row_keys(arr: np.ndarray, base: int) -> np.ndarray:
    key = np.zeros(len(arr), dtype=np.int64)
    for col in range(arr.shape[1]):
        key = key * base + arr[:, col]
    return key


def _face_rows(lower: np.ndarray, upper: np.ndarray, n: int) -> np.ndarray:
    p = upper.shape[1] - 1
    out = np.empty((len(upper), p + 1), dtype=np.int64)
    if len(upper) == 0:
        return out
    base = max(n, 1)
    if base ** p < 2 ** 62:
        keys = _row_keys(lower, base)
        for i in range(p + 1):
            out[:, i] = np.searchsorted(keys, _row_keys(np.delete(upper, i, axis=1), base))
    else:
        lookup = {tuple(r): j for j, r in enumerate(lower.tolist())}
        for j, row in enumerate(upper.tolist()):
            for i in range(p + 1):
                out[j, i] = lookup[tuple(row[:i] + row[i + 1:])]
    return out


def build_clique_complex(g: Graph, cap: int = 3) -> CliqueComplex:
    """Enumerate the clique complex of ``g`` up to dimension ``cap``.

    Cliques are listed by growing each one only towards later vertices of a
    degeneracy ordering, so every clique appears exactly once. Storage order is
    dimension-major, then lexicographic in the (sorted) vertex ids.
    """
    if cap < 0:
        raise ValueError(f"cap must be non-negative, got {cap}")
    by_size = _list_cliques(g, cap + 1)
    simplices = tuple(_lex_sorted(rows, p + 1) for p, rows in enumerate(by_size))
    face_index = [np.empty((len(simplices[0]), 0), dtype=np.int64)]
    for p in range(1, cap + 1):
        face_index.append(_face_rows(simplices[p - 1], simplices[p], g.vertex_count))
    return CliqueComplex(cap, g.vertex_count, simplices, tuple(face_index))


def euler_characteristic(k: CliqueComplex) -> int:
    return sum((-1) ** p * n for p, n in enumerate(k.counts))


def write_complex(k: CliqueComplex, fh: TextIO | None = None) -> str:
    """Dump as ``p v0 .. vp`` lines, dimension-major and lexicographic."""
    lines = [f"{p} {' '.join(map(str, s))}\n" for p, _, s in k.iter_simplices()]
    text = "".join(lines)
    if fh is not None:
        fh.write(text)
    return text
