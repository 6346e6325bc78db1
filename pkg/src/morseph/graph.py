"""Simple undirected graphs: edge-list parsing, validation and degree statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "DegreeSummary",
    "Graph",
    "GraphParseError",
    "degree_summary",
    "load_edge_list",
    "read_edge_list",
    "write_edge_list",
]

COMMENT_PREFIXES = ("#", "%")


class GraphParseError(ValueError):
    """Raised for malformed edge-list input; carries the 1-based line number."""

    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph on vertices ``0..vertex_count-1``.

    ``adjacency[v]`` is a sorted tuple of neighbours. ``label_map`` maps the
    external labels seen in the input to internal ids (empty for generated
    graphs).
    """

    vertex_count: int
    adjacency: tuple[tuple[int, ...], ...]
    label_map: dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.adjacency) != self.vertex_count:
            raise ValueError("adjacency length must equal vertex_count")
        for v, nbrs in enumerate(self.adjacency):
            prev = -1
            for u in nbrs:
                if u == v:
                    raise ValueError(f"self-loop at vertex {v}")
                if not 0 <= u < self.vertex_count:
                    raise ValueError(f"neighbour {u} of {v} out of range")
                if u <= prev:
                    raise ValueError(f"adjacency of {v} not strictly increasing")
                prev = u
        for v, nbrs in enumerate(self.adjacency):
            for u in nbrs:
                if not _contains(self.adjacency[u], v):
                    raise ValueError(f"asymmetric edge {v}-{u}")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        label_map: dict[str, int] | None = None,
    ) -> "Graph":
        """Build from integer edges; self-loops are dropped, duplicates collapsed."""
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                continue
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs), dict(label_map or {}))

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` with ``u < v``, lexicographically sorted."""
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def has_edge(self, u: int, v: int) -> bool:
        return _contains(self.adjacency[u], v)

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=self.vertex_count)

    def connected_components(self) -> int:
        seen = [False] * self.vertex_count
        count = 0
        for s in range(self.vertex_count):
            if seen[s]:
                continue
            count += 1
            seen[s] = True
            stack = [s]
            while stack:
                v = stack.pop()
                for u in self.adjacency[v]:
                    if not seen[u]:
                        seen[u] = True
                        stack.append(u)
        return count


def _contains(sorted_tuple: tuple[int, ...], x: int) -> bool:
    lo, hi = 0, len(sorted_tuple)
    while lo < hi:
        mid = (lo + hi) // 2
        if sorted_tuple[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < len(sorted_tuple) and sorted_tuple[lo] == x


@dataclass(frozen=True)
class DegreeSummary:
    degrees: np.ndarray
    deg_max: int


def degree_summary(g: Graph) -> DegreeSummary:
    degrees = g.degrees()
    return DegreeSummary(degrees, int(degrees.max()) if len(degrees) else 0)


def load_edge_list(text: str | Iterable[str]) -> Graph:
    """Parse a whitespace-separated edge list.

    Lines starting with ``#`` or ``%`` are comments; blank lines are ignored.
    A line ``v <label>`` declares a (possibly isolated) vertex. Labels receive
    dense ids in first-seen order. Self-loops are dropped and repeated edges
    collapsed.

    Raises
    ------
    GraphParseError
        If a data line does not have exactly two tokens.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    labels: dict[str, int] = {}

    def vid(label: str) -> int:
        if label not in labels:
            labels[label] = len(labels)
        return labels[label]

    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tokens = line.split()
        if len(tokens) == 2 and tokens[0] == "v":
            # the edge "v x" is ambiguous with a vertex declaration; declarations win
            vid(tokens[1])
            continue
        if len(tokens) != 2:
            raise GraphParseError(lineno, raw.rstrip("\n"), f"expected 2 tokens, got {len(tokens)}")
        edges.append((vid(tokens[0]), vid(tokens[1])))
    return Graph.from_edges(len(labels), edges, labels)


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh)


def write_edge_list(g: Graph, fh: TextIO | None = None) -> str:
    """Serialize as ``u v`` lines with ``u < v`` in lexicographic order.

    Isolated vertices are emitted first as ``v <id>`` declarations so the
    vertex count survives a round trip.
    """
    out = []
    for v, nbrs in enumerate(g.adjacency):
        if not nbrs:
            out.append(f"v {v}\n")
    out.extend(f"{u} {v}\n" for u, v in g.edges())
    text = "".join(out)
    if fh is not None:
        fh.write(text)
    return text
