"""Persistent homology over Z/2 of filtered clique complexes."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .complex import CliqueComplex
from .morse import Filtration

__all__ = [
    "Barcode",
    "DiagramFormatError",
    "FiltrationOrderError",
    "PersistenceDiagram",
    "betti_numbers",
    "compute_persistence",
    "normalize",
    "read_diagram",
    "write_barcode_csv",
    "write_diagram_csv",
    "write_diagram_json",
]

INF = math.inf
DIAGRAM_HEADER = ["dim", "birth", "death", "multiplicity"]


class FiltrationOrderError(ValueError):
    """The filtration order lists a simplex before one of its faces."""


class DiagramFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PersistenceDiagram:
    """Per-dimension multisets of ``(birth, death, multiplicity)`` points.

    ``points[p]`` is sorted by ``(birth, death)``; essential classes have
    ``death == inf``. ``w_N`` is the normalization divisor, if known.
    """

    points: tuple[tuple[tuple[float, float, int], ...], ...]
    w_N: float | None = None

    @property
    def max_dim(self) -> int:
        return len(self.points) - 1

    def __len__(self) -> int:
        return sum(m for pts in self.points for _, _, m in pts)

    def array(self, dim: int | None = None, normalized: bool = False) -> np.ndarray:
        """Expanded ``(n, 2)`` array of points, one row per unit of multiplicity.

        ``dim=None`` pools every dimension (the total diagram). With
        ``normalized=True`` coordinates are divided by ``w_N`` and essential
        deaths become 1.0.
        """
        dims = range(len(self.points)) if dim is None else [dim]
        rows = []
        for p in dims:
            if p >= len(self.points):
                continue
            for b, d, mult in self.points[p]:
                rows.extend([(b, d)] * mult)
        arr = np.array(rows, dtype=np.float64).reshape(-1, 2)
        if normalized:
            if self.w_N is None:
                raise ValueError("diagram has no normalization constant w_N")
            arr = arr / self.w_N
            arr[np.isinf(arr[:, 1]), 1] = 1.0
        return arr

    def with_w_N(self, w_N: float) -> "PersistenceDiagram":
        return PersistenceDiagram(self.points, w_N)


@dataclass(frozen=True)
class Barcode:
    """Normalized intervals per dimension; a death of 1.0 means "never dies"."""

    intervals: tuple[tuple[tuple[float, float], ...], ...]
    w_N: float = field(default=1.0)


def _positions(k: CliqueComplex, filt: Filtration) -> list[np.ndarray]:
    total = k.size
    if len(filt.order_dim) != total:
        raise FiltrationOrderError(f"order has {len(filt.order_dim)} entries for {total} simplices")
    pos = [np.full(len(s), -1, dtype=np.int64) for s in k.simplices]
    for i, (p, j) in enumerate(zip(filt.order_dim.tolist(), filt.order_row.tolist())):
        if pos[p][j] != -1:
            raise FiltrationOrderError(f"simplex ({p}, {j}) listed twice")
        pos[p][j] = i
    for p in range(1, len(k.simplices)):
        if len(k.simplices[p]) and (pos[p - 1][k.face_index[p]] > pos[p][:, None]).any():
            bad = int(np.flatnonzero((pos[p - 1][k.face_index[p]] > pos[p][:, None]).any(axis=1))[0])
            raise FiltrationOrderError(f"{p}-simplex {k.simplex(p, bad)} precedes one of its faces")
    return pos


def compute_persistence(k: CliqueComplex, filt: Filtration, w_N: float | None = None) -> PersistenceDiagram:
    """Persistence pairs of ``filt`` by column reduction of the boundary matrix.

    Columns are Python integers used as Z/2 bit vectors over the rows of the
    next-lower dimension, indexed by filtration position within that
    dimension. Dimensions are reduced top-down; a column already known to
    create a class that is later killed is cleared without reduction. Pairs
    born and killed at the same weight are dropped.
    """
    pos = _positions(k, filt)
    top = len(k.simplices) - 1
    # rank within each dimension, consistent with the global order
    rank = []
    by_rank = []
    for p in range(top + 1):
        o = np.argsort(pos[p], kind="stable")
        r = np.empty_like(o)
        r[o] = np.arange(len(o))
        rank.append(r)
        by_rank.append(o)

    killed = [np.zeros(len(s), dtype=bool) for s in k.simplices]  # birth simplex got a death partner
    killer = [np.zeros(len(s), dtype=bool) for s in k.simplices]  # column reduced to a nonzero pivot
    pairs: list[list[tuple[int, int]]] = [[] for _ in range(top + 1)]  # (birth row, death row) per birth dim

    for p in range(top, 0, -1):
        faces_rank = rank[p - 1][k.face_index[p]].tolist()
        clear = killed[p]
        pivot_col: dict[int, int] = {}
        for r in range(len(by_rank[p])):
            j = int(by_rank[p][r])
            if clear[j]:
                continue
            col = 0
            for fr in faces_rank[j]:
                col ^= 1 << fr
            while col:
                low = col.bit_length() - 1
                other = pivot_col.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                low = col.bit_length() - 1
                pivot_col[low] = col
                birth = int(by_rank[p - 1][low])
                killed[p - 1][birth] = True
                killer[p][j] = True
                pairs[p - 1].append((birth, j))

    counters: list[Counter] = [Counter() for _ in range(top + 1)]
    for p in range(top + 1):
        w_lo = filt.weight[p]
        for birth, death in pairs[p]:
            b, d = float(w_lo[birth]), float(filt.weight[p + 1][death])
            if b < d:
                counters[p][(b, d)] += 1
            elif b > d:
                raise FiltrationOrderError("death weight below birth weight; filtration weights are not face-monotone")
        essential = ~(killed[p] | killer[p])
        for b in w_lo[essential].tolist():
            counters[p][(float(b), INF)] += 1
    points = tuple(tuple(sorted((b, d, m) for (b, d), m in c.items())) for c in counters)
    return PersistenceDiagram(points, w_N)


def betti_numbers(d: PersistenceDiagram) -> tuple[int, ...]:
    """Counts of essential classes per dimension."""
    return tuple(sum(m for _, death, m in pts if math.isinf(death)) for pts in d.points)


def normalize(d: PersistenceDiagram, w_N: float | None = None) -> Barcode:
    """Divide every coordinate by ``w_N``; essential deaths map to 1.0."""
    w_N = d.w_N if w_N is None else w_N
    if w_N is None:
        raise ValueError("w_N is required")
    finite = [x for pts in d.points for b, dd, _ in pts for x in (b, dd) if not math.isinf(x)]
    if finite and w_N <= max(finite):
        raise ValueError(f"w_N={w_N} must exceed every weight in the diagram (max {max(finite)})")
    intervals = []
    for pts in d.points:
        bars = []
        for b, dd, m in pts:
            bar = (b / w_N, 1.0 if math.isinf(dd) else dd / w_N)
            bars.extend([bar] * m)
        intervals.append(tuple(bars))
    return Barcode(tuple(intervals), w_N)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else format(x, ".17g")


def _rows(d: PersistenceDiagram):
    for p, pts in enumerate(d.points):
        for b, dd, m in sorted(pts):
            yield p, b, dd, m


def write_diagram_csv(d: PersistenceDiagram, fh: TextIO | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGRAM_HEADER)
    for p, b, dd, m in _rows(d):
        w.writerow([p, _fmt(b), _fmt(dd), m])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def write_diagram_json(d: PersistenceDiagram, fh: TextIO | None = None) -> str:
    payload = {
        "max_dim": d.max_dim,
        "w_N": d.w_N,
        "points": [
            {"dim": p, "birth": b, "death": "inf" if math.isinf(dd) else dd, "multiplicity": m}
            for p, b, dd, m in _rows(d)
        ],
    }
    text = json.dumps(payload, indent=1) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def write_barcode_csv(bc: Barcode, fh: TextIO | None = None) -> str:
    lines = ["dim,birth,death\n"]
    for p, bars in enumerate(bc.intervals):
        for b, dd in sorted(bars):
            lines.append(f"{p},{b:.6f},{dd:.6f}\n")
    text = "".join(lines)
    if fh is not None:
        fh.write(text)
    return text


def _parse_death(s) -> float:
    if isinstance(s, str) and s.strip().lower() in ("inf", "infinity"):
        return INF
    return float(s)


def _assemble(rows, max_dim: int | None, w_N) -> PersistenceDiagram:
    top = max([p for p, *_ in rows] + [max_dim if max_dim is not None else -1])
    counters = [Counter() for _ in range(top + 1)]
    for p, b, dd, m in rows:
        if m <= 0:
            raise DiagramFormatError("multiplicity must be positive")
        if not b < dd:
            raise DiagramFormatError(f"birth {b} not below death {dd}")
        counters[p][(b, dd)] += m
    points = tuple(tuple(sorted((b, dd, m) for (b, dd), m in c.items())) for c in counters)
    return PersistenceDiagram(points, None if w_N is None else float(w_N))


def read_diagram(path) -> PersistenceDiagram:
    """Load a diagram written by :func:`write_diagram_csv` or :func:`write_diagram_json`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        if str(path).endswith(".json"):
            payload = json.loads(text)
            rows = [
                (int(r["dim"]), float(r["birth"]), _parse_death(r["death"]), int(r["multiplicity"]))
                for r in payload["points"]
            ]
            return _assemble(rows, payload.get("max_dim"), payload.get("w_N"))
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != DIAGRAM_HEADER:
            raise DiagramFormatError(f"{path}: expected header {','.join(DIAGRAM_HEADER)}")
        rows = [(int(r[0]), float(r[1]), _parse_death(r[2]), int(r[3])) for r in reader if r]
        return _assemble(rows, None, None)
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        if isinstance(exc, DiagramFormatError):
            raise
        raise DiagramFormatError(f"{path}: {exc}") from exc
