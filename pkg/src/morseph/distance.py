"""Bottleneck and q-Wasserstein distances between persistence diagrams."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence, TextIO

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching, maximum_flow, min_weight_full_bipartite_matching
from scipy.spatial import cKDTree

from .persistence import PersistenceDiagram

__all__ = [
    "DistanceSummary",
    "MatchingProblem",
    "bottleneck",
    "distance_matrix",
    "matching_problem",
    "wasserstein",
    "write_matrix_csv",
]

MATRIX_HEADER = ["modelA", "modelB", "mean", "stderr", "metric", "q"]

# threshold graphs with more edges than this are tested through the flow network
EDGE_BUDGET = 2_000_000
# rows sharing a death value are grouped into one interval gadget from this size on
GROUP_MIN = 32


@dataclass(frozen=True)
class MatchingProblem:
    """Augmented assignment problem between two finite point sets.

    Rows are ``a`` points of X followed by ``b`` diagonal slots; columns are
    ``b`` points of Y followed by ``a`` diagonal slots. Point-to-slot entries
    are only allowed for the point's own slot; slot-to-slot costs are 0.
    """

    x: np.ndarray
    y: np.ndarray
    cost: np.ndarray
    allowed: np.ndarray

    @property
    def size(self) -> int:
        return len(self.cost)


def _diag_cost(pts: np.ndarray) -> np.ndarray:
    return (pts[:, 1] - pts[:, 0]) / 2.0


def matching_problem(x: np.ndarray, y: np.ndarray) -> MatchingProblem:
    x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 2)
    a, b = len(x), len(y)
    size = a + b
    cost = np.zeros((size, size))
    allowed = np.zeros((size, size), dtype=bool)
    if a and b:
        cost[:a, :b] = np.abs(x[:, None, :] - y[None, :, :]).max(axis=2)
        allowed[:a, :b] = True
    ia, ib = np.arange(a), np.arange(b)
    cost[ia, b + ia] = _diag_cost(x)
    allowed[ia, b + ia] = True
    cost[a + ib, ib] = _diag_cost(y)
    allowed[a + ib, ib] = True
    allowed[a:, b:] = True
    return MatchingProblem(x, y, cost, allowed)


def _split(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(arr, dtype=np.float64).reshape(-1, 2)
    fin = np.isfinite(arr[:, 1])
    finite = arr[fin]
    finite = finite[finite[:, 1] > finite[:, 0]]  # diagonal points carry no information
    return finite, np.sort(arr[~fin, 0])


def _points(d, dim: int | None, normalized: bool) -> np.ndarray:
    if isinstance(d, PersistenceDiagram):
        return d.array(dim=dim, normalized=normalized)
    return np.asarray(d, dtype=np.float64).reshape(-1, 2)


def _essential_cost(ex: np.ndarray, ey: np.ndarray) -> np.ndarray | None:
    """Per-pair costs of essential points matched by sorted birth; None if counts differ."""
    if len(ex) != len(ey):
        return None
    return np.abs(ex - ey)


def _interval_ok(centers: np.ndarray, points: np.ndarray, t: float) -> bool:
    """Can each center get its own point within distance t on the line?

    ``points`` must be sorted. Greedy over centers in increasing order, each
    taking the leftmost free point in reach; with equal-length windows the
    pointer formula ``a_k = k + max_{m<=k}(s_m - m)`` gives the greedy choice.
    """
    if len(centers) > len(points):
        return False
    if not len(centers):
        return True
    c = np.sort(centers)
    s = np.searchsorted(points, c - t, side="left")
    k = np.arange(len(c))
    a = k + np.maximum.accumulate(s - k)
    if a[-1] >= len(points):
        return False
    return bool((points[a] <= c + t).all())


class _Side:
    """Edges from one side's high-persistence points to the opposite side.

    Stored as a CSR matrix of edge ids over all rows so that rows can be
    selected by index; ``cost`` holds the L-infinity length of each edge.
    """

    def __init__(self, pts: np.ndarray, h: np.ndarray, other: np.ndarray, tree: cKDTree, t: float, lo: float, k: int | None = None):
        self.pts, self.h = pts, h
        self.other_b = np.sort(other[:, 0])
        self.other_d = np.sort(other[:, 1])
        rows = np.flatnonzero(h > lo)
        r = t * (1 + 1e-9) + 1e-300  # slack so the tree misses nothing; filtered exactly below
        if not len(rows):
            i = cols = np.empty(0, dtype=np.int64)
        elif k is None:
            # Only rows with h > t ever need saturating, at most len(rows) of
            # them. A row with that many edges within t can be matched after
            # all others, so its len(rows) nearest neighbours are as good as
            # all of them at every threshold; take whichever graph is smaller.
            sub = cKDTree(pts[rows])
            cap = min(len(rows), len(other))
            if sub.count_neighbors(tree, r, p=np.inf) <= len(rows) * cap:
                res = sub.sparse_distance_matrix(tree, r, p=np.inf, output_type="ndarray")
                i, cols = rows[res["i"]], res["j"].astype(np.int64)
            else:
                k = cap
        if len(rows) and k is not None:
            _, nn = tree.query(pts[rows], min(k, len(other)), p=np.inf, distance_upper_bound=r)
            nn = nn.reshape(len(rows), -1)
            i = np.repeat(rows, nn.shape[1])
            cols = nn.ravel()
            ok = cols < len(other)
            i, cols = i[ok], cols[ok]
        c = np.abs(pts[i] - other[cols]).max(axis=1) if len(i) else np.empty(0)
        keep = c <= t
        self.cost = c[keep]
        self.ids = csr_matrix((np.arange(1, int(keep.sum()) + 1), (i[keep], cols[keep])), shape=(len(pts), len(other)))

    def covers(self, t: float) -> bool:
        """True if edges of cost <= t admit a matching saturating every row with h > t."""
        must = np.flatnonzero(self.h > t)
        if not len(must):
            return True
        # a matching in the plane projects to matchings on both axes
        if not (_interval_ok(self.pts[must, 0], self.other_b, t) and _interval_ok(self.pts[must, 1], self.other_d, t)):
            return False
        g = self.ids[must]
        g.data = (self.cost[g.data - 1] <= t).astype(np.int8)
        g.eliminate_zeros()
        if np.diff(g.indptr).min() == 0:
            return False
        match = maximum_bipartite_matching(g, perm_type="column")
        return bool((match >= 0).all())


def _feasible(sx: _Side, sy: _Side, t: float) -> bool:
    # Points with half-persistence above t cannot go to the diagonal and must be
    # matched across; a matching covering both sides exists iff each side can
    # be covered separately (Mendelsohn-Dulmage).
    return sx.covers(t) and sy.covers(t)


def _exact_ranges(keys: np.ndarray, centers: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Half-open ranges of sorted ``keys`` with ``|key - center| <= t`` as evaluated in floating point."""
    n = len(keys)
    lo = np.searchsorted(keys, centers - t, side="left")
    hi = np.searchsorted(keys, centers + t, side="right")

    def ok(i):
        return np.abs(keys[np.clip(i, 0, n - 1)] - centers) <= t

    # the shifted search keys can round either way; the exact predicate holds
    # on a contiguous run, so nudge each end until it agrees
    while True:
        down = (lo > 0) & ok(lo - 1)
        up = (lo < n) & ~down & ~ok(lo) & (keys[np.minimum(lo, n - 1)] <= centers)
        if not (down.any() or up.any()):
            break
        lo = lo - down + up
    while True:
        up = (hi < n) & ok(hi)
        down = (hi > 0) & ~up & ~ok(hi - 1) & (keys[np.maximum(hi - 1, 0)] >= centers)
        if not (down.any() or up.any()):
            break
        hi = hi + up - down
    return lo, np.maximum(hi, lo)


def _cover(lo: np.ndarray, hi: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Segment-tree nodes (heap numbering, leaves at ``size + i``) covering each ``[lo, hi)``."""
    l, r = lo + size, hi + size
    ids = np.arange(len(lo))
    who, nodes = [], []
    while True:
        active = l < r
        if not active.any():
            break
        take = active & (l & 1 == 1)
        who.append(ids[take])
        nodes.append(l[take])
        l = l + take
        take = active & (r & 1 == 1)
        r = r - take
        who.append(ids[take])
        nodes.append(r[take])
        l >>= 1
        r >>= 1
    return np.concatenate(who), np.concatenate(nodes)


def _flow_covers(pts: np.ndarray, h: np.ndarray, other: np.ndarray, tree: cKDTree, t: float) -> bool:
    """Same question as :meth:`_Side.covers`, answered by a max flow without listing dense edges.

    Rows that share a death value D see exactly the columns with
    ``|death - D| <= t`` whose birth lies in a window around their own, a
    contiguous run once those columns are sorted by birth. Each such group
    reaches its columns through a segment tree, so a row needs O(log n)
    edges however crowded its window is. Other rows get explicit edges.
    """
    must = np.flatnonzero(h > t)
    R, C = len(must), len(other)
    if not R:
        return True
    if R > C:
        return False
    rows = pts[must]
    _, inv, counts = np.unique(rows[:, 1], return_inverse=True, return_counts=True)
    grouped = counts[inv] >= GROUP_MIN
    row_node, col_node = 2 + np.arange(R), 2 + R
    src = [np.zeros(R, dtype=np.int64), col_node + np.arange(C)]
    dst = [row_node, np.ones(C, dtype=np.int64)]
    cap = [np.ones(R, dtype=np.int64), np.ones(C, dtype=np.int64)]

    loose = np.flatnonzero(~grouped)
    if len(loose):
        r = t * (1 + 1e-9) + 1e-300
        sub = cKDTree(rows[loose])
        if sub.count_neighbors(tree, r, p=np.inf) <= EDGE_BUDGET:
            res = sub.sparse_distance_matrix(tree, r, p=np.inf, output_type="ndarray")
            i, j = loose[res["i"]], res["j"].astype(np.int64)
        else:
            # a row with R columns in reach can be served last (see _Side)
            _, nn = tree.query(rows[loose], min(R, C), p=np.inf, distance_upper_bound=r)
            nn = nn.reshape(len(loose), -1)
            i, j = np.repeat(loose, nn.shape[1]), nn.ravel()
            keep = j < C
            i, j = i[keep], j[keep]
        keep = np.abs(rows[i] - other[j]).max(axis=1) <= t
        src.append(row_node[i[keep]])
        dst.append(col_node + j[keep])
        cap.append(np.ones(int(keep.sum()), dtype=np.int64))

    base = col_node + C
    for g in np.unique(inv[grouped]):
        members = np.flatnonzero(inv == g)
        death = rows[members[0], 1]
        cols = np.flatnonzero(np.abs(other[:, 1] - death) <= t)
        if not len(cols):
            return False
        cols = cols[np.argsort(other[cols, 0], kind="stable")]
        size = 1 << max(int(len(cols) - 1).bit_length(), 0)
        inner = np.arange(1, size)
        leaf = np.arange(len(cols))
        src += [base + inner, base + inner, base + size + leaf]
        dst += [base + 2 * inner, base + 2 * inner + 1, col_node + cols]
        cap += [np.full(2 * len(inner), R, dtype=np.int64), np.ones(len(cols), dtype=np.int64)]
        lo, hi = _exact_ranges(other[cols, 0], rows[members, 0], t)
        if (lo == hi).any():
            return False
        who, nodes = _cover(lo, hi, size)
        src.append(row_node[members[who]])
        dst.append(base + nodes)
        cap.append(np.ones(len(who), dtype=np.int64))
        base += 2 * size

    src, dst, cap = np.concatenate(src), np.concatenate(dst), np.concatenate(cap)
    net = csr_matrix((cap.astype(np.int32), (src, dst)), shape=(base, base))
    return maximum_flow(net, 0, 1).flow_value == R


def _finite_bottleneck(x: np.ndarray, y: np.ndarray) -> float:
    hx, hy = _diag_cost(x), _diag_cost(y)
    upper = float(max(hx.max(initial=0.0), hy.max(initial=0.0)))
    if not len(x) or not len(y):
        return upper
    # points sorted by birth: the matcher's greedy start then follows the line
    # order, which avoids long augmenting paths on near 1-D data
    x = x[np.lexsort((x[:, 1], x[:, 0]))]
    y = y[np.lexsort((y[:, 1], y[:, 0]))]
    hx, hy = _diag_cost(x), _diag_cost(y)
    tx, ty = cKDTree(x), cKDTree(y)

    def sides(t: float, lo: float, k: int | None = None) -> tuple[_Side, _Side]:
        return _Side(x, hx, y, ty, t, lo, k), _Side(y, hy, x, tx, t, lo, k)

    # every point pays at least min(own diagonal cost, nearest opposite point)
    nx = ty.query(x, p=np.inf)[0]
    ny = tx.query(y, p=np.inf)[0]
    lower = float(max(np.minimum(hx, nx).max(), np.minimum(hy, ny).max()))
    xb, xd, yb, yd = np.sort(x[:, 0]), np.sort(x[:, 1]), np.sort(y[:, 0]), np.sort(y[:, 1])

    def projected(t: float) -> bool:
        mx, my = hx > t, hy > t
        return (_interval_ok(x[mx, 0], yb, t) and _interval_ok(x[mx, 1], yd, t)
                and _interval_ok(y[my, 0], xb, t) and _interval_ok(y[my, 1], xd, t))

    def edges(t: float, lo: float) -> int:
        r = t * (1 + 1e-9) + 1e-300
        total = 0
        for pts, h, tree in ((x, hx, ty), (y, hy, tx)):
            rows = np.flatnonzero(h > lo)
            if len(rows):
                total += int(cKDTree(pts[rows]).count_neighbors(tree, r, p=np.inf))
        return total

    def feasible(t: float, dense: bool = False) -> bool:
        if not projected(t):
            return False
        if not dense:
            # feasibility on a nearest-neighbour subgraph implies it on the full graph
            for k in (8, 64, 512):
                if _feasible(*sides(t, t, k), t):
                    return True
            dense = edges(t, t) > EDGE_BUDGET
        if dense:
            return _flow_covers(x, hx, y, ty, t) and _flow_covers(y, hy, x, tx, t)
        return _feasible(*sides(t, t), t)

    if projected(lower):
        if feasible(lower):
            return lower
        lo, hi = lower, min(upper, 2 * lower if lower > 0 else upper * 2.0 ** -20)
    else:
        # The projection test is monotone in t and needs no graph: bisect it
        # so that no threshold graph is ever built below a certified failure.
        lo, hi = lower, upper
        for _ in range(40):
            mid = (lo + hi) / 2
            if projected(mid):
                hi = mid
            else:
                lo = mid
    while hi < upper and not feasible(hi):
        lo, hi = hi, min(upper, 2 * hi)
    if edges(hi, lo) > EDGE_BUDGET:
        # Too many edges to list the candidates: bisect over the doubles in
        # (lo, hi] instead. Feasibility flips exactly at the answer, so at most
        # 64 steps land on it.
        a, b = np.float64(lo).view(np.int64), np.float64(hi).view(np.int64)
        while b - a > 1:
            m = a + (b - a) // 2
            if feasible(float(m.view(np.float64)), dense=True):
                b = m
            else:
                a = m
        return float(b.view(np.float64))
    sx, sy = sides(hi, lo)
    # Within (lo, hi] feasibility only changes at a half-persistence or at the
    # length of an edge touching a point with half-persistence above lo.
    cand = np.unique(np.concatenate([sx.cost, sy.cost, hx, hy, [hi]]))
    cand = cand[(cand > lo) & (cand <= hi)]
    l, r = 0, len(cand) - 1
    while l < r:
        mid = (l + r) // 2
        if _feasible(sx, sy, float(cand[mid])):
            r = mid
        else:
            l = mid + 1
    return float(cand[l])


def bottleneck(x, y, dim: int | None = None, normalized: bool = True) -> float:
    """Bottleneck distance with the L-infinity ground metric.

    ``x`` and ``y`` are :class:`PersistenceDiagram` objects or ``(n, 2)``
    arrays. ``dim=None`` compares total diagrams (all dimensions pooled).
    With ``normalized`` (the default) diagrams are scaled into the unit square
    and essential points sit at death 1.0, so they are ordinary points. In raw
    mode essential points are matched among themselves by sorted birth, and
    differing essential counts give ``inf``.

    The value is computed exactly: it is always one of the pairwise costs or
    half-persistences. A doubling search brackets it, then a binary search
    over the realized candidates inside the bracket pins it down, each step
    testing feasibility with a maximum bipartite matching.
    """
    fx, ex = _split(_points(x, dim, normalized))
    fy, ey = _split(_points(y, dim, normalized))
    ess = _essential_cost(ex, ey)
    if ess is None:
        return math.inf
    return max(_finite_bottleneck(fx, fy), float(ess.max(initial=0.0)))


def _wasserstein_finite(x: np.ndarray, y: np.ndarray, q: float) -> float:
    a, b = len(x), len(y)
    hx, hy = _diag_cost(x) ** q, _diag_cost(y) ** q
    if not a or not b:
        return float(hx.sum() + hy.sum())
    # A cross pair costing more than sending both ends to the diagonal is never
    # needed in an optimal matching, so only cheaper pairs become edges.
    reach = (hx + hy.max()) ** (1.0 / q)
    cand = cKDTree(y).query_ball_point(x, reach * (1 + 1e-9), p=np.inf)
    i = np.repeat(np.arange(a), [len(r) for r in cand])
    j = np.fromiter((v for r in cand for v in r), dtype=np.int64, count=len(i))
    c = np.abs(x[i] - y[j]).max(axis=1) ** q if len(i) else np.empty(0)
    keep = c <= hx[i] + hy[j]
    i, j, c = i[keep], j[keep], c[keep]
    # rows: x then diagonal slots of y; columns: y then diagonal slots of x.
    # Slot-to-slot edges mirror the kept cross pairs, which is enough to
    # complete any cross matching.
    ra, rb = np.arange(a), np.arange(b)
    rows = np.concatenate([i, ra, a + rb, a + j])
    cols = np.concatenate([j, b + ra, rb, b + i])
    cost = np.concatenate([c, hx, hy, np.zeros(len(i))])
    # constant offset keeps zero-cost edges from being read as missing; edge
    # ids recover the exact costs afterwards
    n = a + b
    g = csr_matrix((cost + 1.0, (rows, cols)), shape=(n, n))
    ids = csr_matrix((np.arange(1, len(cost) + 1), (rows, cols)), shape=(n, n))
    r, col = min_weight_full_bipartite_matching(g)
    chosen = np.asarray(ids[r, col]).ravel() - 1
    return float(cost[chosen].sum())


def wasserstein(x, y, q: float = 1.0, dim: int | None = None, normalized: bool = True) -> float:
    """q-Wasserstein distance: exact minimum-cost matching on the augmented problem."""
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if math.isinf(q):
        return bottleneck(x, y, dim, normalized)
    fx, ex = _split(_points(x, dim, normalized))
    fy, ey = _split(_points(y, dim, normalized))
    ess = _essential_cost(ex, ey)
    if ess is None:
        return math.inf
    total = float((ess ** q).sum()) + _wasserstein_finite(fx, fy, q)
    return max(total, 0.0) ** (1.0 / q)


@dataclass(frozen=True)
class DistanceSummary:
    mean: float
    stderr: float
    values: np.ndarray


def _metric_fn(metric: str, q: float):
    if metric == "bottleneck":
        return bottleneck
    if metric == "wasserstein":
        if not q >= 1:
            raise ValueError(f"q must be >= 1, got {q}")
        return partial(wasserstein, q=q)
    raise ValueError(f"unknown metric {metric!r}")


def _summarize(vals) -> DistanceSummary:
    v = np.asarray(vals, dtype=np.float64)
    if len(v) == 0:
        return DistanceSummary(0.0, 0.0, v)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return DistanceSummary(float(v.mean()), se, v)


def _pair_distance(job):
    fn, a, b, kw = job
    return fn(a, b, **kw)


def distance_matrix(
    ensembles: dict[str, Sequence] | Sequence[Sequence],
    metric: str = "bottleneck",
    q: float = 1.0,
    normalized: bool = True,
    dim: int | None = None,
    jobs: int = 1,
) -> dict[tuple[str, str], DistanceSummary]:
    """Mean and standard error of distances between every pair of ensembles.

    Off-diagonal blocks use all cross pairs; a diagonal block uses the pairs
    ``i < j`` within the ensemble (a singleton ensemble gives mean 0).
    ``jobs > 1`` spreads the pairs over worker processes.
    """
    if not isinstance(ensembles, dict):
        ensembles = {str(i): e for i, e in enumerate(ensembles)}
    if not ensembles:
        raise ValueError("no ensembles given")
    for name, e in ensembles.items():
        if len(e) == 0:
            raise ValueError(f"ensemble {name!r} is empty")
    fn = _metric_fn(metric, q)
    kw = {"normalized": normalized, "dim": dim}
    names = list(ensembles)
    blocks, work = [], []
    for i, a in enumerate(names):
        for b in names[i:]:
            A, B = ensembles[a], ensembles[b]
            if a == b:
                pairs = [(A[s], A[t]) for s in range(len(A)) for t in range(s + 1, len(A))]
            else:
                pairs = [(da, db) for da in A for db in B]
            blocks.append((a, b, len(pairs)))
            work.extend((fn, x, y, kw) for x, y in pairs)
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            vals = list(ex.map(_pair_distance, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        vals = [_pair_distance(w) for w in work]
    out = {}
    pos = 0
    for a, b, n in blocks:
        out[(a, b)] = out[(b, a)] = _summarize(vals[pos:pos + n])
        pos += n
    return out


def write_matrix_csv(
    matrix: dict[tuple[str, str], DistanceSummary],
    metric: str,
    q: float | None = None,
    fh: TextIO | None = None,
) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MATRIX_HEADER)
    qs = "" if metric == "bottleneck" or q is None else format(q, "g")
    for (a, b), s in sorted(matrix.items()):
        w.writerow([a, b, format(s.mean, ".10g"), format(s.stderr, ".10g"), metric, qs])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
