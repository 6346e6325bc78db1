"""Discrete Morse functions on clique complexes and the filtrations they induce.

The construction follows a degree-driven vertex function: low-degree vertices
get high values, so "important" simplices enter the filtration early. Higher
simplices are then valued greedily from their two largest faces, pairing a
simplex with its top face whenever that face is still free.
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

import numpy as np

from .complex import CliqueComplex
from .graph import Graph, degree_summary

__all__ = [
    "CriticalReport",
    "Filtration",
    "MorseAssignment",
    "NotFaceClosedError",
    "assign_filtration",
    "assign_morse",
    "critical_simplices",
    "dimension_filtration",
    "full_weight_filtration",
    "optimality_mu",
    "uniform_eps",
    "verify_morse",
    "vertex_function",
    "write_morse_dump",
]

log = logging.getLogger(__name__)

EPS_HIGH = 0.5

EpsSampler = Callable[[np.random.Generator], float]


class NotFaceClosedError(ValueError):
    pass


def _rng(seed) -> np.random.Generator:
    if hasattr(seed, "uniform"):
        return seed
    return np.random.default_rng(seed)


def uniform_eps(rng) -> float:
    """Draw from the open interval (0, 0.5)."""
    while True:
        e = float(rng.uniform(0.0, EPS_HIGH))
        if e > 0.0:
            return e


def vertex_function(g: Graph, seed=None, eps_sampler: EpsSampler = uniform_eps) -> np.ndarray:
    """Per-vertex base values ``deg_max - degree(v) + eps``.

    One noise term is drawn per vertex in id order. A draw that reproduces an
    already assigned value is repeated, so the result is injective.
    """
    rng = _rng(seed)
    ds = degree_summary(g)
    out = np.empty(g.vertex_count, dtype=np.float64)
    seen: set[float] = set()
    for v in range(g.vertex_count):
        base = ds.deg_max - int(ds.degrees[v])
        val = base + eps_sampler(rng)
        while val in seen:
            val = base + eps_sampler(rng)
        seen.add(val)
        out[v] = val
    return out


@dataclass(frozen=True, eq=False)
class MorseAssignment:
    """Weights of a discrete Morse function, stored per dimension.

    ``weight[p][j]`` is the value on ``k.simplices[p][j]``. ``flag`` records
    which simplices were consumed as the top face of a coface;
    ``flag_sets`` counts how often each flag was raised (never above one for
    a correct run).
    """

    weight: tuple[np.ndarray, ...]
    vertex_base: np.ndarray
    flag: tuple[np.ndarray, ...]
    flag_sets: tuple[np.ndarray, ...]
    rng_seed: int | None = None

    @property
    def max_weight(self) -> float:
        return max((float(w.max()) for w in self.weight if len(w)), default=0.0)

    def values(self) -> np.ndarray:
        return np.concatenate([w for w in self.weight]) if self.weight else np.empty(0)

    @classmethod
    def from_weights(cls, weights: Sequence[np.ndarray]) -> "MorseAssignment":
        """Wrap arbitrary per-dimension weights (no flag bookkeeping)."""
        w = tuple(np.asarray(a, dtype=np.float64) for a in weights)
        z = tuple(np.zeros(len(a), dtype=np.int8) for a in w)
        return cls(w, w[0].copy() if w else np.empty(0), z, z)


def _top_two(frows: np.ndarray, fprev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The two largest faces of each row, ties towards the lexicographically smaller face."""
    vals = fprev[frows]

    def beats(x, fx, y, fy):
        return (fx > fy) | ((fx == fy) & (x < y))

    a, b = frows[:, 0], frows[:, 1]
    fa, fb = vals[:, 0], vals[:, 1]
    swap = beats(b, fb, a, fa)
    t1, t2 = np.where(swap, b, a), np.where(swap, a, b)
    f1, f2 = np.where(swap, fb, fa), np.where(swap, fa, fb)
    for c in range(2, frows.shape[1]):
        x, fx = frows[:, c], vals[:, c]
        over1 = beats(x, fx, t1, f1)
        over2 = ~over1 & beats(x, fx, t2, f2)
        t2 = np.where(over1, t1, np.where(over2, x, t2))
        f2 = np.where(over1, f1, np.where(over2, fx, f2))
        t1 = np.where(over1, x, t1)
        f1 = np.where(over1, fx, f1)
    return t1, t2


def _draw_eps(rng, eps_sampler: EpsSampler, count: int) -> np.ndarray:
    if eps_sampler is uniform_eps and isinstance(rng, np.random.Generator):
        # same stream as count scalar draws
        out = rng.uniform(0.0, EPS_HIGH, count)
        for i in np.flatnonzero(out == 0.0).tolist():
            out[i] = uniform_eps(rng)
        return out
    return np.fromiter((eps_sampler(rng) for _ in range(count)), dtype=np.float64, count=count)


def _merge(seen: np.ndarray, new: np.ndarray) -> np.ndarray:
    # timsort merges two sorted runs in linear time
    return np.sort(np.concatenate((seen, np.sort(new))), kind="stable")


def _repeats(cur: np.ndarray, earlier: np.ndarray) -> np.ndarray:
    """Mask of entries equal to a value in ``earlier`` (sorted) or to a preceding entry."""
    hit = np.zeros(len(cur), dtype=bool)
    if len(earlier):
        pos = np.minimum(np.searchsorted(earlier, cur), len(earlier) - 1)
        hit |= earlier[pos] == cur
    order = np.argsort(cur, kind="stable")
    s = cur[order]
    hit[order[1:][s[1:] == s[:-1]]] = True
    return hit


def assign_morse(
    k: CliqueComplex,
    base,
    seed=None,
    eps_sampler: EpsSampler = uniform_eps,
) -> MorseAssignment:
    """Construct a discrete Morse function on ``k`` from vertex values ``base``.

    Simplices are visited dimension by dimension in canonical order. For a
    simplex whose faces sorted by decreasing value start with ``g0, g1``: if
    ``g0`` is still unflagged and strictly above ``g1``, the simplex takes the
    midpoint of the two and flags ``g0``; otherwise it takes ``f(g0) + eps``.

    ``seed`` may be an integer or a ``numpy.random.Generator`` (anything with a
    ``uniform`` method); passing the generator used for ``base`` keeps a single
    random stream across the whole construction.
    """
    rng = _rng(seed)
    nverts = len(k.simplices[0])
    base = np.asarray([base[v] for v in range(nverts)] if isinstance(base, dict) else base, dtype=np.float64)
    if len(base) != nverts:
        raise ValueError(f"base has {len(base)} values for {nverts} vertices")

    weights: list[np.ndarray] = [base.copy()]
    flags: list[np.ndarray] = [np.zeros(nverts, dtype=np.int8)]
    seen = np.sort(base)
    ties = collisions = 0

    for p in range(1, len(k.simplices)):
        frows = np.asarray(k.face_index[p], dtype=np.int64)
        n_p = len(frows)
        if n_p and len(weights[p - 1]) == 0:
            raise NotFaceClosedError(f"{p}-simplices present without {p - 1}-faces")
        if n_p and (frows.min() < 0 or frows.max() >= len(weights[p - 1])):
            raise NotFaceClosedError(f"face index out of range in dimension {p}")
        fprev = weights[p - 1]
        if not n_p:
            weights.append(np.empty(0))
            flags.append(np.zeros(0, dtype=np.int8))
            continue
        g0, g1 = _top_two(frows, fprev)
        f0, f1 = fprev[g0], fprev[g1]
        ties += int(np.count_nonzero(f0 == f1))

        # a face is flagged by the first coface that lists it as a strict top
        # face, and only that coface takes the midpoint
        cand = np.flatnonzero(f0 > f1)
        key = np.sort(g0[cand] * n_p + cand)
        top = key // n_p
        first = key[np.r_[True, top[1:] != top[:-1]]] % n_p if len(key) else key
        mid = np.zeros(n_p, dtype=bool)
        mid[first] = True
        flags[p - 1][g0[first]] = 1

        cur = (f0 + f1) / 2.0
        free = np.flatnonzero(~mid)
        cur[free] = f0[free] + _draw_eps(rng, eps_sampler, len(free))

        union = _merge(seen, cur)
        # rare: an eps value repeating an earlier weight is redrawn after the batch
        if (union[1:] == union[:-1]).any():
            hit = _repeats(cur, seen)
            collisions += int(np.count_nonzero(hit & mid))
            taken = set(seen.tolist())
            taken.update(cur[~hit].tolist())
            for j in np.flatnonzero(hit).tolist():
                val = cur[j]
                if not mid[j]:
                    while val in taken:
                        val = f0[j] + eps_sampler(rng)
                    cur[j] = val
                taken.add(val)
            union = _merge(seen, cur)
        weights.append(cur)
        flags.append(np.zeros(n_p, dtype=np.int8))
        seen = union

    if ties:
        log.warning("%d simplices had tied top faces; broke ties lexicographically", ties)
    if collisions:
        log.warning("%d midpoint values coincide with earlier weights", collisions)
    return MorseAssignment(
        weight=tuple(weights),
        vertex_base=base,
        flag=tuple(flags),
        flag_sets=tuple(f.astype(np.int64) for f in flags),
        rng_seed=seed if isinstance(seed, int) else None,
    )


def _uv_counts(k: CliqueComplex, weight: Sequence[np.ndarray]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Sizes of the coface set U and face set V for every simplex, by direct scan."""
    U = [np.zeros(len(s), dtype=np.int64) for s in k.simplices]
    V = [np.zeros(len(s), dtype=np.int64) for s in k.simplices]
    for p in range(1, len(k.simplices)):
        if not len(k.simplices[p]):
            continue
        fi = k.face_index[p]
        fg = weight[p - 1][fi]
        # alpha <= face means the face sees a coface of no-greater value
        hit = weight[p][:, None] <= fg
        V[p] = hit.sum(axis=1)
        np.add.at(U[p - 1], fi[hit], 1)
    return U, V


def verify_morse(k: CliqueComplex, m: MorseAssignment | Sequence[np.ndarray]) -> tuple[bool, list[tuple[int, int, int, int]]]:
    """Check ``|U| <= 1`` and ``|V| <= 1`` for every simplex.

    Returns ``(ok, violations)`` with violations as ``(p, row, |U|, |V|)``.
    """
    weight = m.weight if isinstance(m, MorseAssignment) else m
    U, V = _uv_counts(k, weight)
    bad = []
    for p in range(len(k.simplices)):
        for j in np.flatnonzero((U[p] > 1) | (V[p] > 1)).tolist():
            bad.append((p, j, int(U[p][j]), int(V[p][j])))
    return not bad, bad


@dataclass(frozen=True, eq=False)
class CriticalReport:
    is_critical: tuple[np.ndarray, ...]
    m_p: tuple[int, ...]
    critical_weights: np.ndarray


def _top_face(fi: np.ndarray, fg: np.ndarray) -> np.ndarray:
    """Row of the largest-valued face per simplex; ties go to the smallest row."""
    top = fg.max(axis=1, keepdims=True)
    cand = np.where(fg == top, fi, np.iinfo(np.int64).max)
    return cand.min(axis=1)


def critical_simplices(k: CliqueComplex, m: MorseAssignment) -> CriticalReport:
    """Mark critical simplices and collect the sorted unique critical weights.

    Every simplex starts critical. A p-simplex (p >= 1) whose largest face is
    valued at least as high as itself is paired with that face and both lose
    criticality.
    """
    weight = m.weight if isinstance(m, MorseAssignment) else m
    crit = [np.ones(len(s), dtype=bool) for s in k.simplices]
    for p in range(1, len(k.simplices)):
        if not len(k.simplices[p]):
            continue
        fi = k.face_index[p]
        fg = weight[p - 1][fi]
        g0 = _top_face(fi, fg)
        paired = weight[p - 1][g0] >= weight[p]
        crit[p][paired] = False
        crit[p - 1][g0[paired]] = False
    vals = [weight[p][crit[p]] for p in range(len(crit))]
    wc = np.unique(np.concatenate(vals)) if vals else np.empty(0)
    return CriticalReport(tuple(crit), tuple(int(c.sum()) for c in crit), wc)


@dataclass(frozen=True, eq=False)
class Filtration:
    """Filtration weight per simplex plus a total order compatible with it.

    ``order_dim[i], order_row[i]`` identify the i-th simplex to enter. The
    default order sorts by weight, then dimension, then canonical row, so faces
    always precede cofaces. ``stages`` lists the distinct weights used.
    """

    weight: tuple[np.ndarray, ...]
    order_dim: np.ndarray
    order_row: np.ndarray
    stages: np.ndarray
    kind: str = "morse"

    @classmethod
    def from_weights(cls, weight: Sequence[np.ndarray], kind: str = "custom") -> "Filtration":
        weight = tuple(np.asarray(w, dtype=np.float64) for w in weight)
        dims = np.concatenate([np.full(len(w), p, dtype=np.int64) for p, w in enumerate(weight)]) if weight else np.empty(0, np.int64)
        rows = np.concatenate([np.arange(len(w), dtype=np.int64) for w in weight]) if weight else np.empty(0, np.int64)
        vals = np.concatenate(weight) if weight else np.empty(0)
        order = np.lexsort((rows, dims, vals))
        return cls(weight, dims[order], rows[order], np.unique(vals), kind)

    def with_order(self, order_dim: np.ndarray, order_row: np.ndarray) -> "Filtration":
        return Filtration(self.weight, np.asarray(order_dim), np.asarray(order_row), self.stages, self.kind)


def _level_weights(k: CliqueComplex, weight: Sequence[np.ndarray], stages: np.ndarray) -> tuple[list[np.ndarray], int]:
    """Sweep simplices by increasing value; each joins at the first stage >= its
    value together with every not-yet-added face. Returns weights and the
    number of simplices left over after the last stage."""
    stage_list = stages.tolist()
    fw = [np.full(len(s), np.nan) for s in k.simplices]
    added = [np.zeros(len(s), dtype=bool) for s in k.simplices]
    face_lists = [fi.tolist() for fi in k.face_index]
    dims = np.concatenate([np.full(len(s), p) for p, s in enumerate(k.simplices)])
    rows = np.concatenate([np.arange(len(s)) for s in k.simplices])
    vals = np.concatenate([np.asarray(w, dtype=np.float64) for w in weight])
    order = np.lexsort((rows, dims, vals))
    added_l = [a.tolist() for a in added]
    fw_l = [a.tolist() for a in fw]
    leftovers = 0
    for idx in order.tolist():
        p, j, v = int(dims[idx]), int(rows[idx]), float(vals[idx])
        if added_l[p][j]:
            continue
        i = bisect_left(stage_list, v)
        if i == len(stage_list):
            leftovers += 1
            continue
        w = stage_list[i]
        fw_l[p][j] = w
        added_l[p][j] = True
        stack = [(p, j)]
        while stack:
            q, r = stack.pop()
            if q == 0:
                continue
            for face in face_lists[q][r]:
                if not added_l[q - 1][face]:
                    added_l[q - 1][face] = True
                    fw_l[q - 1][face] = w
                    stack.append((q - 1, face))
    if leftovers:
        last = stage_list[-1]
        for p in range(len(fw_l)):
            for j, a in enumerate(added_l[p]):
                if not a:
                    fw_l[p][j] = last
        log.debug("%d simplices lie above the last stage; assigned weight %r", leftovers, last)
    return [np.asarray(a, dtype=np.float64) for a in fw_l], leftovers


def assign_filtration(k: CliqueComplex, m: MorseAssignment, c: CriticalReport) -> Filtration:
    """Filtration by level subcomplexes taken at the critical weights only.

    Simplices valued above the last critical weight are assigned that weight.
    """
    if k.size and not len(c.critical_weights):
        raise RuntimeError("no critical weights for a nonempty complex")
    fw, _ = _level_weights(k, m.weight, c.critical_weights)
    return Filtration.from_weights(fw, kind="morse")


def full_weight_filtration(k: CliqueComplex, m: MorseAssignment) -> Filtration:
    """Level-subcomplex filtration over every distinct value of ``m``."""
    stages = np.unique(m.values()) if k.size else np.empty(0)
    fw, _ = _level_weights(k, m.weight, stages)
    return Filtration.from_weights(fw, kind="full")


def dimension_filtration(k: CliqueComplex) -> Filtration:
    return Filtration.from_weights(
        [np.full(len(s), float(p)) for p, s in enumerate(k.simplices)], kind="dimension"
    )


def optimality_mu(n_p: Sequence[int], m_p: Sequence[int], beta_p: Sequence[int]) -> float | None:
    """``(sum n - sum m) / (sum n - sum beta)``; ``None`` if the denominator is zero."""
    if not len(n_p) == len(m_p) == len(beta_p):
        raise ValueError("count vectors must have equal length")
    denom = sum(n_p) - sum(beta_p)
    if denom == 0:
        return None
    return (sum(n_p) - sum(m_p)) / denom


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return format(x, ".17g")


def write_morse_dump(
    k: CliqueComplex,
    m: MorseAssignment,
    c: CriticalReport,
    filt: Filtration,
    fh: TextIO | None = None,
) -> str:
    """Lines ``p v0..vp weight is_critical filtration_weight`` in canonical order."""
    out = []
    for p, j, s in k.iter_simplices():
        out.append(
            f"{p} {' '.join(map(str, s))} {_fmt(float(m.weight[p][j]))} "
            f"{int(c.is_critical[p][j])} {_fmt(float(filt.weight[p][j]))}\n"
        )
    text = "".join(out)
    if fh is not None:
        fh.write(text)
    return text
