"""Seeded random network models: Erdos-Renyi, Watts-Strogatz, Barabasi-Albert
and zero-temperature hyperbolic / circular geometric graphs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .graph import Graph

__all__ = [
    "ModelSpec",
    "UnsupportedParameterError",
    "gen_ba",
    "gen_er",
    "gen_hgg",
    "gen_ws",
    "generate",
    "hgg_radius",
    "parse_model_spec",
]

FAMILIES = ("er", "ws", "ba", "hgg")


class UnsupportedParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    n: int
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        _validate(self.family, self.n, self.params)

    def to_json(self) -> str:
        d = asdict(self)
        d["params"] = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in self.params.items()}
        return json.dumps(d, sort_keys=True)

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.family, self.n, dict(self.params), seed)


def _validate(family: str, n: int, params: dict) -> None:
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    if n < 0:
        raise ValueError("n must be non-negative")
    if family == "er":
        if not 0.0 <= params["p"] <= 1.0:
            raise ValueError("ER requires p in [0, 1]")
    elif family == "ws":
        k, p = params["k"], params["p"]
        if k % 2 or k < 0 or k >= n:
            raise ValueError("WS requires even k with 0 <= k < n")
        if not 0.0 <= p <= 1.0:
            raise ValueError("WS requires p in [0, 1]")
    elif family == "ba":
        if not 1 <= params["m"] < n:
            raise ValueError("BA requires 1 <= m < n")
    else:
        if params["k"] <= 0:
            raise ValueError("HGG requires k > 0")
        if not params["gamma"] >= 2:
            raise ValueError("HGG requires gamma in [2, inf]")
        if params.get("T", 0) < 0:
            raise ValueError("HGG requires T >= 0")
        if params.get("T", 0) != 0:
            raise UnsupportedParameterError("HGG is implemented for T = 0 only")


def parse_model_spec(text: str, seed: int | None = None) -> ModelSpec:
    """Parse ``family:key=value,...``, e.g. ``ws:n=1000,k=4,p=0.5``."""
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    raw = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"bad model parameter {item!r}")
        raw[key.strip()] = val.strip()
    if "n" not in raw:
        raise ValueError("model spec needs n")
    n = int(raw.pop("n"))
    ints = {"k", "m"} if family != "hgg" else set()
    params = {}
    for key, val in raw.items():
        if key == "seed":
            seed = int(val)
        elif key in ints:
            params[key] = int(val)
        else:
            params[key] = math.inf if val.lower() in ("inf", "infinity") else float(val)
    if family == "hgg":
        params.setdefault("T", 0.0)
    return ModelSpec(family, n, params, seed)


def generate(spec: ModelSpec, seed: int | None = None) -> Graph:
    seed = spec.seed if seed is None else seed
    p = spec.params
    if spec.family == "er":
        return gen_er(spec.n, p["p"], seed)
    if spec.family == "ws":
        return gen_ws(spec.n, p["k"], p["p"], seed)
    if spec.family == "ba":
        return gen_ba(spec.n, p["m"], seed)
    return gen_hgg(spec.n, p["k"], p["gamma"], p.get("T", 0.0), seed)


def gen_er(n: int, p: float, seed=None) -> Graph:
    """G(n, p): each of the n(n-1)/2 pairs is an edge independently with probability p."""
    _validate("er", n, {"p": p})
    rng = np.random.default_rng(seed)
    # a Binomial(N, p) count of pairs drawn uniformly without replacement has
    # the same law as N independent coins, without touching every pair
    pairs = n * (n - 1) // 2
    picks = np.sort(rng.choice(pairs, size=rng.binomial(pairs, p), replace=False))
    # pair index -> (i, j) in row-major upper-triangle order
    rows = np.arange(max(n - 1, 0), dtype=np.int64)
    offsets = rows * n - rows * (rows + 1) // 2
    i = np.searchsorted(offsets, picks, side="right") - 1
    j = picks - offsets[i] + i + 1
    return Graph.from_edges(n, zip(i.tolist(), j.tolist()))


def gen_ws(n: int, k: int, p: float, seed=None) -> Graph:
    """Watts-Strogatz small world.

    Ring lattice with each vertex joined to its k nearest neighbours; then for
    each lattice edge ``(u, u + j)`` in turn, with probability p the far end is
    moved to a uniformly chosen vertex. Targets that would create a self-loop
    or a duplicate are redrawn up to n times, after which the edge stays put,
    so the edge count is always ``n * k / 2``.
    """
    _validate("ws", n, {"k": k, "p": p})
    rng = np.random.default_rng(seed)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            nbrs[u].add(v)
            nbrs[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            if rng.random() >= p:
                continue
            v = (u + j) % n
            if v not in nbrs[u]:
                continue
            for _ in range(n):
                w = int(rng.integers(n))
                if w != u and w not in nbrs[u]:
                    nbrs[u].discard(v)
                    nbrs[v].discard(u)
                    nbrs[u].add(w)
                    nbrs[w].add(u)
                    break
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


def gen_ba(n: int, m: int, seed=None) -> Graph:
    """Barabasi-Albert preferential attachment.

    Starts from m isolated vertices; the first arrival links to all of them,
    each later arrival to m distinct vertices drawn with probability
    proportional to degree. Yields exactly ``m * (n - m)`` edges.
    """
    _validate("ba", n, {"m": m})
    rng = np.random.default_rng(seed)
    edges = []
    repeated: list[int] = []
    targets = list(range(m))
    for source in range(m, n):
        edges.extend((source, t) for t in targets)
        repeated.extend(targets)
        repeated.extend([source] * m)
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(repeated[int(rng.integers(len(repeated)))])
        targets = sorted(chosen)
    return Graph.from_edges(n, edges)


def _link_threshold(r1: np.ndarray, r2: np.ndarray, R: float) -> np.ndarray:
    """``1 - cos(dtheta)`` below which two points at radii r1, r2 lie closer than R.

    Uses ``cosh d = cosh(r1 - r2) + sinh r1 sinh r2 (1 - cos dtheta)``, which
    avoids the cancellation in the textbook form.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = (math.cosh(R) - np.cosh(r1 - r2)) / (np.sinh(r1) * np.sinh(r2))
    return np.nan_to_num(c, nan=2.0, posinf=2.0)


def _radius_quantiles(u: np.ndarray, alpha: float, R: float) -> np.ndarray:
    # inverse CDF of the radial density alpha sinh(alpha r) / (cosh(alpha R) - 1)
    return np.arccosh(1.0 + u * (math.cosh(alpha * R) - 1.0)) / alpha


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)


def _expected_degree(n: int, alpha: float, R: float) -> float:
    u = 0.5 * (_GL_NODES + 1.0)
    w = 0.5 * _GL_WEIGHTS
    r = _radius_quantiles(u, alpha, R)
    c = np.clip(_link_threshold(r[:, None], r[None, :], R), 0.0, 2.0)
    prob = np.arccos(1.0 - c) / math.pi
    return (n - 1) * float(w @ prob @ w)


def hgg_radius(n: int, k: float, gamma: float) -> float:
    """Disk radius giving expected mean degree k (numerical calibration)."""
    alpha = (gamma - 1.0) / 2.0
    lo, hi = 1e-3, 2.0 * math.log(max(n, 2)) + 40.0
    if _expected_degree(n, alpha, lo) < k:
        raise ValueError(f"mean degree {k} unreachable with n={n}")
    return brentq(lambda R: _expected_degree(n, alpha, R) - k, lo, hi, xtol=1e-10)


def gen_hgg(n: int, k: float, gamma: float, T: float = 0.0, seed=None) -> Graph:
    """Zero-temperature random geometric graph on the hyperbolic disk.

    Angles are uniform; radii follow the density ``alpha sinh(alpha r)`` on
    ``[0, R]`` with ``alpha = (gamma - 1) / 2``; two vertices are linked iff
    their hyperbolic distance is below R, with R calibrated so that the
    expected mean degree is k. For ``gamma = inf`` every vertex sits on the
    boundary circle and the graph reduces to a random geometric graph on the
    circle: vertices within angular distance ``pi k / (n - 1)`` are linked.
    """
    _validate("hgg", n, {"k": k, "gamma": gamma, "T": T})
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    iu, ju = np.triu_indices(n, 1)
    dtheta = np.abs(theta[iu] - theta[ju])
    dtheta = np.minimum(dtheta, 2.0 * math.pi - dtheta)
    if math.isinf(gamma):
        keep = dtheta < math.pi * k / max(n - 1, 1)
    else:
        alpha = (gamma - 1.0) / 2.0
        R = hgg_radius(n, k, gamma)
        r = _radius_quantiles(rng.random(n), alpha, R)
        keep = (1.0 - np.cos(dtheta)) < _link_threshold(r[iu], r[ju], R)
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
