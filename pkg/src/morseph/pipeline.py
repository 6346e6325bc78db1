"""End-to-end analysis of one graph: complex, Morse function, filtration, diagram."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complex import CliqueComplex, build_clique_complex
from .graph import Graph
from .morse import (
    CriticalReport,
    Filtration,
    MorseAssignment,
    assign_filtration,
    assign_morse,
    critical_simplices,
    dimension_filtration,
    optimality_mu,
    verify_morse,
    vertex_function,
)
from .persistence import PersistenceDiagram, betti_numbers, compute_persistence

__all__ = ["Analysis", "InvariantError", "analyze_graph", "alternating_sum"]

FILTRATIONS = ("morse", "dimension")


class InvariantError(RuntimeError):
    """A mathematical invariant failed; carries the analysis for diagnostics."""

    def __init__(self, message: str, analysis: "Analysis | None" = None):
        super().__init__(message)
        self.analysis = analysis


def alternating_sum(xs) -> int:
    return sum((-1) ** p * int(x) for p, x in enumerate(xs))


@dataclass(frozen=True, eq=False)
class Analysis:
    graph: Graph
    complex: CliqueComplex
    morse: MorseAssignment | None
    critical: CriticalReport | None
    filtration: Filtration
    diagram: PersistenceDiagram
    seed: int | None

    @property
    def n_p(self) -> list[int]:
        return self.complex.counts

    @property
    def m_p(self) -> list[int]:
        # with the dimension filtration every simplex is critical
        return list(self.critical.m_p) if self.critical is not None else self.complex.counts

    @property
    def beta_p(self) -> list[int]:
        b = list(betti_numbers(self.diagram))
        return b + [0] * (len(self.n_p) - len(b))

    @property
    def mu(self) -> float | None:
        if self.critical is None:
            # no pairing at all: sum m = sum n
            return 0.0 if sum(self.n_p) != sum(self.beta_p) else None
        return optimality_mu(self.n_p, self.m_p, self.beta_p)

    def summary(self) -> dict:
        n, m, b = self.n_p, self.m_p, self.beta_p
        en, em, eb = alternating_sum(n), alternating_sum(m), alternating_sum(b)
        mu = self.mu
        return {
            "vertices": self.graph.vertex_count,
            "edges": self.graph.edge_count,
            "cap": self.complex.cap,
            "filtration": self.filtration.kind,
            "seed": self.seed,
            "n_p": n,
            "m_p": m,
            "beta_p": b,
            "mu": "undefined" if mu is None else mu,
            "euler": {"n": en, "m": em, "beta": eb, "consistent": en == em == eb},
            "morse_inequalities": all(mi >= bi for mi, bi in zip(m, b)),
            "critical_weight_count": len(self.filtration.stages),
            "w_N": self.diagram.w_N,
        }


def analyze_graph(g: Graph, cap: int = 3, seed: int | None = None, filtration: str = "morse", check: bool = True) -> Analysis:
    """Run the whole pipeline on ``g``.

    One random stream, seeded by ``seed``, supplies the vertex noise and then
    the Morse construction noise. With ``check`` the Morse conditions and the
    Forman identities are verified and :class:`InvariantError` is raised on
    failure.
    """
    if filtration not in FILTRATIONS:
        raise ValueError(f"filtration must be one of {FILTRATIONS}")
    k = build_clique_complex(g, cap)
    if filtration == "dimension":
        filt = dimension_filtration(k)
        w_N = 1.0 + max(k.dim, 0)
        diag = compute_persistence(k, filt, w_N)
        return Analysis(g, k, None, None, filt, diag, seed)

    rng = np.random.default_rng(seed)
    base = vertex_function(g, rng)
    m = assign_morse(k, base, rng)
    c = critical_simplices(k, m)
    filt = assign_filtration(k, m, c) if k.size else Filtration.from_weights([np.empty(0)] * (cap + 1), kind="morse")
    w_N = 1.0 + m.max_weight
    diag = compute_persistence(k, filt, w_N)
    result = Analysis(g, k, m, c, filt, diag, seed)
    if check:
        ok, bad = verify_morse(k, m)
        if not ok:
            raise InvariantError(f"Morse condition violated on {len(bad)} simplices", result)
        n, mm, b = result.n_p, result.m_p, result.beta_p
        if any(x < y for x, y in zip(mm, b)) or not alternating_sum(n) == alternating_sum(mm) == alternating_sum(b):
            raise InvariantError(f"Forman identities fail: n={n} m={mm} beta={b}", result)
        if not math.isfinite(w_N):
            raise InvariantError("non-finite weights", result)
    return result
