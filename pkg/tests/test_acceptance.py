"""Acceptance criteria 1-11. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``. Criteria that need the real
network files (US Power Grid, Yeast) also run those parts when
``MORSEPH_DATA_DIR`` points at a directory holding them; the remaining
checks always run.
"""

import math
import os
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from conftest import FIG1_EDGES, StubRng, random_graph
from oracles import brute_distances, dense_betti

from morseph.complex import build_clique_complex
from morseph.distance import bottleneck, distance_matrix, wasserstein
from morseph.graph import Graph, read_edge_list
from morseph.models import gen_ba, gen_er, gen_hgg, gen_ws, generate, parse_model_spec
from morseph.morse import (
    assign_filtration,
    assign_morse,
    critical_simplices,
    full_weight_filtration,
    optimality_mu,
    verify_morse,
    vertex_function,
)
from morseph.persistence import betti_numbers, compute_persistence
from morseph.pipeline import alternating_sum, analyze_graph

MODELS = {
    "ER": "er:n=1000,p=0.004",
    "WS": "ws:n=1000,k=4,p=0.5",
    "BA": "ba:n=1000,m=2",
    "SPH": "hgg:n=1000,k=4,gamma=inf",
    "HYP": "hgg:n=1000,k=4,gamma=2",
}
SAMPLES = 10
POWER_GRID_COUNTS = (4941, 6594, 651, 90)


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def data_file(*needles):
    root = os.environ.get("MORSEPH_DATA_DIR")
    if not root:
        return None
    for p in sorted(Path(root).iterdir()):
        if any(s in p.name.lower() for s in needles):
            return p
    return None


def forman_ok(a):
    m, b, n = a.m_p, a.beta_p, a.complex.counts
    return all(x >= y for x, y in zip(m, b)) and alternating_sum(m) == alternating_sum(b) == alternating_sum(n)


@pytest.fixture(scope="module")
def runs():
    """Ten analyzed samples per model family; sample i uses seed i for both steps."""
    out = {}
    for name, spec in MODELS.items():
        s = parse_model_spec(spec)
        rows = []
        for i in range(SAMPLES):
            t = time.perf_counter()
            a = analyze_graph(generate(s, seed=i), seed=i)
            rows.append((a, time.perf_counter() - t))
        out[name] = rows
    return out


def strict(k, m):
    for p in range(1, len(k.simplices)):
        if len(k.simplices[p]) and (m.weight[p - 1][k.face_index[p]] == m.weight[p][:, None]).any():
            return False
    return True


def test_criterion_01_morse_validity(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    graphs = []
    for i in range(100):
        n = int(rng.integers(20, 301))
        seed = int(rng.integers(1 << 31))
        family = i % 4
        if family == 0:
            graphs.append(gen_er(n, float(rng.uniform(2, 8)) / (n - 1), seed))
        elif family == 1:
            graphs.append(gen_ws(n, int(rng.choice([2, 4, 6])), float(rng.random()), seed))
        elif family == 2:
            graphs.append(gen_ba(n, int(rng.integers(1, 4)), seed))
        else:
            gamma = math.inf if rng.random() < 0.5 else float(rng.uniform(2, 4))
            graphs.append(gen_hgg(n, 4.0, gamma, 0.0, seed))
    hand = [
        Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)]),
        Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
        Graph.from_edges(5, [(0, i) for i in range(1, 5)]),
        Graph.from_edges(2, [(0, 1)]),
        Graph.from_edges(5, [(u, v) for u in range(5) for v in range(u + 1, 5)]),
        Graph.from_edges(9, FIG1_EDGES),
    ]
    bad = 0
    for j, g in enumerate(graphs + hand):
        k = build_clique_complex(g)
        m = assign_morse(k, vertex_function(g, j), j)
        bad += not (verify_morse(k, m)[0] and strict(k, m))
    # the hand traces with a fixed noise draw
    for g, base in ((hand[0], [0.1, 0.2, 0.3]), (hand[1], [0.1, 0.2, 0.3, 0.4])):
        k = build_clique_complex(g)
        m = assign_morse(k, base, StubRng(0.05))
        bad += not (verify_morse(k, m)[0] and strict(k, m))
    dt = time.perf_counter() - t0
    report(capsys, 1, bad == 0 and dt < 60, f"{len(graphs) + len(hand) + 2} functions, {bad} failures, {dt:.1f}s (< 60s)")


def test_criterion_02_forman_identities(capsys, runs):
    analyses = [a for rows in runs.values() for a, _ in rows]
    bad = sum(not forman_ok(a) for a in analyses)
    arithmetic = alternating_sum(POWER_GRID_COUNTS) == -1092
    detail = f"{len(analyses)} model complexes, {bad} violations; power-grid counts alternate to {alternating_sum(POWER_GRID_COUNTS)}"
    ok = bad == 0 and arithmetic
    path = data_file("power")
    if path is not None:
        a = analyze_graph(read_edge_list(path), seed=0)
        counts_ok = tuple(a.complex.counts) == POWER_GRID_COUNTS
        ok = ok and counts_ok and forman_ok(a) and alternating_sum(a.m_p) == -1092
        detail += f"; dataset n_p={tuple(a.complex.counts)}, sums m={alternating_sum(a.m_p)} beta={alternating_sum(a.beta_p)}"
    else:
        detail += "; dataset part skipped (set MORSEPH_DATA_DIR)"
    report(capsys, 2, ok, detail)


def test_criterion_03_mu_reproduction(capsys, runs):
    targets = {"ER": (0.924, 0.012), "WS": (0.890, 0.009), "BA": (0.989, 0.009)}
    parts, ok = [], True
    for name, (mean, tol) in targets.items():
        mu = float(np.mean([a.mu for a, _ in runs[name]]))
        ok &= abs(mu - mean) <= tol
        parts.append(f"{name} {mu:.4f} (target {mean} +- {tol})")
    total = sum(dt for name in targets for _, dt in runs[name])
    ok &= total < 300
    report(capsys, 3, ok, "; ".join(parts) + f"; {total:.1f}s (< 300s)")


def test_criterion_04_mu_exact(capsys):
    mu = optimality_mu(POWER_GRID_COUNTS, (573, 1671, 21, 15), (1, 1080, 0, 13))
    report(capsys, 4, abs(mu - 0.893937) <= 5e-6, f"mu = {mu:.6f} (target 0.893937 +- 5e-6)")


def test_criterion_05_homology_oracle(capsys):
    rng = np.random.default_rng(5)
    mismatches = 0
    for i in range(200):
        g = random_graph(rng, int(rng.integers(1, 13)), float(rng.uniform(0.1, 0.95)))
        k = build_clique_complex(g)
        m = assign_morse(k, vertex_function(g, i), i)
        beta = list(betti_numbers(compute_persistence(k, assign_filtration(k, m, critical_simplices(k, m)))))
        mismatches += beta != dense_betti([[tuple(r) for r in s.tolist()] for s in k.simplices])
    report(capsys, 5, mismatches == 0, f"200 graphs (<= 12 vertices), {mismatches} mismatches")


def test_criterion_06_full_vs_critical_filtration(capsys):
    rng = np.random.default_rng(6)
    differ = 0
    for i in range(50):
        n = int(rng.integers(2, 61))
        g = random_graph(rng, n, float(rng.uniform(1.0, 12.0)) / max(n - 1, 1))
        k = build_clique_complex(g)
        m = assign_morse(k, vertex_function(g, i), i)
        crit = compute_persistence(k, assign_filtration(k, m, critical_simplices(k, m)))
        full = compute_persistence(k, full_weight_filtration(k, m))
        differ += crit.points != full.points
    report(capsys, 6, differ == 0, f"50 graphs (n <= 60), {differ} differing diagrams")


def test_criterion_07_distance_oracles(capsys):
    rng = np.random.default_rng(7)
    worst, axioms = 0.0, 0

    def diagram(grid):
        n = int(rng.integers(0, 5))
        if grid:
            b = rng.integers(0, 4, n) / 4
            return np.column_stack([b, b + rng.integers(1, 5, n) / 4])
        b = rng.random(n)
        return np.column_stack([b, b + rng.random(n)])

    for i in range(100):
        x, y, z = diagram(i % 2), diagram(i % 2), diagram(i % 2)
        bott, wq = brute_distances(x, y, (1, 2))
        worst = max(worst, abs(bottleneck(x, y) - bott), abs(wasserstein(x, y, 1) - wq[1]), abs(wasserstein(x, y, 2) - wq[2]))
        for d in (bottleneck, lambda a, b: wasserstein(a, b, 1), lambda a, b: wasserstein(a, b, 2)):
            axioms += not (
                d(x, x) == 0.0
                and abs(d(x, y) - d(y, x)) <= 1e-9
                and d(x, z) <= d(x, y) + d(y, z) + 1e-9
            )
    report(capsys, 7, worst <= 1e-9 and axioms == 0, f"100 pairs, max error {worst:.2e} (<= 1e-9), {axioms} axiom violations")


def test_criterion_08_model_separation(capsys, runs):
    t0 = time.perf_counter()
    ens = {name: [a.diagram for a, _ in rows] for name, rows in runs.items()}
    m = distance_matrix(ens)
    names = list(ens)
    off = {(a, b): m[(a, b)].mean for i, a in enumerate(names) for b in names[i + 1:]}
    top = max(off, key=off.get)
    ok = set(top) == {"SPH", "HYP"} and off[("ER", "WS")] < off[("ER", "BA")]
    table = " ".join(f"{a}-{b}={v:.3f}" for (a, b), v in off.items())
    report(capsys, 8, ok, f"max off-diagonal {top[0]}-{top[1]}; {table}; {time.perf_counter() - t0:.0f}s")


def test_criterion_09_stability(capsys):
    g = gen_er(300, 0.03, 9)
    k = build_clique_complex(g)
    worst, ratios = 0.0, []
    for i in range(20):
        diags, weights = [], []
        for s in (2 * i, 2 * i + 1):
            m = assign_morse(k, vertex_function(g, s), s)
            diags.append(compute_persistence(k, assign_filtration(k, m, critical_simplices(k, m)), w_N=1 + m.max_weight))
            weights.append(np.concatenate(m.weight))
        delta = float(np.abs(weights[0] - weights[1]).max())
        worst = max(worst, bottleneck(*diags, normalized=False) / (3 * delta))
        ratios.append(bottleneck(*diags) / delta)
    ok = worst <= 1.0
    detail = f"20 pairs, max raw W_inf / (3 delta) = {worst:.3f}; median normalized W_inf / delta = {np.median(ratios):.3f}"
    path = data_file("yeast")
    if path is not None:
        gy = read_edge_list(path)
        a, b = analyze_graph(gy, seed=1), analyze_graph(gy, seed=2)
        w = bottleneck(a.diagram, b.diagram)
        ok = ok and w < 0.05
        detail += f"; yeast W_inf = {w:.4f} (< 0.05)"
    else:
        detail += "; yeast part skipped (set MORSEPH_DATA_DIR)"
    report(capsys, 9, ok, detail)


def test_criterion_10_performance(capsys, runs):
    def instance(n):
        g = gen_er(n, 2.0 / (n - 1), 10)
        return build_clique_complex(g), vertex_function(g, 0)

    # alternate the two sizes so drift and allocator state hit both alike
    pair = [instance(50_000), instance(100_000)]
    best = [math.inf, math.inf]
    for _ in range(15):
        for i, (k, base) in enumerate(pair):
            t = time.perf_counter()
            assign_morse(k, base, 0)
            best[i] = min(best[i], time.perf_counter() - t)
    (s1, t1), (s2, t2) = ((k.size, b) for (k, _), b in zip(pair, best))
    ratio = t2 / t1
    slowest = max(dt for rows in runs.values() for _, dt in rows)
    ok = ratio < 2.5 and slowest < 30
    report(capsys, 10, ok, f"Algorithm 1: {s1} simplices {t1 * 1e3:.1f}ms, {s2} simplices {t2 * 1e3:.1f}ms, ratio {ratio:.2f} (< 2.5); slowest n=1000 pipeline {slowest:.1f}s (< 30s)")


def test_criterion_11_generator_counts(capsys):
    ba = Counter(gen_ba(1000, 2, s).edge_count for s in range(5))
    ws = Counter(gen_ws(1000, 4, p, s).edge_count for s in range(3) for p in (0.0, 0.1, 0.5, 1.0))
    report(capsys, 11, set(ba) == {1996} and set(ws) == {2000}, f"BA edges {dict(ba)}, WS edges {dict(ws)}")
