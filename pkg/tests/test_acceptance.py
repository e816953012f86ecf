"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured numbers,
then asserts. Run with ``pytest tests/test_acceptance.py -v``. Seeds are
fixed in this file and were chosen before any outcome was seen.
"""

import math
import time

import numpy as np
import pytest

import oracles
from conftest import make_net
from roadrobust.centrality import (all_centralities, betweenness_centrality, closeness_centrality,
                                   degree_centrality, load_centrality)
from roadrobust.network import RoadNetwork
from roadrobust.robustness import AttackStrategy, attack, fraction_grid
from roadrobust.spatial import StudyWindow, csr_curve, csr_test, kde_raster, quartic_kernel
from roadrobust.stats import kendall_tau, mann_whitney
from roadrobust.synthetic import elongated_network


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok
    return emit


def test_criterion_1_centrality_oracles(report):
    t0 = time.perf_counter()
    worst = 0.0
    failures = []
    rng = np.random.default_rng(20240601)
    for k in range(50):
        net = oracles.random_digraph(rng, int(rng.integers(3, 41)))
        indeg, outdeg = oracles.degrees(net)
        pairs = [
            ("betweenness", betweenness_centrality(net, normalized=False).values, oracles.betweenness(net)),
            ("load", load_centrality(net).values, oracles.load(net)),
            ("closeness", closeness_centrality(net).values, oracles.closeness(net)),
            ("closeness-out", closeness_centrality(net, "outward").values, oracles.closeness(net, inward=False)),
            ("indegree", degree_centrality(net, "in", False).values, indeg),
            ("outdegree", degree_centrality(net, "out", False).values, outdeg),
            ("degree", degree_centrality(net, "total", False).values, indeg + outdeg),
        ]
        for name, got, want in pairs:
            scale = np.maximum(np.abs(want), 1e-300)
            err = float(np.max(np.where(want == 0, np.abs(got), np.abs(got - want) / scale)))
            worst = max(worst, err)
            if err > 1e-9:
                failures.append((k, name, err))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    report(1, ok, f"50 digraphs, worst relative error {worst:.2e}, {elapsed:.1f} s (limit 60 s)")
    assert ok, failures[:5]


def test_criterion_2_normalization(report):
    path = make_net({0: (0, 0), 1: (1, 0), 2: (2, 0)}, [(0, 1, 1.0), (1, 2, 1.0)])
    b = betweenness_centrality(path)[1]
    n = 17251
    big = RoadNetwork(np.arange(n), np.arange(n, dtype=float), np.zeros(n), [0], [1], [1.0], None)
    d = degree_centrality(big)[0]
    ok = b == 0.5 and f"{d:.2E}" == "5.80E-05"
    report(2, ok, f"path betweenness {b}, degree-1 node at n={n} -> {d:.2E}")
    assert ok


def test_criterion_3_kernel_identities(report):
    peak_err = abs(quartic_kernel((0.0, 0.0)) - 3 / math.pi)
    g = np.linspace(-1, 1, 2001)
    h = g[1] - g[0]
    integral = quartic_kernel(np.stack(np.meshgrid(g, g), axis=-1)).sum() * h * h
    rng = np.random.default_rng(33)
    window = StudyWindow(0, 0, 12_000, 8_000)
    pts = np.column_stack([rng.uniform(3000, 9000, 500), rng.uniform(3000, 5000, 500)])
    w = rng.uniform(0, 10, 500)
    r = kde_raster(pts, w, window, 1000, 100)
    mass_err = abs(r.values.sum() * 100 ** 2 / w.sum() - 1)
    xs, ys = r.cell_centers()
    gx, gy = np.meshgrid(xs, ys)
    far = np.ones_like(gx, dtype=bool)
    for px, py in pts:
        far &= np.hypot(gx - px, gy - py) >= 1000
    locality = bool(np.all(r.values[far] == 0.0)) and far.any()
    ok = peak_err <= 1e-12 and abs(integral - 1) <= 1e-4 and mass_err <= 0.01 and locality
    report(3, ok, f"peak error {peak_err:.1e}, integral {integral:.6f}, mass error {mass_err:.2e}, "
                  f"locality {'exact' if locality else 'violated'} on {int(far.sum())} far cells")
    assert ok


def test_criterion_4_csr_envelopes(report):
    t0 = time.perf_counter()
    lam = 2e-4
    r = np.array([math.sqrt(math.log(2) / (lam * math.pi)), 10.0, 70.0])
    curve_ok = np.array_equal(csr_curve(r, lam), 1 - np.exp(-lam * math.pi * r * r)) \
        and abs(csr_curve(r[:1], lam)[0] - 0.5) < 1e-15
    cluster = 5000 + np.random.default_rng(41).random((200, 2)) * 10
    big = StudyWindow(0, 0, 10_000, 10_000)
    cluster_rejected = all(csr_test(cluster, big, k, 99, seed=0).rejected for k in "GF")
    window = StudyWindow(0, 0, 1000, 1000)
    kept = {}
    for kind in "GF":
        kept[kind] = sum(not csr_test(np.random.default_rng([2024, t]).random((200, 2)) * 1000,
                                      window, kind, 99, seed=t).rejected for t in range(20))
    elapsed = time.perf_counter() - t0
    ok = curve_ok and cluster_rejected and min(kept.values()) >= 18 and elapsed < 120
    report(4, ok, f"curve exact {curve_ok}, cluster rejected {cluster_rejected}, uniform not rejected "
                  f"G {kept['G']}/20 F {kept['F']}/20 (need 18), {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_5_attack_dominance(report):
    t0 = time.perf_counter()
    net = elongated_network(50, 10, 2, seed=0)
    grid = fraction_grid()
    b = attack(net, AttackStrategy.by_index(betweenness_centrality(net)), grid)
    r = attack(net, AttackStrategy.random(20, seed=0), grid)
    elapsed = time.perf_counter() - t0
    ok = b.auc() < r.auc() and b.at(0.10) < r.at(0.10) and elapsed < 120
    report(5, ok, f"AUC betweenness {b.auc():.4f} vs random {r.auc():.4f}; LCC at 10% "
                  f"{b.at(0.10):.3f} vs {r.at(0.10):.3f}; {elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_6_curve_invariants(report):
    net = elongated_network(50, 10, 2, seed=1)
    grid = fraction_grid()
    problems = []
    runs = {}
    for threads in (1, 2, 4):
        tables = {t.index_name: t for t in all_centralities(net, threads=threads)}
        curves = []
        for name in ("betweenness", "load", "degree", "closeness"):
            for notion in ("weak", "strong"):
                curves.append(attack(net, AttackStrategy.by_index(tables[name]), grid, notion))
        curves.append(attack(net, AttackStrategy.random(20, seed=5), grid))
        runs[threads] = b"".join(c.lcc_fraction.tobytes() for c in curves)
        for c in curves:
            if c.lcc_fraction[0] != 1.0:
                problems.append(f"{c.strategy} starts at {c.lcc_fraction[0]}")
            if np.any(np.diff(c.lcc_fraction) > 0):
                problems.append(f"{c.strategy} increases")
    rerun = attack(net, AttackStrategy.random(20, seed=5), grid).lcc_fraction.tobytes()
    identical = len(set(runs.values())) == 1 and runs[1].endswith(rerun)
    ok = not problems and identical
    report(6, ok, f"monotone and start at 1: {not problems}; bitwise identical across runs and "
                  f"1/2/4 threads: {identical}")
    assert ok, problems[:5]


def test_criterion_7_statistics(report):
    rng = np.random.default_rng(77)
    tau_err = 0.0
    for _ in range(50):
        x = rng.integers(0, 5, 12).astype(float)
        y = rng.integers(0, 5, 12).astype(float)
        if len(set(x)) > 1 and len(set(y)) > 1:
            tau_err = max(tau_err, abs(kendall_tau(x, y).statistic - oracles.tau_b(x, y)))
    p = mann_whitney([1, 2], [3, 4]).p_value
    gap = 0.0
    for _ in range(100):
        pool = rng.permutation(10_000)[:16] / 7.0
        gap = max(gap, abs(mann_whitney(pool[:8], pool[8:], "exact").p_value
                           - mann_whitney(pool[:8], pool[8:], "approx").p_value))
    ok = tau_err <= 1e-12 and abs(p - 1 / 3) <= 1e-15 and gap <= 0.02
    report(7, ok, f"tau-b error {tau_err:.1e}, exact p {p:.15f}, max exact-approx gap {gap:.4f}")
    assert ok


def test_criterion_8_demo_replay(report, tmp_path, capsys):
    from roadrobust.cli import main
    from roadrobust.pipeline import MANIFEST

    first = tmp_path / "demo"
    code1 = main(["demo", "--output", str(first)])
    code2 = main(["run", "--config", str(first / "results" / MANIFEST), "--output", str(tmp_path / "replay")])

    def files(root):
        return {p.name: p.read_bytes() for p in root.iterdir() if p.name != MANIFEST}

    a, b = files(first / "results"), files(tmp_path / "replay")
    same = a == b and len(a) >= 16
    ok = code1 == 0 and code2 == 0 and same
    capsys.readouterr()
    report(8, ok, f"{len(a)} outputs, replay from manifest byte-identical: {same}")
    assert ok


def test_criterion_9_scale(report):
    t0 = time.perf_counter()
    net = elongated_network(400, 100, 8, seed=0, name="scale")
    build = time.perf_counter() - t0
    t1 = time.perf_counter()
    tables = all_centralities(net)
    elapsed = time.perf_counter() - t1
    ok = len(tables) == 7 and all(np.all(np.isfinite(t.values)) for t in tables)
    report(9, ok, f"{net.n_nodes} nodes / {net.n_edges} edges: all indices (exact closeness) in "
                  f"{elapsed:.1f} s wall time, network built in {build:.1f} s")
    assert ok
