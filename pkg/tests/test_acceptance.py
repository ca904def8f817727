"""Acceptance gate: one check per criterion, summarised at the end of the run."""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

import oracles
from conftest import random_psd, random_stable_phi, record_acceptance
from qspill.backbone import disparity_alpha, extract_backbone
from qspill.connectedness import (
    directional_measures,
    gfevd,
    group_decompose,
    joint_from,
    joint_sot,
    normalize_gsot,
    spillover_set,
)
from qspill.motifs import DirectedGraph, colored_census, motif_zscores, randomize_degree_preserving, triad_census
from qspill.motifs.triads import CODE_CLASS, CODE_NODE_ORBIT, MILO_IDS, class_index, classify_triad, code_to_matrix
from qspill.orbits import LN30, position_profiles, profile_entropy, similarity_matrix
from qspill.pipeline import PipelineConfig, run_pipeline
from qspill.portfolio import WeightSeries, backtest, build_pci, weights_inverse_rule
from qspill.qvar import fit_qvar, fit_quantile_regression, ma_coefficients, pinball_loss
from qspill.synthetic import simulate_var1, synthetic_panel, write_panel_csvs

from test_backbone import alpha_by_quadrature
from test_qvar import lp_quantile_objective

pytestmark = pytest.mark.acceptance


def check(n, ok, detail):
    record_acceptance(n, ok, detail)
    assert ok, detail


def test_criterion_01_triad_census_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad = 0
    for k in range(200):
        n = int(rng.integers(3, 10))
        A = oracles.random_digraph(rng, n, (0.1, 0.3, 0.5)[k % 3])
        c = triad_census(A)
        counts, orbits = oracles.brute_census(A)
        got = {m: int(x) for m, x in zip(MILO_IDS, c.counts) if x}
        connected = sum(counts.values())
        if got != counts or not np.array_equal(c.orbit_counts, orbits) or c.counts.sum() != connected:
            bad += 1
    dt = time.perf_counter() - t0
    check(1, bad == 0 and dt < 30, f"{200 - bad}/200 graphs match the brute-force classifier, {dt:.1f}s")


def test_criterion_02_triad_table():
    reps, orbit = oracles.catalogue()
    mismatch = 0
    for code in range(64):
        res = oracles.classify(code_to_matrix(code), (0, 1, 2))
        if res is None:
            mismatch += CODE_CLASS[code] != -1
        else:
            mismatch += MILO_IDS[CODE_CLASS[code]] != res[0] or tuple(CODE_NODE_ORBIT[code]) != res[1]

    def cls(edges):
        A = np.zeros((3, 3), dtype=int)
        for i, j in edges:
            A[i, j] = 1
        return classify_triad(A)

    anchors = (cls([(0, 1), (0, 2)])[0], cls([(0, 2), (1, 2)])[0], cls([(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]))
    ok = (mismatch == 0 and tuple(sorted(reps)) == MILO_IDS and anchors[0] == 6 and anchors[1] == 36
          and anchors[2][0] == 238 and len(set(anchors[2][1])) == 1)
    check(2, ok, f"64 configurations, {mismatch} mismatches; anchors 6/36/238 = {anchors[0]}/{anchors[1]}/{anchors[2][0]}")


def test_criterion_03_disparity_filter():
    t0 = time.perf_counter()
    worst = 0.0
    for x in np.linspace(0.0, 1.0, 10):
        for k in range(2, 12):
            worst = max(worst, abs(disparity_alpha(x, k) - alpha_by_quadrature(x, k)))
    rng = np.random.default_rng(3)
    levels = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0]
    monotone = 0
    for _ in range(100):
        n = int(rng.integers(3, 15))
        W = rng.exponential(1.0, (n, n)) * (rng.random((n, n)) < rng.uniform(0.2, 0.8))
        sets = [extract_backbone(W, a).edge_set() for a in levels]
        monotone += all(a <= b for a, b in zip(sets, sets[1:]))
    dt = time.perf_counter() - t0
    check(3, worst < 1e-10 and monotone == 100 and dt < 10,
          f"max |closed form - quadrature| = {worst:.1e} on 100 points; {monotone}/100 monotone; {dt:.1f}s")


def test_criterion_04_connectedness_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = {"rows": 0.0, "jsot": 0.0, "net": 0.0, "groups": 0.0}
    bounded = True
    for _ in range(100):
        n = int(rng.integers(2, 8))
        P = ma_coefficients(random_stable_phi(rng, n, 1, rng.uniform(0.1, 0.9)), int(rng.integers(1, 21))).stack()
        S = random_psd(rng, n)
        g = normalize_gsot(gfevd(P, S))
        jf = joint_from(P, S)
        j = joint_sot(g, jf)
        d = directional_measures(j, jf)
        part = list(rng.choice(["a", "b", "c"], n))
        grp = group_decompose(j, jf, part)
        bounded &= bool(np.all((jf >= 0) & (jf <= 1)))
        worst["rows"] = max(worst["rows"], np.abs(g.sum(axis=1) - 1).max())
        worst["jsot"] = max(worst["jsot"], np.abs(j.sum(axis=1) - np.diag(j) - jf).max())
        worst["net"] = max(worst["net"], abs(d["net"].sum()))
        worst["groups"] = max(worst["groups"], abs(grp["internal"] + grp["external"] - jf.mean()))
    P0 = np.stack([np.eye(4)] + [np.zeros((4, 4))] * 9)
    S0 = np.diag([1.0, 2.0, 3.0, 4.0])
    zero = [spillover_set(P0, S0, tau=0.5, mode=m).tci_overall for m in ("generalized", "joint")]
    dt = time.perf_counter() - t0
    ok = (worst["rows"] < 1e-8 and worst["jsot"] < 1e-10 and worst["net"] < 1e-10 and worst["groups"] < 1e-10
          and bounded and zero == [0.0, 0.0] and dt < 30)
    check(4, ok, "worst errors " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
          + f"; FROM in [0,1]: {bounded}; diagonal TCI = {zero}; {dt:.1f}s")


def test_criterion_05_quantile_regression():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(50):
        T, k = int(rng.integers(10, 61)), int(rng.integers(1, 5))
        tau = (0.05, 0.5, 0.95)[i % 3]
        X = np.column_stack([np.ones(T), rng.standard_normal((T, k - 1))])
        y = X @ rng.standard_normal(k) + rng.standard_t(3, T)
        b = fit_quantile_regression(X, y, tau)
        ref = lp_quantile_objective(X, y, tau)
        worst = max(worst, (pinball_loss(y - X @ b, tau) - ref) / ref)
    y = rng.standard_normal(41)
    med_err = abs(fit_quantile_regression(np.ones((41, 1)), y, 0.5)[0] - np.median(y))
    dt = time.perf_counter() - t0
    check(5, worst < 1e-6 and med_err < 1e-12 and dt < 60,
          f"worst relative objective gap {worst:.1e} over 50 instances; |median error| {med_err:.1e}; {dt:.1f}s")


def test_criterion_06_qvar_recovery():
    t0 = time.perf_counter()
    errors = []
    for seed in range(20):
        Y = simulate_var1(0.5 * np.eye(4), 2000, np.random.default_rng(seed))
        errors.append(float(np.abs(fit_qvar(Y, 1, 0.5).phi[0] - 0.5 * np.eye(4)).max()))
    passed = sum(e < 0.05 for e in errors)
    dt = time.perf_counter() - t0
    check(6, passed >= 19 and dt < 120,
          f"{passed}/20 replications with max coefficient error < 0.05 (need 19); "
          f"median max error {np.median(errors):.3f}; {dt:.1f}s")


def test_criterion_07_null_model_contract():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    graphs = [DirectedGraph.from_adjacency(oracles.random_digraph(rng, int(rng.integers(4, 40)),
                                                                  float(rng.uniform(0.05, 0.4))))
              for _ in range(60)]
    preserved = all(np.array_equal(randomize_degree_preserving(g, seed=s).graph.degree_triples(),
                                   g.degree_triples()) for s, g in enumerate(graphs))

    def run(s):
        return randomize_degree_preserving(graphs[s], seed=s).graph.edges

    serial = [run(s) for s in range(len(graphs))]
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = list(pool.map(run, range(len(graphs))))
    fixture = oracles.planted_fixture(0)
    z1, z2 = motif_zscores(fixture, n_rand=100, seed=3), motif_zscores(fixture, n_rand=100, seed=3)
    with ThreadPoolExecutor(max_workers=4) as pool:
        z3 = list(pool.map(lambda _: motif_zscores(fixture, n_rand=100, seed=3), range(2)))
    same = (serial == threaded and np.array_equal(z1.rnd_sum, z2.rnd_sum)
            and all(np.array_equal(z.rnd_sumsq, z1.rnd_sumsq) for z in z3))
    dt = time.perf_counter() - t0
    check(7, preserved and same and dt < 30,
          f"degree triples preserved on 60 graphs: {preserved}; identical across runs/threads: {same}; {dt:.1f}s")


def test_criterion_08_planted_motif_power():
    t0 = time.perf_counter()
    i238 = class_index(238)
    planted = motif_zscores(oracles.planted_fixture(0), n_rand=200, seed=0).z[i238]
    removed = motif_zscores(oracles.planted_fixture(0, planted=False), n_rand=200, seed=0).z[i238]
    dt = time.perf_counter() - t0
    check(8, planted > 3 and abs(removed) < 2 and dt < 120,
          f"z(238) planted {planted:.2f} (> 3), background {removed:.2f} (|z| < 2); {dt:.1f}s")


def test_criterion_09_colored_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    sums_ok = invariant = 0
    for _ in range(100):
        n = int(rng.integers(3, 10))
        A = oracles.random_digraph(rng, n, float(rng.choice([0.1, 0.3, 0.5])))
        cols = list(rng.choice(["E", "C", "M"], n))
        col = colored_census(A, cols)
        per = {}
        for key, v in col.items():
            per[key.milo_id] = per.get(key.milo_id, 0) + v
        plain = {m: int(x) for m, x in zip(MILO_IDS, triad_census(A).counts) if x}
        sums_ok += per == plain
        perm = rng.permutation(n)
        invariant += colored_census(A[np.ix_(perm, perm)], [cols[i] for i in perm]) == col
    dt = time.perf_counter() - t0
    check(9, sums_ok == 100 and invariant == 100 and dt < 30,
          f"class sums match on {sums_ok}/100, keys relabeling-invariant on {invariant}/100; {dt:.1f}s")


def test_criterion_10_orbit_analytics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    P = position_profiles(rng.integers(0, 6, (300, 30)) * (rng.random((300, 30)) < 0.6))
    d = profile_entropy(P)
    ok_d = ~np.isnan(d)
    in_range = bool(np.all((d[ok_d] >= 0) & (d[ok_d] <= LN30)))
    one_hot = profile_entropy(np.eye(30)[7])
    uniform = profile_entropy(np.full(30, 1 / 30))
    props = True
    for _ in range(20):
        H = similarity_matrix(rng.dirichlet(np.ones(30) * rng.uniform(0.2, 3), size=int(rng.integers(2, 15)))).H
        props &= bool(np.array_equal(H, H.T) and np.all(np.diag(H) == 1.0) and np.all(np.abs(H) <= 1.0))
    dt = time.perf_counter() - t0
    check(10, in_range and one_hot == 0.0 and uniform == LN30 and props and dt < 10,
          f"entropy in [0, ln 30]: {in_range}; one-hot {one_hot}; uniform - ln30 = {uniform - LN30:.1e}; "
          f"H symmetric/unit-diagonal/bounded: {props}; {dt:.1f}s")


def test_criterion_11_portfolio_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    eq = np.allclose(weights_inverse_rule(np.eye(6)), 1 / 6, rtol=0, atol=1e-15)
    worst_sum = homog = 0.0
    for _ in range(50):
        M = random_psd(rng, int(rng.integers(2, 12)))
        w = weights_inverse_rule(M)
        worst_sum = max(worst_sum, abs(w.sum() - 1))
        homog = max(homog, np.abs(weights_inverse_rule(rng.uniform(0.1, 100) * M) - w).max())
    mcop = np.allclose(weights_inverse_rule(build_pci(np.diag(rng.uniform(0.5, 1, 5)))), 0.2, atol=1e-15)
    from conftest import make_returns

    R = rng.standard_normal((30, 2)) * 0.01
    R[10] = [9.0, -9.0]
    panel = make_returns(R)
    rep = backtest(WeightSeries("MVP", None, [panel.dates[10]], [[1.0, 0.0]]), panel)
    sentinel = rep.daily.iloc[0] == R[11, 0] and rep.daily.index[0] == panel.dates[11]
    dt = time.perf_counter() - t0
    check(11, eq and worst_sum < 1e-10 and homog < 1e-10 and mcop and sentinel and dt < 10,
          f"identity equal-weight {eq}; worst |sum-1| {worst_sum:.1e}; homogeneity {homog:.1e}; "
          f"zero-PCI MCoP equal {mcop}; no look-ahead {sentinel}; {dt:.1f}s")


def _outputs(manifest: Path):
    m = json.loads(manifest.read_text())
    return m, {n: (manifest.parent / n).read_bytes() for s in m["stages"] for n in s["files"]}


def test_criterion_12_end_to_end_determinism(tmp_path):
    paths, meta = write_panel_csvs(synthetic_panel(10, 600, seed=0), tmp_path / "data")
    base = dict(inputs=paths, partition=str(meta), quantiles=(0.05, 0.5, 0.95), alphas=(0.05, 0.10))
    times, runs = [], []
    for name, workers in (("run1", 1), ("run2", 1), ("run8", 8)):
        t0 = time.perf_counter()
        manifest = run_pipeline(PipelineConfig(**base, workers=workers, output_dir=str(tmp_path / name)))
        times.append(time.perf_counter() - t0)
        runs.append(_outputs(manifest))
    (m1, f1), (m2, f2), (m8, f8) = runs
    stages = [s["name"] for s in m1["stages"]]
    ok = (m1["status"] == "complete" and len(stages) == 6 and f1 == f2 and f1 == f8
          and m1 == m2 == m8 and max(times) < 300)
    check(12, ok, f"{len(f1)} files; run1 == run2: {f1 == f2}; 1 vs 8 workers: {f1 == f8}; "
          f"times {', '.join(f'{t:.0f}s' for t in times)}")
