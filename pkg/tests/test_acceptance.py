"""Acceptance suite A1-A10.

Each criterion prints one ``A<k> PASS|FAIL: detail`` line and then asserts.
Run with ``pytest tests/test_acceptance.py -v -s`` (or plain ``-v``; the
lines are written with output capture disabled).
"""
import json
import time

import numpy as np
import pytest

from kerneldr import dimred
from kerneldr.classify import augment, dual_objective, evaluate, svm_fit
from kerneldr.cli import main as cli_main
from kerneldr.hsic import LinkSpec, hsic_empirical, link_matrix
from kerneldr.kernels import KernelSpec, gram
from kerneldr.pipeline import (
    ExperimentConfig,
    bootstrap_ensemble,
    merge_worker_outputs,
    run_single,
    simulation_study,
    stratified_split,
)
from kerneldr.synthdata import SynthSpec, generate
from oracles import align_signs, hsic_explicit, svm_dual_oracle

pytestmark = pytest.mark.slow

KERNEL = ("kpca", "skpca", "klda")


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def studies():
    out = {}
    for name in ("wine_chocolate", "apple_tart", "swiss_roll"):
        t0 = time.perf_counter()
        metrics, _ = simulation_study(name, n_per_class=300, seed=7, d=2, lda_d=1)
        out[name] = (metrics, time.perf_counter() - t0)
    return out


def _acc(metrics):
    return {m: v["accuracy"] for m, v in metrics["methods"].items()}


def _fmt(acc):
    return " ".join(f"{m}={a:.3f}" for m, a in acc.items())


def test_a1_wine_chocolate(studies, verdict):
    metrics, secs = studies["wine_chocolate"]
    acc = _acc(metrics)
    ok = (acc["klda"] >= 0.99 and acc["skpca"] >= 0.97 and acc["kpca"] >= 0.95
          and acc["pca"] <= 0.85 and acc["lda"] <= 0.85 and secs < 60)
    verdict("A1", ok, f"{_fmt(acc)} time={secs:.1f}s")


@pytest.mark.parametrize("name", ["apple_tart", "swiss_roll"])
def test_a2_harder_sets(studies, verdict, name):
    metrics, _ = studies[name]
    total = studies["apple_tart"][1] + studies["swiss_roll"][1]
    acc = _acc(metrics)
    best = max(acc[m] for m in KERNEL)
    ok = best >= 0.95 and acc["pca"] <= 0.80 and acc["lda"] <= 0.80 and total < 120
    verdict(f"A2[{name}]", ok, f"{_fmt(acc)} best_kernel={best:.3f} time(both)={total:.1f}s")


def test_a3_hsic_oracle(verdict):
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 21))
        X = rng.normal(size=(n, int(rng.integers(1, 5))))
        y = rng.integers(0, 3, n)
        K = gram(KernelSpec("rbf", float(rng.uniform(0.1, 2))), X).entries
        L = link_matrix(LinkSpec(), y)
        worst = max(worst, abs(hsic_empirical(K, L) - hsic_explicit(K, L)))
    verdict("A3", worst <= 1e-10, f"max |delta| over 50 instances = {worst:.2e}")


def test_a4_linear_kpca_equals_pca(verdict):
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        n, p = int(rng.integers(10, 51)), int(rng.integers(2, 11))
        X = rng.normal(size=(n, p)) * rng.uniform(0.5, 3, p)
        d = min(p, 3)
        ref = dimred.fit_pca(X, d).train_projections
        got = dimred.fit_kpca(X, KernelSpec("linear"), d).train_projections
        worst = max(worst, np.abs(align_signs(ref, got) - ref).max())
    verdict("A4", worst <= 1e-8, f"max projection gap over 20 datasets = {worst:.2e}")


def _quiet(fn, *a, **k):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*a, **k)


def test_a5_rank_ceilings(verdict):
    rng = np.random.default_rng(5)
    rbf = KernelSpec("rbf", 0.5)
    X2 = np.vstack([c + 0.5 * rng.normal(size=(15, 2)) for c in ([0, 0], [1, 1])])
    y2 = np.repeat([0, 1], 15)
    sk = _quiet(dimred.fit_skpca, X2, y2, rbf, LinkSpec(), 6).meta["rank"]
    skm = _quiet(dimred.fit_skpca, X2, y2, rbf, LinkSpec("modified", 1.0, 1.0), 6).meta["rank"]
    C = 4
    X4 = np.vstack([c + 0.5 * rng.normal(size=(12, 2)) for c in ([0, 0], [2, 0], [0, 2], [2, 2])])
    y4 = np.repeat(np.arange(C), 12)
    kl = _quiet(dimred.fit_klda, X4, y4, rbf, 6).meta["rank"]
    ld = _quiet(dimred.fit_lda, np.c_[X4, rng.normal(size=(48, 3))], y4, 5).meta["rank"]
    ok = sk <= 2 and kl <= C - 1 and ld <= C - 1 and skm > 2
    verdict("A5", ok, f"skpca_indicator={sk} klda(C=4)={kl} lda(C=4)={ld} skpca_modified={skm}")


def test_a6_residuals(studies, verdict):
    worst = max(v["max_rel_residual"] for m, _ in studies.values() for v in m["methods"].values())
    verdict("A6", worst <= 1e-8, f"max relative eigen-residual over A1-A2 fits = {worst:.2e}")


def test_a7_svm_oracle(verdict):
    worst = 0.0
    for seed in range(25):
        rng = np.random.default_rng(700 + seed)
        n, d = 4 + seed % 5, 1 + seed % 2
        X = rng.normal(size=(n, d))
        y = np.tile([0, 1], n)[:n]
        X[y == 1] += rng.uniform(0, 2)
        cost = float(10.0 ** rng.uniform(-1, 1.5))
        ys = np.where(y == 1, 1.0, -1.0)
        m = svm_fit(X, y, cost)
        worst = max(worst, abs(dual_objective(augment(X), ys, m.alpha) - svm_dual_oracle(X, ys, cost)))
    hm = svm_fit(np.array([[-1.0], [1.0]]), np.array([-1, 1]), 1e6)
    hm_ok = abs(hm.w[0] - 1) <= 1e-3 and abs(hm.b) <= 1e-3
    verdict("A7", worst <= 1e-3 and hm_ok,
            f"max dual gap over 25 instances = {worst:.2e}; hard margin w={hm.w[0]:.6f} b={hm.b:.2e}")


def test_a8_metrics(verdict):
    r = evaluate(np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0]), np.array([1, 1, 1, 0, 1, 1, 0, 0, 0, 0]))
    counted = r.confusion.tolist() == [[3, 1], [2, 4]]
    exact = r.accuracy == 0.7 and r.tpr == 0.75 and r.tnr == 2 / 3
    y = np.array([0, 1, 0, 1, 1, 0])
    perfect = evaluate(y, y, y.astype(float)).auc == 1.0
    rng = np.random.default_rng(8)
    yr = rng.integers(0, 2, 10000)
    auc = evaluate(yr, yr, rng.permutation(np.linspace(0, 1, 10000))).auc
    ok = counted and exact and perfect and 0.45 <= auc <= 0.55
    verdict("A8", ok, f"confusion={r.confusion.tolist()} acc={r.accuracy} tpr={r.tpr} "
                      f"tnr={r.tnr:.6f} perfect_auc={perfect} shuffled_auc={auc:.4f}")


def test_a9_ensemble(verdict):
    data = generate(SynthSpec("wine_chocolate", 6000, noise_sd=0.5, seed=11))
    a, b = stratified_split(data.y, 0.5, 11)
    M1, M2 = data.subset(a), data.subset(b)
    cfg = ExperimentConfig(method="kpca", kernel=KernelSpec("rbf", 0.5), d=2, cost=1.0, seed=3)
    full = run_single(M1, M2, cfg).report.accuracy
    t0 = time.perf_counter()
    seq = bootstrap_ensemble(M1, M2, cfg, 5, 1000, workers=1)
    t_seq = time.perf_counter() - t0
    t0 = time.perf_counter()
    par = bootstrap_ensemble(M1, M2, cfg, 5, 1000, workers=5)
    t_par = time.perf_counter() - t0
    outputs = [(i, seq.votes[i], None) for i in range(5)]
    perm_ok = all(
        np.array_equal(merge_worker_outputs([outputs[k] for k in p], 1)[0], seq.predictions)
        for p in ([4, 3, 2, 1, 0], [2, 0, 4, 1, 3], [1, 2, 3, 4, 0])
    )
    same = np.array_equal(seq.predictions, par.predictions)
    gap = abs(seq.report.accuracy - full)
    ok = gap <= 0.03 and perm_ok and same
    verdict("A9", ok, f"ensemble={seq.report.accuracy:.4f} full={full:.4f} gap={gap:.4f} "
                      f"order_invariant={perm_ok and same} speedup(report only)={t_seq / t_par:.2f}x "
                      f"seq={t_seq:.1f}s par={t_par:.1f}s")


def test_a10_rerun_a1(tmp_path, verdict, capsys):
    doc = tmp_path / "a1.run.json"
    argv = ["simulate", "--dataset", "wine_chocolate", "--n-per-class", "300", "--seed", "7",
            "--d", "2", "--lda-d", "1", "--doc", str(doc)]
    assert cli_main(argv) == 0
    again = tmp_path / "again.json"
    code = cli_main(["rerun", str(doc), "--doc-out", str(again)])
    first, second = json.loads(doc.read_text()), json.loads(again.read_text())
    ok = code == 0 and first["metrics"] == second["metrics"]
    verdict("A10", ok, f"rerun exit={code}; metrics identical={first['metrics'] == second['metrics']}")
