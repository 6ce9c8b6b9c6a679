"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION k ... PASS|FAIL`` line (visible with
``pytest -v`` or ``-s``) and then asserts.  The statistical criteria run the
full desk-scale protocols, so this module takes several minutes on one core.
"""

import math
from itertools import combinations

import numpy as np
import pytest

from randsel import artifacts
from randsel.data import Dataset, gen_xor
from randsel.exceptions import InfeasibleError
from randsel.kernels import gaussian_kernel
from randsel.lp import LinearProgram, LpStatus, solve
from randsel.mkl import fit_ensemble, krr_objective, lpboost_combine, tune_D
from randsel.sampling import SubsampleTask, TaskKind
from randsel.selector import RandSelConfig, aggregate_contributions, estimate_contributions, evaluate_task, run

from .test_lp import random_boxed_program, vertex_oracle
from .test_selector import exhaustive_contributions, fixed_twelve_sample_data


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return emit


def test_criterion_1_xor_separation(report):
    successes = 0
    for seed in range(1, 21):
        data = gen_xor(50, 4000, seed=seed)
        cfg = RandSelConfig(r=2000, s=500, master_seed=seed)
        table, _ = estimate_contributions(data, cfg, tuple(range(50)))
        c = table.contribution
        successes += bool(c[:2].min() > c[2:].max())
    assert report(1, "XOR separation n=50 m=4000 s=500 r=2000", successes >= 18, f"{successes}/20 runs separated, need 18")


def test_criterion_2_xor_survival(report):
    survived = rising = 0
    for seed in range(1, 21):
        data = gen_xor(20, 2000, seed=seed)
        trace = run(data, RandSelConfig(r=500, s=200, z=0.125, sigma0=0.25, master_seed=seed))
        if set(trace.final_active) != {0, 1}:
            continue
        survived += 1
        tail = [0.5 * (rec.table[0] + rec.table[1]) for rec in trace.iterations[-3:]]
        rising += all(b > a for a, b in zip(tail, tail[1:]))
    ok = survived >= 19 and rising >= 15
    assert report(2, "XOR survival under culling n=20", ok, f"survival {survived}/20 (need 19), rising tail {rising}/20 (need 15)")


def test_criterion_3_contribution_oracle(report):
    data = fixed_twelve_sample_data()
    sigma0 = 1.0
    oracle = exhaustive_contributions(data.X, data.y, sigma0)

    cfg = RandSelConfig(r=100_000, sigma0=sigma0, full_rows=True, master_seed=3)
    table, _ = estimate_contributions(data, cfg, tuple(range(4)))
    mc_err = max(abs(table[j] - oracle[j]) for j in range(4))

    rows = np.arange(12)
    tasks = [SubsampleTask(S, rows, 0, TaskKind.BASE) for S in combinations(range(4), 2)]
    tasks += [SubsampleTask(S, rows, 0, TaskKind.PLUS) for S in combinations(range(4), 3)]
    exact = aggregate_contributions([(t, evaluate_task(t, data, cfg)) for t in tasks], range(4))
    ex_err = max(abs(exact[j] - oracle[j]) for j in range(4))

    ok = mc_err <= 0.01 and ex_err <= 1e-12
    assert report(3, "contribution oracle n=4", ok, f"Monte-Carlo error {mc_err:.2e} (<=1e-2), exhaustive error {ex_err:.2e} (<=1e-12)")


def test_criterion_4_mean_embedding_identity(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        m, d = int(rng.integers(2, 80)), int(rng.integers(1, 10))
        X, y = rng.normal(size=(m, d)), rng.choice([-1.0, 1.0], size=m)
        lhs = math.sqrt(max(0.0, float(y @ (X @ X.T) @ y) / m**2))
        rhs = float(np.linalg.norm((y[:, None] * X).sum(axis=0) / m))
        worst = max(worst, abs(lhs - rhs))
    assert report(4, "linear-kernel mean embedding identity", worst <= 1e-10, f"max gap {worst:.2e} over 100 instances")


def test_criterion_5_irrelevant_feature_monotonicity(report):
    rng = np.random.default_rng(5)
    m, gamma = 200, 0.5
    X = rng.choice([-1.0, 1.0], size=(m, 2))
    y = X[:, 0] * X[:, 1]
    base = float(y @ gaussian_kernel(X, gamma) @ y) / m**2
    diffs = np.array([
        float(y @ gaussian_kernel(np.column_stack([X, rng.uniform(-1, 1, m)]), gamma) @ y) / m**2 - base
        for _ in range(100)
    ])
    se = diffs.std(ddof=1) / math.sqrt(diffs.size)
    ok = diffs.mean() <= 3 * se
    assert report(5, "adding noise lowers the statistic", ok, f"mean diff {diffs.mean():.3e}, 3 SE {3 * se:.3e}")


def test_criterion_6_lp_solver(report):
    rng = np.random.default_rng(6)
    worst_obj = 0.0
    status_ok = True
    for _ in range(200):
        lp = random_boxed_program(rng)
        expected, sol = vertex_oracle(lp), solve(lp)
        if expected is None:
            status_ok &= sol.status is LpStatus.INFEASIBLE
        else:
            status_ok &= sol.optimal
            worst_obj = max(worst_obj, abs(sol.objective_value - expected))

    worst_con = worst_sum = 0.0
    for k in range(20):
        m, n_k = int(rng.integers(5, 60)), int(rng.integers(1, 30))
        H, y = rng.normal(size=(m, n_k)), rng.choice([-1.0, 1.0], size=m)
        D = float(rng.uniform(1.0 / m, 1.0))
        model = lpboost_combine(H, y, D)
        u = model.u
        viol = max(float(np.max((y * u) @ H - model.beta)), float(np.max(-u)), float(np.max(u - D)), 0.0)
        worst_con = max(worst_con, viol)
        worst_sum = max(worst_sum, abs(u.sum() - 1.0))

    infeasible_ok = True
    for m, D in [(4, 0.2), (10, 0.05), (3, 0.3)]:
        try:
            lpboost_combine(np.ones((m, 2)), np.ones(m), D)
            infeasible_ok = False
        except InfeasibleError:
            pass
    ok = status_ok and worst_obj <= 1e-9 and worst_con <= 1e-8 and worst_sum <= 1e-9 and infeasible_ok
    detail = f"objective error {worst_obj:.1e}, LPBoost violation {worst_con:.1e}, |sum u - 1| {worst_sum:.1e}, infeasible flagged {infeasible_ok}"
    assert report(6, "LP solver", ok, detail)


def test_criterion_7_krr(report):
    rng = np.random.default_rng(7)
    data = gen_xor(5, 120, seed=7)
    model = fit_ensemble(data, [(0, 1, 2, 3, 4), (0, 1, 2), (0, 1)], sigmas=[0.05, 0.5, 5.0], lambda_grid=[1e-3, 1e-2, 1e-1], D=0.05)
    worst_res = 0.0
    for learner in model.learners:
        Z = data.X[np.ix_(learner.train_rows, list(learner.spec.features))]
        K = gaussian_kernel(Z, learner.spec.sigma)
        A = K + learner.ridge_lambda * np.eye(K.shape[0])
        worst_res = max(worst_res, float(np.max(np.abs(A @ learner.dual_coefficients - data.y[learner.train_rows]))))

    worst_rel = 0.0
    for _ in range(50):
        Z, y = rng.normal(size=(5, 3)), rng.choice([-1.0, 1.0], size=5)
        K, lam, a = gaussian_kernel(Z, 0.7), 0.05, rng.normal(size=5)
        _, g = krr_objective(K, y, a, lam)
        h = 1e-5
        fd = np.array([(krr_objective(K, y, a + h * e, lam)[0] - krr_objective(K, y, a - h * e, lam)[0]) / (2 * h) for e in np.eye(5)])
        worst_rel = max(worst_rel, float(np.linalg.norm(g - fd) / np.linalg.norm(g)))
    ok = worst_res < 1e-8 and worst_rel <= 1e-6
    assert report(7, "kernel ridge regression", ok, f"max residual {worst_res:.1e} over {len(model.learners)} fits, gradient rel. error {worst_rel:.1e}")


def test_criterion_8_end_to_end(report, tmp_path):
    accuracies = []
    for seed in range(1, 11):
        train, test = gen_xor(10, 300, seed=seed), gen_xor(10, 500, seed=1000 + seed)
        trace = run(train, RandSelConfig(r=200, s=100, master_seed=seed))
        artifacts.dump_trace(trace, tmp_path / "trace.json")
        trace = artifacts.load_trace(tmp_path / "trace.json")
        model, _, _ = tune_D(train, trace, [0.01, 0.05], seed=seed, sigmas=[0.1, 0.5, 2.0], lambda_grid=[1e-2])
        artifacts.dump_model(model, tmp_path / "model.json", train.X, train.class_map)
        model, _ = artifacts.load_model(tmp_path / "model.json")
        accuracies.append(float(np.mean(model.predict(test.X) == test.y)))
    ok = min(accuracies) >= 0.95
    assert report(8, "XOR select-train-predict", ok, f"test accuracy min {min(accuracies):.3f} mean {np.mean(accuracies):.3f} over 10 seeds")


def test_criterion_9_thread_determinism(report, tmp_path):
    data = gen_xor(12, 600, seed=9)
    cfg = RandSelConfig(r=200, s=120, master_seed=99)
    blobs = []
    for threads in (1, 4):
        artifacts.dump_trace(run(data, cfg, threads=threads), tmp_path / f"t{threads}.json")
        blobs.append((tmp_path / f"t{threads}.json").read_bytes())
    ok = blobs[0] == blobs[1]
    assert report(9, "byte-identical trace across threads 1 and 4", ok, f"{len(blobs[0])} bytes, identical={ok}")
