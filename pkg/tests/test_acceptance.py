"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `[acceptance NN] name: PASS|FAIL` line; the heavy
directional benchmark (criteria 6 and 7) is trained and certified once in a
module-scoped fixture and shared.

Run with: pytest tests/test_acceptance.py -v -s
"""

import math
import time

import numpy as np
import pytest

from sween.benchmark import make_benchmark_task, train_benchmark_model
from sween.datasets import gen_gaussian_mixture
from sween.ensemble import (
    AdaptiveConfig,
    EnsembleWeights,
    SolveConfig,
    SweenModel,
    solve_weights,
    sween_smoothed_mc,
)
from sween.evaluate import certify_dataset
from sween.metrics import GammaSpec, PointOutcome, gamma_index, radius_accuracy_curve, upper_envelope
from sween.models import cross_entropy_grads, forward, init_mlp
from sween.numerics import (
    NoiseStreamKey,
    clopper_pearson_lower,
    std_normal_quantile,
)
from sween.smoothing import ABSTAIN, certified_radius, certify, smoothed_linear_exact, smoothed_probs_mc

import oracles
from test_ensemble import _grid_objective, _mc_mass_matrix


def _report(num: int, name: str, checks: dict):
    failed = [k for k, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
    print(f"\n[acceptance {num:02d}] {name}: {status}")
    assert not failed, f"criterion {num} ({name}) failed: {failed}"


@pytest.fixture(scope="module")
def benchmark_runs():
    """Criterion 6/7 artifacts: candidates, weights, and all certifications."""
    t0 = time.time()
    train, weight_eval, test = make_benchmark_task(seed=0)
    model = train_benchmark_model(train, weight_eval, seed=0)
    n0, n, alpha = 100, 10_000, 0.001

    candidate_reports = []
    for cand in model.candidates:
        single = SweenModel([cand], EnsembleWeights(np.array([1.0])), model.sigma)
        outs = certify_dataset(single, test, n0, n, alpha, seed=1)
        candidate_reports.append(radius_accuracy_curve(outs))
    sween_outcomes = certify_dataset(model, test, n0, n, alpha, seed=1)
    plain_seconds = time.time() - t0

    t1 = time.time()
    adaptive_outcomes = certify_dataset(model, test, n0, n, alpha, seed=1,
                                        adaptive=AdaptiveConfig(alpha=0.05, threshold=0.95,
                                                                s_local=100))
    adaptive_seconds = time.time() - t1
    return {
        "model": model,
        "test": test,
        "candidate_reports": candidate_reports,
        "sween_outcomes": sween_outcomes,
        "adaptive_outcomes": adaptive_outcomes,
        "plain_seconds": plain_seconds,
        "adaptive_seconds": adaptive_seconds,
        "plain_evals_per_point": float(np.mean([o.evals for o in sween_outcomes])),
        "adaptive_evals_per_point": float(np.mean([o.evals for o in adaptive_outcomes])),
    }


def test_01_linear_tightness_oracle():
    t0 = time.time()
    rng = np.random.default_rng(42)
    sigma, diameter = 0.5, 1e9
    worst = 0.0
    done = 0
    while done < 50:
        w = rng.standard_normal(2)
        b = float(rng.standard_normal())
        x = rng.standard_normal(2) * 1.5
        distance = abs(float(w @ x + b)) / float(np.linalg.norm(w))
        if distance / sigma > 6.0:
            continue  # keep probabilities clear of the clamp region
        p_pos = smoothed_linear_exact(w, b, x, sigma)
        p_top, p_run = max(p_pos, 1.0 - p_pos), min(p_pos, 1.0 - p_pos)
        radius = certified_radius(p_top, p_run, sigma, diameter)
        worst = max(worst, abs(radius - distance))
        done += 1
    elapsed = time.time() - t0
    _report(1, "linear-tightness-oracle", {
        "radius_equals_boundary_distance_1e-6": worst <= 1e-6,
        "runtime_under_1s": elapsed < 1.0,
    })


def test_02_quantile_accuracy():
    t0 = time.time()
    grid = np.linspace(0.0001, 0.9999, 10_000)
    worst = max(abs(std_normal_quantile(float(p)) - oracles.quantile_by_bisection(float(p)))
                for p in grid)
    elapsed = time.time() - t0
    _report(2, "quantile-vs-bisection-oracle", {
        "max_abs_error_1e-8": worst <= 1e-8,
        "runtime_under_1s": elapsed < 1.0,
    })


def test_03_clopper_pearson_exactness_and_coverage():
    t0 = time.time()
    value_ok = abs(clopper_pearson_lower(100, 100, 0.001) - 0.933254) <= 1e-5

    p_true, n_trials, alpha, runs = 0.8, 1000, 0.05, 10_000
    rng = np.random.default_rng(7)
    successes = rng.binomial(n_trials, p_true, size=runs)
    bounds = {s: clopper_pearson_lower(int(s), n_trials, alpha) for s in np.unique(successes)}
    violations = float(np.mean([bounds[int(s)] > p_true for s in successes]))
    limit = alpha + 3.0 * math.sqrt(alpha * (1.0 - alpha) / runs)
    elapsed = time.time() - t0
    _report(3, "clopper-pearson-exactness-and-coverage", {
        "all_successes_value_1e-5": value_ok,
        "coverage_violation_bounded": violations <= limit,
        "runtime_under_10s": elapsed < 10.0,
    })


def test_04_commutativity():
    t0 = time.time()
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(100):
        k = int(rng.integers(1, 6))
        m = int(rng.integers(2, 7))
        cands = [init_mlp([2, 4, m], seed=1000 * trial + i) for i in range(k)]
        w = rng.dirichlet(np.ones(k))
        model = SweenModel(cands, EnsembleWeights(w), sigma=0.6)
        x = rng.standard_normal(2)
        key = NoiseStreamKey(trial)
        shared = sween_smoothed_mc(model, x, 50, key, shared_noise=True)
        composed = sum(
            wk * smoothed_probs_mc(lambda b, c=c0: forward(c0, b), x, 0.6, 50, key).class_means
            for wk, c0 in zip(w, cands))
        worst = max(worst, float(np.max(np.abs(shared.class_means - composed))))
    elapsed = time.time() - t0
    _report(4, "smoothing-ensembling-commutativity", {
        "class_means_agree_1e-12": worst <= 1e-12,
        "runtime_under_5s": elapsed < 5.0,
    })


def test_05_weight_solver_optimality():
    t0 = time.time()
    checks = {}
    ds = gen_gaussian_mixture(2, 3, 60, 3.0, 0.6, seed=5)
    for k in (2, 3):
        cands = [init_mlp([2, 5, 3], seed=50 + i) for i in range(k)]
        cfg = SolveConfig(s=6, seed=6)
        got = solve_weights(cands, ds, 0.5, cfg)
        a = _mc_mass_matrix(cands, ds, 0.5, cfg.s, cfg.seed)
        obj_solver = float(_grid_objective(a, got.w[None, :])[0])
        obj_grid = float(_grid_objective(a, oracles.barycentric_grid(k, 0.01)).min())
        checks[f"k{k}_within_1e-3_of_grid"] = obj_solver <= obj_grid + 1e-3
    checks["runtime_under_30s"] = (time.time() - t0) < 30.0
    _report(5, "weight-solver-vs-grid-search", checks)


def test_06_sween_vs_upper_envelope(benchmark_runs):
    b = benchmark_runs
    ue = upper_envelope(b["candidate_reports"])
    sween_rep = radius_accuracy_curve(b["sween_outcomes"])
    worst_aca_margin = float(np.min(sween_rep.aca - ue.aca))
    print(f"\n  UE ACR={ue.acr:.4f}  SWEEN ACR={sween_rep.acr:.4f}  "
          f"worst ACA margin={worst_aca_margin:+.4f}  "
          f"({b['plain_seconds']:.0f}s)")
    _report(6, "sween-vs-upper-envelope", {
        "acr_within_0.01_of_ue": sween_rep.acr >= ue.acr - 0.01,
        "aca_within_0.02_at_every_radius": worst_aca_margin >= -0.02,
        "runtime_under_10min": b["plain_seconds"] < 600.0,
    })


def test_07_adaptive_prediction_savings(benchmark_runs):
    b = benchmark_runs
    full_rep = radius_accuracy_curve(b["sween_outcomes"])
    adaptive_rep = radius_accuracy_curve(b["adaptive_outcomes"])
    ratio_evals = b["adaptive_evals_per_point"] / b["plain_evals_per_point"]
    print(f"\n  evals/point {b['adaptive_evals_per_point']:.0f} vs "
          f"{b['plain_evals_per_point']:.0f} (ratio {ratio_evals:.3f}); "
          f"ACR {adaptive_rep.acr:.4f} vs {full_rep.acr:.4f}")
    _report(7, "adaptive-prediction-savings", {
        "mean_evals_at_most_0.85x": ratio_evals <= 0.85,
        "acr_at_least_0.95x_full": adaptive_rep.acr >= 0.95 * full_rep.acr,
        "runtime_under_15min": (b["plain_seconds"] + b["adaptive_seconds"]) < 900.0,
    })


def test_08_gradient_correctness():
    t0 = time.time()
    model = init_mlp([2, 4, 3], seed=5)
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 2))
    y = rng.integers(0, 3, size=6)
    _, grads = cross_entropy_grads(model, x, y)
    h = 1e-5
    worst = 0.0
    for li, layer in enumerate(model.layers):
        for arr, g in ((layer.weight, grads[li][0]), (layer.bias, grads[li][1])):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up, _ = cross_entropy_grads(model, x, y)
                arr[idx] = orig - h
                down, _ = cross_entropy_grads(model, x, y)
                arr[idx] = orig
                fd = (up - down) / (2.0 * h)
                worst = max(worst, abs(fd - g[idx]) / max(abs(fd), abs(g[idx]), 1e-8))
    elapsed = time.time() - t0
    _report(8, "analytic-gradients-vs-finite-differences", {
        "relative_error_1e-4": worst <= 1e-4,
        "runtime_under_1s": elapsed < 1.0,
    })


def test_09_metric_identities():
    t0 = time.time()
    rng = np.random.default_rng(11)
    outs = []
    for i in range(200):
        correct = bool(rng.uniform() < 0.75)
        radius = float(rng.uniform(0.0, 2.4)) if correct else 0.0
        outs.append(PointOutcome(i, 0, 0 if correct else ABSTAIN, radius, correct, 1))
    rep = radius_accuracy_curve(outs)
    area = oracles.step_curve_area([o.radius for o in outs], [o.correct for o in outs])
    gamma1_ok = all(
        gamma_index(outs, GammaSpec.indicator_at(float(r))) == rep.aca[j]
        for j, r in enumerate(rep.radius_grid) if r > 0.0)
    elapsed = time.time() - t0
    _report(9, "metric-identities", {
        "acr_equals_step_area_1e-9": abs(rep.acr - area) <= 1e-9,
        "gamma1_reproduces_aca": gamma1_ok,
        "gamma2_reproduces_acr": gamma_index(outs, GammaSpec.radius()) == rep.acr,
        "gamma3_unit_disk_pi_1e-9": abs(gamma_index([PointOutcome(0, 0, 0, 1.0, True, 1)],
                                                    GammaSpec.volume(2)) - math.pi) <= 1e-9,
        "runtime_under_1s": elapsed < 1.0,
    })


def test_10_statistical_soundness():
    t0 = time.time()
    sigma, alpha, runs = 0.5, 0.01, 2000
    n0, n = 50, 500
    # hard linear model; x placed so the smoothed vote probability is 0.86
    margin_z = std_normal_quantile(0.86)
    x = np.array([sigma * margin_z, 0.0])
    true_radius = float(x[0])  # distance to the boundary x1 = 0

    def prob_fn(batch):
        pos = (batch[:, 0] > 0.0).astype(float)
        return np.stack([1.0 - pos, pos], axis=1)

    violations = 0
    for run in range(runs):
        res = certify(prob_fn, x, sigma, n0, n, alpha, 1e9,
                      NoiseStreamKey(99, point_index=run))
        if res.prediction == 1 and res.radius > true_radius + 1e-12:
            violations += 1
    rate = violations / runs
    limit = alpha + 3.0 * math.sqrt(alpha / runs)
    elapsed = time.time() - t0
    print(f"\n  violation rate {rate:.4f} (limit {limit:.4f})")
    _report(10, "certification-statistical-soundness", {
        "violation_rate_bounded": rate <= limit,
        "runtime_under_2min": elapsed < 120.0,
    })
