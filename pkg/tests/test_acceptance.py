"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed to the terminal even when output capture is on.
"""

import time

import numpy as np
import pytest

from oracles import brute_force_projection
from wassproj import datagen
from wassproj.distributions import coefficient_matrix, e_norm, encode_many
from wassproj.geodesic_pca import GeodesicOptions, fit_global_geodesic, fit_nested_geodesic
from wassproj.monotone_projection import project_monotone
from wassproj.projected_pca import (
    constrained_objective,
    fit_pca,
    ghost_variance,
    interpretability_score,
    normalized_reconstruction_error,
    project_dataset,
    reconstruction_error,
    scores_mean_correlation,
)
from wassproj.projected_regression import cross_validate_rho
from wassproj.spline_basis import SplineBasis, schoenberg_coefficients


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _encoded(gen, J):
    return encode_many(gen, SplineBasis(J))


def test_criterion_01_qp_oracle(capsys):
    rng = np.random.default_rng(1)
    worst, elapsed = 0.0, 0.0
    for J in (4, 6, 8):
        E = SplineBasis(J).E
        for _ in range(1000):
            v = rng.standard_normal(J) * 3
            t = time.perf_counter()
            x = project_monotone(v, E)
            elapsed += time.perf_counter() - t
            worst = max(worst, e_norm(x - brute_force_projection(v, E), E))
    ok = worst <= 1e-8 and elapsed < 30
    report(capsys, 1, ok, f"max E-norm deviation {worst:.2e} over 3x1000 vectors, solver time {elapsed:.2f}s")


def test_criterion_02_spline_rate(capsys):
    # f(t) = exp(t): quantile function of e^U, strictly increasing and smooth
    t0 = time.perf_counter()
    x = np.linspace(0, 1, 20_001)
    errs = {}
    for J in (10, 20, 40, 80):
        b = SplineBasis(J)
        c = schoenberg_coefficients(b, np.exp)
        errs[J] = np.abs(b.evaluate(c, x) - np.exp(x)).max()
    ratios = [errs[J] / errs[2 * J] for J in (10, 20, 40)]
    elapsed = time.perf_counter() - t0
    ok = all(3 <= r <= 5 for r in ratios) and elapsed < 10
    report(capsys, 2, ok, "ratios " + ", ".join(f"{r:.2f}" for r in ratios) + f" for J=10,20,40 ({elapsed:.2f}s)")


def test_criterion_03_eigen(capsys):
    data = _encoded(datagen.gen_dpm(50, 10, seed=0), 20)
    m = fit_pca(data)
    A = coefficient_matrix(data) - m.a0
    E = m.basis.E
    n = len(data)
    # the model's eigenvalues use the 1/n covariance; A'A E has eigenvalues n * lambda
    res = max(np.linalg.norm(A.T @ A @ E @ w - n * lam * w) for w, lam in zip(m.W.T, m.eigenvalues))
    orth = np.abs(m.W.T @ E @ m.W - np.eye(m.J)).max()
    ok = res <= 1e-8 and orth <= 1e-8
    report(capsys, 3, ok, f"max eigen residual {res:.2e}, max |W'EW - I| {orth:.2e}")


def test_criterion_04_re_monotone(capsys):
    J = 20
    details, ok = [], True
    for name, gen in (
        ("gaussian_mix", datagen.gen_gaussian_mix(100, seed=0)),
        ("dpm", datagen.gen_dpm(100, 10, seed=0)),
        ("bernstein", datagen.gen_bernstein(100, 10, seed=0)),
    ):
        data = _encoded(gen, J)
        m = fit_pca(data)
        re = np.array([reconstruction_error(m, data, k) for k in range(J + 1)])
        worst = float(np.max(re[1:] - re[:-1]))
        ok &= worst <= 1e-10
        details.append(f"{name} max increase {worst:.1e}")
    report(capsys, 4, ok, "; ".join(details))


def test_criterion_05_ordering(capsys):
    data = _encoded(datagen.gen_dpm(30, 10, seed=3), 10)
    m = fit_pca(data)
    t0 = time.perf_counter()
    ok, rows = True, []
    for k in (1, 2, 3):
        nested = fit_nested_geodesic(data, k=k, options=GeodesicOptions())
        glob = fit_global_geodesic(data, k=k, options=GeodesicOptions(), start=nested)
        proj = constrained_objective(m, data, k)
        ok &= glob.objective <= nested.objective <= proj + 1e-6
        rows.append(f"k={k}: {glob.objective:.6g} <= {nested.objective:.6g} <= {proj:.6g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    report(capsys, 5, ok, "; ".join(rows) + f" ({elapsed:.1f}s)")


def test_criterion_06_interpretability(capsys):
    data = _encoded(datagen.gen_gaussian_mix(100, seed=0), 20)
    m = fit_pca(data)
    corr = scores_mean_correlation(m, data, 1)
    is1 = interpretability_score(m, data, 1)
    ok = abs(corr) >= 0.9 and is1 >= 0.95
    report(capsys, 6, ok, f"|corr(scores_1, means)| {abs(corr):.4f}, IS_1 {is1:.4f}")


def test_criterion_07_regression_recovery(capsys):
    basis = SplineBasis(20)
    Zd, Yd = datagen.gen_regression_pairs(100, seed=0)
    Z, Y = encode_many(Zd, basis), encode_many(Yd, basis)
    grid = np.logspace(-14, 2, 17)
    best, table = cross_validate_rho(Z, Y, grid, folds="loo")
    err = dict(table)[best]
    report(capsys, 7, err <= 1e-4, f"LOO mean W2 {err:.3e} at rho={best:.0e} (J=20, n=100)")


def test_criterion_08_degenerate(capsys):
    data = _encoded(datagen.gen_step_quantiles(100, seed=0), 20)
    m = fit_pca(data)
    is_ = [interpretability_score(m, data, h) for h in range(1, 6)]
    gv = max(ghost_variance(m, data, k) for k in range(1, 6))
    nre2 = normalized_reconstruction_error(m, data, 2)
    ok = (
        is_[0] >= 1 - 1e-9
        and is_[1] >= 1 - 1e-9
        and all(abs(v) <= 1e-9 for v in is_[2:])
        and gv <= 1e-10
        and nre2 <= 1e-4
    )
    detail = "IS_1..5 " + ", ".join(f"{v:.4f}" for v in is_) + f"; max GV_1..5 {gv:.1e}; NRE_2 {nre2:.1e}"
    report(capsys, 8, ok, detail)


def test_criterion_09_consistency(capsys):
    basis = SplineBasis(20)
    E = basis.E
    ref = fit_pca(encode_many(datagen.gen_gaussian_mix(10_000, seed=10_000), basis)).W[:, 0]
    medians = []
    for n in (50, 200, 1000):
        errs = []
        for seed in range(1, 11):
            w = fit_pca(encode_many(datagen.gen_gaussian_mix(n, seed=seed), basis)).W[:, 0]
            errs.append(min(e_norm(w - ref, E), e_norm(w + ref, E)))
        medians.append(float(np.median(errs)))
    ok = medians[0] > medians[1] > medians[2]
    report(capsys, 9, ok, "median direction-1 error " + ", ".join(f"{v:.2e}" for v in medians) + " for n=50,200,1000")


def test_criterion_10_speed(capsys):
    data = _encoded(datagen.gen_dpm(100, 10, seed=0), 20)
    t0 = time.perf_counter()
    m = fit_pca(data)
    project_dataset(m, data, 5)
    t_proj = time.perf_counter() - t0
    t0 = time.perf_counter()
    fit_global_geodesic(data, k=5, options=GeodesicOptions())
    t_geo = time.perf_counter() - t0
    ratio = t_geo / t_proj
    report(capsys, 10, ratio >= 10, f"projected {t_proj:.3f}s, global geodesic {t_geo:.1f}s, ratio {ratio:.0f}x")


def test_criterion_11_projection_properties(capsys):
    rng = np.random.default_rng(11)
    worst_ne = worst_id = worst_ob = -np.inf
    for case in range(10_000):
        J = (4, 8, 12, 20)[case % 4]
        E = SplineBasis(J).E
        u, v = rng.standard_normal((2, J)) * 3
        pu, pv = project_monotone(u, E), project_monotone(v, E)
        worst_ne = max(worst_ne, e_norm(pu - pv, E) - e_norm(u - v, E))
        worst_id = max(worst_id, np.abs(project_monotone(pu, E) - pu).max())
        if case % 100 == 0:
            W = np.sort(rng.standard_normal((100, J)) * 3, axis=1)
            worst_ob = max(worst_ob, float(((W - pu) @ E @ (u - pu)).max()))
    ok = worst_ne <= 1e-10 and worst_id <= 1e-10 and worst_ob <= 1e-8
    report(
        capsys,
        11,
        ok,
        f"10^4 cases: max expansion {worst_ne:.1e}, max idempotence gap {worst_id:.1e}, max obtuse-angle {worst_ob:.1e}",
    )
