import numpy as np
import pytest

from conftest import random_monotone
from wassproj import datagen
from wassproj.distributions import QuantileSpline, e_norm, encode_many
from wassproj.errors import InvalidArgumentError
from wassproj.projected_regression import (
    RegressionModel,
    cross_validate_rho,
    fit_regression,
    moment_matrices,
    penalized_objective,
    predict,
    predict_linear,
)
from wassproj.spline_basis import SplineBasis, is_monotone


def _vec(X):
    return X.reshape(-1, order="F")


@pytest.fixture(scope="module")
def toy():
    rng = np.random.default_rng(3)
    basis = SplineBasis(6)
    # nonnegative predictors keep B a_z monotone
    Z = [QuantileSpline(np.cumsum(np.abs(rng.standard_normal(6))), basis) for _ in range(25)]
    B = np.cumsum(rng.uniform(0, 0.5, (6, 6)), axis=0)
    Y = [QuantileSpline(B @ z.coeffs + 0.05 * np.sort(rng.standard_normal(6)), basis) for z in Z]
    return basis, Z, Y


def test_moments_single_observation():
    basis = SplineBasis(5)
    e1 = np.eye(5)[0]
    m = moment_matrices([e1], [e1], basis.E, basis.Eprime, 0.3)
    ref = np.outer(basis.E @ e1, basis.E @ e1)
    assert np.allclose(m.C_hat, ref) and np.allclose(m.D_hat, ref)


def test_moments_match_entrywise_definition(rng):
    basis = SplineBasis(4)
    E = basis.E
    az, ay = rng.standard_normal((5, 4)), rng.standard_normal((5, 4))
    m = moment_matrices(az, ay, E, basis.Eprime, 0.1)
    b = np.eye(4)
    C = np.zeros((4, 4))
    D = np.zeros((4, 4))
    for k in range(4):
        for s in range(4):
            # <(1/n) sum <a_z, b_k>_E a_z, b_s>_E and the same with a_y in the outer slot
            C[k, s] = sum((a @ E @ b[k]) * (a @ E @ b[s]) for a in az) / 5
            D[k, s] = sum((a @ E @ b[k]) * (y @ E @ b[s]) for a, y in zip(az, ay)) / 5
    assert np.abs(m.C_hat - C).max() <= 1e-12
    assert np.abs(m.D_hat - D).max() <= 1e-12
    assert np.allclose(m.C_hat, m.C_hat.T)
    assert np.linalg.eigvalsh(m.P).min() >= -1e-12


def test_moments_rho_zero():
    basis = SplineBasis(4)
    rng = np.random.default_rng(0)
    m = moment_matrices(rng.standard_normal((3, 4)), rng.standard_normal((3, 4)), basis.E, basis.Eprime, 0.0)
    assert np.array_equal(m.C_rho, np.kron(basis.E.T, m.C_hat))


def test_moments_length_mismatch():
    basis = SplineBasis(4)
    with pytest.raises(InvalidArgumentError):
        moment_matrices(np.zeros((3, 4)), np.zeros((2, 4)), basis.E, basis.Eprime, 1.0)


def test_kronecker_ordering_j3(rng):
    # generic symmetric 3x3 stand-ins for E and E'
    M1, M2 = rng.standard_normal((2, 3, 3))
    E = M1 @ M1.T + 3 * np.eye(3)
    Ep = M2 @ M2.T
    az, ay = rng.standard_normal((4, 3)), rng.standard_normal((4, 3))
    rho = 0.7
    m = moment_matrices(az, ay, E, Ep, rho)
    X = rng.standard_normal((3, 3))
    lhs = (m.C_rho + rho * m.P) @ _vec(X)
    rhs = (m.C_hat + rho * Ep) @ X @ E + rho * (E @ X @ Ep + Ep @ X @ E)
    assert np.allclose(lhs, _vec(rhs), atol=1e-12)
    swapped = moment_matrices(ay, az, E, Ep, rho)
    assert np.allclose(swapped.D_hat, m.D_hat.T, atol=1e-12)


def test_constant_response(toy):
    basis, Z, _ = toy
    y = QuantileSpline(np.arange(6.0), basis)
    m = fit_regression(Z, [y] * len(Z), 0.1)
    assert np.abs(m.thetas[0]).max() <= 1e-12
    assert np.allclose(m.theta_alpha, y.coeffs)


def test_fit_preconditions(toy):
    basis, Z, Y = toy
    with pytest.raises(InvalidArgumentError):
        fit_regression(Z, Y, 0.0)
    with pytest.raises(InvalidArgumentError):
        fit_regression(Z[:1], Y[:1], 1.0)
    with pytest.raises(InvalidArgumentError):
        fit_regression(Z[:5], Y[:6], 1.0)


@pytest.mark.parametrize("intercept", [True, False])
def test_closed_form_is_optimal(toy, intercept):
    basis, Z, Y = toy
    m = fit_regression(Z, Y, 1e-3, include_intercept=intercept)
    base = penalized_objective(m, Z, Y)
    rng = np.random.default_rng(1)
    for _ in range(100):
        T = m.thetas[0] + 1e-3 * rng.standard_normal((6, 6))
        if intercept:
            # intercept re-optimized for the perturbed kernel
            alpha = m.y_mean - T @ basis.E @ m.z_means[0]
        else:
            alpha = m.theta_alpha
        pert = RegressionModel(alpha, [T], m.rho, intercept, basis)
        assert penalized_objective(pert, Z, Y) > base


def test_duplicate_predictor_matches_half_penalty(toy):
    basis, Z, Y = toy
    rho = 1e-2
    both = fit_regression([Z, Z], Y, rho)
    single = fit_regression(Z, Y, rho / 2)
    assert np.abs(both.thetas[0] + both.thetas[1] - single.thetas[0]).max() <= 1e-6
    assert np.allclose(both.thetas[0], both.thetas[1], atol=1e-8)


def test_predict_zero_kernel_returns_intercept():
    basis = SplineBasis(5)
    alpha = np.array([0.0, 1, 1, 2, 5])
    m = RegressionModel(alpha, [np.zeros((5, 5))], 1.0, True, basis)
    z = QuantileSpline(np.arange(5.0), basis)
    assert np.array_equal(predict(m, z).coeffs, alpha)


def test_predict_identity_when_monotone(toy):
    basis, Z, Y = toy
    m = fit_regression(Z, Y, 1e-3)
    for z in Z:
        lin = predict_linear(m, z)
        if is_monotone(lin, tol=0.0):
            assert np.array_equal(predict(m, z).coeffs, lin)


def test_predict_adversarial_is_projection(rng):
    basis = SplineBasis(6)
    T = -np.eye(6) * 5
    m = RegressionModel(np.zeros(6), [T], 1.0, True, basis)
    z = QuantileSpline(np.arange(6.0), basis)
    lin = predict_linear(m, z)
    assert not is_monotone(lin)
    p = predict(m, z).coeffs
    assert (basis.G @ p).min() >= -1e-10
    d = e_norm(p - lin, basis.E)
    for _ in range(100):
        f = np.sort(rng.standard_normal(6) * 10)
        assert d <= e_norm(f - lin, basis.E) + 1e-12


def test_projection_never_hurts(toy):
    basis, Z, Y = toy
    m = fit_regression(Z, Y, 10.0)
    for z, y in zip(Z, Y):
        lin = predict_linear(m, z)
        p = predict(m, z).coeffs
        assert e_norm(p - y.coeffs, basis.E) <= e_norm(lin - y.coeffs, basis.E) + 1e-10


def test_predict_checks(toy):
    basis, Z, Y = toy
    m = fit_regression(Z, Y, 1.0)
    with pytest.raises(InvalidArgumentError):
        predict(m, [Z[0], Z[1]])
    with pytest.raises(InvalidArgumentError):
        predict(m, QuantileSpline(np.arange(7.0), SplineBasis(7)))


def test_json_roundtrip(toy):
    basis, Z, Y = toy
    m = fit_regression([Z, Z], Y, 0.5)
    m2 = RegressionModel.from_json(m.to_json())
    assert all(np.array_equal(a, b) for a, b in zip(m.thetas, m2.thetas))
    assert np.array_equal(predict(m, [Z[0], Z[0]]).coeffs, predict(m2, [Z[0], Z[0]]).coeffs)


def test_cv_single_rho(toy):
    basis, Z, Y = toy
    best, table = cross_validate_rho(Z, Y, [0.25], folds=5)
    assert best == 0.25 and len(table) == 1


def test_cv_errors(toy):
    basis, Z, Y = toy
    with pytest.raises(InvalidArgumentError):
        cross_validate_rho(Z, Y, [])
    with pytest.raises(InvalidArgumentError):
        cross_validate_rho(Z[:2], Y[:2], [1.0])
    with pytest.raises(InvalidArgumentError):
        cross_validate_rho(Z, Y, [1.0], folds=1)


def test_cv_tie_goes_to_larger_rho():
    # responses equal to one constant law: every rho predicts it exactly
    basis = SplineBasis(5)
    rng = np.random.default_rng(2)
    Z = [QuantileSpline(random_monotone(rng, 5), basis) for _ in range(6)]
    Y = [QuantileSpline(np.arange(5.0), basis)] * 6
    best, table = cross_validate_rho(Z, Y, [1e-3, 1e-1, 10.0])
    assert best == 10.0


def test_cv_pure_noise_is_flat():
    basis = SplineBasis(6)
    rng = np.random.default_rng(5)
    Z = [QuantileSpline(random_monotone(rng, 6), basis) for _ in range(30)]
    Y = [QuantileSpline(random_monotone(rng, 6), basis) for _ in range(30)]
    best, table = cross_validate_rho(Z, Y, [1e-4, 1e-2, 1.0, 100.0, 1e4])
    errs = np.array([e for _, e in table])
    assert errs.max() / errs.min() < 1.1
    # constant kernels are unpenalized, so large rho reaches a plateau, not zero
    assert abs(errs[-1] - errs[-2]) <= 1e-3 * errs[-1]


def test_cv_noiseless_prefers_small_rho():
    basis = SplineBasis(20)
    Zd, Yd = datagen.gen_regression_pairs(40, seed=1)
    Z, Y = encode_many(Zd, basis), encode_many(Yd, basis)
    grid = [1e-12, 1e-9, 1e-6, 1e-3]
    best, table = cross_validate_rho(Z, Y, grid, folds=5)
    errs = [e for _, e in table]
    assert best == 1e-12
    assert all(a <= b for a, b in zip(errs, errs[1:]))


def _in_sample_w2(J, rho):
    basis = SplineBasis(J)
    Zd, Yd = datagen.gen_regression_pairs(100, seed=0)
    Z, Y = encode_many(Zd, basis), encode_many(Yd, basis)
    m = fit_regression(Z, Y, rho)
    return np.mean([e_norm(predict(m, z).coeffs - y.coeffs, basis.E) for z, y in zip(Z, Y)])


@pytest.mark.xfail(
    strict=True,
    reason="J=20 encodings cannot represent the 30-dim cubic generator; the OLS floor is about 0.018",
)
def test_noiseless_in_sample_j20():
    assert _in_sample_w2(20, 1e-14) <= 1e-3


def test_noiseless_in_sample_j40():
    assert _in_sample_w2(40, 1e-14) <= 1e-3
