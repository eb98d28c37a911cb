import numpy as np
import pytest
from scipy.interpolate import BSpline
from scipy.stats import norm

from oracles import piecewise_quadratic_basis_j4, simpson_gram
from wassproj.errors import DomainError, InvalidArgumentError, SingularFitError
from wassproj.spline_basis import (
    SplineBasis,
    default_fit_grid,
    difference_matrix,
    eval_basis,
    fit_coefficients,
    gram_matrices,
    is_monotone,
    make_basis,
    schoenberg_coefficients,
)


def test_knots_j4():
    assert np.array_equal(make_basis(4).knots, [0, 0, 0, 0.5, 1, 1, 1])


def test_knots_j20_intervals():
    b = make_basis(20)
    assert b.n_intervals == 18
    assert np.allclose(np.diff(b.breakpoints), 1 / 18)


@pytest.mark.parametrize("J", [3, 0, -1, 4.5])
def test_bad_size(J):
    with pytest.raises(InvalidArgumentError):
        make_basis(J)


def test_partition_of_unity_and_support():
    b = make_basis(13)
    x = np.linspace(0, 1, 1000)
    B = b.design_matrix(x)
    assert np.abs(B.sum(axis=1) - 1).max() <= 1e-12
    assert B.min() >= 0
    assert ((B > 0).sum(axis=1) <= 3).all()


def test_eval_endpoints_and_domain():
    b = make_basis(7)
    assert np.array_equal(eval_basis(b, 0.0), np.eye(7)[0])
    assert np.allclose(eval_basis(b, 1.0), np.eye(7)[-1])
    with pytest.raises(DomainError):
        eval_basis(b, 1.0001)
    with pytest.raises(DomainError):
        eval_basis(b, -0.1)


@pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.6, 0.9])
def test_eval_matches_closed_form_j4(x):
    assert np.allclose(eval_basis(make_basis(4), x), piecewise_quadratic_basis_j4(x), atol=1e-14)


@pytest.mark.parametrize("J", [4, 9, 30])
def test_gram_invariants(J):
    E, Ep = gram_matrices(make_basis(J))
    assert abs(E.sum() - 1) <= 1e-10
    i, j = np.indices(E.shape)
    assert (E[np.abs(i - j) > 2] == 0).all()
    assert np.allclose(E, E.T) and np.allclose(Ep, Ep.T)
    assert np.abs(Ep.sum(axis=1)).max() <= 1e-10
    assert np.linalg.eigvalsh(Ep).min() >= -1e-10


def test_gram_matches_simpson():
    b = make_basis(6)
    E_ref, Ep_ref = simpson_gram(b)
    assert np.abs(b.E - E_ref).max() <= 1e-10
    # knots fall on Simpson panel boundaries, so both rules are exact here
    assert np.abs(b.Eprime - Ep_ref).max() <= 1e-10


def test_gram_pd_up_to_100():
    for J in (4, 10, 50, 100):
        assert np.linalg.eigvalsh(make_basis(J).E).min() > 0


def test_difference_matrix_characterizes_monotone(rng):
    G = difference_matrix(5)
    assert G.shape == (4, 5)
    assert np.array_equal(G[0], [-1, 1, 0, 0, 0])
    assert is_monotone([0, 1, 2])
    assert not is_monotone([0, 2, 1])


def test_monotone_iff_spline_nondecreasing(rng):
    b = make_basis(8)
    x = np.linspace(0, 1, 10_000)
    for _ in range(200):
        c = np.cumsum(rng.standard_normal(8))
        spline_up = np.diff(b.evaluate(c, x)).min() >= -1e-12
        assert spline_up == is_monotone(c)


def test_derivative_is_linear_spline_of_differences(rng):
    b = make_basis(9)
    c = rng.standard_normal(9)
    x = rng.uniform(0.01, 0.99, 100)
    h = 1e-6
    fd = (b.evaluate(c, x + h) - b.evaluate(c, x - h)) / (2 * h)
    t = b.knots
    # f' = sum_j 2 (c_j - c_{j-1}) / (t_{j+2} - t_j) * N_{j,1}
    coef = 2 * np.diff(c) / (t[3:-1] - t[1:-3])
    exact = BSpline(t[1:-1], coef, 1)(x)
    assert np.abs(fd - exact).max() <= 1e-6


def test_fit_reproduces_constants_and_linears():
    b = make_basis(11)
    x = default_fit_grid()
    assert np.allclose(fit_coefficients(b, x, np.full(x.size, 3.5)), 3.5, atol=1e-12)
    c = fit_coefficients(b, x, x)
    assert np.abs(b.evaluate(c, x) - x).max() <= 1e-10


def test_fit_residual_decreases_with_J():
    x = default_fit_grid()
    y = norm.ppf(0.01 + 0.98 * x)
    res = []
    for J in (10, 20, 40):
        b = make_basis(J)
        res.append(np.abs(b.evaluate(fit_coefficients(b, x, y), x) - y).max())
    assert res[0] > res[1] > res[2]


def test_fit_rank_deficient():
    b = make_basis(10)
    with pytest.raises(SingularFitError):
        fit_coefficients(b, np.linspace(0, 1, 5), np.zeros(5))
    with pytest.raises(SingularFitError):
        fit_coefficients(b, np.full(50, 0.3), np.zeros(50))


def test_schoenberg_keeps_monotone():
    b = make_basis(12)
    assert is_monotone(schoenberg_coefficients(b, np.exp))


def test_basis_roundtrip_dict():
    b = make_basis(15)
    assert SplineBasis.from_dict(b.to_dict()) == b
    doc = b.to_dict()
    doc["knots"][4] += 0.01
    with pytest.raises(InvalidArgumentError):
        SplineBasis.from_dict(doc)
