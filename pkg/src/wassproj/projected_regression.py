"""Projected distribution-on-distribution linear regression.

Responses are modelled in spline coordinates as

    a_y  ~  theta_alpha + sum_j Theta_j E a_zj,

fitted by penalized least squares in the E-norm with the roughness penalty

    Pen(Theta) = 2 tr(Theta' E Theta E') + tr(Theta' E' Theta E),

i.e. twice the squared L2 norm of the kernel's derivative in its first
argument plus that of its derivative in the second.  Predictions are
metric-projected onto the monotone cone so they are valid quantile functions.

Linear algebra convention: ``vec`` stacks columns.  With
``C_rho = E ⊗ (C + rho E')`` and ``P = E' ⊗ E + E ⊗ E'`` the normal
equations read ``(C_rho + rho P) vec(X) = vec(D)`` for ``X = Theta'``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from ._parallel import parallel_map
from .distributions import QuantileSpline, coefficient_matrix, e_norm
from .errors import InvalidArgumentError, NumericError
from .monotone_projection import project_monotone
from .spline_basis import SplineBasis

DEFAULT_RHO_GRID = tuple(np.logspace(-6, 2, 9))
TIE_RTOL = 1e-9


@dataclass
class MomentMatrices:
    C_hat: np.ndarray
    D_hat: np.ndarray
    C_rho: np.ndarray
    P: np.ndarray


@dataclass
class RegressionModel:
    theta_alpha: np.ndarray
    thetas: list
    rho: float
    include_intercept: bool
    basis: SplineBasis
    z_means: list = field(default_factory=list)
    y_mean: np.ndarray | None = None

    def __post_init__(self):
        if len(self.thetas) < 1:
            raise InvalidArgumentError("need at least one kernel matrix")
        if self.rho < 0:
            raise InvalidArgumentError("rho must be nonnegative")
        J = self.basis.J
        self.theta_alpha = np.asarray(self.theta_alpha, dtype=float).reshape(J)
        self.thetas = [np.asarray(T, dtype=float).reshape(J, J) for T in self.thetas]
        if not all(np.isfinite(T).all() for T in self.thetas) or not np.isfinite(self.theta_alpha).all():
            raise InvalidArgumentError("model coefficients must be finite")

    @property
    def K(self) -> int:
        return len(self.thetas)

    def to_dict(self) -> dict:
        return {
            "method": "projected_regression",
            "basis": self.basis.to_dict(),
            "rho": self.rho,
            "include_intercept": self.include_intercept,
            "theta_alpha": self.theta_alpha.tolist(),
            "thetas": [T.tolist() for T in self.thetas],
            "z_means": [np.asarray(m).tolist() for m in self.z_means],
            "y_mean": None if self.y_mean is None else np.asarray(self.y_mean).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionModel":
        return cls(
            theta_alpha=np.array(doc["theta_alpha"], dtype=float),
            thetas=[np.array(T, dtype=float) for T in doc["thetas"]],
            rho=float(doc["rho"]),
            include_intercept=bool(doc["include_intercept"]),
            basis=SplineBasis.from_dict(doc["basis"]),
            z_means=[np.array(m, dtype=float) for m in doc.get("z_means", [])],
            y_mean=None if doc.get("y_mean") is None else np.array(doc["y_mean"], dtype=float),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RegressionModel":
        return cls.from_dict(json.loads(text))


def moment_matrices(az, ay, E, Eprime, rho: float) -> MomentMatrices:
    """Empirical moments ``C = (1/n) sum (E a_z)(E a_z)'``, ``D = (1/n) sum (E a_z)(E a_y)'``
    and the Kronecker assemblies of the normal equations."""
    az = np.atleast_2d(np.asarray(az, dtype=float))
    ay = np.atleast_2d(np.asarray(ay, dtype=float))
    if az.shape[0] != ay.shape[0] or az.shape[0] < 1:
        raise InvalidArgumentError("predictor and response lists must have equal nonzero length")
    E = np.asarray(E, dtype=float)
    Ep = np.asarray(Eprime, dtype=float)
    n = az.shape[0]
    Ez = az @ E  # rows are (E a_z)'; E is symmetric
    C = Ez.T @ Ez / n
    D = Ez.T @ (ay @ E) / n
    C_rho = np.kron(E.T, C + rho * Ep)
    P = np.kron(Ep.T, E) + np.kron(E.T, Ep)
    return MomentMatrices(C, D, C_rho, P)


def _as_predictor_lists(Z):
    Z = list(Z)
    if not Z:
        raise InvalidArgumentError("no predictors")
    if isinstance(Z[0], QuantileSpline):
        return [Z]
    return [list(z) for z in Z]


def _check_basis(items, basis):
    if any(q.basis != basis for q in items):
        raise InvalidArgumentError("all quantile splines must share the model basis")


def _solve_system(Zc, Yc, basis: SplineBasis, rho: float):
    """Kernel matrices for centered (or raw) predictor blocks ``Zc`` (K arrays n x J) and ``Yc``."""
    E, Ep = basis.E, basis.Eprime
    J, K = basis.J, len(Zc)
    n = Yc.shape[0]
    Ez = np.hstack([z @ E for z in Zc])  # n x KJ
    C = Ez.T @ Ez / n
    D = Ez.T @ (Yc @ E) / n
    IEp = np.kron(np.eye(K), Ep)
    IE = np.kron(np.eye(K), E)
    M = np.kron(E, C) + rho * (np.kron(E, IEp) + np.kron(Ep, IE) + np.kron(E, IEp))
    M = 0.5 * (M + M.T)
    rhs = D.reshape(-1, order="F")
    try:
        x = la.cho_solve(la.cho_factor(M), rhs)
    except la.LinAlgError:
        # collinear predictor blocks: the penalty leaves constant kernels free,
        # so take the minimum-norm solution
        x = la.lstsq(M, rhs)[0]
    if not np.isfinite(x).all():
        raise NumericError("penalized normal equations could not be solved", {"rho": rho})
    X = x.reshape(K * J, J, order="F")
    return [X[j * J : (j + 1) * J].T.copy() for j in range(K)]


def fit_regression(Z, Y, rho: float, include_intercept: bool = True) -> RegressionModel:
    """Penalized least-squares fit of the linear model in spline coordinates.

    ``Z`` is a list of K predictor lists (or a single list of
    :class:`QuantileSpline`), ``Y`` the list of responses.  With an intercept
    both sides are centered at their coefficient means; without one the fit
    goes through the origin.
    """
    Zs = _as_predictor_lists(Z)
    Y = list(Y)
    n = len(Y)
    if rho <= 0:
        raise InvalidArgumentError("rho must be > 0")
    if n < 2 or any(len(z) != n for z in Zs):
        raise InvalidArgumentError("need n >= 2 responses and predictors of the same length")
    basis = Y[0].basis
    _check_basis(Y, basis)
    for z in Zs:
        _check_basis(z, basis)
    Az = [coefficient_matrix(z) for z in Zs]
    Ay = coefficient_matrix(Y)
    if include_intercept:
        z_means = [a.mean(axis=0) for a in Az]
        y_mean = Ay.mean(axis=0)
        thetas = _solve_system([a - m for a, m in zip(Az, z_means)], Ay - y_mean, basis, rho)
        alpha = y_mean - sum(T @ basis.E @ m for T, m in zip(thetas, z_means))
    else:
        z_means = [np.zeros(basis.J) for _ in Az]
        y_mean = np.zeros(basis.J)
        thetas = _solve_system(Az, Ay, basis, rho)
        alpha = np.zeros(basis.J)
    return RegressionModel(alpha, thetas, float(rho), include_intercept, basis, z_means, y_mean)


def penalized_objective(model: RegressionModel, Z, Y) -> float:
    """Mean squared E-residual of the linear predictions plus ``rho * Pen``."""
    Zs = _as_predictor_lists(Z)
    E, Ep = model.basis.E, model.basis.Eprime
    Ay = coefficient_matrix(Y)
    pred = np.tile(model.theta_alpha, (len(Ay), 1))
    for T, z in zip(model.thetas, Zs):
        pred = pred + coefficient_matrix(z) @ E @ T.T
    R = Ay - pred
    fit = float(np.einsum("ij,jk,ik->", R, E, R)) / len(Ay)
    pen = sum(2.0 * np.trace(T.T @ E @ T @ Ep) + np.trace(T.T @ Ep @ T @ E) for T in model.thetas)
    return fit + model.rho * float(pen)


def predict_linear(model: RegressionModel, z) -> np.ndarray:
    """Unprojected prediction ``theta_alpha + sum_j Theta_j E a_zj``."""
    zs = [z] if isinstance(z, QuantileSpline) else list(z)
    if len(zs) != model.K:
        raise InvalidArgumentError(f"model has {model.K} predictors, got {len(zs)}")
    _check_basis(zs, model.basis)
    out = model.theta_alpha.copy()
    for T, q in zip(model.thetas, zs):
        out = out + T @ model.basis.E @ q.coeffs
    return out


def predict(model: RegressionModel, z) -> QuantileSpline:
    """Metric projection of the linear prediction onto the monotone cone."""
    lin = predict_linear(model, z)
    return QuantileSpline(project_monotone(lin, model.basis.E, model.basis.G), model.basis)


def _folds(n: int, folds, seed: int):
    if folds in ("loo", "LOO", None) or folds == n:
        return [np.array([i]) for i in range(n)]
    k = int(folds)
    if not 2 <= k <= n:
        raise InvalidArgumentError(f"folds must be 'loo' or an integer in [2, {n}]")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def cross_validate_rho(
    Z, Y, rho_grid=DEFAULT_RHO_GRID, folds="loo", include_intercept: bool = True, seed: int = 0, workers=None
):
    """Mean held-out W2 error for each rho; returns ``(best_rho, table)``.

    ``table`` is a list of ``(rho, mean_error)`` in grid order.  Ties within
    a relative 1e-9 go to the larger rho.
    """
    Zs = _as_predictor_lists(Z)
    Y = list(Y)
    grid = [float(r) for r in rho_grid]
    if not grid:
        raise InvalidArgumentError("empty rho grid")
    n = len(Y)
    parts = _folds(n, folds, seed)
    if any(n - len(p) < 2 for p in parts):
        raise InvalidArgumentError("every training fold needs at least two observations")
    E = Y[0].basis.E

    def fold_errors(test):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        train = np.flatnonzero(mask)
        Ztr = [[z[i] for i in train] for z in Zs]
        Ytr = [Y[i] for i in train]
        out = []
        for rho in grid:
            model = fit_regression(Ztr, Ytr, rho, include_intercept)
            errs = [e_norm(predict(model, [z[i] for z in Zs]).coeffs - Y[i].coeffs, E) for i in test]
            out.append(errs)
        return out

    per_fold = parallel_map(fold_errors, parts, workers)
    table = []
    for r, rho in enumerate(grid):
        errs = np.concatenate([np.asarray(f[r]) for f in per_fold])
        table.append((rho, float(errs.mean())))
    best_rho, best_err = table[0]
    for rho, err in table[1:]:
        if err < best_err - TIE_RTOL * abs(best_err) or (
            math.isclose(err, best_err, rel_tol=TIE_RTOL, abs_tol=1e-300) and rho > best_rho
        ):
            best_rho, best_err = rho, min(err, best_err)
    return best_rho, table
