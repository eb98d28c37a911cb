"""Global and nested geodesic PCA in spline coordinates.

Both variants look for directions ``w_1..w_k`` minimizing

    sum_i  min_lam ||a_i - a0 - sum_j lam_j w_j||_E^2   s.t.  G (a0 + sum_j lam_j w_j) >= 0,

the squared distance of each observation to the convex set
``(a0 + span W) ∩ cone``.  The global variant optimizes all directions
jointly; the nested one adds them one at a time, each E-orthogonal to the
previous ones.

The solver alternates exact score QPs with a projected-gradient step on the
directions.  Work is done in whitened coordinates ``V = L' W`` (``E = L L'``)
where E-orthonormality becomes ordinary orthonormality.  The gradient comes
from the envelope theorem: with ``mu`` the score-QP multipliers,

    d/dV  min_lam f  =  -2 sum_i (y_i - V lam_i + H' mu_i) lam_i'

where ``y_i = L'(a_i - a0)`` and ``H = G L^{-T}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from ._parallel import parallel_map
from .distributions import QuantileSpline, barycenter, coefficient_matrix
from .errors import InvalidArgumentError
from .monotone_projection import FEAS_TOL, QpProblem
from .projected_pca import PcaModel, fit_pca
from .spline_basis import SplineBasis

ARMIJO = 1e-4
MAX_BACKTRACK = 40


@dataclass
class GeodesicOptions:
    restarts: int = 5
    max_iter: int = 500
    rtol: float = 1e-9
    seed: int = 0
    workers: int | None = None


@dataclass
class GeodesicPcaResult:
    """Directions (J x k, E-orthonormal columns), scores (n x k) and the residual sum."""

    directions: np.ndarray
    scores: np.ndarray
    objective: float
    converged: bool
    restarts_used: int
    a0: np.ndarray
    basis: SplineBasis
    method: str = "global"
    history: list = field(default_factory=list, repr=False)

    @property
    def k(self) -> int:
        return self.directions.shape[1]

    def reconstructions(self) -> np.ndarray:
        return self.a0 + self.scores @ self.directions.T

    def to_model(self) -> PcaModel:
        """The directions packaged as a :class:`PcaModel`.

        The ``eigenvalues`` slot holds the mean squared score per direction.
        """
        second = (self.scores**2).mean(axis=0) if self.scores.size else np.zeros(self.k)
        return PcaModel(self.a0.copy(), self.directions.copy(), second, self.basis, method=self.method)

    def to_dict(self) -> dict:
        doc = self.to_model().to_dict()
        doc.update(
            objective=self.objective,
            converged=self.converged,
            restarts_used=self.restarts_used,
            scores=self.scores.tolist(),
        )
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Problem:
    """Objective and envelope gradient in whitened coordinates."""

    def __init__(self, X, a0, basis: SplineBasis):
        self.basis = basis
        self.L = basis.cholesky
        self.a0 = np.asarray(a0, dtype=float)
        self.Y = (X - self.a0) @ self.L  # rows are L'(a_i - a0)
        self.H = la.solve_triangular(self.L, basis.G.T, lower=True).T  # G L^{-T}
        g0 = basis.G @ self.a0
        if g0.min(initial=0.0) < -FEAS_TOL * (1.0 + np.abs(self.a0).max()):
            raise InvalidArgumentError("center a0 is not monotone")
        self.b = np.minimum(-g0, 0.0)
        self.total = float(np.sum(self.Y**2))

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    def evaluate(self, V, working=None):
        """Objective, gradient, scores and active sets for directions ``V``."""
        n, k = self.n, V.shape[1]
        if k == 0:
            return self.total, np.zeros_like(V), np.zeros((n, 0)), [[] for _ in range(n)]
        A = self.H @ V
        Q = V.T @ V
        free = la.solve(Q, V.T @ self.Y.T, assume_a="pos").T
        lam = free.copy()
        mu = np.zeros((n, A.shape[0]))
        sets = [[] for _ in range(n)]
        slack = free @ A.T - self.b
        for i in np.flatnonzero(slack.min(axis=1) < -FEAS_TOL):
            prob = QpProblem(Q, -(V.T @ self.Y[i]), A, self.b)
            guess = working[i] if working is not None else None
            res = prob.solve_warm(np.zeros(k), guess)
            # the QP carries half the squared residual
            lam[i], mu[i], sets[i] = res.x, 2.0 * res.multipliers, res.working_set
        R = self.Y - lam @ V.T
        f = float(np.sum(R**2))
        grad = -(2.0 * R + mu @ self.H).T @ lam
        return f, grad, lam, sets


def _qf(M):
    Q, R = np.linalg.qr(M)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def _descend(problem: _Problem, V, tangent, retract, opts: GeodesicOptions):
    """Monotone backtracking descent; returns (V, f, lam, converged, history)."""
    f, g, lam, sets = problem.evaluate(V)
    history = [f]
    step = 0.5 / max(problem.n, 1)
    converged = False
    for _ in range(opts.max_iter):
        if f <= 0.0:
            converged = True
            break
        xi = tangent(V, g)
        gn2 = float(np.sum(xi**2))
        if gn2 <= (1e-14 * max(f, 1.0)) ** 2:
            converged = True
            break
        t = 2.0 * step
        for _ in range(MAX_BACKTRACK):
            Vt = retract(V - t * xi)
            ft, gt, lt, st = problem.evaluate(Vt, sets)
            if ft <= f - ARMIJO * t * gn2:
                break
            t *= 0.5
        else:
            converged = True  # no descent left at round-off level
            break
        rel = (f - ft) / max(f, 1e-300)
        V, f, g, lam, sets, step = Vt, ft, gt, lt, st, t
        history.append(f)
        if rel < opts.rtol:
            converged = True
            break
    return V, f, lam, converged, history


def _prepare(data, a0, k):
    data = list(data)
    if len(data) < 2:
        raise InvalidArgumentError("geodesic PCA needs at least two observations")
    basis = data[0].basis
    if any(q.basis != basis for q in data):
        raise InvalidArgumentError("observations live on different bases")
    if not 0 <= k <= basis.J:
        raise InvalidArgumentError(f"k={k} outside [0, {basis.J}]")
    if a0 is None:
        a0 = barycenter(data)
    a0 = np.asarray(a0.coeffs if isinstance(a0, QuantileSpline) else a0, dtype=float)
    return coefficient_matrix(data), a0, basis


def _result(problem, V, lam, f, converged, restarts, method, history):
    W = la.solve_triangular(problem.L.T, V, lower=False)
    return GeodesicPcaResult(
        directions=W,
        scores=lam,
        objective=f,
        converged=converged,
        restarts_used=restarts,
        a0=problem.a0,
        basis=problem.basis,
        method=method,
        history=history,
    )


def _pca_whitened(data, a0, basis):
    model = fit_pca(data, QuantileSpline(a0, basis))
    return basis.cholesky.T @ model.W


def fit_nested_geodesic(data, a0=None, k: int = 1, options: GeodesicOptions | None = None) -> GeodesicPcaResult:
    """Sequential directions: ``w_h`` minimizes the residual to the component
    spanned by ``w_1..w_h`` with the earlier directions held fixed, subject to
    ``||w_h||_E = 1`` and E-orthogonality to ``w_1..w_{h-1}``.

    Each step is seeded with the matching projected-PCA direction and with
    random combinations of the next few; the best local optimum is kept.
    """
    opts = options or GeodesicOptions()
    X, a0, basis = _prepare(data, a0, k)
    problem = _Problem(X, a0, basis)
    U = _pca_whitened(data, a0, basis)
    rng = np.random.default_rng(opts.seed)
    J = basis.J
    V = np.zeros((J, 0))
    converged_all, history = True, []
    for h in range(k):
        P = np.eye(J) - V @ V.T

        def retract(Vt, V=V, P=P):
            v = P @ Vt[:, -1]
            return np.column_stack([V, v / np.linalg.norm(v)])

        def tangent(Vc, g):
            v = Vc[:, -1]
            gv = P @ g[:, -1]
            gv = gv - v * (v @ gv)
            out = np.zeros_like(Vc)
            out[:, -1] = gv
            return out

        pool = U[:, h : min(J, h + 4)]
        seeds = [U[:, h]]
        for _ in range(max(opts.restarts, 1) - 1):
            seeds.append(pool @ rng.standard_normal(pool.shape[1]))

        def run(seed_vec):
            v = P @ seed_vec
            nv = np.linalg.norm(v)
            if nv < 1e-12:
                return None
            return _descend(problem, retract(np.column_stack([V, v / nv])), tangent, retract, opts)

        runs = [r for r in parallel_map(run, seeds, opts.workers) if r is not None]
        best = min(runs, key=lambda r: r[1])
        V = best[0]
        converged_all &= best[3]
        history.append(best[4])
    f, _, lam, _ = problem.evaluate(V)
    return _result(problem, V, lam, f, converged_all, max(opts.restarts, 1), "nested", history)


def fit_global_geodesic(
    data, a0=None, k: int = 1, options: GeodesicOptions | None = None, start: GeodesicPcaResult | None = None
) -> GeodesicPcaResult:
    """All ``k`` directions optimized jointly.

    Seeds: the nested solution (computed unless ``start`` is given), the
    first ``k`` projected-PCA directions and random rotations of the leading
    ``k + 2`` of them.  The objective depends on the span only, so the
    directions are kept orthonormal by a QR retraction.
    """
    opts = options or GeodesicOptions()
    X, a0, basis = _prepare(data, a0, k)
    problem = _Problem(X, a0, basis)
    J = basis.J
    if k == 0:
        f, _, lam, _ = problem.evaluate(np.zeros((J, 0)))
        return _result(problem, np.zeros((J, 0)), lam, f, True, 0, "global", [])
    if start is None:
        start = fit_nested_geodesic(data, a0, k, opts)
    U = _pca_whitened(data, a0, basis)
    rng = np.random.default_rng(opts.seed + 1)
    seeds = [basis.cholesky.T @ start.directions, U[:, :k]]
    m = min(J, k + 2)
    while len(seeds) < max(opts.restarts, 2):
        R = _qf(rng.standard_normal((m, m)))
        seeds.append(U[:, :m] @ R[:, :k])

    def tangent(V, g):
        S = V.T @ g
        return g - V @ (0.5 * (S + S.T))

    def run(V0):
        return _descend(problem, _qf(V0), tangent, _qf, opts)

    runs = parallel_map(run, seeds, opts.workers)
    best = min(runs, key=lambda r: r[1])
    return _result(problem, best[0], best[2], best[1], best[3], len(seeds), "global", best[4])


def geodesic_objective(result: GeodesicPcaResult, data) -> float:
    """Recompute the residual sum of ``data`` against a fitted component."""
    problem = _Problem(coefficient_matrix(list(data)), result.a0, result.basis)
    return problem.evaluate(result.basis.cholesky.T @ result.directions)[0]
