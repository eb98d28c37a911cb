"""Metric projection onto the cone of nondecreasing coefficient vectors.

All projections here reduce to strictly convex quadratic programs

    minimize    0.5 * x' Q x + c' x
    subject to  A x >= b

which are solved with a primal active-set method.  Every problem built by
this module has an obvious feasible starting point (a monotone rearrangement
of the input, or the zero score vector), so no phase-one is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NumericError

FEAS_TOL = 1e-10
KKT_TOL = 1e-8
# relative threshold below which ray-extent slacks and slopes count as zero
RAY_SNAP = 1e-10
# steps below this (relative to |x|) are round-off
STEP_TOL = 1e-11


@dataclass
class QpResult:
    x: np.ndarray
    multipliers: np.ndarray
    working_set: list
    iterations: int
    kkt_residual: float


@dataclass
class QpProblem:
    """``min 0.5 x'Qx + c'x  s.t.  A_ineq x >= b_ineq``."""

    Q: np.ndarray
    c: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    max_iter: int | None = None
    _chol: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.A_ineq = np.asarray(self.A_ineq, dtype=float).reshape(-1, self.Q.shape[0])
        self.b_ineq = np.asarray(self.b_ineq, dtype=float).ravel()

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def objective(self, x) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def kkt_residual(self, x, mu) -> float:
        """Largest violation among stationarity, feasibility, sign and complementarity."""
        grad = self.Q @ x + self.c
        slack = self.A_ineq @ x - self.b_ineq
        scale = 1.0 + np.abs(self.c).max(initial=0.0)
        stat = np.abs(grad - self.A_ineq.T @ mu).max(initial=0.0) / scale
        feas = max(0.0, -slack.min(initial=0.0))
        sign = max(0.0, -mu.min(initial=0.0))
        comp = np.abs(mu * slack).max(initial=0.0) / scale
        return float(max(stat, feas, sign, comp))

    def _eqp(self, x, working):
        """Step ``p`` minimizing the model on the working-set null space, plus multipliers."""
        n = self.n
        g = self.Q @ x + self.c
        if not working:
            if self._chol is None:
                self._chol = np.linalg.cholesky(self.Q)
            L = self._chol
            p = -np.linalg.solve(L.T, np.linalg.solve(L, g))
            return p, np.zeros(0)
        Aw = self.A_ineq[working]
        m = len(working)
        if m >= n:
            # vertex: the null space is trivial, so the step is exactly zero
            lam = np.linalg.lstsq(Aw.T, g, rcond=None)[0]
            return np.zeros(n), lam
        K = np.zeros((n + m, n + m))
        K[:n, :n] = self.Q
        K[:n, n:] = Aw.T
        K[n:, :n] = Aw
        rhs = np.concatenate([-g, np.zeros(m)])
        sol = np.linalg.solve(K, rhs)
        return sol[:n], -sol[n:]

    def solve(self, x0=None, working=None) -> QpResult:
        """Primal active-set iterations from a feasible ``x0``.

        ``working`` optionally seeds the working set; indices that are not
        active at ``x0`` or that would make it rank deficient are dropped.
        Without ``x0`` the unconstrained minimizer is tried first and the
        problem must then admit ``x = 0`` as a feasible point.
        """
        A, b = self.A_ineq, self.b_ineq
        n, m = self.n, A.shape[0]
        max_iter = self.max_iter or max(50 * n, 50 * min(m, n) + 50, 100)
        if x0 is None:
            x, _ = self._eqp(np.zeros(n), [])
            if m == 0 or (A @ x - b).min() >= -FEAS_TOL:
                return self._finish(x, [], np.zeros(0), 0)
            x0 = np.zeros(n)
        x = np.array(x0, dtype=float)
        slack = A @ x - b
        if m and slack.min() < -FEAS_TOL * (1.0 + np.abs(b).max()):
            raise InvalidArgumentError("starting point is infeasible")
        W = self._admissible_working_set(x, working or [])

        scale = 1.0 + np.abs(x).max(initial=0.0)
        for it in range(1, max_iter + 1):
            p, lam = self._eqp(x, W)
            if np.abs(p).max(initial=0.0) <= STEP_TOL * scale:
                if not W or lam.min() >= -1e-12 * (1.0 + np.abs(lam).max()):
                    return self._finish(x, W, lam, it)
                W.pop(int(np.argmin(lam)))
                continue
            Ap = A @ p
            alpha, block = 1.0, None
            in_w = np.zeros(m, dtype=bool)
            in_w[W] = True
            cand = np.flatnonzero((~in_w) & (Ap < -1e-14 * np.abs(p).max()))
            if cand.size:
                s = np.maximum(A[cand] @ x - b[cand], 0.0)
                ratios = s / -Ap[cand]
                j = int(np.argmin(ratios))
                if ratios[j] < 1.0:
                    alpha, block = float(ratios[j]), int(cand[j])
            x = x + alpha * p
            if block is not None:
                W.append(block)
            scale = 1.0 + np.abs(x).max(initial=0.0)
        raise NumericError(
            "active-set QP did not converge",
            {"iterations": max_iter, "working_set": list(W), "x": x.tolist()},
        )

    def solve_warm(self, x_feasible, guess=None) -> QpResult:
        """Solve from the equality-constrained optimum on ``guess`` when that
        point is feasible, otherwise from ``x_feasible`` with an empty working set."""
        if guess:
            A, b = self.A_ineq, self.b_ineq
            W = []
            for i in guess:
                trial = W + [int(i)]
                if np.linalg.matrix_rank(A[trial]) == len(trial):
                    W = trial
            n, m = self.n, len(W)
            K = np.zeros((n + m, n + m))
            K[:n, :n] = self.Q
            K[:n, n:] = A[W].T
            K[n:, :n] = A[W]
            try:
                x = np.linalg.solve(K, np.concatenate([-self.c, b[W]]))[:n]
            except np.linalg.LinAlgError:
                x = None
            if x is not None and (A @ x - b).min(initial=0.0) >= -FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
                return self.solve(x0=x, working=W)
        return self.solve(x0=x_feasible)

    def _admissible_working_set(self, x, working):
        A, b = self.A_ineq, self.b_ineq
        W = []
        for i in working:
            if abs(A[i] @ x - b[i]) > FEAS_TOL * (1.0 + abs(b[i])):
                continue
            trial = W + [int(i)]
            if np.linalg.matrix_rank(A[trial]) == len(trial):
                W = trial
        return W

    def _finish(self, x, W, lam, it) -> QpResult:
        mu = np.zeros(self.A_ineq.shape[0])
        if W:
            mu[W] = lam
        res = self.kkt_residual(x, mu)
        if res > KKT_TOL:
            raise NumericError("QP solution fails the KKT check", {"kkt_residual": res, "iterations": it})
        return QpResult(x, mu, list(W), it, res)


def solve_qp(Q, c, A, b, x0=None, working=None) -> QpResult:
    return QpProblem(Q, c, A, b).solve(x0=x0, working=working)


def _monotone_start(v):
    """A nondecreasing vector close to ``v``: average of running max and reverse running min."""
    up = np.maximum.accumulate(v)
    down = np.minimum.accumulate(v[::-1])[::-1]
    return 0.5 * (up + down)


def project_monotone(v, E, G=None, return_result=False):
    """E-norm projection of ``v`` onto ``{w : G w >= 0}``.

    With ``G`` omitted the first-difference matrix is used, i.e. the target
    set is the cone of nondecreasing vectors.
    """
    v = np.asarray(v, dtype=float)
    E = np.asarray(E, dtype=float)
    J = v.size
    if G is None:
        G = np.diff(np.eye(J), axis=0)
    G = np.asarray(G, dtype=float)
    if (G @ v).min(initial=0.0) >= 0.0:
        res = QpResult(v.copy(), np.zeros(G.shape[0]), [], 0, 0.0)
        return (res.x, res) if return_result else res.x
    prob = QpProblem(E, -E @ v, G, np.zeros(G.shape[0]))
    res = prob.solve(x0=_monotone_start(v))
    x = res.x
    if G.shape == (J - 1, J) and np.array_equal(G, np.diff(np.eye(J), axis=0)):
        # round-off on pooled blocks; the change is at machine precision
        x = np.maximum.accumulate(x)
        res.x = x
    return (x, res) if return_result else x


def project_monotone_many(V, E, G=None):
    """Row-wise :func:`project_monotone`; rows already monotone are returned as is."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    out = V.copy()
    bad = np.flatnonzero((np.diff(V, axis=1) < 0.0).any(axis=1)) if G is None else range(V.shape[0])
    for i in bad:
        out[i] = project_monotone(V[i], E, G)
    return out


class SliceProjector:
    """Projection onto ``(a0 + span W) ∩ {G x >= 0}`` in score coordinates.

    ``W`` must have E-orthonormal columns.  Scores ``lam`` minimize
    ``||lam_free - lam||`` where ``lam_free = W' E (x - a0)`` are the plain
    E-inner-product scores; by orthonormality this is the E-distance between
    ``x`` and ``a0 + W lam``.
    """

    def __init__(self, a0, W, E, G):
        self.a0 = np.asarray(a0, dtype=float)
        self.W = np.atleast_2d(np.asarray(W, dtype=float).T).T
        self.E = np.asarray(E, dtype=float)
        self.G = np.asarray(G, dtype=float)
        c = self.G @ self.a0
        if c.min(initial=0.0) < -FEAS_TOL * (1.0 + np.abs(self.a0).max()):
            raise InvalidArgumentError("center a0 is not monotone")
        self.k = self.W.shape[1]
        self.A = self.G @ self.W
        # a0 may sit on the boundary up to round-off; shift so lam = 0 is exactly feasible
        self.b = np.minimum(-c, 0.0)
        self.WtE = self.W.T @ self.E
        self._eye = np.eye(self.k)

    def free_scores(self, x):
        return self.WtE @ (np.asarray(x, dtype=float) - self.a0)

    def scores(self, x, working=None, return_result=False):
        lam_free = self.free_scores(x)
        if self.k == 0:
            res = QpResult(lam_free, np.zeros(self.A.shape[0]), [], 0, 0.0)
            return (lam_free, res) if return_result else lam_free
        if (self.A @ lam_free - self.b).min(initial=0.0) >= -FEAS_TOL:
            res = QpResult(lam_free, np.zeros(self.A.shape[0]), [], 0, 0.0)
            return (lam_free, res) if return_result else lam_free
        prob = QpProblem(self._eye, -lam_free, self.A, self.b)
        res = prob.solve_warm(np.zeros(self.k), working)
        return (res.x, res) if return_result else res.x

    def reconstruct(self, lam):
        return self.a0 + self.W @ np.asarray(lam, dtype=float)


def project_affine_slice(x_star, a0, W, E, G):
    """Scores of the projection of ``x_star`` onto ``(a0 + span W) ∩ cone``."""
    return SliceProjector(a0, W, E, G).scores(x_star)


def ray_extent(a0, w, G):
    """Range ``[eta_min, eta_max]`` of ``eta`` with ``a0 + eta * w`` monotone.

    Slacks ``G a0`` and slopes ``G w`` below a relative round-off threshold
    are treated as exact zeros; rows with zero slope impose no bound.
    """
    a0 = np.asarray(a0, dtype=float)
    w = np.asarray(w, dtype=float)
    G = np.asarray(G, dtype=float)
    c = G @ a0
    scale_c = RAY_SNAP * max(1.0, np.abs(a0).max(initial=0.0))
    if c.min(initial=0.0) < -max(FEAS_TOL, scale_c):
        raise InvalidArgumentError("a0 is not monotone")
    d = G @ w
    c = np.where(c <= scale_c, 0.0, c)
    scale_d = RAY_SNAP * max(np.abs(d).max(initial=0.0), np.abs(w).max(initial=0.0))
    d = np.where(np.abs(d) <= scale_d, 0.0, d)
    neg = d < 0.0
    pos = d > 0.0
    eta_max = float(np.min(-c[neg] / d[neg])) if neg.any() else math.inf
    eta_min = float(np.max(-c[pos] / d[pos])) if pos.any() else -math.inf
    return eta_min, eta_max
