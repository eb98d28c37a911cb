"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np


def brute_force_qp(Q, c, A, b, tol=1e-9):
    """Minimize 0.5 x'Qx + c'x s.t. Ax >= b by enumerating every active set.

    Each subset S is solved as the equality-constrained QP with A_S x = b_S;
    the best feasible candidate is returned.
    """
    n, m = Q.shape[0], A.shape[0]
    best, best_val = None, np.inf
    for r in range(0, min(m, n) + 1):
        for S in itertools.combinations(range(m), r):
            S = list(S)
            K = np.zeros((n + r, n + r))
            K[:n, :n] = Q
            K[:n, n:] = A[S].T
            K[n:, :n] = A[S]
            rhs = np.concatenate([-c, b[S]])
            try:
                x = np.linalg.solve(K, rhs)[:n]
            except np.linalg.LinAlgError:
                continue
            if (A @ x - b).min(initial=0.0) < -tol:
                continue
            val = 0.5 * x @ Q @ x + c @ x
            if val < best_val:
                best, best_val = x, val
    return best


def brute_force_projection(v, E):
    J = v.size
    G = np.diff(np.eye(J), axis=0)
    return brute_force_qp(E, -E @ v, G, np.zeros(J - 1))


def simpson_gram(basis, points=100_001):
    """Gram matrices by composite Simpson on an odd number of equispaced points."""
    x = np.linspace(0.0, 1.0, points)
    h = x[1] - x[0]
    w = np.ones(points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= h / 3.0
    B = basis.design_matrix(x)
    D = basis.derivative_matrix(x)
    return (B * w[:, None]).T @ B, (D * w[:, None]).T @ D


def piecewise_quadratic_basis_j4(x):
    """Closed-form clamped quadratic B-splines on knots (0,0,0,.5,1,1,1)."""
    if x < 0.5:
        u = 2.0 * x
        return np.array([(1 - u) ** 2, 2 * u - 1.5 * u**2, 0.5 * u**2, 0.0])
    u = 2.0 * x - 1.0
    return np.array([0.0, 0.5 * (1 - u) ** 2, 0.5 + u - 1.5 * u**2, u**2])
