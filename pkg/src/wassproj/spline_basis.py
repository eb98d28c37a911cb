"""Quadratic B-spline basis on [0, 1] with clamped equispaced knots.

Coefficient vectors of this basis are the coordinates used throughout the
package.  Two facts make the basis convenient for quantile functions:

* the L2 inner product of two splines is ``a @ E @ b`` with ``E`` the Gram
  matrix of the basis, so 2-Wasserstein distances between encoded quantile
  functions are E-norms of coefficient differences;
* for degree 2 a spline is nondecreasing exactly when its coefficients are,
  i.e. when ``G @ a >= 0`` with ``G`` the first-difference matrix.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import BSpline

from .errors import DomainError, InvalidArgumentError, SingularFitError

DEGREE = 2
MONOTONE_TOL = 1e-12
DEFAULT_FIT_GRID = 1000

# 3-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree <= 5.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


class GramPair(NamedTuple):
    E: np.ndarray
    Eprime: np.ndarray


@dataclass(frozen=True)
class SplineBasis:
    """Clamped uniform quadratic B-spline basis with ``J`` functions.

    The knot vector repeats 0 and 1 three times and places ``J - 3``
    equispaced interior knots, giving ``J - 2`` intervals of equal width.
    """

    J: int

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 4:
            raise InvalidArgumentError(f"basis size J must be an integer >= 4, got {self.J!r}")
        object.__setattr__(self, "J", int(self.J))

    @property
    def degree(self) -> int:
        return DEGREE

    @property
    def n_intervals(self) -> int:
        return self.J - DEGREE

    @functools.cached_property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_intervals + 1)

    @functools.cached_property
    def knots(self) -> np.ndarray:
        bp = self.breakpoints
        return np.concatenate([[0.0] * DEGREE, bp, [1.0] * DEGREE])

    @functools.cached_property
    def greville(self) -> np.ndarray:
        """Knot averages; the abscissae of Schoenberg's variation-diminishing operator."""
        t = self.knots
        return np.array([t[j + 1 : j + 1 + DEGREE].mean() for j in range(self.J)])

    def design_matrix(self, x) -> np.ndarray:
        """Dense ``len(x) x J`` matrix of basis values."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size and (x.min() < 0.0 or x.max() > 1.0 or np.isnan(x).any()):
            raise DomainError("basis evaluation points must lie in [0, 1]")
        if x.size == 0:
            return np.zeros((0, self.J))
        return BSpline.design_matrix(x, self.knots, DEGREE).toarray()

    def derivative_matrix(self, x) -> np.ndarray:
        """Values of the basis first derivatives at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((x.size, self.J))
        eye = np.eye(self.J)
        for j in range(self.J):
            out[:, j] = BSpline(self.knots, eye[j], DEGREE).derivative()(x)
        return out

    def evaluate(self, coeffs, x) -> np.ndarray:
        """Evaluate the spline with coefficients ``coeffs`` at ``x``."""
        return self.design_matrix(x) @ np.asarray(coeffs, dtype=float)

    @functools.cached_property
    def _gram(self) -> GramPair:
        bp = self.breakpoints
        half = 0.5 * np.diff(bp)
        mid = 0.5 * (bp[:-1] + bp[1:])
        x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        B = self.design_matrix(x)
        D = self.derivative_matrix(x)
        E = (B * w[:, None]).T @ B
        Ep = (D * w[:, None]).T @ D
        E = 0.5 * (E + E.T)
        Ep = 0.5 * (Ep + Ep.T)
        # disjoint supports: remove quadrature round-off outside the band
        i, j = np.indices(E.shape)
        E[np.abs(i - j) > DEGREE] = 0.0
        Ep[np.abs(i - j) > DEGREE] = 0.0
        E.setflags(write=False)
        Ep.setflags(write=False)
        return GramPair(E, Ep)

    @property
    def E(self) -> np.ndarray:
        return self._gram.E

    @property
    def Eprime(self) -> np.ndarray:
        return self._gram.Eprime

    @functools.cached_property
    def G(self) -> np.ndarray:
        G = difference_matrix(self.J)
        G.setflags(write=False)
        return G

    @functools.cached_property
    def cholesky(self) -> np.ndarray:
        """Lower-triangular ``L`` with ``E = L @ L.T``."""
        L = np.linalg.cholesky(self.E)
        L.setflags(write=False)
        return L

    def to_dict(self) -> dict:
        return {"J": self.J, "degree": DEGREE, "knots": self.knots.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "SplineBasis":
        basis = cls(int(doc["J"]))
        if "knots" in doc and not np.array_equal(np.asarray(doc["knots"], dtype=float), basis.knots):
            raise InvalidArgumentError("stored knot vector does not match a clamped uniform basis")
        return basis


def make_basis(J: int) -> SplineBasis:
    return SplineBasis(J)


def eval_basis(basis: SplineBasis, x: float) -> np.ndarray:
    """Values ``(psi_1(x), ..., psi_J(x))`` at a single point of [0, 1]."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} lies outside [0, 1]")
    return basis.design_matrix([x])[0]


def gram_matrices(basis: SplineBasis) -> GramPair:
    """L2 Gram matrices of the basis functions and of their derivatives.

    Entries are integrated interval by interval with a 3-point Gauss-Legendre
    rule, which is exact for the piecewise quartic products involved.
    """
    return basis._gram


def difference_matrix(J: int) -> np.ndarray:
    """``(J-1) x J`` matrix whose row ``i`` computes ``v[i+1] - v[i]``."""
    G = np.zeros((J - 1, J))
    idx = np.arange(J - 1)
    G[idx, idx] = -1.0
    G[idx, idx + 1] = 1.0
    return G


def default_fit_grid(size: int = DEFAULT_FIT_GRID) -> np.ndarray:
    """Midpoints of ``size`` equal cells of (0, 1)."""
    return (np.arange(size) + 0.5) / size


@functools.lru_cache(maxsize=32)
def _fit_operator(J: int, size: int) -> np.ndarray:
    basis = SplineBasis(J)
    B = basis.design_matrix(default_fit_grid(size))
    if np.linalg.matrix_rank(B) < J:
        raise SingularFitError(f"fit grid of {size} points cannot resolve J={J} basis functions")
    op = np.linalg.pinv(B)
    op.setflags(write=False)
    return op


def fit_operator(basis: SplineBasis, size: int = DEFAULT_FIT_GRID) -> np.ndarray:
    """Least-squares map from values on ``default_fit_grid(size)`` to coefficients."""
    return _fit_operator(basis.J, size)


def fit_coefficients(basis: SplineBasis, x, y) -> np.ndarray:
    """Unconstrained least-squares spline coefficients for samples ``(x, y)``.

    ``y`` may be two-dimensional, one function per column.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float)
    if y.shape[0] != x.size:
        raise InvalidArgumentError("x and y must have the same number of samples")
    if x.size < basis.J:
        raise SingularFitError(f"need at least J={basis.J} samples, got {x.size}")
    B = basis.design_matrix(x)
    coef, _, rank, _ = np.linalg.lstsq(B, y, rcond=None)
    if rank < basis.J:
        raise SingularFitError(f"design matrix has rank {rank} < J={basis.J}")
    return coef


def schoenberg_coefficients(basis: SplineBasis, f) -> np.ndarray:
    """Coefficients ``f(greville)`` of the variation-diminishing approximant.

    Monotone ``f`` gives monotone coefficients, and the sup-norm error is
    ``O(h**2)`` in the knot spacing for twice-differentiable ``f``.
    """
    return np.asarray(f(basis.greville), dtype=float)


def is_monotone(coeffs, tol: float = MONOTONE_TOL) -> bool:
    c = np.asarray(coeffs, dtype=float)
    return bool(np.all(np.diff(c) >= -tol))
