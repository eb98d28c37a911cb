"""Empirical quantile functions, 1-D Wasserstein distances and spline encoding."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .monotone_projection import FEAS_TOL, project_monotone, project_monotone_many
from .spline_basis import DEFAULT_FIT_GRID, SplineBasis, default_fit_grid, fit_operator

W2_QUAD_POINTS = 10_000
ATOM_WIDTH = 1e-6


class AtomWarning(UserWarning):
    """A decoded quantile function is flat, so its law has an atom."""


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """A finite sample or a piecewise-uniform histogram on the real line.

    Build instances with :meth:`from_samples` or :meth:`from_histogram`.
    """

    samples: np.ndarray | None = None
    edges: np.ndarray | None = None
    masses: np.ndarray | None = None

    @classmethod
    def from_samples(cls, values) -> "EmpiricalDistribution":
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise InvalidArgumentError("empty sample")
        if not np.isfinite(v).all():
            raise InvalidArgumentError("samples must be finite")
        v.setflags(write=False)
        return cls(samples=v)

    @classmethod
    def from_histogram(cls, edges, masses) -> "EmpiricalDistribution":
        edges = np.asarray(edges, dtype=float).ravel()
        masses = np.asarray(masses, dtype=float).ravel()
        if edges.size != masses.size + 1 or masses.size == 0:
            raise InvalidArgumentError("need len(edges) == len(masses) + 1 >= 2")
        if np.any(np.diff(edges) <= 0.0):
            raise InvalidArgumentError("histogram edges must be strictly increasing")
        if np.any(masses < 0.0) or masses.sum() <= 0.0:
            raise InvalidArgumentError("histogram masses must be nonnegative with positive total")
        masses = masses / masses.sum()
        edges.setflags(write=False)
        masses.setflags(write=False)
        return cls(edges=edges, masses=masses)

    @property
    def is_sample(self) -> bool:
        return self.samples is not None

    @property
    def support(self) -> tuple[float, float]:
        if self.is_sample:
            return float(self.samples[0]), float(self.samples[-1])
        nz = np.flatnonzero(self.masses > 0)
        return float(self.edges[nz[0]]), float(self.edges[nz[-1] + 1])

    def quantile(self, t):
        """Left-continuous generalized inverse of the cdf, vectorized over ``t``."""
        t = np.asarray(t, dtype=float)
        if self.is_sample:
            n = self.samples.size
            idx = np.clip(np.ceil(n * t).astype(int) - 1, 0, n - 1)
            return self.samples[idx]
        cdf = np.concatenate([[0.0], np.cumsum(self.masses)])
        cdf[-1] = 1.0
        j = np.clip(np.searchsorted(cdf[1:], t, side="left"), 0, self.masses.size - 1)
        m = self.masses[j]
        frac = np.where(m > 0, (t - cdf[j]) / np.where(m > 0, m, 1.0), 0.0)
        lo = self.edges[j]
        return lo + np.clip(frac, 0.0, 1.0) * (self.edges[j + 1] - lo)

    def mean(self) -> float:
        if self.is_sample:
            return float(self.samples.mean())
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        return float(self.masses @ mids)

    def pdf(self):
        """Cell midpoints and density values of a histogram."""
        if self.is_sample:
            raise InvalidArgumentError("sample distributions have no density")
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        return mids, self.masses / np.diff(self.edges)


@dataclass(frozen=True, eq=False)
class QuantileSpline:
    """Quantile function ``t -> sum_j coeffs[j] * psi_j(t)`` with nondecreasing coefficients."""

    coeffs: np.ndarray
    basis: SplineBasis

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size != self.basis.J:
            raise InvalidArgumentError(f"expected {self.basis.J} coefficients, got {c.size}")
        if not np.isfinite(c).all():
            raise InvalidArgumentError("coefficients must be finite")
        d = np.diff(c)
        tol = FEAS_TOL * (1.0 + np.abs(c).max())
        if d.min(initial=0.0) < -tol:
            raise InvalidArgumentError("coefficients are not nondecreasing")
        if d.min(initial=0.0) < 0.0:
            c = np.maximum.accumulate(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def J(self) -> int:
        return self.basis.J

    def quantile(self, t):
        t = np.asarray(t, dtype=float)
        return (self.basis.design_matrix(t.ravel()) @ self.coeffs).reshape(t.shape)

    def mean(self) -> float:
        # integral of each basis function is the column sum of E (partition of unity)
        return float(self.basis.E.sum(axis=0) @ self.coeffs)


def quantile_at(dist, t: float) -> float:
    t = float(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"t={t} must lie in (0, 1)")
    return float(dist.quantile(t))


def _quad_grid(size=W2_QUAD_POINTS):
    return (np.arange(size) + 0.5) / size


def wasserstein2(a, b) -> float:
    """2-Wasserstein distance between two distributions on the real line.

    Equal-size samples are matched in sorted order, which is exact.  Any
    other pair (histograms, splines, unequal samples) is integrated with the
    midpoint rule on 10**4 points of (0, 1).
    """
    if (
        isinstance(a, EmpiricalDistribution)
        and isinstance(b, EmpiricalDistribution)
        and a.is_sample
        and b.is_sample
        and a.samples.size == b.samples.size
    ):
        return float(np.sqrt(np.mean((a.samples - b.samples) ** 2)))
    t = _quad_grid()
    diff = a.quantile(t) - b.quantile(t)
    return float(np.sqrt(np.mean(diff**2)))


def e_norm(v, E) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ E @ v, 0.0)))


def wasserstein2_spline(a: QuantileSpline, b: QuantileSpline) -> float:
    if a.basis != b.basis:
        raise InvalidArgumentError("quantile splines live on different bases")
    return e_norm(a.coeffs - b.coeffs, a.basis.E)


def barycenter(quantiles) -> QuantileSpline:
    """Wasserstein barycenter: the coefficientwise mean of the encoded quantiles."""
    quantiles = list(quantiles)
    if not quantiles:
        raise InvalidArgumentError("barycenter of an empty list")
    basis = quantiles[0].basis
    if any(q.basis != basis for q in quantiles):
        raise InvalidArgumentError("quantile splines live on different bases")
    return QuantileSpline(np.mean([q.coeffs for q in quantiles], axis=0), basis)


def coefficient_matrix(quantiles) -> np.ndarray:
    return np.array([q.coeffs for q in quantiles])


def encode_values(values, basis: SplineBasis) -> np.ndarray:
    """Encode quantile values sampled on ``default_fit_grid()`` (rows) into monotone coefficients."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    coef = values @ fit_operator(basis, values.shape[1]).T
    return project_monotone_many(coef, basis.E)


def encode(dist, basis: SplineBasis, grid_size: int = DEFAULT_FIT_GRID) -> QuantileSpline:
    """Least-squares spline fit of the quantile function followed by metric projection."""
    q = dist.quantile(default_fit_grid(grid_size))
    coef = fit_operator(basis, grid_size) @ q
    return QuantileSpline(project_monotone(coef, basis.E), basis)


def encode_many(dists, basis: SplineBasis, grid_size: int = DEFAULT_FIT_GRID) -> list:
    """Encode a whole dataset; the projections are independent per distribution."""
    dists = list(dists)
    if not dists:
        return []
    grid = default_fit_grid(grid_size)
    values = np.array([d.quantile(grid) for d in dists])
    return [QuantileSpline(c, basis) for c in encode_values(values, basis)]


def _inverse_cdf_grid(qfun, fine: int):
    """Tabulate a quantile function on [0, 1] for numerical inversion."""
    t = np.linspace(0.0, 1.0, fine)
    x = np.asarray(qfun(t), dtype=float)
    x = np.maximum.accumulate(x)
    return t, x


def _cdf_from_table(t, x, points):
    # keep the last t of each run of equal x: F(y) = sup{t : q(t) <= y}
    keep = np.append(np.diff(x) > 0.0, True)
    return np.interp(points, x[keep], t[keep], left=0.0, right=1.0)


def _flat_length(t, x, tol_x):
    flat = np.diff(x) <= tol_x
    if not flat.any():
        return 0.0
    step = np.diff(np.concatenate([[0], flat.astype(int), [0]]))
    runs = np.flatnonzero(step == -1) - np.flatnonzero(step == 1)
    return float(runs.max() * (t[1] - t[0]))


def decode_pdf(q, grid_size: int = 512, fine: int = 20_001):
    """Density of the pushforward of U(0, 1) through a quantile function.

    The quantile function is tabulated, inverted by interpolation to get the
    cdf on an equispaced grid of its range, and the cdf is differenced.  A
    flat stretch longer than 1e-6 in ``t`` is an atom; it triggers an
    :class:`AtomWarning` and the density is capped at one atom per grid cell.

    ``q`` is a :class:`QuantileSpline` or any object with a vectorized
    ``quantile`` method defined on [0, 1].
    """
    qfun = q.quantile if hasattr(q, "quantile") else q
    t, x = _inverse_cdf_grid(qfun, fine)
    lo, hi = float(x[0]), float(x[-1])
    if hi <= lo:
        warnings.warn("quantile function is constant: point mass", AtomWarning, stacklevel=2)
        return np.array([lo]), np.array([np.inf])
    if _flat_length(t, x, 1e-14 * (hi - lo)) > ATOM_WIDTH:
        warnings.warn("quantile function has a flat segment: density capped", AtomWarning, stacklevel=2)
    grid = np.linspace(lo, hi, grid_size)
    cdf = _cdf_from_table(t, x, grid)
    dens = np.gradient(cdf, grid)
    cap = 1.0 / (grid[1] - grid[0])
    return grid, np.clip(dens, 0.0, cap)


def decode_histogram(q, n_cells: int = 2048, fine: int = 20_001) -> EmpiricalDistribution:
    """Histogram of the pushforward law with cell masses from cdf differences."""
    qfun = q.quantile if hasattr(q, "quantile") else q
    t, x = _inverse_cdf_grid(qfun, fine)
    lo, hi = float(x[0]), float(x[-1])
    if hi <= lo:
        return EmpiricalDistribution.from_samples([lo])
    edges = np.linspace(lo, hi, n_cells + 1)
    cdf = _cdf_from_table(t, x, edges)
    cdf[0], cdf[-1] = 0.0, 1.0
    return EmpiricalDistribution.from_histogram(edges, np.maximum(np.diff(cdf), 0.0))
