"""Seeded generators for the simulation scenarios.

Density-based scenarios are returned as histograms on a 2048-cell grid of
their support; quantile-based ones as equal-weight samples whose empirical
quantile function is the step function being simulated.  Every generator is
a pure function of its arguments and the seed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import isotonic_regression
from scipy.stats import beta as beta_dist
from scipy.stats import norm

from .distributions import EmpiricalDistribution, decode_histogram
from .errors import InvalidArgumentError

GRID_CELLS = 2048
SCENARIOS = (
    "gaussian_mix",
    "dpm",
    "bernstein",
    "step",
    "reg_wasserstein",
    "consistency_beta1",
    "consistency_beta2",
)


@dataclass
class Scenario:
    name: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise InvalidArgumentError(f"unknown scenario {self.name!r}; choose from {SCENARIOS}")

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _histograms(pdf_rows, lo, hi):
    edges = np.linspace(lo, hi, GRID_CELLS + 1)
    width = edges[1] - edges[0]
    out = []
    for p in pdf_rows:
        masses = p * width
        out.append(EmpiricalDistribution.from_histogram(edges, masses / masses.sum()))
    return out


def _cell_midpoints(lo, hi):
    edges = np.linspace(lo, hi, GRID_CELLS + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def gaussian_mix_params(n: int, seed):
    """Peak locations and widths: ``mu ~ .5 N(-3, .2^2) + .5 N(3, .2^2)``, ``sigma ~ U(.5, 2)``."""
    rng = _rng(seed)
    side = np.where(rng.random(n) < 0.5, -3.0, 3.0)
    mu = side + 0.2 * rng.standard_normal(n)
    sigma = rng.uniform(0.5, 2.0, n)
    return mu, sigma


def gen_gaussian_mix(n: int, seed=0):
    """Normal densities truncated to [-10, 10] with bimodal random locations."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    mu, sigma = gaussian_mix_params(n, seed)
    x = _cell_midpoints(-10.0, 10.0)
    pdfs = norm.pdf(x[None, :], mu[:, None], sigma[:, None])
    return _histograms(pdfs, -10.0, 10.0)


def dpm_params(n: int, K: int, seed):
    rng = _rng(seed)
    w = rng.dirichlet(np.full(K, 1.0 / K), size=n)
    mu = rng.normal(0.0, 2.0, size=(n, K))
    sigma = rng.uniform(0.5, 2.0, size=(n, K))
    return w, mu, sigma


def gen_dpm(n: int, K: int = 10, seed=0):
    """Finite Dirichlet-process mixtures of normals plus a 1e-5 floor on [-10, 10]."""
    if n < 1 or K < 1:
        raise InvalidArgumentError("need n >= 1 and K >= 1")
    w, mu, sigma = dpm_params(n, K, seed)
    x = _cell_midpoints(-10.0, 10.0)
    pdfs = np.einsum("ik,ikx->ix", w, norm.pdf(x[None, None, :], mu[..., None], sigma[..., None]))
    return _histograms(pdfs + 1e-5, -10.0, 10.0)


def gen_bernstein(n: int, K: int = 10, seed=0):
    """Mixtures of the Bernstein basis densities ``Beta(j, K - j + 1)``, ``j = 1..K``."""
    if n < 1 or K < 2:
        raise InvalidArgumentError("need n >= 1 and K >= 2")
    rng = _rng(seed)
    w = rng.dirichlet(np.full(K, 0.01), size=n)
    x = _cell_midpoints(0.0, 1.0)
    j = np.arange(1, K + 1)
    comps = beta_dist.pdf(x[None, :], j[:, None], (K - j + 1)[:, None])
    return _histograms(w @ comps, 0.0, 1.0)


def gen_step_quantiles(n: int, seed=0):
    """Quantiles equal to ``v1`` on (0, 1/2] and ``v1 + v2`` above, ``v ~ max(0, N(0, 1))``.

    Each law is the two-point sample ``{v1, v1 + v2}``.
    """
    rng = _rng(seed)
    v = np.maximum(0.0, rng.standard_normal((n, 2)))
    return [EmpiricalDistribution.from_samples([a, a + b]) for a, b in v]


def _cubic_basis(n_basis: int):
    inner = np.linspace(0.0, 1.0, n_basis - 2)
    return np.concatenate([[0.0] * 3, inner, [1.0] * 3])


def regression_pair_coefficients(n: int, seed=0, n_basis: int = 30):
    """Cubic-spline coefficients of predictor and response quantiles.

    Predictor coefficients start at 0 and accumulate Dirichlet(1, ..., 1)
    increments, so each quantile runs from 0 to 1.  Responses are ``B a``
    where column ``j`` of ``B`` is nondecreasing (cumulative Uniform(0, 0.5)
    steps down the rows), which keeps the responses monotone.
    """
    rng = _rng(seed)
    a_z = np.zeros((n, n_basis))
    a_z[:, 1:] = np.cumsum(rng.dirichlet(np.ones(n_basis - 1), size=n), axis=1)
    rows = np.cumsum(rng.uniform(0.0, 0.5, size=(n_basis, n_basis)), axis=1)
    B = rows.T
    a_y = a_z @ B.T
    return a_z, a_y, B


def gen_regression_pairs(n: int, seed=0, n_basis: int = 30):
    """Predictor/response laws of the linear Wasserstein regression scenario.

    Densities are recovered from the cubic quantile splines by numerical
    inversion and differencing, as histograms.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    a_z, a_y, _ = regression_pair_coefficients(n, seed, n_basis)
    knots = _cubic_basis(n_basis)
    Z = [decode_histogram(BSpline(knots, c, 3), GRID_CELLS) for c in a_z]
    Y = [decode_histogram(BSpline(knots, c, 3), GRID_CELLS) for c in a_y]
    return Z, Y


def beta_star(which: int):
    """Kernel ``(t - 1/2)^3 + (s - 1/2)^3`` or its piecewise-constant 10 x 10 version."""
    if which == 1:
        return lambda t, s: (t - 0.5) ** 3 + (s - 0.5) ** 3
    if which == 2:
        smooth = beta_star(1)

        def rough(t, s):
            k = np.clip(np.floor(np.asarray(t) * 10.0), 0, 9) + 1
            h = np.clip(np.floor(np.asarray(s) * 10.0), 0, 9) + 1
            return smooth(0.1 * k, 0.1 * h)

        return rough
    raise InvalidArgumentError("which_beta must be 1 or 2")


def gen_consistency_regression(n: int, which_beta: int = 1, seed=0, cells: int = 1000, noise: float = 0.1):
    """Step-quantile predictors and kernel-operator responses.

    Predictor quantiles are cumulative Dirichlet(0.01) increments over
    ``cells`` intervals shifted by ``U(0, 5)``.  Responses apply the integral
    operator with kernel ``beta_star(which_beta)``, are projected onto
    nondecreasing step functions, and are shifted by ``N(0, noise^2)``.
    """
    kernel = beta_star(which_beta)
    rng = _rng(seed)
    inc = rng.dirichlet(np.full(cells, 0.01), size=n)
    shift = rng.uniform(0.0, 5.0, size=(n, 1))
    fz = np.cumsum(inc, axis=1) + shift
    mid = (np.arange(cells) + 0.5) / cells
    K = kernel(mid[:, None], mid[None, :]) / cells
    fy = fz @ K.T
    fy = np.array([isotonic_regression(row).x for row in fy])
    fy = fy + noise * rng.standard_normal((n, 1))
    Z = [EmpiricalDistribution.from_samples(r) for r in fz]
    Y = [EmpiricalDistribution.from_samples(r) for r in fy]
    return Z, Y


def simulate(scenario: Scenario, n: int):
    """Dispatch on ``scenario.name``; returns a list of laws or a (Z, Y) pair."""
    p, s = scenario.params, scenario.seed
    if scenario.name == "gaussian_mix":
        return gen_gaussian_mix(n, s)
    if scenario.name == "dpm":
        return gen_dpm(n, int(p.get("K", 10)), s)
    if scenario.name == "bernstein":
        return gen_bernstein(n, int(p.get("K", 10)), s)
    if scenario.name == "step":
        return gen_step_quantiles(n, s)
    if scenario.name == "reg_wasserstein":
        return gen_regression_pairs(n, s, int(p.get("n_basis", 30)))
    which = 1 if scenario.name == "consistency_beta1" else 2
    return gen_consistency_regression(n, which, s)
