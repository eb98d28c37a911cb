"""Projected PCA of spline-encoded quantile functions.

Principal directions are those of ordinary PCA in L2([0, 1]), i.e. the
E-orthonormal eigenvectors of ``(1/n) A' A E`` for the centered coefficient
matrix ``A``.  A point is mapped to the k-dimensional component by the metric
projection onto ``(a0 + span(w_1..w_k)) ∩ cone``, which keeps every
reconstruction a valid quantile function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .distributions import QuantileSpline, barycenter, coefficient_matrix, e_norm
from .errors import InvalidArgumentError
from .monotone_projection import SliceProjector, ray_extent
from .spline_basis import SplineBasis

SCORE_ZERO_TOL = 1e-9


@dataclass
class PcaModel:
    a0: np.ndarray
    W: np.ndarray
    eigenvalues: np.ndarray
    basis: SplineBasis
    method: str = "projected"
    _projectors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def J(self) -> int:
        return self.basis.J

    @property
    def center(self) -> QuantileSpline:
        return QuantileSpline(self.a0, self.basis)

    def projector(self, k: int) -> SliceProjector:
        if not 0 <= k <= self.W.shape[1]:
            raise InvalidArgumentError(f"dimension k={k} outside [0, {self.W.shape[1]}]")
        if k not in self._projectors:
            self._projectors[k] = SliceProjector(self.a0, self.W[:, :k], self.basis.E, self.basis.G)
        return self._projectors[k]

    def explained_variance_ratio(self) -> np.ndarray:
        lam = np.clip(self.eigenvalues, 0.0, None)
        total = lam.sum()
        return np.cumsum(lam) / total if total > 0 else np.zeros_like(lam)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "basis": self.basis.to_dict(),
            "a0": self.a0.tolist(),
            "W": self.W.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PcaModel":
        basis = SplineBasis.from_dict(doc["basis"])
        W = np.array(doc["W"], dtype=float).reshape(basis.J, -1)
        return cls(
            a0=np.array(doc["a0"], dtype=float),
            W=W,
            eigenvalues=np.array(doc["eigenvalues"], dtype=float),
            basis=basis,
            method=doc.get("method", "projected"),
        )

    def to_json(self) -> str:
        # json writes floats with repr(), which round-trips doubles exactly
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PcaModel":
        return cls.from_dict(json.loads(text))


def _as_matrix(data):
    if not data:
        raise InvalidArgumentError("empty dataset")
    basis = data[0].basis
    if any(q.basis != basis for q in data):
        raise InvalidArgumentError("observations live on different bases")
    return coefficient_matrix(data), basis


def _fix_signs(W):
    idx = np.argmax(np.abs(W), axis=0)
    signs = np.sign(W[idx, np.arange(W.shape[1])])
    signs[signs == 0] = 1.0
    return W * signs


def fit_pca(data, center: QuantileSpline | None = None) -> PcaModel:
    """Principal directions of a dataset of quantile splines.

    With ``E = L L'`` the symmetric matrix ``L' C L`` (``C`` the 1/n
    covariance of the coefficients) is diagonalized and its eigenvectors
    ``u`` are mapped back through ``w = L^{-T} u``, so the directions are
    E-orthonormal by construction and satisfy ``C E w = lambda w``.
    """
    data = list(data)
    if len(data) < 2:
        raise InvalidArgumentError("PCA needs at least two observations")
    X, basis = _as_matrix(data)
    if center is None:
        center = barycenter(data)
    elif center.basis != basis:
        raise InvalidArgumentError("center lives on a different basis")
    a0 = np.array(center.coeffs)
    A = X - a0
    C = A.T @ A / len(data)
    L = basis.cholesky
    M = L.T @ C @ L
    lam, U = la.eigh(0.5 * (M + M.T))
    order = np.argsort(lam)[::-1]
    lam, U = lam[order], U[:, order]
    W = la.solve_triangular(L.T, U, lower=False)
    return PcaModel(a0=a0, W=_fix_signs(W), eigenvalues=lam, basis=basis)


def project_observation(model: PcaModel, x: QuantileSpline, k: int):
    """Scores and reconstruction of ``x`` on the k-dimensional projected component."""
    proj = model.projector(k)
    lam = proj.scores(x.coeffs)
    return lam, QuantileSpline(proj.reconstruct(lam), model.basis)


def project_dataset(model: PcaModel, data, k: int):
    """Scores (n x k) and reconstruction coefficients (n x J) of a dataset."""
    proj = model.projector(k)
    scores = np.zeros((len(data), k))
    recon = np.zeros((len(data), model.J))
    for i, q in enumerate(data):
        scores[i] = proj.scores(q.coeffs)
        recon[i] = proj.reconstruct(scores[i])
    return scores, recon


def reconstruction_distances(model: PcaModel, data, k: int) -> np.ndarray:
    X = coefficient_matrix(data)
    _, recon = project_dataset(model, data, k)
    E = model.basis.E
    return np.array([e_norm(d, E) for d in X - recon])


def reconstruction_error(model: PcaModel, data, k: int) -> float:
    """Mean 2-Wasserstein distance between observations and their reconstructions."""
    return float(reconstruction_distances(model, data, k).mean())


def constrained_objective(model: PcaModel, data, k: int) -> float:
    """Sum of squared E-distances to the k-dimensional projected component."""
    return float(np.sum(reconstruction_distances(model, data, k) ** 2))


def normalized_reconstruction_error(model: PcaModel, data, k: int) -> float:
    X = coefficient_matrix(data)
    E = model.basis.E
    denom = np.mean([e_norm(x - model.a0, E) for x in X])
    if denom == 0.0:
        return 0.0
    return reconstruction_error(model, data, k) / denom


def direction_extent(model: PcaModel, h: int):
    """``(eta_min, eta_max)`` of direction ``h`` (1-based) through the center."""
    return ray_extent(model.a0, model.W[:, h - 1], model.basis.G)


def interpretability_score(model: PcaModel, data, h: int, dim: int | None = None) -> float:
    """Share of direction-``h`` scores lying inside the direction's ray extent.

    ``1 - mean_i dist(s_ih, [eta_min, eta_max]) / |s_ih|`` with scores taken
    from the projection on the ``dim``-dimensional component (default
    ``dim = h``).  Scores at round-off level count as zero.  A zero score
    contributes nothing, except on a direction whose extent is the single
    point {0}: no multiple of such a direction stays in the cone, and the
    term counts as fully outside.
    """
    dim = h if dim is None else dim
    if not 1 <= h <= dim:
        raise InvalidArgumentError("need 1 <= h <= dim")
    eta_min, eta_max = direction_extent(model, h)
    scores, _ = project_dataset(model, data, dim)
    s = scores[:, h - 1]
    E = model.basis.E
    spread = max((e_norm(q.coeffs - model.a0, E) for q in data), default=0.0)
    zero = np.abs(s) <= SCORE_ZERO_TOL * spread
    dist = np.maximum(eta_min - s, 0.0) + np.maximum(s - eta_max, 0.0)
    safe = np.where(zero, 1.0, np.abs(s))
    ratio = np.minimum(dist / safe, 1.0)
    ratio[zero] = 1.0 if (eta_min == 0.0 and eta_max == 0.0) else 0.0
    return float(1.0 - ratio.mean())


def ghost_variance(model: PcaModel, data, k: int) -> float:
    """Mean relative E-norm gap between L2 projections and projected-PCA projections.

    Observations equal to the center are skipped.
    """
    X = coefficient_matrix(data)
    E = model.basis.E
    proj = model.projector(k)
    terms = []
    for x in X:
        denom = e_norm(x - model.a0, E)
        if denom == 0.0:
            continue
        free = proj.free_scores(x)
        lam = proj.scores(x)
        # W is E-orthonormal, so the E-distance of the two points is the score distance
        terms.append(float(np.linalg.norm(free - lam)) / denom)
    return float(np.mean(terms)) if terms else 0.0


def scores_mean_correlation(model: PcaModel, data, h: int = 1, dim: int | None = None) -> float:
    """Correlation between direction-``h`` scores and the distributions' means."""
    dim = h if dim is None else dim
    scores, _ = project_dataset(model, data, dim)
    means = np.array([q.mean() for q in data])
    return float(np.corrcoef(scores[:, h - 1], means)[0, 1])
