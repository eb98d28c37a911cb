"""Statistics on one-dimensional distributions in the 2-Wasserstein metric.

Quantile functions are encoded as quadratic B-splines with nondecreasing
coefficients.  On top of this encoding the package offers projected PCA,
global and nested geodesic PCA, and projected distribution-on-distribution
regression.
"""

from .distributions import (
    EmpiricalDistribution,
    QuantileSpline,
    barycenter,
    decode_histogram,
    decode_pdf,
    encode,
    encode_many,
    quantile_at,
    wasserstein2,
    wasserstein2_spline,
)
from .errors import DomainError, InvalidArgumentError, NumericError, ParseError, SingularFitError, WassprojError
from .geodesic_pca import GeodesicOptions, GeodesicPcaResult, fit_global_geodesic, fit_nested_geodesic
from .monotone_projection import project_affine_slice, project_monotone, ray_extent
from .projected_pca import (
    PcaModel,
    fit_pca,
    ghost_variance,
    interpretability_score,
    normalized_reconstruction_error,
    project_observation,
    reconstruction_error,
)
from .projected_regression import RegressionModel, cross_validate_rho, fit_regression, moment_matrices, predict
from .spline_basis import SplineBasis, difference_matrix, eval_basis, gram_matrices, make_basis

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EmpiricalDistribution",
    "GeodesicOptions",
    "GeodesicPcaResult",
    "InvalidArgumentError",
    "NumericError",
    "ParseError",
    "PcaModel",
    "QuantileSpline",
    "RegressionModel",
    "SingularFitError",
    "SplineBasis",
    "WassprojError",
    "barycenter",
    "cross_validate_rho",
    "decode_histogram",
    "decode_pdf",
    "difference_matrix",
    "encode",
    "encode_many",
    "eval_basis",
    "fit_global_geodesic",
    "fit_nested_geodesic",
    "fit_pca",
    "fit_regression",
    "ghost_variance",
    "gram_matrices",
    "interpretability_score",
    "make_basis",
    "moment_matrices",
    "normalized_reconstruction_error",
    "predict",
    "project_affine_slice",
    "project_monotone",
    "project_observation",
    "quantile_at",
    "ray_extent",
    "reconstruction_error",
    "wasserstein2",
    "wasserstein2_spline",
]
