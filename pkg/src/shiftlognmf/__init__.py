"""Sparse Poisson matrix factorization with a shifted-log link.

Counts are modeled as y_ij ~ Poisson(lambda_ij) with
alpha * log1p(lambda_ij / c) = (L F^T)_ij, L and F non-negative. Small c
behaves like a log link and drives near-binary loadings; large c approaches
the identity link of classical Poisson NMF. Fitting alternates non-negative
Poisson regressions over the rows and columns, with an optional quadratic
approximation that never touches the zero entries.
"""

__version__ = "0.1.0"

from . import backend
from .countmat import (
    CountMatrix,
    MatrixMarketError,
    from_dense,
    from_triplets,
    read_matrix_market,
    sparsity,
    write_matrix_market,
)
from .link import LinkParam, factor_effect, link_forward, link_inverse
from .quadapprox import QuadApprox, chebyshev_on, max_error_on_grid, taylor_about_zero
from .likelihood import FactorModel, approx_loglik, exact_loglik, identity_loglik
from .regression import (
    Gram,
    RegressionProblem,
    coordinate_derivatives,
    precompute_gram,
    reg_loglik,
    reg_loglik_approx,
    solve_approx,
    solve_exact,
)
from .fitter import (
    FitConfig,
    FitReport,
    compute_size_factors,
    effective_shift,
    fit,
    init_expand,
    init_rank1,
    make_quad,
    rescale,
)
from .evaluate import (
    MetricsReport,
    fit_frobenius_log1p,
    fit_identity_mu,
    hoyer_sparsity,
    likelihood_ratio_report,
    mean_abs_spearman,
    metrics_report,
    simulate,
)
from .geometry import (
    UpperRightHull,
    expm1_profile,
    limiting_direction,
    softmax_gap,
    upper_right_hull,
)

__all__ = [
    "__version__",
    "backend",
    "CountMatrix",
    "MatrixMarketError",
    "from_dense",
    "from_triplets",
    "read_matrix_market",
    "write_matrix_market",
    "sparsity",
    "LinkParam",
    "link_forward",
    "link_inverse",
    "factor_effect",
    "QuadApprox",
    "taylor_about_zero",
    "chebyshev_on",
    "max_error_on_grid",
    "FactorModel",
    "exact_loglik",
    "approx_loglik",
    "identity_loglik",
    "Gram",
    "RegressionProblem",
    "precompute_gram",
    "reg_loglik",
    "reg_loglik_approx",
    "solve_exact",
    "solve_approx",
    "coordinate_derivatives",
    "FitConfig",
    "FitReport",
    "compute_size_factors",
    "effective_shift",
    "init_rank1",
    "init_expand",
    "fit",
    "rescale",
    "make_quad",
    "hoyer_sparsity",
    "mean_abs_spearman",
    "MetricsReport",
    "metrics_report",
    "simulate",
    "fit_identity_mu",
    "fit_frobenius_log1p",
    "likelihood_ratio_report",
    "UpperRightHull",
    "upper_right_hull",
    "limiting_direction",
    "softmax_gap",
    "expm1_profile",
]
