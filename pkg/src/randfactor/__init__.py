"""Random factor models built on random projections.

``X ~ F L^T`` with random factors ``F = a' B^T`` and loadings
``L = (a/a') X^T B^T``, compared against a PCA baseline, plus Monte Carlo
checks of the closed-form moments of ``P = a B^T B``.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    ConfigError,
    DecompositionError,
    DegenerateSampleError,
    DimensionError,
    DomainError,
    NotElementIIDError,
    PreconditionError,
    RandFactorError,
    ZeroVarianceError,
)
from .experiments import (
    ExperimentConfig,
    FunnelRow,
    corr_error,
    generate_synthetic_panel,
    reconstruction_rmse,
    reduced_data_experiment,
    run_funnel,
    universality_compare,
    volatility_error,
)
from .pca import PcaDecomposition, pca_decompose, pca_truncate, remove_market_factor
from .randproj import (
    FAMILIES,
    DistributionMoments,
    ProjectionSpec,
    covariance_scale,
    distribution_moments,
    draw_projection,
    factor_scale,
)
from .rfm import (
    RandomLoadingDecomposition,
    RfmDecomposition,
    decompose,
    factor_gram_stats,
    project,
    random_loading_project,
)
from .stats import (
    DataPanel,
    log_returns,
    sample_corr,
    sample_cov,
    sample_mean,
    sample_var,
    standardize,
)
from .theory import (
    MomentPrediction,
    TheoryReport,
    chebyshev_tail,
    monte_carlo_validate,
    nongaussian_predictions,
    predict_moments,
)
