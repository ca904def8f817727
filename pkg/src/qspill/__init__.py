"""Quantile spillover networks: QVAR connectedness, backbones, triad motifs, portfolios."""

from .backbone import BackboneGraph, disparity_alpha, extract_backbone, threshold_filter
from .connectedness import (
    SpilloverSet,
    directional_measures,
    gfevd,
    group_decompose,
    joint_from,
    joint_sot,
    joint_tci,
    normalize_gsot,
    rolling_connectedness,
    spillover_set,
)
from .errors import (
    ConfigError,
    ConnectednessError,
    ConvergenceError,
    DataError,
    EstimationError,
    PortfolioError,
    QSpillError,
    RankDeficiencyError,
)
from .marketdata import (
    Asset,
    PricePanel,
    ReturnsPanel,
    compute_log_returns,
    descriptive_stats,
    load_price_panel,
)
from .orbits import (
    diversity_connectedness_correlation,
    position_profiles,
    profile_entropy,
    similarity_matrix,
)
from .pipeline import PipelineConfig, robustness_compare, run_pipeline
from .portfolio import backtest, build_pci, group_weights, msp_input, rolling_covariance, weights_inverse_rule
from .qvar import MaCoefficients, QvarModel, fit_qvar, fit_quantile_regression, ma_coefficients

__version__ = "0.1.0"
