"""Copula inference for latent spot volatility from high-frequency returns.

Pipeline: simulate or ingest two-asset log-price panels, recover blocked
jump-truncated spot variances, form the occupation copula of the paired
variance paths, and run pointwise/uniform/goodness-of-fit inference on it.
"""

from ._backend import BACKEND
from .copulas import (
    CopulaModel,
    Family,
    PseudoObservations,
    clayton,
    fit_mle,
    gumbel,
    independence,
    kendall_K,
    kendall_tau_sample,
    tail_concentration,
)
from .inference import (
    BandResult,
    GofResult,
    GridCovariance,
    avar_C,
    avar_G,
    copula_partial_u,
    copula_partial_v,
    gof_statistic,
    gof_test,
    grid_points,
    kernel_copula_density,
    pointwise_ci,
    uniform_band,
)
from .occupation import (
    EmpiricalCopulaGrid,
    VolPairSeries,
    empirical_copula,
    inference_grid,
    interior_grid,
    joint_cdf,
    marginal_quantile,
    pseudo_observations,
    rmse_vs_target,
)
from .panels import HighFreqPanel, ingest_ticks, write_panel_csv
from .simulate import (
    SimConfig,
    SimPath,
    init_joint_logv,
    observe,
    simulate,
    stationary_logv_law,
    true_variance_series,
)
from .spotvol import (
    SpotVolConfig,
    SpotVolPath,
    default_truncation_scale,
    pair_series,
    spot_pair_from_panel,
    spot_variance_path,
    truncation_threshold,
    validate_rates,
)

__version__ = "0.1.0"
