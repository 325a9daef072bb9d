"""Locally adaptive Bayesian trend filtering for count time series.

A negative binomial observation model whose differenced latent trend
carries a dynamic horseshoe shrinkage prior, fit by a fully Gibbs-within-MH
sampler built on exact Polya-Gamma augmentation and joint banded Gaussian
state draws.  Ships with Gaussian / log-Gaussian shrinkage comparators,
exponential smoothing, and a simulation benchmark harness.
"""

from .banded import (
    DifferenceOperator,
    NotPositiveDefiniteError,
    SymBandedMatrix,
    build_difference_operator,
    cholesky_banded,
    sample_mvn_canonical,
)
from .baselines import (
    GaussianDhsConfig,
    GaussianDhsDraws,
    exp_smoothing,
    gaussian_dhs_fit,
    log_backmap,
)
from .dhs import (
    OMORI10,
    DhsPriorConfig,
    DhsState,
    OmoriMixture,
    sample_log_vols,
    sample_mixture_indicators,
    sample_mu,
    sample_phi,
    sample_xi_eta,
    shrinkage_profile,
)
from .kernels import (
    categorical_draw,
    discrete_uniform_draw,
    pg_draw,
    pg_draw_many,
    pg_mean,
    slice_sample,
)
from .model import (
    CountSeries,
    FitState,
    McmcStepError,
    ModelConfig,
    PosteriorDraws,
    PosteriorSummary,
    equal_tail_interval,
    init_state,
    nb_loglik,
    posterior_summary,
    run_mcmc,
    sample_quantile,
    sample_r,
    sample_theta,
    sample_xi_theta,
)
from .rng import RngStream, substream_id
from .simbench import (
    DESK_BUDGET,
    PAPER_BUDGET,
    McmcBudget,
    MetricRow,
    SimScenario,
    aggregate_rows,
    compute_metrics,
    doppler_trend,
    run_experiment,
    simulate_counts,
)

__version__ = "0.1.0"

__all__ = [
    "CountSeries",
    "DESK_BUDGET",
    "DhsPriorConfig",
    "DhsState",
    "DifferenceOperator",
    "FitState",
    "GaussianDhsConfig",
    "GaussianDhsDraws",
    "McmcBudget",
    "McmcStepError",
    "MetricRow",
    "ModelConfig",
    "NotPositiveDefiniteError",
    "OMORI10",
    "OmoriMixture",
    "PAPER_BUDGET",
    "PosteriorDraws",
    "PosteriorSummary",
    "RngStream",
    "SimScenario",
    "SymBandedMatrix",
    "aggregate_rows",
    "build_difference_operator",
    "categorical_draw",
    "cholesky_banded",
    "compute_metrics",
    "discrete_uniform_draw",
    "doppler_trend",
    "equal_tail_interval",
    "exp_smoothing",
    "gaussian_dhs_fit",
    "init_state",
    "log_backmap",
    "nb_loglik",
    "pg_draw",
    "pg_draw_many",
    "pg_mean",
    "posterior_summary",
    "run_experiment",
    "run_mcmc",
    "sample_log_vols",
    "sample_mixture_indicators",
    "sample_mu",
    "sample_mvn_canonical",
    "sample_phi",
    "sample_quantile",
    "sample_r",
    "sample_theta",
    "sample_xi_eta",
    "sample_xi_theta",
    "shrinkage_profile",
    "simulate_counts",
    "slice_sample",
    "substream_id",
    "__version__",
]
