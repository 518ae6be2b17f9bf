"""Bayesian unfolding models for binary choice matrices.

Fits logit (Gumbel-shock) and probit (Gaussian-shock) unfolding models to
legislator-by-item vote matrices with a data-augmented Gibbs sampler, built
on a KL-fitted Gaussian-mixture approximation to the Gumbel density, and
provides the accompanying diagnostics (complexity-adjusted fit scores,
effective sample sizes, rank correlations, response curves).
"""

from .data_io import (
    DrawCsvWriter,
    FilterReport,
    SimulationTruth,
    filter_votes,
    load_votes,
    read_draws,
    simulate_votes,
    write_draws,
    write_votes_csv,
)
from .diagnostics import (
    ComparisonReport,
    DegenerateSeriesError,
    RankSummary,
    WaicReport,
    compare_models,
    ess,
    ranks,
    response_curve,
    spearman,
    waic,
)
from .distributions import (
    gumbel_log_density,
    log_normal_cdf,
    sample_categorical_log,
    sample_truncated_normal,
)
from .gumbel_mix import (
    FitResult,
    GaussianMixture,
    QuadratureGrid,
    builtin_table,
    fit_mixture,
    fit_mixture_ladder,
    gumbel_quadrature_grid,
    kl_divergence,
    read_mixture,
    single_normal,
    write_mixture,
)
from .model import (
    MISSING,
    NAY,
    YEA,
    Hyperparams,
    Item,
    ItemParams,
    Legislator,
    VoteMatrix,
    log_likelihood,
    log_likelihood_by_legislator,
    log_prior_item,
    probit_response_probability,
    response_probability,
    sample_prior_theta,
)
from .rng import RngStream
from .sampler import ChainState, DrawStore, SamplerConfig, init_state, run_chain

__version__ = "0.1.0"
