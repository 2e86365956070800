"""Bayesian inference for spiked covariance matrices.

Conjugate inverse-Wishart posterior sampling with two eigenvalue bias
corrections (prior calibration and post-hoc multiplication), BIC-based
inference of the number of spikes, simulation harnesses, and a rolling
absorption-ratio pipeline for financial panels.
"""

from .absorption import RollingConfig, RollingReport, absorption_ratio, rolling_analysis
from .correction import (
    CorrectionContext,
    calibrate_nu,
    correction_factors,
    gamma1_tilde,
    gamma2,
    hat_c,
    posthoc_adjust,
)
from .linalg import EigenDecomposition, cholesky_lower, sample_covariance, sym_eigen
from .perturbation import BlockDecomposition, block_decompose, expansion_approx
from .posterior import (
    MODE_FAST,
    MODE_FULL,
    PosteriorSamples,
    PosteriorSpec,
    build_posterior,
    draw_sigma,
    expected_offblock_coupling,
    posterior_eigen_draws,
    topk_fast_draw,
)
from .returns import load_matrix, load_returns
from .rng import RngStream, inverse_wishart_draw, substream_seed, wishart_draw
from .simulate import (
    ExperimentConfig,
    ExperimentReport,
    Setting1Config,
    Setting2Config,
    gen_setting1,
    gen_setting2,
    run_experiment,
)
from .spikes import SpikePosterior, SpikePrior, bic, default_k_max, entropy, spike_posterior
from .summaries import (
    EigenSummary,
    VectorSummary,
    coverage,
    eigenvector_error,
    mean_eigenvector,
    relative_error,
    summarize_eigenvalues,
)

__version__ = "0.1.0"

__all__ = [
    "EigenDecomposition",
    "sym_eigen",
    "sample_covariance",
    "cholesky_lower",
    "RngStream",
    "substream_seed",
    "wishart_draw",
    "inverse_wishart_draw",
    "PosteriorSpec",
    "PosteriorSamples",
    "build_posterior",
    "draw_sigma",
    "posterior_eigen_draws",
    "topk_fast_draw",
    "expected_offblock_coupling",
    "MODE_FULL",
    "MODE_FAST",
    "CorrectionContext",
    "hat_c",
    "calibrate_nu",
    "gamma1_tilde",
    "gamma2",
    "correction_factors",
    "posthoc_adjust",
    "EigenSummary",
    "VectorSummary",
    "summarize_eigenvalues",
    "mean_eigenvector",
    "eigenvector_error",
    "relative_error",
    "coverage",
    "SpikePrior",
    "SpikePosterior",
    "bic",
    "spike_posterior",
    "entropy",
    "default_k_max",
    "Setting1Config",
    "Setting2Config",
    "gen_setting1",
    "gen_setting2",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "BlockDecomposition",
    "block_decompose",
    "expansion_approx",
    "absorption_ratio",
    "rolling_analysis",
    "RollingConfig",
    "RollingReport",
    "load_returns",
    "load_matrix",
    "__version__",
]
