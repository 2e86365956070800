"""Point estimates, credible intervals, and error metrics from posterior samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDirectionError, InvalidConfigurationError
from .posterior import PosteriorSamples

# Quantile convention, pinned: linear interpolation between order statistics
# at rank q*(N-1)+1 (numpy's "linear" method).
QUANTILE_METHOD = "linear"


@dataclass(frozen=True)
class EigenSummary:
    k: int
    mean: float
    ci_low: float
    ci_high: float
    n_draws: int
    mean_outside_ci: bool = False


@dataclass(frozen=True)
class VectorSummary:
    k: int
    mean_vector: np.ndarray
    dispersion: float


def summarize_eigenvalues(samples: PosteriorSamples, level: float = 0.95) -> list[EigenSummary]:
    """Mean and equal-tailed credible interval for each spike index."""
    if not 0.0 < level < 1.0:
        raise InvalidConfigurationError(f"level must be in (0, 1), got {level}")
    if samples.n_draws < 2:
        raise InvalidConfigurationError("need at least two draws to summarize")
    alpha = (1.0 - level) / 2.0
    draws = samples.eigenvalues
    means = np.mean(draws, axis=0)
    lows = np.quantile(draws, alpha, axis=0, method=QUANTILE_METHOD)
    highs = np.quantile(draws, 1.0 - alpha, axis=0, method=QUANTILE_METHOD)
    out = []
    for j in range(samples.k):
        # the flag marks genuinely pathological skew, not rounding noise
        slack = 1e-12 * max(1.0, abs(float(means[j])))
        out.append(
            EigenSummary(
                k=j + 1,
                mean=float(means[j]),
                ci_low=float(lows[j]),
                ci_high=float(highs[j]),
                n_draws=samples.n_draws,
                mean_outside_ci=not lows[j] - slack <= means[j] <= highs[j] + slack,
            )
        )
    return out


def mean_eigenvector(samples: PosteriorSamples, k: int) -> VectorSummary:
    """Sign-aligned chordal mean of the k-th eigenvector draws.

    Each draw is flipped to have nonnegative inner product with the first
    draw, then the draws are averaged and the average renormalized.
    Dispersion is the mean of 1 - (xi_j . mean)^2 over draws.
    """
    if not 1 <= k <= samples.k:
        raise InvalidConfigurationError(f"spike index k must be in [1, {samples.k}], got {k}")
    vecs = samples.eigenvectors[:, :, k - 1]
    reference = vecs[0]
    signs = np.sign(vecs @ reference)
    signs[signs == 0] = 1.0
    aligned = vecs * signs[:, None]
    avg = np.mean(aligned, axis=0)
    norm = np.linalg.norm(avg)
    if norm < 1e-12:
        raise DegenerateDirectionError(
            f"eigenvector draws for k={k} cancel out; no mean direction exists"
        )
    mean_vec = avg / norm
    dispersion = float(np.mean(1.0 - (vecs @ mean_vec) ** 2))
    return VectorSummary(k=k, mean_vector=mean_vec, dispersion=dispersion)


def eigenvector_error(est, truth) -> float:
    """1 - (est . truth)^2 for unit vectors; invariant to sign flips."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    for name, v in (("est", est), ("truth", truth)):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise InvalidConfigurationError(f"{name} is not unit-norm (|v| = {np.linalg.norm(v):.8g})")
    return float(1.0 - float(est @ truth) ** 2)


def relative_error(est: float, truth: float) -> float:
    """|est - truth| / truth for positive truth."""
    if truth <= 0:
        raise InvalidConfigurationError(f"truth must be positive, got {truth}")
    return abs(est - truth) / truth


def coverage(replication_cis, truth: float) -> float:
    """Fraction of closed intervals [low, high] containing truth."""
    cis = list(replication_cis)
    if not cis:
        raise InvalidConfigurationError("need at least one interval")
    hits = sum(1 for low, high in cis if low <= truth <= high)
    return hits / len(cis)
