"""Spike-count inference: BIC approximation of the marginal likelihood and the
posterior distribution it induces over the number of spikes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigurationError, RankDeficiencyError

PRIOR_UNIFORM = "uniform"
PRIOR_EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class SpikePrior:
    """Prior over candidate spike counts on {k_min, ..., k_max}.

    K = 0 (pure isotropic model) is admitted when k_min = 0; the default
    support starts at 1.
    """

    kind: str = PRIOR_UNIFORM
    k_min: int = 1
    k_max: int = 10
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in (PRIOR_UNIFORM, PRIOR_EXPONENTIAL):
            raise InvalidConfigurationError(f"unknown prior kind {self.kind!r}")
        if self.k_min < 0 or self.k_max < self.k_min:
            raise InvalidConfigurationError(
                f"need 0 <= k_min <= k_max, got [{self.k_min}, {self.k_max}]"
            )
        if self.kind == PRIOR_EXPONENTIAL and self.alpha <= 0:
            raise InvalidConfigurationError(f"exponential prior needs alpha > 0, got {self.alpha}")

    def log_weight(self, k: int) -> float:
        if self.kind == PRIOR_EXPONENTIAL:
            return -self.alpha * k
        return 0.0


@dataclass(frozen=True)
class SpikePosterior:
    """Normalized posterior over spike counts with MAP and entropy."""

    support: np.ndarray
    probs: np.ndarray
    map_k: int
    entropy: float

    @classmethod
    def from_probs(cls, support, probs) -> "SpikePosterior":
        support = np.asarray(support, dtype=int)
        probs = np.asarray(probs, dtype=float)
        if support.shape != probs.shape or support.size == 0:
            raise InvalidConfigurationError("support and probs must be equal-length and nonempty")
        if np.any(probs < 0) or abs(float(np.sum(probs)) - 1.0) > 1e-12:
            raise InvalidConfigurationError("probs must be nonnegative and sum to one")
        map_k = int(support[int(np.argmax(probs))])  # argmax takes the lowest index on ties
        return cls(support=support, probs=probs, map_k=map_k, entropy=_entropy(probs))


def parameter_count(p: int, K: int) -> int:
    """Free parameters of the K-spike model: pK - K(K+1)/2 + K + 1."""
    return p * K - K * (K + 1) // 2 + K + 1


def bic(s_eigs, n: int, p: int, K: int) -> float:
    """BIC of the K-spike model, additive constant dropped.

    n * sum_{k<=K} log lam_k + n (p - K) log c_K + d_K log n, where c_K is
    the average of the p-K trailing sample eigenvalues. Only differences
    across K are meaningful.
    """
    s_eigs = np.asarray(s_eigs, dtype=float)
    if s_eigs.shape[0] != p:
        raise InvalidConfigurationError(f"expected {p} eigenvalues, got {s_eigs.shape[0]}")
    if not 0 <= K < min(n, p):
        raise InvalidConfigurationError(f"need 0 <= K < min(n, p) = {min(n, p)}, got K={K}")
    top = s_eigs[:K]
    c_k = float(np.sum(s_eigs[K:]) / (p - K))
    # Eigenvalues at roundoff scale relative to the top one count as zero.
    tol = 1e-12 * max(float(s_eigs[0]), 0.0)
    if np.any(top <= tol) or c_k <= tol:
        raise RankDeficiencyError(
            f"BIC undefined at K={K}: zero eigenvalue in the top block or bulk "
            f"average c_K={c_k:.6g}; cap k_max at rank(S) - 1"
        )
    return float(
        n * np.sum(np.log(top)) + n * (p - K) * np.log(c_k) + parameter_count(p, K) * np.log(n)
    )


def default_k_max(n: int, p: int, s_eigs=None) -> int:
    """Default upper end of the spike-count support.

    min(n, p) // 10, at least 10, but never at or above rank(S) (estimated
    from the eigenvalues when provided) nor above min(n, p) - 1.
    """
    k_max = max(10, min(n, p) // 10)
    k_max = min(k_max, min(n, p) - 1)
    if s_eigs is not None:
        s_eigs = np.asarray(s_eigs, dtype=float)
        tol = 1e-12 * max(float(s_eigs[0]), 1.0)
        rank = int(np.sum(s_eigs > tol))
        k_max = min(k_max, max(rank - 1, 1))
    return k_max


def posterior_from_bics(support, bics, prior: SpikePrior) -> SpikePosterior:
    """Normalize exp(-BIC/2) * prior over the support.

    Max-subtraction keeps the n*p*log-scale BIC values from overflowing and
    makes the result invariant to any constant added to all BIC values.
    """
    support = np.asarray(support, dtype=int)
    bics = np.asarray(bics, dtype=float)
    log_weights = -bics / 2.0 + np.array([prior.log_weight(int(k)) for k in support])
    shifted = np.exp(log_weights - np.max(log_weights))
    return SpikePosterior.from_probs(support, shifted / np.sum(shifted))


def spike_posterior(s_eigs, n: int, p: int, prior: SpikePrior) -> SpikePosterior:
    """Posterior over spike counts: probs proportional to exp(-BIC/2) * prior.

    Support values whose BIC is undefined (rank deficiency) truncate the
    support from that point on.
    """
    if prior.k_max >= min(n, p):
        raise InvalidConfigurationError(
            f"prior support must stay below min(n, p) = {min(n, p)}, got k_max={prior.k_max}"
        )
    support = []
    bics = []
    for k in range(prior.k_min, prior.k_max + 1):
        try:
            b = bic(s_eigs, n, p, k)
        except RankDeficiencyError:
            break
        support.append(k)
        bics.append(b)
    if not support:
        raise RankDeficiencyError(
            "no spike count in the prior support has a computable BIC"
        )
    return posterior_from_bics(support, bics, prior)


def entropy(post: SpikePosterior) -> float:
    """Shannon entropy of the spike-count posterior in nats."""
    return _entropy(post.probs)


def _entropy(probs: np.ndarray) -> float:
    nz = probs[probs > 0]
    return float(-np.sum(nz * np.log(nz)))
