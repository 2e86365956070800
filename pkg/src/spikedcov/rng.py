"""Reproducible Wishart and inverse-Wishart sampling on counter-based streams.

Randomness is addressed, not sequential: a draw is identified by
(master_seed, draw_index) and always produces the same matrix no matter how
many workers run or in what order they finish. Derived sub-experiments get
fresh 64-bit masters from `substream_seed`, so replication r / purpose q
never collides with draw streams.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidDegreesOfFreedomError, MeanUndefinedWarning
from .linalg import cholesky_lower, ensure_symmetric, symmetrize

_SEED_MAX = 2**64


def _check_seed(value: int, name: str) -> int:
    v = int(value)
    if not 0 <= v < _SEED_MAX:
        raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
    return v


@dataclass(frozen=True)
class RngStream:
    """Addressed randomness: (master_seed, draw_index) determines every value."""

    master_seed: int
    draw_index: int = 0

    def __post_init__(self):
        _check_seed(self.master_seed, "master_seed")
        if int(self.draw_index) < 0:
            raise ValueError(f"draw_index must be nonnegative, got {self.draw_index}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(int(self.draw_index),))
        return np.random.default_rng(seq)


def substream_seed(master_seed: int, *path: int) -> int:
    """Derive an independent 64-bit master seed for a labelled sub-stream."""
    _check_seed(master_seed, "master_seed")
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, np.uint64)[0])


def _bartlett_lower(dim: int, df: float, rng: np.random.Generator) -> np.ndarray:
    """Lower-triangular Bartlett factor B with B @ B.T ~ Wishart(df, I).

    Diagonal entries are sqrt(chi-square(df - i)); chi-square is generated as
    gamma(df/2, scale=2) so non-integer degrees of freedom are exact.
    """
    shape = (df - np.arange(dim)) / 2.0
    diag = np.sqrt(rng.gamma(shape=shape, scale=2.0))
    b = np.zeros((dim, dim))
    tril = np.tril_indices(dim, k=-1)
    b[tril] = rng.standard_normal(tril[0].size)
    b[np.arange(dim), np.arange(dim)] = diag
    return b


def wishart_draw(df: float, scale, stream: RngStream) -> np.ndarray:
    """One Wishart(df, scale) variate via the Bartlett construction."""
    scale = ensure_symmetric(scale, "scale")
    p = scale.shape[0]
    if df <= p - 1:
        raise InvalidDegreesOfFreedomError(
            f"Wishart degrees of freedom must exceed p-1={p - 1}, got {df}"
        )
    lower = cholesky_lower(scale)
    b = _bartlett_lower(p, df, stream.generator())
    lb = lower @ b
    return symmetrize(lb @ lb.T)


def inverse_wishart_from_factor(scale_lower: np.ndarray, nu: float, stream: RngStream) -> np.ndarray:
    """Inverse-Wishart draw given the lower Cholesky factor of the scale.

    Callers drawing repeatedly from one distribution factor the scale once
    and use this entry point; validation of nu against p is theirs.
    """
    p = scale_lower.shape[0]
    m = nu - p - 1
    b = _bartlett_lower(p, m, stream.generator())
    y = solve_triangular(b, scale_lower.T, lower=True, check_finite=False)
    return symmetrize(y.T @ y)


def inverse_wishart_draw(nu: float, scale_a, stream: RngStream) -> np.ndarray:
    """One draw from the density |S|^(-nu/2) exp(-tr(S^-1 A)/2).

    This parameterization maps to the standard inverse-Wishart with
    m = nu - p - 1 degrees of freedom, so the mean is
    A / (nu - 2p - 2) whenever nu > 2p + 2. The mapping is pinned
    by requiring the posterior center (n S + A)/(n + nu - 2p - 2) to be the
    distribution mean.

    Rather than inverting the scale, we factor A = L L^T, draw the Bartlett
    factor B for an identity-scale Wishart(m, I), and return Y^T Y with
    Y = B^-1 L^T: then (Y^T Y)^-1 = L^-T B B^T L^-1 ~ Wishart(m, A^-1) as
    required, and only triangular systems are solved.
    """
    scale_a = ensure_symmetric(scale_a, "scale_a")
    p = scale_a.shape[0]
    if nu <= 2 * p:
        raise InvalidDegreesOfFreedomError(
            f"inverse-Wishart requires nu > 2p = {2 * p}, got {nu}"
        )
    if nu <= 2 * p + 2:
        warnings.warn(
            f"nu={nu} is in (2p, 2p+2]: the distribution mean is undefined",
            MeanUndefinedWarning,
            stacklevel=2,
        )
    return inverse_wishart_from_factor(cholesky_lower(scale_a), nu, stream)
