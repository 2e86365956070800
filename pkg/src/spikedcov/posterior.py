"""Conjugate posterior construction and eigenstructure sampling.

Two sampling routes are provided. The full route draws the whole covariance
matrix from the conjugate inverse-Wishart posterior and eigendecomposes each
draw. The fast route exploits the fact that, rotated into the eigenbasis of
the posterior center, the leading K x K block is itself inverse-Wishart; its
eigenvalues are drawn directly and inflated by the expected coupling with the
bulk, while eigenvectors are taken from the posterior center (point estimate,
flagged).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ._blas import single_threaded_blas
from .errors import ExtrapolatedRegimeWarning, InvalidConfigurationError
from .linalg import (
    EigenDecomposition,
    cholesky_lower,
    ensure_symmetric,
    sym_eigen,
    symmetrize,
)
from .rng import RngStream, inverse_wishart_draw, inverse_wishart_from_factor

EIGENVALUE_FLOOR_REL = 1e-12

MODE_FULL = "full"
MODE_FAST = "fast-topk"


@dataclass(frozen=True)
class PosteriorSpec:
    """Inverse-Wishart posterior of the covariance matrix, plus its center.

    `scale` and `nu_post` parameterize the posterior density
    |S|^(-nu/2) exp(-tr(S^-1 scale)/2); `sigma_hat` is the posterior mean
    scale/(nu_post - 2p - 2), eigendecomposed once at construction.
    `scale_lower` caches the Cholesky factor of the scale so repeated draws
    skip the factorization.
    """

    scale: np.ndarray
    nu_post: float
    n: int
    p: int
    sigma_hat: np.ndarray
    sigma_hat_eigen: EigenDecomposition
    scale_lower: np.ndarray

    @property
    def denom(self) -> float:
        """Shrinkage denominator n + nu_prior - 2p - 2 (= nu_post - 2p - 2)."""
        return self.nu_post - 2 * self.p - 2


def build_posterior(s, n: int, a, nu: float) -> PosteriorSpec:
    """Combine the sample covariance with the prior into a PosteriorSpec."""
    s = ensure_symmetric(s, "s")
    a = ensure_symmetric(a, "a")
    p = s.shape[0]
    if a.shape[0] != p:
        raise InvalidConfigurationError(f"shape mismatch: S is {p}x{p}, A is {a.shape[0]}x{a.shape[0]}")
    if n < 1:
        raise InvalidConfigurationError(f"need n >= 1 observations, got {n}")
    if nu <= 2 * p:
        raise InvalidConfigurationError(f"prior requires nu > 2p = {2 * p}, got {nu}")
    denom = n + nu - 2 * p - 2
    if denom <= 0:
        raise InvalidConfigurationError(
            f"posterior mean undefined: n + nu - 2p - 2 = {denom} must be positive"
        )
    cholesky_lower(a)  # A must be SPD for the posterior scale to be SPD
    if np.min(np.linalg.eigvalsh(s)) < -1e-8 * max(1.0, float(np.max(np.abs(s)))):
        raise InvalidConfigurationError("sample covariance must be positive semidefinite")
    scale = symmetrize(a + n * s)
    sigma_hat = scale / denom
    return PosteriorSpec(
        scale=scale,
        nu_post=nu + n,
        n=int(n),
        p=p,
        sigma_hat=sigma_hat,
        sigma_hat_eigen=sym_eigen(sigma_hat),
        scale_lower=cholesky_lower(scale),
    )


def draw_sigma(spec: PosteriorSpec, stream: RngStream) -> np.ndarray:
    """One covariance draw from the full posterior."""
    return inverse_wishart_from_factor(spec.scale_lower, spec.nu_post, stream)


@dataclass(frozen=True)
class PosteriorSamples:
    """N draws of the top-K eigenvalues (and, in full mode, eigenvectors).

    `eigenvalues` has shape (N, K), descending within each row.
    `eigenvectors` has shape (N, p, K); in fast-topk mode it is a broadcast
    view of the fixed center eigenvectors and `eigenvectors_fixed` is set.
    """

    k: int
    n_draws: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mode: str
    adjusted: bool = False
    eigenvectors_fixed: bool = False
    reordered: bool = False
    flags: tuple = ()

    def eigenvector_draw(self, j: int) -> np.ndarray:
        return self.eigenvectors[j]


def expected_offblock_coupling(spec: PosteriorSpec, K: int) -> np.ndarray:
    """Expected squared coupling of each of the top-K directions with the bulk.

    Closed form: denom * lam_k * sum_{l>K} lam_l / ((denom + 1) * (denom - 2))
    with denom = n + nu - 2p - 2 and lam the eigenvalues of the posterior
    center. This is the exact posterior second moment of the off-block column,
    i.e. the sum over bulk rows of the element variances of the rotated draw.
    """
    lam = spec.sigma_hat_eigen.eigenvalues
    bulk_sum = float(np.sum(lam[K:]))
    d = spec.denom
    return d * lam[:K] * bulk_sum / ((d + 1.0) * (d - 2.0))


def topk_fast_draw(spec: PosteriorSpec, K: int, stream: RngStream) -> np.ndarray:
    """Draw the top-K eigenvalues from the rotated block posterior.

    The K x K block of the rotated posterior is inverse-Wishart with scale
    denom * diag(top-K center eigenvalues) and exponent-form degrees
    nu_post - 2p + 2K; each block eigenvalue is then multiplied by
    1 + E||coupling_k||^2 / lambda_k^2 to account for the bulk.
    """
    if not 1 <= K <= spec.p:
        raise InvalidConfigurationError(f"K must be in [1, p={spec.p}], got {K}")
    block_nu = spec.nu_post - 2 * spec.p + 2 * K
    if block_nu <= 2 * K:
        raise InvalidConfigurationError(
            f"invalid K-block degrees: nu_post - 2p + 2K = {block_nu} must exceed 2K = {2 * K}"
        )
    lam = spec.sigma_hat_eigen.eigenvalues
    topk = np.maximum(lam[:K], EIGENVALUE_FLOOR_REL * lam[0])
    block_scale = np.diag(spec.denom * topk)
    omega11 = inverse_wishart_draw(block_nu, block_scale, stream)
    block_eigs = np.sort(np.linalg.eigvalsh(omega11))[::-1]
    correction = 1.0 + expected_offblock_coupling(spec, K) / block_eigs**2
    return block_eigs * correction


def _full_draw(spec: PosteriorSpec, K: int, stream: RngStream):
    sigma = draw_sigma(spec, stream)
    eig = sym_eigen(sigma)
    return eig.eigenvalues[:K], eig.eigenvectors[:, :K]


def posterior_eigen_draws(
    spec: PosteriorSpec,
    K: int,
    N: int,
    seed: int,
    mode: str = MODE_FULL,
    workers: int = 1,
) -> PosteriorSamples:
    """Draw N independent top-K eigenstructure samples from the posterior.

    Draw j always uses RngStream(seed, j), so results are bit-identical for
    any worker count; workers only parallelize independent draws.
    """
    if mode not in (MODE_FULL, MODE_FAST):
        raise InvalidConfigurationError(f"unknown sampling mode {mode!r}")
    if not 1 <= K <= min(spec.n, spec.p):
        raise InvalidConfigurationError(
            f"K must be in [1, min(n, p) = {min(spec.n, spec.p)}], got {K}"
        )
    if N < 1:
        raise InvalidConfigurationError(f"need N >= 1 draws, got {N}")

    flags = []
    if mode == MODE_FAST and spec.p <= spec.n:
        warnings.warn(
            f"fast-topk block sampler targets p > n; got p={spec.p} <= n={spec.n} (extrapolated)",
            ExtrapolatedRegimeWarning,
            stacklevel=2,
        )
        flags.append("extrapolated")

    streams = [RngStream(seed, j) for j in range(N)]
    if mode == MODE_FAST:
        task = lambda st: topk_fast_draw(spec, K, st)
    else:
        task = lambda st: _full_draw(spec, K, st)

    # Draw-level threads carry the parallelism; BLAS stays single-threaded
    # (it loses badly on matrices this small).
    with single_threaded_blas():
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(task, streams))
        else:
            results = [task(st) for st in streams]

    if mode == MODE_FAST:
        values = np.array(results)
        fixed = spec.sigma_hat_eigen.eigenvectors[:, :K]
        vectors = np.broadcast_to(fixed, (N, spec.p, K))
        return PosteriorSamples(
            k=K, n_draws=N, eigenvalues=values, eigenvectors=vectors,
            mode=mode, eigenvectors_fixed=True, flags=tuple(flags),
        )
    values = np.array([r[0] for r in results])
    vectors = np.array([r[1] for r in results])
    return PosteriorSamples(
        k=K, n_draws=N, eigenvalues=values, eigenvectors=vectors, mode=mode,
    )


def with_adjusted_eigenvalues(
    samples: PosteriorSamples, values: np.ndarray, reordered: bool
) -> PosteriorSamples:
    """Copy of `samples` carrying corrected eigenvalue draws."""
    return replace(samples, eigenvalues=values, adjusted=True, reordered=reordered)
