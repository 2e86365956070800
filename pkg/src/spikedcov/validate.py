"""Self-checks: sampler moments, block-coupling expectation, perturbation
scaling, and the calibration fixed point.

These are the runnable counterparts of the package's mathematical contracts;
the `validate` CLI subcommand executes them and reports one line per check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._blas import single_threaded_blas
from .correction import CorrectionContext, calibrate_nu, gamma1_tilde, gamma2, hat_c
from .linalg import sym_eigen
from .perturbation import block_decompose, expansion_approx
from .posterior import build_posterior, draw_sigma, expected_offblock_coupling
from .rng import RngStream, inverse_wishart_draw, substream_seed, wishart_draw


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_wishart_mean(seed: int, n_draws: int = 20000) -> CheckResult:
    p, df = 3, 10.0
    scale = np.eye(p)
    total = np.zeros((p, p))
    for j in range(n_draws):
        total += wishart_draw(df, scale, RngStream(seed, j))
    mean = total / n_draws
    target = df * scale
    rel = np.linalg.norm(mean - target) / np.linalg.norm(target)
    return CheckResult(
        name="wishart-moment",
        passed=rel < 0.03,
        detail=f"Frobenius relative error {rel:.4f} over {n_draws} draws (tol 0.03)",
    )


def check_inverse_wishart_mean(seed: int, n_draws: int = 20000) -> CheckResult:
    p = 3
    nu = 2.0 * p + 4.0
    scale = np.eye(p)
    total = np.zeros((p, p))
    for j in range(n_draws):
        total += inverse_wishart_draw(nu, scale, RngStream(seed, j))
    mean = total / n_draws
    target = scale / (nu - 2 * p - 2)
    rel = np.linalg.norm(mean - target) / np.linalg.norm(target)
    return CheckResult(
        name="inverse-wishart-moment",
        passed=rel < 0.05,
        detail=f"Frobenius relative error {rel:.4f} over {n_draws} draws (tol 0.05)",
    )


def offblock_coupling_mc(spec, K: int, n_draws: int, seed: int) -> np.ndarray:
    """Monte Carlo averages of the squared off-block column norms.

    Rotates every full posterior draw into the center's eigenbasis and
    accumulates ||column k of the bulk-by-spike block||^2.
    """
    gamma = spec.sigma_hat_eigen.eigenvectors
    total = np.zeros(K)
    for j in range(n_draws):
        sigma = draw_sigma(spec, RngStream(seed, j))
        omega = gamma.T @ sigma @ gamma
        total += np.sum(omega[K:, :K] ** 2, axis=0)
    return total / n_draws


def check_offblock_expectation(seed: int, n_draws: int = 3000) -> CheckResult:
    p, n, K = 30, 60, 2
    data_rng = RngStream(substream_seed(seed, 0)).generator()
    variances = np.concatenate([[80.0, 30.0], np.ones(p - 2)])
    x = data_rng.standard_normal((n, p)) * np.sqrt(variances)
    s = x.T @ x / n
    spec = build_posterior((s + s.T) / 2, n, 0.1 * np.eye(p), 2.0 * p + 2.0)
    mc = offblock_coupling_mc(spec, K, n_draws, substream_seed(seed, 1))
    closed = expected_offblock_coupling(spec, K)
    rel = float(np.max(np.abs(mc - closed) / closed))
    return CheckResult(
        name="offblock-expectation",
        passed=rel < 0.10,
        detail=f"max relative gap MC vs closed form {rel:.4f} over {n_draws} draws (tol 0.10)",
    )


def perturbation_residual(p: int, K: int, offblock_scale: float, rng) -> float:
    """|multiplicative approximation - exact eigenvalue| for a random instance.

    `offblock_scale` sets the size of everything outside the leading block
    (both the coupling block and the bulk), so halving it probes the cubic
    decay of the residual.
    """
    spikes = np.array([100.0, 50.0])[:K]
    omega11 = np.diag(spikes)
    bulk = np.diag(rng.uniform(0.25 * offblock_scale, 0.75 * offblock_scale, size=p - K))
    omega21 = rng.standard_normal((p - K, K))
    omega21 *= offblock_scale / np.linalg.norm(omega21, 2)
    sigma_rot = np.block([[omega11, omega21.T], [omega21, bulk]])
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    sigma = q @ sigma_rot @ q.T
    sigma = (sigma + sigma.T) / 2
    bd = block_decompose(sigma, q, K)
    exact = sym_eigen(sigma).eigenvalues
    res = expansion_approx(bd, 1)
    return abs(res.approx - exact[0])


def check_perturbation_scaling(seed: int, instances: int = 10) -> CheckResult:
    rng = RngStream(seed).generator()
    worst = np.inf
    for _ in range(instances):
        state = rng.integers(0, 2**32)
        r_full = perturbation_residual(20, 2, 2.0, np.random.default_rng(state))
        r_half = perturbation_residual(20, 2, 1.0, np.random.default_rng(state))
        worst = min(worst, r_full / max(r_half, 1e-300))
    return CheckResult(
        name="perturbation-cubic-scaling",
        passed=worst >= 4.0,
        detail=f"worst residual shrink factor {worst:.2f} over {instances} instances (need >= 4)",
    )


def check_calibration_fixed_point(seed: int) -> CheckResult:
    rng = RngStream(seed).generator()
    n, p, K = 100, 200, 3
    s_eigs = np.concatenate([[160.0, 105.0, 55.0], np.abs(rng.normal(1.0, 0.1, p - K))])
    s_eigs = np.sort(s_eigs)[::-1]
    a = 0.1 * np.eye(p)
    splus = s_eigs + 0.1 / n
    ctx = CorrectionContext(
        s_eigs=s_eigs, a=a, n=n, p=p, K=K, splus_eigs=splus,
        c_hat=hat_c(s_eigs, n, p, K),
    )
    worst = 0.0
    for k in range(1, K + 1):
        nu = calibrate_nu(ctx, k)
        g1 = gamma1_tilde(ctx, nu, k)
        g2 = gamma2(s_eigs[k - 1], ctx.c_hat, n, p)
        worst = max(worst, abs(g1 - g2) / abs(g2))
    return CheckResult(
        name="calibration-fixed-point",
        passed=worst < 1e-6,
        detail=f"max |gamma1_tilde(nu*) - gamma2| / gamma2 = {worst:.2e} (tol 1e-6)",
    )


def run_validation(seed: int = 20240601) -> list:
    with single_threaded_blas():
        return [
            check_wishart_mean(substream_seed(seed, 10)),
            check_inverse_wishart_mean(substream_seed(seed, 11)),
            check_offblock_expectation(substream_seed(seed, 12)),
            check_perturbation_scaling(substream_seed(seed, 13)),
            check_calibration_fixed_point(substream_seed(seed, 14)),
        ]
