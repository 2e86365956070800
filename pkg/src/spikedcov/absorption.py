"""Absorption ratio and the rolling-window systemic-risk pipeline.

Each window selects its spike count by posterior MAP, draws bias-corrected
posterior eigenvalues, and converts every draw into an absorption ratio; the
window reports the posterior mean and an equal-tailed credible band together
with the spike-count entropy. Windows are independent computations, so they
can run on any number of workers without changing the output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._blas import single_threaded_blas
from .correction import CorrectionContext, hat_c, posthoc_adjust
from .errors import InvalidConfigurationError, NumericalError, SpikedCovError
from .linalg import sample_covariance, sym_eigen
from .posterior import MODE_FAST, MODE_FULL, build_posterior, posterior_eigen_draws
from .rng import substream_seed
from .spikes import SpikePrior, default_k_max, spike_posterior
from .summaries import QUANTILE_METHOD


def absorption_ratio(eigenvalues, K: int) -> float:
    """Fraction of total variance carried by the top K eigenvalues.

    Roundoff-scale negative eigenvalues (inevitable for rank-deficient
    sample covariances) are clipped to zero; anything more negative is an
    input error.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise InvalidConfigurationError("eigenvalues must be a nonempty vector")
    floor = -1e-10 * max(float(np.max(np.abs(lam))), 1.0)
    if np.any(lam < floor):
        raise InvalidConfigurationError("eigenvalues must be nonnegative")
    lam = np.clip(lam, 0.0, None)
    if not 1 <= K <= lam.size:
        raise InvalidConfigurationError(f"K must be in [1, p={lam.size}], got {K}")
    total = float(np.sum(lam))
    if total <= 0:
        raise NumericalError("zero total variance: absorption ratio undefined")
    return float(np.sum(lam[:K]) / total)


@dataclass(frozen=True)
class RollingConfig:
    """Inference settings applied to every window."""

    draws: int = 500
    level: float = 0.95
    seed: int = 0
    a_scale: float = 0.1
    mode: str = MODE_FAST
    k_max: Optional[int] = None
    include_k0: bool = False
    workers: int = 1
    correct: bool = True


@dataclass
class WindowResult:
    index: int
    start: object
    end: object
    n: int
    ar_mean: Optional[float] = None
    ar_low: Optional[float] = None
    ar_high: Optional[float] = None
    ar_point: Optional[float] = None
    map_k: Optional[int] = None
    entropy: Optional[float] = None
    degraded: bool = False
    flags: list = field(default_factory=list)


@dataclass
class RollingReport:
    window: int
    step: int
    level: float
    seed: int
    windows: list
    n_periods: int
    n_assets: int


def _window_count(t: int, window: int, step: int) -> int:
    return 0 if t < window else (t - window) // step + 1


def _analyze_window(x: np.ndarray, cfg: RollingConfig, index: int, labels) -> WindowResult:
    res = WindowResult(index=index, start=labels[0], end=labels[-1], n=x.shape[0])
    n, p = x.shape
    s = sample_covariance(x)
    s_eig = sym_eigen(s)

    k_max = cfg.k_max if cfg.k_max is not None else default_k_max(n, p, s_eig.eigenvalues)
    k_max = min(k_max, min(n, p) - 1)
    try:
        prior = SpikePrior(k_min=0 if cfg.include_k0 else 1, k_max=k_max)
        post = spike_posterior(s_eig.eigenvalues, n, p, prior)
    except SpikedCovError as exc:
        res.degraded = True
        res.flags.append(f"spike-posterior-failed: {type(exc).__name__}")
        return res
    res.map_k = post.map_k
    res.entropy = post.entropy
    K = max(post.map_k, 1)

    a = cfg.a_scale * np.eye(p)
    nu0 = 2.0 * p + 2.0
    try:
        spec = build_posterior(s, n, a, nu0)
        samples = posterior_eigen_draws(
            spec, K, cfg.draws, substream_seed(cfg.seed, index), mode=cfg.mode
        )
    except SpikedCovError as exc:
        res.degraded = True
        res.flags.append(f"posterior-failed: {type(exc).__name__}")
        return res

    if cfg.correct:
        try:
            ctx = CorrectionContext(
                s_eigs=s_eig.eigenvalues, a=a, n=n, p=p, K=K,
                splus_eigs=sym_eigen(s + a / n).eigenvalues,
                c_hat=hat_c(s_eig.eigenvalues, n, p, K),
            )
            samples = posthoc_adjust(samples, ctx, nu0)
        except SpikedCovError as exc:
            res.degraded = True
            res.flags.append(f"correction-infeasible: {type(exc).__name__} (raw draws used)")

    # Per-draw absorption ratio: corrected spike draws over corrected spikes
    # plus the sample bulk, which the corrections do not touch.
    bulk = float(np.sum(s_eig.eigenvalues[K:]))
    spike_sums = np.sum(samples.eigenvalues, axis=1)
    totals = spike_sums + bulk
    if np.any(totals <= 0):
        res.degraded = True
        res.flags.append("zero-variance-draws")
        return res
    ars = spike_sums / totals
    alpha = (1.0 - cfg.level) / 2.0
    res.ar_mean = float(np.mean(ars))
    res.ar_low = float(np.quantile(ars, alpha, method=QUANTILE_METHOD))
    res.ar_high = float(np.quantile(ars, 1.0 - alpha, method=QUANTILE_METHOD))
    res.ar_point = absorption_ratio(s_eig.eigenvalues, K)
    return res


def rolling_analysis(
    x: np.ndarray,
    window: int,
    step: int = 1,
    cfg: RollingConfig = RollingConfig(),
    labels=None,
) -> RollingReport:
    """Slide a window over the return rows and analyze each one.

    `labels` (for example dates) annotate window endpoints; indices are used
    when absent. p > n inside a window is expected and supported.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InvalidConfigurationError("returns must be a 2-D matrix")
    t, p = x.shape
    if window < 3:
        raise InvalidConfigurationError(f"window must be at least 3 periods, got {window}")
    if step < 1:
        raise InvalidConfigurationError("step must be positive")
    if t < window:
        raise InvalidConfigurationError(f"series has {t} periods, shorter than window {window}")
    if labels is None:
        labels = list(range(t))
    if len(labels) != t:
        raise InvalidConfigurationError("labels must match the number of periods")

    count = _window_count(t, window, step)
    starts = [i * step for i in range(count)]

    def task(i: int) -> WindowResult:
        lo = starts[i]
        hi = lo + window
        try:
            return _analyze_window(x[lo:hi], cfg, i, labels[lo:hi])
        except SpikedCovError as exc:
            res = WindowResult(index=i, start=labels[lo], end=labels[hi - 1], n=window)
            res.degraded = True
            res.flags.append(f"window-failed: {type(exc).__name__}: {exc}")
            return res

    with single_threaded_blas():
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                windows = list(pool.map(task, range(count)))
        else:
            windows = [task(i) for i in range(count)]

    return RollingReport(
        window=window, step=step, level=cfg.level, seed=cfg.seed,
        windows=windows, n_periods=t, n_assets=p,
    )
