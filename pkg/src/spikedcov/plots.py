"""Figure rendering for report payloads.

Figures are written next to the delimited output with the same basename.
All plots consume the already-serialized report dictionaries so that what is
drawn is exactly what was written to disk.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVEFIG_KW = {"dpi": 150, "metadata": {"Software": "spikedcov"}}


def save_experiment_figure(payload: dict, path) -> None:
    """Relative-error means and coverage per method and spike index."""
    metrics = payload["metrics"]
    methods = sorted(metrics)
    n_k = payload["config"]["k"]
    ks = np.arange(1, n_k + 1)

    fig, (ax_err, ax_cp) = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.8 / max(len(methods), 1)
    for i, method in enumerate(methods):
        errs = [v if v is not None else np.nan for v in metrics[method]["err_mean"]]
        ax_err.bar(ks + (i - (len(methods) - 1) / 2) * width, errs, width=width, label=method)
    ax_err.set_xlabel("spike index")
    ax_err.set_ylabel("mean relative error")
    ax_err.set_xticks(ks)
    ax_err.legend(fontsize=8)

    for method in methods:
        cps = metrics[method]["cp"]
        if all(v is None for v in cps):
            continue
        ax_cp.plot(ks, [v if v is not None else np.nan for v in cps], marker="o", label=method)
    ax_cp.axhline(payload["config"]["level"], color="gray", linestyle=":")
    ax_cp.set_xlabel("spike index")
    ax_cp.set_ylabel("coverage")
    ax_cp.set_ylim(0, 1.05)
    ax_cp.set_xticks(ks)
    ax_cp.legend(fontsize=8)

    fig.suptitle(f"setting {payload['config']['setting']}: n={payload['config']['n']}, "
                 f"p={payload['config']['p']}, {payload['config']['replications']} replications")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def save_rolling_figure(payload: dict, path) -> None:
    """Absorption ratio with credible band; spike count and entropy below."""
    windows = [w for w in payload["windows"] if not w["degraded"]]
    fig, (ax_ar, ax_k) = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    if windows:
        xs = np.array([w["window"] for w in windows])
        ar = np.array([w["ar_mean"] for w in windows], dtype=float)
        lo = np.array([w["ar_low"] for w in windows], dtype=float)
        hi = np.array([w["ar_high"] for w in windows], dtype=float)
        ax_ar.plot(xs, ar, color="tab:blue", label="posterior mean")
        ax_ar.fill_between(xs, lo, hi, color="tab:blue", alpha=0.25, label="credible band")
        ax_ar.plot(
            xs,
            [w["ar_point"] for w in windows],
            color="tab:gray",
            linestyle="--",
            linewidth=0.8,
            label="sample point",
        )
        ax_ar.legend(fontsize=8)

        ax_k.step(xs, [w["map_k"] for w in windows], where="mid", color="tab:orange", label="MAP spikes")
        ax_ent = ax_k.twinx()
        ax_ent.plot(xs, [w["entropy"] for w in windows], color="tab:green", linewidth=0.9)
        ax_ent.set_ylabel("entropy (nats)")
        ax_k.legend(fontsize=8, loc="upper left")
    ax_ar.set_ylabel("absorption ratio")
    ax_k.set_ylabel("spike count")
    ax_k.set_xlabel("window")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def save_analyze_figure(payload: dict, path) -> None:
    """Eigenvalue credible intervals beside the spike-count posterior."""
    fig, (ax_eig, ax_spike) = plt.subplots(1, 2, figsize=(10, 4))
    entries = payload["eigenvalues"]
    ks = [e["k"] for e in entries]
    means = [e["mean"] for e in entries]
    lows = [e["mean"] - e["ci_low"] for e in entries]
    highs = [e["ci_high"] - e["mean"] for e in entries]
    ax_eig.errorbar(ks, means, yerr=[lows, highs], fmt="o", capsize=4)
    ax_eig.set_xlabel("spike index")
    ax_eig.set_ylabel("eigenvalue")
    ax_eig.set_xticks(ks)

    sp = payload["spike_posterior"]
    ax_spike.bar(sp["support"], sp["probs"], color="tab:purple")
    ax_spike.axvline(sp["map_k"], color="black", linestyle=":", linewidth=0.9)
    ax_spike.set_xlabel("spike count")
    ax_spike.set_ylabel("posterior probability")

    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
