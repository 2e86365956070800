"""Command-line interface.

Subcommands:
  simulate    run a replication study from a key=value config file
  analyze     one-shot dataset analysis: eigenvalue summaries + spike posterior
  absorption  rolling-window absorption-ratio pipeline on return/price panels
  validate    run the built-in numerical self-checks

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import report as rpt
from .absorption import RollingConfig, rolling_analysis
from .config import experiment_config_from_file
from .correction import CorrectionContext, calibrate_nu, hat_c, posthoc_adjust
from .errors import DataError, SpikedCovError
from .linalg import sample_covariance, sym_eigen
from .posterior import MODE_FAST, MODE_FULL, build_posterior, posterior_eigen_draws
from .returns import MODE_PRICES, MODE_RETURNS, load_matrix, load_returns
from .rng import substream_seed
from .simulate import run_experiment
from .spikes import SpikePrior, default_k_max, spike_posterior
from .summaries import mean_eigenvector, summarize_eigenvalues
from .validate import run_validation


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--draws", type=int, default=None, help="posterior draws N (default 500)")
    common.add_argument(
        "--method", choices=["iw", "iw-pc", "iw-phc"], default=None,
        help="inference pipeline (default iw-phc)",
    )
    common.add_argument("--level", type=float, default=None, help="credible level (default 0.95)")
    common.add_argument("--out", choices=["json", "csv"], default="json", help="report format")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    common.add_argument("--out-dir", default=".", help="directory for report files")
    common.add_argument("--prefix", default=None, help="basename for report files")
    common.add_argument(
        "--mode", choices=[MODE_FULL, MODE_FAST], default=None,
        help="posterior sampling mode",
    )
    common.add_argument(
        "--no-plot", action="store_true", help="skip the figure next to the report"
    )

    parser = argparse.ArgumentParser(
        prog="spikedcov",
        description="Bayesian spiked-covariance inference with eigenvalue bias correction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", parents=[common], help="run a replication study")
    p_sim.add_argument("config", help="key=value experiment configuration file")

    p_ana = sub.add_parser("analyze", parents=[common], help="analyze one dataset")
    p_ana.add_argument("data", help="input CSV")
    p_ana.add_argument(
        "--data-kind", choices=["matrix", "returns", "prices"], default="matrix",
        help="input layout (default: plain numeric matrix)",
    )
    p_ana.add_argument("--center", action="store_true", help="subtract column means")
    p_ana.add_argument("--k", type=int, default=None, help="spike count (default: posterior MAP)")
    p_ana.add_argument("--k-max", type=int, default=None, help="spike-count support upper end")
    p_ana.add_argument("--a-scale", type=float, default=0.1, help="prior scale A = a*I")

    p_abs = sub.add_parser("absorption", parents=[common], help="rolling absorption ratio")
    p_abs.add_argument("data", help="input CSV of prices or returns")
    p_abs.add_argument(
        "--data-kind", choices=["returns", "prices"], default="prices",
        help="input layout (default prices; log returns are computed)",
    )
    p_abs.add_argument("--center", action="store_true", help="subtract column means per window source")
    p_abs.add_argument("--window", type=int, default=12, help="window length in periods")
    p_abs.add_argument("--step", type=int, default=1, help="window step in periods")
    p_abs.add_argument("--k-max", type=int, default=None, help="spike-count support upper end")
    p_abs.add_argument("--a-scale", type=float, default=0.1, help="prior scale A = a*I")
    p_abs.add_argument(
        "--no-correct", action="store_true", help="skip the post-hoc eigenvalue correction"
    )
    p_abs.add_argument(
        "--include-k0", action="store_true",
        help="admit the no-spike hypothesis in the spike-count support",
    )

    sub.add_parser("validate", parents=[common], help="run numerical self-checks")
    return parser


def _outputs(args, default_prefix: str):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = args.prefix or default_prefix
    return out_dir / f"{prefix}.{args.out}", out_dir / f"{prefix}.png"


def _emit(args, payload: dict, csv_header, csv_rows, figure_fn, default_prefix: str) -> None:
    report_path, figure_path = _outputs(args, default_prefix)
    if args.out == "json":
        rpt.write_json(report_path, payload)
    else:
        rpt.write_csv(report_path, csv_header, csv_rows)
    print(f"wrote {report_path}")
    if not args.no_plot:
        figure_fn(payload, figure_path)
        print(f"wrote {figure_path}")


def _cmd_simulate(args) -> int:
    overrides = {
        "seed": args.seed,
        "draws": args.draws,
        "level": args.level,
        "workers": args.threads,
        "mode": args.mode,
    }
    if args.method is not None:
        overrides["methods"] = (args.method,)
    cfg = experiment_config_from_file(args.config, overrides)
    report = run_experiment(cfg)
    payload = rpt.experiment_report_dict(report)
    _emit(
        args, payload, rpt.EXPERIMENT_CSV_HEADER, rpt.experiment_report_rows(report),
        _lazy_plots().save_experiment_figure, "experiment",
    )
    spike = report.spike_metrics
    print(f"replications={cfg.replications} failures={len(report.failures)} "
          f"spike_acc={spike['acc']} spike_avg={spike['avg']}")
    return 0


def _load_for(args):
    if args.data_kind == "matrix":
        loaded = load_matrix(args.data, center=args.center)
    else:
        mode = MODE_PRICES if args.data_kind == "prices" else MODE_RETURNS
        loaded = load_returns(args.data, mode=mode, center=args.center)
    return loaded


def _cmd_analyze(args) -> int:
    seed = args.seed if args.seed is not None else 0
    draws = args.draws if args.draws is not None else 500
    level = args.level if args.level is not None else 0.95
    method = args.method or "iw-phc"
    mode = args.mode or MODE_FULL

    loaded = _load_for(args)
    x = loaded.x
    n, p = x.shape
    s = sample_covariance(x)
    s_eig = sym_eigen(s)

    k_max = args.k_max if args.k_max is not None else default_k_max(n, p, s_eig.eigenvalues)
    k_max = min(k_max, min(n, p) - 1)
    post = spike_posterior(s_eig.eigenvalues, n, p, SpikePrior(k_min=1, k_max=k_max))
    K = args.k if args.k is not None else post.map_k

    a = args.a_scale * np.eye(p)
    nu0 = 2.0 * p + 2.0
    ctx = CorrectionContext(
        s_eigs=s_eig.eigenvalues, a=a, n=n, p=p, K=K,
        splus_eigs=sym_eigen(s + a / n).eigenvalues,
        c_hat=hat_c(s_eig.eigenvalues, n, p, K),
    )

    calibrated = None
    if method == "iw-pc":
        summaries = []
        dispersions = []
        calibrated = []
        for k in range(1, K + 1):
            nu_k = calibrate_nu(ctx, k)
            calibrated.append(nu_k)
            spec_k = build_posterior(s, n, a, nu_k)
            samples_k = posterior_eigen_draws(
                spec_k, K, draws, substream_seed(seed, 2, k), mode=mode
            )
            summaries.append(summarize_eigenvalues(samples_k, level)[k - 1])
            if mode == MODE_FULL:
                dispersions.append(mean_eigenvector(samples_k, k).dispersion)
        vector_dispersion = dispersions if mode == MODE_FULL else None
    else:
        spec = build_posterior(s, n, a, nu0)
        samples = posterior_eigen_draws(spec, K, draws, substream_seed(seed, 1), mode=mode)
        if method == "iw-phc":
            samples = posthoc_adjust(samples, ctx, nu0)
        summaries = summarize_eigenvalues(samples, level)
        vector_dispersion = (
            [mean_eigenvector(samples, k).dispersion for k in range(1, K + 1)]
            if mode == MODE_FULL
            else None
        )

    payload = rpt.analyze_report_dict(
        n=n, p=p, method=method, mode=mode, draws=draws, seed=seed, level=level, k=K,
        summaries=summaries, spike_support=post.support, spike_probs=post.probs,
        spike_map=post.map_k, spike_entropy=post.entropy, c_hat=ctx.c_hat,
        calibrated_nu=calibrated, vector_dispersion=vector_dispersion,
        source=str(args.data), dropped_rows=getattr(loaded, "dropped_rows", 0),
    )
    _emit(
        args, payload, rpt.ANALYZE_CSV_HEADER, rpt.analyze_report_rows(payload),
        _lazy_plots().save_analyze_figure, "analysis",
    )
    print(f"n={n} p={p} map_k={post.map_k} method={method}")
    return 0


def _cmd_absorption(args) -> int:
    seed = args.seed if args.seed is not None else 0
    draws = args.draws if args.draws is not None else 500
    level = args.level if args.level is not None else 0.95
    mode = args.mode or MODE_FAST
    threads = args.threads if args.threads is not None else 1

    mode_load = MODE_PRICES if args.data_kind == "prices" else MODE_RETURNS
    loaded = load_returns(args.data, mode=mode_load, center=args.center)
    cfg = RollingConfig(
        draws=draws, level=level, seed=seed, a_scale=args.a_scale, mode=mode,
        k_max=args.k_max, workers=threads, correct=not args.no_correct,
        include_k0=args.include_k0,
    )
    report = rolling_analysis(loaded.x, args.window, args.step, cfg, labels=loaded.dates)
    payload = rpt.rolling_report_dict(report)
    _emit(
        args, payload, rpt.ROLLING_CSV_HEADER, rpt.rolling_report_rows(report),
        _lazy_plots().save_rolling_figure, "absorption",
    )
    degraded = sum(1 for w in report.windows if w.degraded)
    print(f"windows={len(report.windows)} degraded={degraded} dropped_rows={loaded.dropped_rows}")
    return 0


def _cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else 20240601
    results = run_validation(seed)
    all_ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        all_ok = all_ok and res.passed
        print(f"{status} {res.name}: {res.detail}")
    return 0 if all_ok else 4


def _lazy_plots():
    # matplotlib import is deferred so report-only runs avoid the cost
    from . import plots

    return plots


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "absorption": _cmd_absorption,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except SpikedCovError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
