"""Report serialization: canonical JSON and flat CSV with versioned schemas.

JSON is emitted with sorted keys and a fixed layout so that re-emitting a
parsed report reproduces the bytes exactly; no timestamps are written. CSV
uses a long (section/key/value) layout documented in the README.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import date

SCHEMA_VERSION = "1"


def _normalize(obj):
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, date):
        return obj.isoformat()
    if hasattr(obj, "item"):  # numpy scalar
        return obj.item()
    return obj


def canonical_json(payload: dict) -> str:
    return json.dumps(_normalize(payload), sort_keys=True, indent=2) + "\n"


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(payload))


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else _csv_cell(v) for v in row])


def _csv_cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, date):
        return value.isoformat()
    return value


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else _csv_cell(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Experiment reports


def experiment_report_dict(report) -> dict:
    cfg = report.config
    per_rep = []
    for rec in report.replications:
        if rec.error is not None:
            per_rep.append({"replication": rec.index, "error": rec.error})
            continue
        methods = {}
        for name, rows in rec.methods.items():
            methods[name] = [
                {
                    "k": i + 1,
                    "mean": row.mean,
                    "ci_low": row.ci_low,
                    "ci_high": row.ci_high,
                    "err": row.err,
                    "hit": row.hit,
                    "vec_err": row.vec_err,
                }
                for i, row in enumerate(rows)
            ]
        per_rep.append(
            {
                "replication": rec.index,
                "truth_top": list(rec.truth_top),
                "methods": methods,
                "map_k": rec.map_k,
                "spike_entropy": rec.spike_entropy,
                "c_hat": rec.c_hat,
                "calibrated_nu": rec.calibrated_nu,
                "bics": rec.bics,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "experiment",
        "config": {
            "setting": cfg.setting,
            "n": cfg.n,
            "p": cfg.p,
            "replications": cfg.replications,
            "draws": cfg.draws,
            "k": cfg.k,
            "seed": cfg.seed,
            "level": cfg.level,
            "methods": list(cfg.methods),
            "mode": cfg.mode,
            "pc_mode": cfg.pc_mode,
            "a_scale": cfg.a_scale,
            "k_max": cfg.k_max,
            "include_k0": cfg.include_k0,
            "spikes": list(cfg.spikes),
            "bulk": cfg.bulk,
            "spike_norms": list(cfg.spike_norms),
            "gamma_a": cfg.gamma_a,
            "gamma_b": cfg.gamma_b,
            "sigma_u_redrawn_per_replication": True,
        },
        "metrics": report.metrics,
        "spike": report.spike_metrics,
        "failures": report.failures,
        "per_replication": per_rep,
    }


EXPERIMENT_CSV_HEADER = ["section", "method", "k", "metric", "value"]


def experiment_report_rows(report) -> list:
    rows = []
    for method, values in sorted(report.metrics.items()):
        for metric in ("err_mean", "cp", "vec_err_mean", "ci_width_mean"):
            for i, value in enumerate(values[metric]):
                rows.append(["metrics", method, i + 1, metric, value])
    for metric, value in sorted(report.spike_metrics.items()):
        rows.append(["spike", "", "", metric, value])
    rows.append(["meta", "", "", "replications", report.config.replications])
    rows.append(["meta", "", "", "failures", len(report.failures)])
    rows.append(["meta", "", "", "seed", report.config.seed])
    return rows


# ---------------------------------------------------------------------------
# Rolling (absorption) reports


def rolling_report_dict(report) -> dict:
    windows = []
    for w in report.windows:
        windows.append(
            {
                "window": w.index,
                "start": _normalize(w.start),
                "end": _normalize(w.end),
                "n": w.n,
                "ar_mean": w.ar_mean,
                "ar_low": w.ar_low,
                "ar_high": w.ar_high,
                "ar_point": w.ar_point,
                "map_k": w.map_k,
                "entropy": w.entropy,
                "degraded": w.degraded,
                "flags": list(w.flags),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "rolling",
        "config": {
            "window": report.window,
            "step": report.step,
            "level": report.level,
            "seed": report.seed,
            "n_periods": report.n_periods,
            "n_assets": report.n_assets,
        },
        "windows": windows,
    }


ROLLING_CSV_HEADER = [
    "window", "start", "end", "n", "ar_mean", "ar_low", "ar_high",
    "ar_point", "map_k", "entropy", "degraded", "flags",
]


def rolling_report_rows(report) -> list:
    rows = []
    for w in report.windows:
        rows.append(
            [
                w.index, _normalize(w.start), _normalize(w.end), w.n,
                w.ar_mean, w.ar_low, w.ar_high, w.ar_point, w.map_k,
                w.entropy, int(w.degraded), ";".join(w.flags),
            ]
        )
    return rows


# ---------------------------------------------------------------------------
# One-shot analysis reports


def analyze_report_dict(
    *, n, p, method, mode, draws, seed, level, k, summaries,
    spike_support, spike_probs, spike_map, spike_entropy, c_hat,
    calibrated_nu=None, vector_dispersion=None, source=None, dropped_rows=None,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "analyze",
        "config": {
            "method": method,
            "mode": mode,
            "draws": draws,
            "seed": seed,
            "level": level,
            "k": k,
        },
        "data": {"n": n, "p": p, "source": source, "dropped_rows": dropped_rows},
        "eigenvalues": [
            {
                "k": s.k,
                "mean": s.mean,
                "ci_low": s.ci_low,
                "ci_high": s.ci_high,
                "n_draws": s.n_draws,
            }
            for s in summaries
        ],
        "vector_dispersion": vector_dispersion,
        "spike_posterior": {
            "support": list(spike_support),
            "probs": list(spike_probs),
            "map_k": spike_map,
            "entropy": spike_entropy,
        },
        "correction": {"c_hat": c_hat, "calibrated_nu": calibrated_nu},
    }


ANALYZE_CSV_HEADER = ["section", "k", "mean", "ci_low", "ci_high", "prob"]


def analyze_report_rows(payload: dict) -> list:
    rows = []
    for entry in payload["eigenvalues"]:
        rows.append(
            ["eigenvalue", entry["k"], entry["mean"], entry["ci_low"], entry["ci_high"], None]
        )
    sp = payload["spike_posterior"]
    for k, prob in zip(sp["support"], sp["probs"]):
        rows.append(["spike", k, None, None, None, prob])
    rows.append(["map_k", sp["map_k"], None, None, None, None])
    rows.append(["entropy", "", sp["entropy"], None, None, None])
    return rows
