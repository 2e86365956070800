"""Flat key=value experiment configuration files.

Lines are `key = value`; blank lines and `#` comments are ignored. List
values are comma-separated. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from .errors import DataError
from .simulate import ALL_METHODS, ExperimentConfig

_INT_KEYS = {"setting", "n", "p", "replications", "draws", "k", "seed", "k_max", "workers"}
_FLOAT_KEYS = {"level", "a_scale", "bulk", "gamma_a", "gamma_b"}
_BOOL_KEYS = {"include_k0"}
_LIST_KEYS = {"spikes", "spike_norms", "methods"}
_STR_KEYS = {"mode", "pc_mode"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _LIST_KEYS | _STR_KEYS


def parse_kv_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key in values:
                raise DataError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value.strip()
    return values


def _parse_bool(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise DataError(f"{key}: expected a boolean, got {value!r}")


def experiment_config_from_mapping(values: dict, overrides: dict | None = None) -> ExperimentConfig:
    merged = dict(values)
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val

    unknown = set(merged) - _ALL_KEYS
    if unknown:
        raise DataError(f"unknown configuration keys: {sorted(unknown)}")

    kwargs = {}
    for key, raw in merged.items():
        if not isinstance(raw, str):
            kwargs[key] = raw
            continue
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _BOOL_KEYS:
                kwargs[key] = _parse_bool(raw, key)
            elif key == "methods":
                methods = tuple(m.strip() for m in raw.split(",") if m.strip())
                bad = set(methods) - set(ALL_METHODS)
                if bad:
                    raise DataError(f"methods: unknown entries {sorted(bad)}")
                kwargs[key] = methods
            elif key in _LIST_KEYS:
                kwargs[key] = tuple(float(v) for v in raw.split(",") if v.strip())
            else:
                kwargs[key] = raw
        except ValueError as exc:
            raise DataError(f"{key}: cannot parse {raw!r}") from exc

    for required in ("setting", "n", "p", "replications"):
        if required not in kwargs:
            raise DataError(f"missing required configuration key {required!r}")
    return ExperimentConfig(**kwargs)


def experiment_config_from_file(path, overrides: dict | None = None) -> ExperimentConfig:
    return experiment_config_from_mapping(parse_kv_file(path), overrides)
