"""Config files: flat JSON objects with an optional `preset` key plus overrides.

A run config either spells out ModelParams directly or names a preset and
picks one truncation with `k` (N = 2^k) or a power-of-two `N`. A sweep config
names a preset and overrides SweepConfig fields.
"""

import json
from pathlib import Path
from typing import Any

from fnlw.experiments import PRESETS, SweepConfig, preset
from fnlw.params import ModelParams

# Keys a preset-based run config may set on the underlying sweep.
_SWEEP_KEYS = {"alpha", "beta", "s", "t_s", "snapshots", "seed", "a", "nonlinear", "m_offset", "m_max_exponent"}
# Keys applied to the resolved run afterwards.
_RUN_KEYS = {"M", "tau", "kind"}


class ConfigError(ValueError):
    """A config file could not be read or does not have the expected shape."""


def load_json(path: str | Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return data


def _exponent(data: dict[str, Any]) -> int:
    if "k" in data:
        return int(data["k"])
    if "N" in data:
        N = int(data["N"])
        if N < 1 or N & (N - 1):
            raise ConfigError("N must be a power of two when a preset is used (or give k)")
        return N.bit_length() - 1
    raise ConfigError("a preset run config needs `k` or `N`")


def resolve_run_config(data: dict[str, Any]) -> ModelParams:
    """Turn a run config object into validated ModelParams."""
    data = dict(data)
    name = data.pop("preset", None)
    if name is None:
        return ModelParams.model_validate(data)

    k = _exponent(data)
    unknown = set(data) - _SWEEP_KEYS - _RUN_KEYS - {"k", "N"}
    if unknown:
        raise ConfigError(f"unknown run config keys: {', '.join(sorted(unknown))}")

    sweep_overrides = {key: data[key] for key in _SWEEP_KEYS if key in data}
    kinds = PRESETS[name]["kinds"] if name in PRESETS else ()
    kind = data.get("kind", kinds[0] if kinds else "truncated")
    config = preset(name, k_range=(k,), kinds=(kind,), **sweep_overrides)
    params = config.params_for(k, kind)

    run_overrides = {key: data[key] for key in ("M", "tau") if key in data}
    if run_overrides:
        params = ModelParams.model_validate({**params.model_dump(), **run_overrides})
    return params


def resolve_sweep_config(data: dict[str, Any]) -> SweepConfig:
    data = dict(data)
    name = data.pop("preset", None) or data.pop("regime", None)
    if name is None:
        raise ConfigError("a sweep config needs a `preset` key")
    return preset(name, **data)
