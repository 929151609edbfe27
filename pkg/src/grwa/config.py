"""Run configuration: YAML file, optional preset, command-line overrides.

Schema (all sections optional)::

    preset: fig3a
    model:   {omega: 1.0, xi: 0.04, Omega: 1.0, lambda: 0.04, tls_sites: [0]}
    methods: [order1, rwa, numeric-cp2]
    grid:    {count: 200, lo: 0.0, hi: pi}      # or {values: [0.5, 1.0]}
    output:  {path: out.csv, format: csv}
    numeric: {chain_length: 41}
    jobs: 4
    rabi:    {lambda_lo: 0.0, lambda_hi: 1.5, lambda_count: 16, n_levels: 6}
    bands:   {max_N: 3}

Precedence: preset < file < command line.  Unknown keys are errors.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .model import ModelParams, ParameterError
from .presets import expand_preset
from .scattering import ALL_METHODS, default_k_grid

OUTPUT_DIR_ENV = "GRWA_OUTPUT_DIR"

_SCHEMA = {
    "preset": None,
    "description": None,
    "model": {"omega", "xi", "Omega", "lambda", "tls_sites"},
    "methods": None,
    "grid": {"count", "lo", "hi", "values"},
    "output": {"path", "format"},
    "numeric": {"chain_length"},
    "jobs": None,
    "rabi": {"lambda_lo", "lambda_hi", "lambda_count", "n_levels"},
    "bands": {"max_N"},
}

_DEFAULTS = {
    "model": {"omega": 1.0, "xi": 0.04, "Omega": 1.0, "lambda": 0.04, "tls_sites": [0]},
    "methods": ["order1"],
    "grid": {"count": 200, "lo": 0.0, "hi": "pi"},
    "output": {"format": "csv"},
    "numeric": {"chain_length": 41},
    "rabi": {"lambda_lo": 0.0, "lambda_hi": 1.5, "lambda_count": 16, "n_levels": 6},
    "bands": {"max_N": 3},
}

_PI_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*$")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one CLI run."""

    params: ModelParams
    methods: tuple[str, ...]
    k_grid: np.ndarray = field(repr=False)
    grid: dict
    output_path: Path | None
    output_format: str
    preset: str | None
    chain_length: int
    jobs: int
    rabi: dict
    bands: dict

    def resolved(self) -> dict:
        """Plain mapping suitable for metadata records."""
        return {
            "preset": self.preset,
            "model": self.params.as_dict(),
            "methods": list(self.methods),
            "grid": self.grid,
            "k_points": len(self.k_grid),
            "output": {"path": str(self.output_path) if self.output_path else None,
                       "format": self.output_format},
            "numeric": {"chain_length": self.chain_length},
            "jobs": self.jobs,
            "rabi": self.rabi,
            "bands": self.bands,
        }


def parse_angle(value) -> float:
    """Number, ``"pi"`` or ``"<factor> pi"`` as a float."""
    if isinstance(value, bool):
        raise ConfigError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            factor = m.group(1)
            return (float(factor) if factor not in ("", "+", "-") else float(factor + "1")) * math.pi
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"not an angle: {value!r}")


def _check_keys(data: dict, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    for key, value in data.items():
        if key not in _SCHEMA:
            raise ConfigError(f"{where}: unknown key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is not None and value is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: section {key!r} must be a mapping")
            unknown = set(value) - allowed
            if unknown:
                raise ConfigError(f"{where}: unknown key(s) in {key!r}: {', '.join(sorted(unknown))}")


def _merge(base: dict, top: dict) -> dict:
    out = dict(base)
    for key, value in top.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            merged = dict(out[key])
            merged.update(value)
            out[key] = merged
        else:
            out[key] = value
    return out


def load_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    data = {} if data is None else data
    _check_keys(data, str(path))
    return data


def _grid(section: dict) -> np.ndarray:
    if section.get("values") is not None:
        values = section["values"]
        if not isinstance(values, list):
            raise ConfigError("grid.values must be a list")
        ks = np.array([parse_angle(v) for v in values], dtype=float)
        bad = [k for k in ks if not (0.0 < k < math.pi)]
        if bad:
            raise ConfigError(f"grid values outside (0, pi): {bad}")
        return ks
    count = section.get("count")
    if isinstance(count, bool) or not isinstance(count, int) or count < 0:
        raise ConfigError(f"grid.count must be a non-negative integer, got {count!r}")
    lo, hi = parse_angle(section.get("lo", 0.0)), parse_angle(section.get("hi", "pi"))
    if not (0.0 <= lo < hi <= math.pi + 1e-15):
        raise ConfigError(f"grid bounds must satisfy 0 <= lo < hi <= pi, got {lo}, {hi}")
    return default_k_grid(count, lo, min(hi, math.pi))


def output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def resolve_config(config_path=None, preset: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Combine defaults, preset, file and overrides into a :class:`RunConfig`."""
    data = dict(_DEFAULTS)
    file_data = load_file(config_path) if config_path else {}
    overrides = overrides or {}
    _check_keys(overrides, "command line")
    name = overrides.get("preset") or preset or file_data.get("preset")
    if name:
        try:
            data = _merge(data, expand_preset(name))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    data = _merge(data, file_data)
    data = _merge(data, overrides)

    model = data["model"]
    try:
        params = ModelParams(omega=float(model["omega"]), xi=float(model["xi"]),
                             Omega=float(model["Omega"]), lam=float(model["lambda"]),
                             tls_sites=tuple(model.get("tls_sites", [0])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model section: {exc}") from exc

    methods = data["methods"]
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    if not isinstance(methods, list) or not methods:
        raise ConfigError("methods must be a non-empty list")
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise ConfigError(f"unknown method(s) {unknown}; choose from {', '.join(ALL_METHODS)}")
    methods = tuple(dict.fromkeys(methods))

    k_grid = _grid(data["grid"])
    fmt = data["output"].get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output format must be csv or json, got {fmt!r}")
    path = data["output"].get("path")
    out = None
    if path:
        out = Path(path)
        if not out.is_absolute():
            out = output_dir() / out

    chain = data["numeric"].get("chain_length", 41)
    if isinstance(chain, bool) or not isinstance(chain, int) or chain < 3 or chain % 2 == 0:
        raise ConfigError(f"numeric.chain_length must be an odd integer >= 3, got {chain!r}")
    jobs = data.get("jobs") or os.cpu_count() or 1
    if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
        raise ConfigError(f"jobs must be a positive integer, got {jobs!r}")
    rabi = dict(data["rabi"])
    bands = dict(data["bands"])
    try:
        rabi = {"lambda_lo": float(rabi["lambda_lo"]), "lambda_hi": float(rabi["lambda_hi"]),
                "lambda_count": int(rabi["lambda_count"]), "n_levels": int(rabi["n_levels"])}
        bands = {"max_N": int(bands["max_N"])}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid rabi/bands section: {exc}") from exc
    if rabi["lambda_count"] < 0 or rabi["n_levels"] < 1 or bands["max_N"] < 0:
        raise ConfigError("rabi.lambda_count >= 0, rabi.n_levels >= 1 and bands.max_N >= 0 required")

    grid = {k: v for k, v in data["grid"].items() if v is not None}
    return RunConfig(params=params, methods=methods, k_grid=k_grid, grid=grid, output_path=out,
                     output_format=fmt, preset=name, chain_length=chain, jobs=jobs,
                     rabi=rabi, bands=bands)


__all__ = ["ConfigError", "RunConfig", "resolve_config", "load_file", "parse_angle",
           "OUTPUT_DIR_ENV", "output_dir", "ParameterError"]
