"""JSON scenario configs: strict parsing, defaults, canonical digests.

The schema groups keys as params/grid/initial/time/output/scheme/weight.
Unknown keys are rejected with their full key path, duplicate keys are a
syntax error, and every range violation names the offending key.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

from .model import (
    ConstantInit,
    CosineBumpInit,
    FileInit,
    GaussianInit,
    Grid,
    InitialField,
    InitialSpec,
    ModelParams,
    ScenarioConfig,
)

__all__ = ["ConfigError", "parse_config", "config_to_dict", "config_digest"]


class ConfigError(ValueError):
    pass


def _no_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _require_table(raw: Any, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must be an object")
    return raw


def _reject_unknown(table: dict, allowed: set[str], path: str) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")


def _number(table: dict, key: str, path: str, default=None) -> float:
    if key not in table:
        if default is not None:
            return default
        raise ConfigError(f"missing key {path}.{key}")
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number")
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key} must be finite")
    return float(value)


def _parse_field(raw: Any, path: str, config_dir: Path) -> InitialField:
    table = _require_table(raw, path)
    kind = table.get("kind")
    if kind == "constant":
        _reject_unknown(table, {"kind", "value"}, path)
        return ConstantInit(value=_number(table, "value", path))
    if kind == "cosine_bump":
        _reject_unknown(table, {"kind", "base", "amplitude", "modes"}, path)
        modes = table.get("modes", [])
        if not isinstance(modes, list) or not all(
            isinstance(k, int) and not isinstance(k, bool) for k in modes
        ):
            raise ConfigError(f"{path}.modes must be a list of integers")
        return CosineBumpInit(
            base=_number(table, "base", path),
            amplitude=_number(table, "amplitude", path),
            modes=tuple(modes),
        )
    if kind == "gaussian":
        _reject_unknown(
            table, {"kind", "center", "width", "amplitude", "floor"}, path
        )
        center = table.get("center")
        if not isinstance(center, list) or not all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in center
        ):
            raise ConfigError(f"{path}.center must be a list of numbers")
        return GaussianInit(
            center=tuple(float(c) for c in center),
            width=_number(table, "width", path),
            amplitude=_number(table, "amplitude", path),
            floor=_number(table, "floor", path, default=0.0),
        )
    if kind == "file":
        _reject_unknown(table, {"kind", "path"}, path)
        raw_path = table.get("path")
        if not isinstance(raw_path, str):
            raise ConfigError(f"{path}.path must be a string")
        resolved = Path(raw_path)
        if not resolved.is_absolute():
            resolved = config_dir / resolved
        return FileInit(path=str(resolved))
    raise ConfigError(
        f"{path}.kind must be one of constant, cosine_bump, gaussian, file"
    )


def parse_config(path) -> ScenarioConfig:
    """Load and fully resolve a scenario config, applying defaults.

    Defaults: scheme central, cfl_safety 0.5, dt_max t_end,
    output_every t_end/200, blowup_linf 1e8.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        root = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc

    root = _require_table(root, "config")
    _reject_unknown(
        root, {"params", "grid", "initial", "time", "output", "scheme", "weight"}, ""
    )
    for required in ("params", "grid", "initial", "time"):
        if required not in root:
            raise ConfigError(f"missing section {required}")

    p = _require_table(root["params"], "params")
    _reject_unknown(p, {"chi1", "chi2", "alpha", "beta"}, "params")
    try:
        params = ModelParams(
            chi1=_number(p, "chi1", "params"),
            chi2=_number(p, "chi2", "params"),
            alpha=_number(p, "alpha", "params"),
            beta=_number(p, "beta", "params"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    g = _require_table(root["grid"], "grid")
    _reject_unknown(g, {"dim", "lengths", "cells"}, "grid")
    lengths = g.get("lengths")
    cells = g.get("cells")
    if not isinstance(lengths, list) or not isinstance(cells, list):
        raise ConfigError("grid.lengths and grid.cells must be lists")
    try:
        grid = Grid(lengths=tuple(lengths), cells=tuple(cells))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc
    if "dim" in g and g["dim"] != grid.dim:
        raise ConfigError(
            f"grid.dim = {g['dim']} contradicts {grid.dim}-axis lengths/cells"
        )

    i = _require_table(root["initial"], "initial")
    _reject_unknown(i, {"u", "v", "w"}, "initial")
    for name in ("u", "v", "w"):
        if name not in i:
            raise ConfigError(f"missing key initial.{name}")
    initial = InitialSpec(
        u=_parse_field(i["u"], "initial.u", path.parent),
        v=_parse_field(i["v"], "initial.v", path.parent),
        w=_parse_field(i["w"], "initial.w", path.parent),
    )

    t = _require_table(root["time"], "time")
    _reject_unknown(t, {"t_end", "dt_max", "cfl_safety"}, "time")
    t_end = _number(t, "t_end", "time")
    if not t_end > 0.0:
        raise ConfigError(f"time.t_end must be positive, got {t_end}")
    dt_max = _number(t, "dt_max", "time", default=t_end)
    cfl_safety = _number(t, "cfl_safety", "time", default=0.5)

    o = _require_table(root.get("output", {}), "output")
    _reject_unknown(o, {"every"}, "output")
    output_every = _number(o, "every", "output", default=t_end / 200.0)

    s = _require_table(root.get("scheme", {}), "scheme")
    _reject_unknown(s, {"advection", "blowup_linf"}, "scheme")
    advection = s.get("advection", "central")
    if not isinstance(advection, str):
        raise ConfigError("scheme.advection must be a string")
    blowup_linf = _number(s, "blowup_linf", "scheme", default=1e8)

    weight_p = weight_eps = None
    if "weight" in root:
        w = _require_table(root["weight"], "weight")
        _reject_unknown(w, {"p", "eps"}, "weight")
        weight_p = _number(w, "p", "weight")
        weight_eps = _number(w, "eps", "weight")

    try:
        return ScenarioConfig(
            params=params,
            grid=grid,
            initial=initial,
            t_end=t_end,
            dt_max=dt_max,
            cfl_safety=cfl_safety,
            output_every=output_every,
            scheme=advection,
            blowup_linf=blowup_linf,
            weight_p=weight_p,
            weight_eps=weight_eps,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _field_to_dict(field: InitialField) -> dict:
    if isinstance(field, ConstantInit):
        return {"kind": "constant", "value": field.value}
    if isinstance(field, CosineBumpInit):
        out = {"kind": "cosine_bump", "base": field.base, "amplitude": field.amplitude}
        if field.modes:
            out["modes"] = list(field.modes)
        return out
    if isinstance(field, GaussianInit):
        return {
            "kind": "gaussian",
            "center": list(field.center),
            "width": field.width,
            "amplitude": field.amplitude,
            "floor": field.floor,
        }
    if isinstance(field, FileInit):
        return {"kind": "file", "path": field.path}
    raise TypeError(f"unknown initial field {field!r}")


def config_to_dict(config: ScenarioConfig) -> dict:
    """Fully-resolved plain dict; the canonical form behind the digest."""
    out = {
        "params": {
            "chi1": config.params.chi1,
            "chi2": config.params.chi2,
            "alpha": config.params.alpha,
            "beta": config.params.beta,
        },
        "grid": {
            "lengths": list(config.grid.lengths),
            "cells": list(config.grid.cells),
        },
        "initial": {
            "u": _field_to_dict(config.initial.u),
            "v": _field_to_dict(config.initial.v),
            "w": _field_to_dict(config.initial.w),
        },
        "time": {
            "t_end": config.t_end,
            "dt_max": config.dt_max,
            "cfl_safety": config.cfl_safety,
        },
        "output": {"every": config.output_every},
        "scheme": {
            "advection": config.scheme,
            "blowup_linf": config.blowup_linf,
        },
    }
    if config.weight_p is not None:
        out["weight"] = {"p": config.weight_p, "eps": config.weight_eps}
    return out


def config_digest(config: ScenarioConfig) -> str:
    """Content hash of the resolved config; stable across re-serialization."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
