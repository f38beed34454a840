"""Run configuration: a flat, dotted key space loaded from YAML or JSON.

Nested mappings in the file are flattened (``weight: {family: exponential}``
becomes ``weight.family``).  ``--set key=value`` overrides are parsed as
YAML scalars, so ``--set grid.N=800`` gives an int and
``--set spectra.t_list=[1,2,3]`` a list.
"""
from __future__ import annotations

import json
from pathlib import Path

import yaml

DEFAULTS = {
    "weight.family": "constant",
    "weight.rate": 1.0,
    "weight.exponent": 2.0,
    "weight.gamma": 1.0,
    "grid.X": 20.0,
    "grid.N": 400,
    "grid.allow_large": False,
    "operator.variant": "RightShift",
    "operator.t": 1.0,
    "operator.kernel_path": None,
    "operator.kernel_center": 0.0,
    "operator.kernel_half_width": 1.0,
    "operator.combo": None,
    "spectra.probes": None,
    "spectra.growth_X": 200.0,
    "spectra.t_list": [50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0, 85.0, 90.0, 95.0, 100.0],
    "spectra.n_schedule": [100, 200, 400],
    "spectra.z_re": [-2.0, 2.0],
    "spectra.z_im": [-2.0, 2.0],
    "spectra.z_n": [81, 81],
    "spectra.inside_samples": 25,
    "spectra.outside_samples": 25,
    "symbol.xi": [-10.0, 10.0],
    "symbol.n_xi": 401,
    "symbol.tilts": None,
    "symbol.samples": 50,
    "symbol.depth": 2.0,
    "symbol.inner_margin": 0.1,
    "witness.a": None,
    "witness.eta0": None,
    "witness.b": 0.25,
    "witness.t0": 10.0,
    "witness.X": 40.0,
    "witness.N": 800,
    "witness.eps": 0.1,
    "witness.delta": None,
    "output.dir": "run",
    "tolerance.norm": 1e-10,
    "tolerance.growth": 0.05,
    "tolerance.order_sum": 0.02,
    "tolerance.wiener_hopf": 1e-12,
    "tolerance.commutator": 1e-10,
    "tolerance.commutator_floor": 0.05,
    "tolerance.symmetry": 1e-10,
    "tolerance.inside": 1e-4,
    "tolerance.inclusion": 1e-3,
    "tolerance.inclusion_fraction": 0.95,
    "tolerance.bound_slack": 0.05,
    "tolerance.witness_ratio": 0.15,
    "tolerance.witness_slack": 0.1,
}

_LIST_KEYS = {"spectra.z_re", "spectra.z_im", "spectra.z_n", "symbol.xi", "spectra.n_schedule", "spectra.t_list"}


class ConfigError(ValueError):
    """Bad key, value, or missing file; maps to exit code 1."""


def flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and key != "operator.combo":
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"{p}: cannot parse config: {e}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return flatten(data)


def parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        return key.strip(), yaml.safe_load(raw)
    except yaml.YAMLError:
        return key.strip(), raw


def build(path=None, overrides=(), base_dir=None) -> dict:
    cfg = dict(DEFAULTS)
    src = {}
    if path is not None:
        src.update(load_file(path))
        base_dir = base_dir or Path(path).parent
    src.update(dict(parse_override(o) for o in overrides))
    unknown = sorted(set(src) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in src.items():
        # YAML 1.1 reads 1e-10 (no dot) as a string
        if isinstance(DEFAULTS[k], float) and isinstance(v, str):
            try:
                v = float(v)
            except ValueError:
                raise ConfigError(f"{k} must be a number, got {v!r}") from None
        cfg[k] = v
    return validate(cfg, base_dir)


def validate(cfg: dict, base_dir=None) -> dict:
    try:
        cfg["grid.X"] = float(cfg["grid.X"])
        cfg["grid.N"] = int(cfg["grid.N"])
        cfg["operator.t"] = float(cfg["operator.t"])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad numeric value: {e}") from None
    if cfg["grid.X"] <= 0 or cfg["grid.N"] < 2:
        raise ConfigError("grid.X must be positive and grid.N at least 2")
    for k in _LIST_KEYS:
        if not isinstance(cfg[k], (list, tuple)):
            raise ConfigError(f"{k} must be a list")
    for k, v in cfg.items():
        if k.startswith("tolerance."):
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{k} must be a positive number, got {v!r}")
    if cfg["operator.variant"] not in ("RightShift", "LeftShift", "Convolution", "LinearCombo"):
        raise ConfigError(f"unknown operator.variant {cfg['operator.variant']!r}")
    kp = cfg["operator.kernel_path"]
    if kp is not None:
        p = Path(kp)
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        if not p.is_file():
            raise ConfigError(f"kernel file not found: {p}")
        cfg["operator.kernel_path"] = str(p)
    return cfg


def echo(cfg: dict) -> dict:
    """The config as recorded in reports (paths reduced to file names for stability)."""
    out = dict(cfg)
    if out.get("operator.kernel_path"):
        out["operator.kernel_path"] = Path(out["operator.kernel_path"]).name
    out.pop("output.dir", None)
    return out
