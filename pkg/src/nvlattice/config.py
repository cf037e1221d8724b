"""Run configuration: flat sectioned key-value files with defaults.

Config files are plain text, one `section.key = value` per line, `#`
comments allowed.  Every key is optional; defaults reproduce the workhorse
parameter set (Omega=5, Delta1=4, Delta2=-2.5, g=1, z=4) on a
mu in [-1, 0] x k in [0, 0.3] grid.  A meta.json emitted by a previous run
is also accepted as a config (its resolved "config" block is re-read), so
reruns round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .qspace import ModelParams

FORMAT_VERSION = 1

DEFAULTS: dict[str, object] = {
    # model: one lattice site and its bath
    "model.g": 1.0,
    "model.omega": 5.0,
    "model.delta1": 4.0,
    "model.delta2": -2.5,
    "model.kappa": 0.01,
    "model.gamma1": 0.01,
    "model.gamma2": 0.01,
    "model.z": 4,
    # numerics
    "numerics.n_max": 8,
    "numerics.n_max_dissipative": 6,
    "numerics.seed": 0,
    # grid
    "grid.mu_lo": -1.0,
    "grid.mu_hi": 0.0,
    "grid.mu_count": 60,
    "grid.k_lo": 0.0,
    "grid.k_hi": 0.3,
    "grid.k_count": 60,
    # lobes (Fig.-3-style axis sweeps)
    "lobes.axis": "delta1",
    "lobes.lo": 0.5,
    "lobes.hi": 8.0,
    "lobes.count": 40,
    "lobes.n_list": "0,1,2,3",
    # observable cuts
    "observables.mu_list": "-0.6,-0.4,-0.2",
    "observables.dissipative": False,
    "observables.k_lo": 0.0,
    "observables.k_hi": 0.3,
    "observables.k_count": 40,
    # spectra
    "spectrum.mu_list": "-0.1,-0.3,-0.5",
    "spectrum.k": 0.13,
    "spectrum.channels": "a",
    "spectrum.omega_lo": -30.0,
    "spectrum.omega_hi": 30.0,
    "spectrum.omega_step": 0.05,
    "spectrum.max_steps": 40000,
    # output
    "output.dir": "out",
    "output.format": "csv",
}


class ConfigError(ValueError):
    """Malformed config file or unknown/ill-typed key."""


def _coerce(key: str, raw: object) -> object:
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        if str(raw).lower() in ("true", "1", "yes"):
            return True
        if str(raw).lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return str(raw)


def parse_config_text(text: str) -> dict[str, object]:
    out: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path: str | Path | None) -> dict[str, object]:
    """Resolved config: defaults overlaid with the file (if any).

    Accepts the flat key-value format or a meta.json from a previous run.
    """
    resolved = dict(DEFAULTS)
    if path is None:
        return resolved
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        overrides = data.get("config", data)
        for key, value in overrides.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r} in {path}")
            resolved[key] = _coerce(key, value)
        return resolved
    resolved.update(parse_config_text(text))
    return resolved


def model_params(cfg: dict[str, object]) -> ModelParams:
    return ModelParams(
        g=cfg["model.g"], omega=cfg["model.omega"],
        delta1=cfg["model.delta1"], delta2=cfg["model.delta2"],
        kappa=cfg["model.kappa"], gamma1=cfg["model.gamma1"],
        gamma2=cfg["model.gamma2"], z=cfg["model.z"])


def float_list(cfg: dict[str, object], key: str) -> list[float]:
    try:
        return [float(tok) for tok in str(cfg[key]).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {cfg[key]!r}") from None


def int_list(cfg: dict[str, object], key: str) -> list[int]:
    try:
        return [int(tok) for tok in str(cfg[key]).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {cfg[key]!r}") from None
