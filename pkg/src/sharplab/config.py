"""Flat key = value experiment configuration.

One dataclass holds every knob with its default; config files override
fields by name.  Files are plain text, one ``key = value`` per line, ``#``
comments allowed; list values are comma-separated.  Unknown keys are
rejected (exit code 1 at the CLI).  The sha256 hash of the resolved
configuration is embedded in every report so a report can be reproduced
from its own metadata.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .nonlinearity import (
    BistableNonlinearity,
    Forcing,
    constant_forcing,
    linear_forcing,
    make_cubic,
    make_cubic_general,
)

__all__ = ["ExperimentConfig", "ConfigError", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Bad key, unparsable value, or inconsistent configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Every experiment knob, with the defaults used by the studies.

    The same object configures all CLI subcommands; each command reads the
    subset it needs.  ``grid_divisor`` fixes the grid rule h = eps/divisor,
    keeping the layer resolved by the same number of cells at every eps.
    """

    # nonlinearity
    nonlinearity: str = "cubic"            # cubic | cubic_custom
    cubic_zeros: tuple[float, float, float] = (-1.0, 0.0, 1.0)
    cubic_scale: float = 1.0
    # geometry / initial data
    domain: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)
    R0: float = 0.35
    steepness: float = 5.0
    curve_file: str = ""
    # forcing
    forcing: str = "none"                  # none | constant | linear_x
    delta: float = 0.2
    # sweep controls
    eps_list: tuple[float, ...] = (0.08, 0.04, 0.02)
    mu: float = 2.0
    T: float = 0.04
    grid_divisor: float = 8.0
    dt_safety: float = 0.9
    n_observers: int = 20
    tube_factor: float = 4.0
    # the transversality claim concerns the thin neighbourhood where the
    # level set actually lives; a 4*eps tube would reach the circle's center
    # (where grad u = 0) at the largest eps, so it gets its own factor
    transversality_tube_factor: float = 2.0
    # profile tabulation
    z_max: float = 10.0
    n_profile: int = 4000
    # limit-problem solvers
    limit_dt: float = 1e-5
    reference_nodes: int = 1024
    remesh_every: int = 5
    # generation study
    eta: float = 0.1
    c_tube: float = 6.0
    gen_window: float = 6.0                # horizon in units of t_eps, capped at T
    gen_checks: int = 48
    # reaction-diffusion system
    alpha: float = 1.0
    beta: float = 1.0
    D: float = 1.0
    v0: float = 0.1
    h_limit: float = 0.005
    limit_curve_nodes: int = 384
    # single-run commands (simulate / limit)
    eps: float = 0.08
    t_end: float = 0.02
    N: int = 2
    dt: float = 1e-5
    observer_times: tuple[float, ...] = ()

    def make_nonlinearity(self) -> BistableNonlinearity:
        if self.nonlinearity == "cubic":
            return make_cubic()
        if self.nonlinearity == "cubic_custom":
            return make_cubic_general(self.cubic_zeros, self.cubic_scale)
        raise ConfigError(f"unknown nonlinearity '{self.nonlinearity}'")

    def make_forcing(self) -> Forcing | None:
        if self.forcing == "none":
            return None
        if self.forcing == "constant":
            return constant_forcing(self.delta)
        if self.forcing == "linear_x":
            return linear_forcing(self.delta)
        raise ConfigError(f"unknown forcing '{self.forcing}'")

    def validate(self) -> None:
        if self.mu <= 1.0:
            raise ConfigError(f"mu must exceed 1, got {self.mu}")
        if any(e <= 0 or e >= 1 for e in self.eps_list):
            raise ConfigError("every eps must lie in (0, 1)")
        if list(self.eps_list) != sorted(self.eps_list, reverse=True):
            raise ConfigError("eps_list must be strictly decreasing")
        if self.T <= 0:
            raise ConfigError("T must be positive")
        if self.grid_divisor < 4:
            raise ConfigError("grid_divisor below 4 cannot resolve the layer")
        if not 0 < self.dt_safety <= 1:
            raise ConfigError("dt_safety must be in (0, 1]")
        x0, x1, y0, y1 = self.domain
        if x0 >= x1 or y0 >= y1:
            raise ConfigError(f"degenerate domain {self.domain}")
        self.make_nonlinearity()
        self.make_forcing()
        nl = self.make_nonlinearity()
        am, a, ap = nl.zeros
        if not 0 < self.eta < min(a - am, ap - a):
            raise ConfigError(
                f"eta must lie in (0, {min(a - am, ap - a)}), got {self.eta}"
            )

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_text(self).encode()).hexdigest()[:16]


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def canonical_text(cfg: ExperimentConfig) -> str:
    lines = []
    for name in sorted(_FIELDS):
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            rendered = ", ".join(repr(v) for v in value)
        else:
            rendered = repr(value)
        lines.append(f"{name} = {rendered}")
    return "\n".join(lines) + "\n"


def _parse_value(name: str, raw: str):
    field = _FIELDS[name]
    raw = raw.strip()
    base = field.type
    try:
        if base.startswith("tuple"):
            if not raw:
                return ()
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return tuple(float(s) for s in items)
        if base == "int":
            return int(raw)
        if base == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for '{name}': {raw!r}") from exc


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply ``key = value`` overrides from a config file to the defaults."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        overrides[key] = _parse_value(key, raw)
    cfg = dataclasses.replace(base if base is not None else ExperimentConfig(), **overrides)
    cfg.validate()
    return cfg


def load_config(path: str | None, base: ExperimentConfig | None = None) -> ExperimentConfig:
    if path is None:
        cfg = base if base is not None else ExperimentConfig()
        cfg.validate()
        return cfg
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)
