"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .model import ModelError, SystemParams

OUTPUT_GROUPS = ("excitations", "polygamy", "entanglement", "covariance")

#: Sweepable parameters; ``J`` sets J12 = J13 = J23 together.
SWEEP_PARAMS = ("omega1", "omega2", "omega3", "J12", "J13", "J23", "J", "gamma")

KEYS = (
    "omega1", "omega2", "omega3", "J12", "J13", "J23", "gamma", "schrodinger_limit",
    "t_start", "t_end", "n_points",
    "sweep_param", "sweep_min", "sweep_max", "sweep_steps",
    "outputs", "fock_oracle", "fock_cutoff", "series_oracle", "series_epsilon", "out_path",
)


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _outputs(text: str) -> Tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in OUTPUT_GROUPS]
    if bad:
        raise ValueError(f"unknown output group(s) {bad}; choose from {OUTPUT_GROUPS}")
    # keep the documented order regardless of how they were listed
    return tuple(g for g in OUTPUT_GROUPS if g in items)


def _sweep_param(text: str) -> Optional[str]:
    t = text.strip()
    if t in ("", "none"):
        return None
    if t not in SWEEP_PARAMS:
        raise ValueError(f"cannot sweep {t!r}; choose from {SWEEP_PARAMS}")
    return t


_PARSERS = {
    "omega1": _float, "omega2": _float, "omega3": _float,
    "J12": _float, "J13": _float, "J23": _float, "gamma": _float,
    "schrodinger_limit": _bool,
    "t_start": _float, "t_end": _float, "n_points": int,
    "sweep_param": _sweep_param, "sweep_min": _float, "sweep_max": _float, "sweep_steps": int,
    "outputs": _outputs, "fock_oracle": _bool, "fock_cutoff": int,
    "series_oracle": _bool, "series_epsilon": _float, "out_path": str.strip,
}


@dataclass(frozen=True)
class RunConfig:
    omega1: float = 1.0
    omega2: float = 1.0
    omega3: float = 1.0
    J12: float = 0.0
    J13: float = 0.0
    J23: float = 0.0
    gamma: float = 50.0
    schrodinger_limit: bool = False
    t_start: float = 0.0
    t_end: float = 50.0
    n_points: int = 101
    sweep_param: Optional[str] = None
    sweep_min: float = 0.0
    sweep_max: float = 0.0
    sweep_steps: int = 0
    outputs: Tuple[str, ...] = ("excitations", "polygamy", "entanglement")
    fock_oracle: bool = False
    fock_cutoff: int = 8
    series_oracle: bool = False
    series_epsilon: float = 1e-12
    out_path: str = "-"

    def __post_init__(self):
        if not (self.t_start >= 0 and math.isfinite(self.t_end)):
            raise ConfigError("t_start must be >= 0 and t_end finite")
        if self.n_points < 2:
            raise ConfigError("n_points must be at least 2")
        if not self.t_end > self.t_start:
            raise ConfigError("time grid must be increasing (t_end > t_start)")
        if self.sweep_steps < 0:
            raise ConfigError("sweep_steps must be non-negative")
        if not 2 <= self.fock_cutoff <= 16:
            raise ConfigError("fock_cutoff must lie in [2, 16]")
        if not 0 < self.series_epsilon < 1:
            raise ConfigError("series_epsilon must lie in (0, 1)")
        if not self.outputs:
            raise ConfigError("outputs must name at least one group")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)

    @property
    def sweep_values(self) -> np.ndarray:
        if self.sweep_param is None or self.sweep_steps == 0:
            return np.empty(0)
        if self.sweep_steps == 1:
            return np.array([self.sweep_min])
        return np.linspace(self.sweep_min, self.sweep_max, self.sweep_steps)

    def system_params(self, **overrides) -> SystemParams:
        """SystemParams with optional overrides (``J`` sets all three couplings).

        Raises:
            ModelError: for unphysical values (non-positive frequency etc.).
        """
        values = {k: getattr(self, k) for k in ("omega1", "omega2", "omega3", "J12", "J13", "J23", "gamma")}
        if "J" in overrides:
            J = overrides.pop("J")
            values.update(J12=J, J13=J, J23=J)
        values.update(overrides)
        gamma = values.pop("gamma")
        if self.schrodinger_limit:
            gamma = gamma if gamma > 0 and math.isfinite(gamma) else 1.0
        return SystemParams(gamma=gamma, schrodinger_limit=self.schrodinger_limit, **values)


def parse_lines(lines: Iterable[str], source: str = "<config>") -> Dict[str, str]:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in text.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def build_config(raw: Dict[str, str]) -> RunConfig:
    kwargs = {}
    for key, text in raw.items():
        try:
            kwargs[key] = _PARSERS[key](text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    try:
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (ValueError, ModelError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Optional[str], overrides: Iterable[str] = ()) -> RunConfig:
    """Parse a config file (optional) and apply ``key=value`` overrides, last one wins."""
    raw: Dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        raw.update(parse_lines(text.splitlines(), source=str(path)))
    for item in overrides:
        raw.update(parse_lines([item], source="--set"))
    return build_config(raw)


def replace(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
