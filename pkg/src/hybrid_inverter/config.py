"""Flat ``key = value`` experiment configuration.

Lines may carry ``#`` comments. Unknown keys are rejected; absent keys take
the reference-experiment defaults below. Physical quantities carry their unit
in the key name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .plant import InverterParams
from .reference import ReferenceSpec

__all__ = ["Config", "ConfigError", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or flag."""

    def __init__(self, key: str, message: str, line: Optional[int] = None, source: str = ""):
        where = f"{source}:{line}: " if line is not None else ""
        super().__init__(f"{where}{key}: {message}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class Config:
    r_ohm: float = 50.0
    l_henry: float = 450e-6
    c_farad: float = 2.5e-3
    v_dc_volt: float = 1200.0
    f_hz: float = 60.0
    v_m_volt: float = 177.0
    alpha: float = 1.0
    v_c0_volt: float = 70.0
    i_l0_amp: float = 0.0
    start_on_reference: bool = False
    t_end_s: float = 4.0
    control_period_s: float = 1e-6
    decimation: int = 10
    integrator: str = "zoh"
    # loadstep
    load_r_new_ohm: float = 80.0
    load_t_event_s: float = 1.0
    load_known: bool = True
    # sweep
    sweep_axis: str = "load_r"
    sweep_start: float = 10.0
    sweep_stop: float = 90.0
    sweep_step: float = 10.0
    sweep_retune: bool = False
    sweep_workers: int = 1
    # droop
    droop_k_p_radps_per_w: float = 0.01
    droop_k_q_volt_per_var: float = 0.0025
    droop_v_m_star_new_volt: float = 185.0
    droop_t_event_s: float = 0.2

    def params(self) -> InverterParams:
        return InverterParams(self.r_ohm, self.l_henry, self.c_farad, self.v_dc_volt)

    def reference(self) -> ReferenceSpec:
        return ReferenceSpec.from_hz(self.v_m_volt, self.f_hz)

    def initial_state(self):
        return None if self.start_on_reference else (self.v_c0_volt, self.i_l0_amp)

    def sweep_values(self) -> list:
        start, stop, step = self.sweep_start, self.sweep_stop, self.sweep_step
        n = int(math.floor((stop - start) / step + 1e-9)) + 1 if step > 0 and stop >= start else 0
        return [start + i * step for i in range(n)]

    def validated(self) -> "Config":
        _validate(self)
        return self


_POSITIVE = {
    "r_ohm", "l_henry", "c_farad", "v_dc_volt", "f_hz", "alpha", "t_end_s",
    "control_period_s", "load_r_new_ohm", "sweep_start", "sweep_stop", "sweep_step",
}
_NON_NEGATIVE = {
    "v_m_volt", "load_t_event_s", "droop_k_p_radps_per_w", "droop_k_q_volt_per_var",
    "droop_v_m_star_new_volt", "droop_t_event_s",
}
_CHOICES = {"integrator": ("zoh", "rk4"), "sweep_axis": ("load_r", "v_m", "omega")}
_TYPES = {f.name: f.type for f in fields(Config)}


def _validate(cfg: Config, lines: Optional[dict] = None, source: str = ""):
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(key, msg, lines.get(key), source)

    for key in _POSITIVE:
        val = getattr(cfg, key)
        if not (math.isfinite(val) and val > 0):
            fail(key, f"must be positive, got {val}")
    for key in _NON_NEGATIVE:
        val = getattr(cfg, key)
        if not (math.isfinite(val) and val >= 0):
            fail(key, f"must be non-negative, got {val}")
    for key in ("v_c0_volt", "i_l0_amp"):
        if not math.isfinite(getattr(cfg, key)):
            fail(key, "must be finite")
    for key, allowed in _CHOICES.items():
        if getattr(cfg, key) not in allowed:
            fail(key, f"must be one of {', '.join(allowed)}, got {getattr(cfg, key)!r}")
    if cfg.decimation < 1:
        fail("decimation", f"must be a positive integer, got {cfg.decimation}")
    if cfg.sweep_workers < 1:
        fail("sweep_workers", f"must be a positive integer, got {cfg.sweep_workers}")
    if cfg.control_period_s > cfg.t_end_s:
        fail("control_period_s", "exceeds t_end_s")


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config(text: str, source: str = "<config>", base: Optional[Config] = None) -> Config:
    values = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(body.split()[0], "expected 'key = value'", lineno, source)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(key, "unknown key", lineno, source)
        if key in values:
            raise ConfigError(key, "duplicate key", lineno, source)
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(key, str(exc), lineno, source) from None
        lines[key] = lineno
    cfg = replace(base or Config(), **values)
    _validate(cfg, lines, source)
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
