"""Flat key-value run configuration.

One assignment per line, block-prefixed keys (``system.f = x^2/2 + x^3/3``),
``#`` comments. Parsing is total: unknown keys, duplicates and malformed
values are rejected with the offending line number. Numeric values accept
plain floats or integer fractions like ``1/20``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "parse_config_text"]

_FLOAT, _INT, _STR, _EXPR, _FLOATS = "float", "int", "str", "expr", "floats"

KNOWN_KEYS: dict[str, str] = {
    "system.f": _EXPR,
    "system.p": _EXPR,
    "system.x_min": _FLOAT,
    "system.x_max": _FLOAT,
    "sections.s_c_minus": _FLOAT,
    "sections.s_c_plus": _FLOAT,
    "sections.x_sigma_minus": _FLOAT,
    "sections.x_sigma_plus": _FLOAT,
    "sections.l_lo": _FLOAT,
    "sections.l_hi": _FLOAT,
    "entry.kind": _STR,
    "entry.lo": _FLOAT,
    "entry.hi": _FLOAT,
    "entry.location": _FLOAT,
    "entry.scale": _FLOAT,
    "entry.table": _FLOATS,
    "sim.eps": _FLOAT,
    "sim.abs_tol": _FLOAT,
    "sim.rel_tol": _FLOAT,
    "sim.max_step": _FLOAT,
    "sim.max_time": _FLOAT,
    "sim.lambda_lo": _FLOAT,
    "sim.lambda_hi": _FLOAT,
    "sim.samples": _INT,
    "sim.seed": _INT,
    "relation.s0": _FLOAT,
    "relation.grid": _INT,
    "relation.out_count": _INT,
    "relation.solve_tol": _FLOAT,
    "sdi.s_lo": _FLOAT,
    "sdi.s_hi": _FLOAT,
    "sdi.count": _INT,
    "density.grid": _INT,
}

_REQUIRED = ("system.f", "system.p", "system.x_min", "system.x_max")

_DEFAULTS = {
    "entry.kind": "uniform",
    "sim.eps": 0.01,
    "sim.abs_tol": 1e-12,
    "sim.rel_tol": 1e-10,
    "sim.max_step": 1e-2,
    "sim.lambda_lo": -0.1,
    "sim.lambda_hi": 0.05,
    "sim.samples": 500,
    "sim.seed": 0,
    "relation.grid": 2000,
    "relation.out_count": 201,
    "relation.solve_tol": 1e-12,
    "sdi.count": 100,
    "density.grid": 2001,
}


def _parse_number(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    if "/" in text:
        parts = text.split("/")
        if len(parts) == 2:
            try:
                return float(int(parts[0])) / float(int(parts[1]))
            except (ValueError, ZeroDivisionError):
                pass
    raise ConfigError(f"expected a number (float or integer fraction), got {text!r}", line)


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        if key not in KNOWN_KEYS:
            raise KeyError(f"unknown config key {key!r}")
        if key in self.values:
            return self.values[key]
        if key in _DEFAULTS:
            return _DEFAULTS[key]
        return default

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"missing required config key {key!r}")
        return value

    def has(self, key: str) -> bool:
        return key in self.values


def parse_config_text(text: str) -> RunConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        kind = KNOWN_KEYS[key]
        if kind == _FLOAT:
            values[key] = _parse_number(value, lineno)
        elif kind == _INT:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"expected an integer, got {value!r}", lineno)
        elif kind == _FLOATS:
            values[key] = tuple(
                _parse_number(part.strip(), lineno) for part in value.split(",")
            )
        else:
            values[key] = value
    cfg = RunConfig(values)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    return cfg


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}")
    return parse_config_text(text)
