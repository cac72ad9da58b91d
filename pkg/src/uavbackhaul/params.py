"""Scenario parameters and the flat configuration format.

A scenario is described by a flat mapping of typed keys (``DEFAULT_CONFIG``
lists every key with its default). dB-valued keys end in ``_db``; everything
else is SI linear, beamwidths are in degrees and misalignment scales in
radians. ``build_params`` converts such a mapping into the frozen, hashable
``NetworkParams`` used by the models, so the unit conversion happens once.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .channel import AccessLosParams, AntennaPattern, BackhaulLosParams, FadingParams
from .errors import ConfigError
from .geometry import DeploymentGeometry

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


DEFAULT_CONFIG: dict[str, Any] = {
    # deployment
    "lambda_g": 10e-6,
    "h_g": 25.0,
    "delta_b": 1.0,
    "n_u": 10,
    "h_u": 100.0,
    "r_u": 1000.0,
    "v_0": 0.0,
    "sim_radius": 5000.0,
    # transmit powers (W)
    "p_g": 20.0,
    "p_b": 10.0,
    "p_u": 1.0,
    # path loss
    "eta_g": 4.0,
    "eta_l": 2.5,
    "eta_n": 4.0,
    "c_l_db": -69.8,
    "c_n_db": -69.8,
    # fading
    "m_l": 3,
    "m_n": 2,
    # LOS models
    "los_a": 11.95,
    "los_b": 0.136,
    "los_c": 1.0,
    "los_d": 0.106,
    "los_e": 1.0,
    # backhaul antennas
    "g_g_max_db": 18.0,
    "g_g_min_db": -2.0,
    "theta_g_deg": 20.0,
    "g_u_max_db": 18.0,
    "g_u_min_db": -2.0,
    "theta_u_deg": 20.0,
    "sigma_g": 0.0,
    "sigma_u": 0.0,
    # noise and thresholds
    "noise_w": 4e-11,
    "tau_a_db": 0.0,
    "tau_b_db": 10.0,
}

INT_KEYS = frozenset({"n_u", "m_l", "m_n"})
CONFIG_KEYS = tuple(DEFAULT_CONFIG)


@dataclass(frozen=True)
class NetworkParams:
    """Complete scenario in linear SI units."""

    geometry: DeploymentGeometry = field(default_factory=DeploymentGeometry)
    p_g: float = 20.0
    p_b: float = 10.0
    p_u: float = 1.0
    eta_g: float = 4.0
    eta_l: float = 2.5
    eta_n: float = 4.0
    c_l: float = db_to_linear(-69.8)
    c_n: float = db_to_linear(-69.8)
    fading: FadingParams = field(default_factory=FadingParams)
    access_los: AccessLosParams = field(default_factory=AccessLosParams)
    backhaul_los: BackhaulLosParams = field(default_factory=BackhaulLosParams)
    antenna_g: AntennaPattern = AntennaPattern(db_to_linear(18.0), db_to_linear(-2.0), math.radians(20.0))
    antenna_u: AntennaPattern = AntennaPattern(db_to_linear(18.0), db_to_linear(-2.0), math.radians(20.0))
    sigma_g: float = 0.0
    sigma_u: float = 0.0
    noise: float = 4e-11
    tau_a: float = 1.0
    tau_b: float = 10.0

    def __post_init__(self) -> None:
        for name in ("p_g", "p_b", "p_u", "c_l", "c_n", "noise", "tau_a", "tau_b"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be positive", field=name)
        for name in ("eta_g", "eta_l", "eta_n"):
            if not getattr(self, name) > 2:
                raise ConfigError("path-loss exponent must exceed 2", field=name)
        for name in ("sigma_g", "sigma_u"):
            if not getattr(self, name) >= 0:
                raise ConfigError("must be non-negative", field=name)

    def m(self, zeta: str) -> int:
        return self.fading.m_l if zeta == "l" else self.fading.m_n

    def eta(self, zeta: str) -> float:
        return self.eta_l if zeta == "l" else self.eta_n

    def c(self, xi: str) -> float:
        return self.c_l if xi == "l" else self.c_n


def _coerce(key: str, value: Any) -> Any:
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", field=key)
    if key in INT_KEYS:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", field=key)
        return value
    if not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=key)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError("must be finite", field=key)
    return value


def parse_value(key: str, text: str) -> Any:
    """Parse a ``--set KEY=VALUE`` right-hand side."""
    if key not in DEFAULT_CONFIG:
        raise ConfigError("unknown configuration key", field=key)
    try:
        raw = int(text) if key in INT_KEYS else float(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r}", field=key) from None
    return _coerce(key, raw)


def validate_config(cfg: Mapping[str, Any], require_all: bool = True) -> dict[str, Any]:
    """Check keys and types; returns a normalized copy in canonical key order."""
    unknown = sorted(set(cfg) - set(DEFAULT_CONFIG))
    if unknown:
        raise ConfigError("unknown configuration key", field=unknown[0])
    if require_all:
        missing = [k for k in CONFIG_KEYS if k not in cfg]
        if missing:
            raise ConfigError("missing required key", field=missing[0])
    merged = {k: cfg.get(k, DEFAULT_CONFIG[k]) for k in CONFIG_KEYS}
    return {k: _coerce(k, v) for k, v in merged.items()}


def apply_overrides(cfg: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(cfg)
    for key, value in overrides.items():
        if key not in DEFAULT_CONFIG:
            raise ConfigError("unknown configuration key", field=key)
        out[key] = _coerce(key, value)
    return out


def build_params(cfg: Mapping[str, Any]) -> NetworkParams:
    """Convert a (complete) flat configuration into ``NetworkParams``."""
    c = validate_config(cfg)
    geometry = DeploymentGeometry(
        lambda_g=c["lambda_g"], h_g=c["h_g"], delta_b=c["delta_b"], n_u=c["n_u"],
        h_u=c["h_u"], r_u=c["r_u"], v_0=c["v_0"], sim_radius=c["sim_radius"])

    def pattern(side: str) -> AntennaPattern:
        try:
            return AntennaPattern(db_to_linear(c[f"g_{side}_max_db"]), db_to_linear(c[f"g_{side}_min_db"]),
                                  math.radians(c[f"theta_{side}_deg"]))
        except ConfigError as exc:
            key = f"theta_{side}_deg" if exc.field == "theta" else f"g_{side}_max_db"
            raise ConfigError(str(exc).split(": ", 1)[-1], field=key) from None

    return NetworkParams(
        geometry=geometry,
        p_g=c["p_g"], p_b=c["p_b"], p_u=c["p_u"],
        eta_g=c["eta_g"], eta_l=c["eta_l"], eta_n=c["eta_n"],
        c_l=db_to_linear(c["c_l_db"]), c_n=db_to_linear(c["c_n_db"]),
        fading=FadingParams(c["m_l"], c["m_n"]),
        access_los=AccessLosParams(c["los_a"], c["los_b"]),
        backhaul_los=BackhaulLosParams(c["los_c"], c["los_d"], c["los_e"]),
        antenna_g=pattern("g"), antenna_u=pattern("u"),
        sigma_g=c["sigma_g"], sigma_u=c["sigma_u"],
        noise=c["noise_w"],
        tau_a=db_to_linear(c["tau_a_db"]), tau_b=db_to_linear(c["tau_b_db"]),
    )


def default_params(**overrides: Any) -> NetworkParams:
    """Default scenario with flat-key overrides, e.g. ``default_params(h_u=230.0)``."""
    return build_params(apply_overrides(DEFAULT_CONFIG, overrides))


def loads_config(text: str) -> dict[str, Any]:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError("config must be flat (no tables)", field=nested[0])
    return validate_config(raw)


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    return loads_config(text)


def dumps_config(cfg: Mapping[str, Any]) -> str:
    """Serialize as flat TOML; floats use ``repr`` so parsing is exact."""
    c = validate_config(cfg)
    lines = []
    for key in CONFIG_KEYS:
        v = c[key]
        lines.append(f"{key} = {v!r}" if isinstance(v, int) else f"{key} = {float(v)!r}")
    return "\n".join(lines) + "\n"
