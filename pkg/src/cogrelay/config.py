"""Run configuration: key-value files, named presets and overrides.

A config file is INI-style text. Section headers are optional and only
group keys for readability; every key name is unique::

    [network]
    m_t = 2            # shorthand for m_t1 = m_t2 = m_pu
    m_r = 2
    num_relays = 4
    p_t_dbm = 20
    p_r_dbm = 10
    i_th_dbm = 20
    n0_watts = 1e-4
    w = 0.2

    [solver]
    method = newton
    max_iter = 500

    [sweep]
    values = 0.05, 0.10, 0.15
    trials = 500
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import DEFAULT_N0_WATTS, NetworkConfig
from .errors import ConfigurationError
from .optimizer import SolverOptions

__all__ = ["RunConfig", "PRESETS", "load_config", "parse_values"]

_INT_KEYS = ("m_t1", "m_t2", "m_pu", "m_r", "num_relays")
_DBM_KEYS = ("p_t_dbm", "p_r_dbm", "i_th_dbm")
_SOLVER_KEYS = {f.name: f.type for f in dataclasses.fields(SolverOptions)}


@dataclass(frozen=True)
class RunConfig:
    """Network parameters as authored (dBm), plus solver and sweep settings."""

    m_t1: int = 2
    m_t2: int = 2
    m_pu: int = 2
    m_r: int = 2
    num_relays: int = 4
    p_t_dbm: float = 20.0
    p_r_dbm: float = 10.0
    i_th_dbm: float = 20.0
    n0_watts: float = DEFAULT_N0_WATTS
    w: float = 0.2
    values: tuple = ()
    trials: int = 500
    solver: SolverOptions = field(default_factory=SolverOptions)

    def network(self) -> NetworkConfig:
        return NetworkConfig.from_dbm(
            m_t1=self.m_t1,
            m_t2=self.m_t2,
            m_pu=self.m_pu,
            m_r=self.m_r,
            num_relays=self.num_relays,
            p_t_dbm=self.p_t_dbm,
            p_r_dbm=self.p_r_dbm,
            i_th_dbm=self.i_th_dbm,
            n0_watts=self.n0_watts,
        )

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["values"] = list(self.values)
        return out


PRESETS = {
    # amplification-sweep base point
    "base": {"values": "0.05:0.6:0.05"},
    # terminal-power sweep, four antennas everywhere
    "power-sweep": {
        "m_t": "4",
        "m_r": "4",
        "num_relays": "2",
        "p_r_dbm": "20",
        "values": "-10:40:5",
    },
}


def parse_values(text: str) -> tuple:
    """Sweep values from ``"a, b, c"`` or an inclusive range ``"start:stop:step"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(s) for s in text.split(":"))
            if step <= 0:
                raise ConfigurationError("range step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(v) for v in np.round(start + step * np.arange(count), 12))
        return tuple(float(s) for s in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigurationError(f"bad sweep values {text!r}: {exc}") from None


def _apply(settings: dict, key: str, raw: str, solver: dict) -> None:
    key = key.strip().lower().replace("-", "_")
    raw = raw.strip()
    try:
        if key == "m_t":
            for name in ("m_t1", "m_t2", "m_pu"):
                settings[name] = int(raw)
        elif key in _INT_KEYS or key == "trials":
            settings[key] = int(raw)
        elif key in _DBM_KEYS or key in ("n0_watts", "w"):
            settings[key] = float(raw)
        elif key == "values":
            settings[key] = parse_values(raw)
        elif key == "method":
            solver[key] = raw
        elif key == "max_iter":
            solver[key] = None if raw.lower() == "none" else int(raw)
        elif key in _SOLVER_KEYS:
            solver[key] = float(raw)
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    except ConfigurationError:
        raise
    except ValueError:
        raise ConfigurationError(f"bad value for {key}: {raw!r}") from None


def _read_file(path: str) -> list[tuple[str, str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[__top__]\n" + text, source=path)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from None
    return [(k, v) for section in parser.sections() for k, v in parser.items(section)]


def load_config(source: str | None = None, overrides=()) -> RunConfig:
    """Build a :class:`RunConfig` from a preset name or file path plus ``KEY=VALUE`` overrides."""
    if source is None or source in PRESETS:
        pairs = list(PRESETS[source or "base"].items())
    else:
        pairs = _read_file(source)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        pairs.append((key, raw))
    settings: dict = {}
    solver: dict = {}
    for key, raw in pairs:
        _apply(settings, key, raw, solver)
    try:
        opts = SolverOptions(**solver)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad solver options: {exc}") from None
    run = RunConfig(**settings, solver=opts)
    if not (run.w >= 0 and math.isfinite(run.w)):
        raise ConfigurationError(f"w must be finite and >= 0, got {run.w!r}")
    if run.trials < 1:
        raise ConfigurationError("trials must be >= 1")
    run.network()  # validates the network parameters
    return run
