"""System parameters, Rayleigh channel draws and relay amplification factors.

Index conventions (all arrays are numpy):

* ``h_1r[i][k, v]`` -- T1 antenna ``v`` to antenna ``k`` of relay ``i``.
* ``h_2r[i][k, u]`` -- T2 antenna ``u`` to antenna ``k`` of relay ``i``.
* ``h_rp[i][k, j]`` -- antenna ``k`` of relay ``i`` and PU antenna ``j``.
* ``h_1p[v, j]`` / ``h_2p[u, j]`` -- terminal antenna to PU antenna ``j``.

Linear powers are in milliwatts, which is what :func:`dbm_to_linear` returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "DEFAULT_N0_WATTS",
    "NetworkConfig",
    "ChannelSet",
    "AmplificationProfile",
    "dbm_to_linear",
    "generate_rayleigh_channels",
    "uniform_amplification",
    "amplification_from_relay_power",
    "relay_output_power",
]

#: Receiver noise variance of the reference setup, read as watts.
DEFAULT_N0_WATTS = 1e-4


def dbm_to_linear(p_dbm: float) -> float:
    """Convert dBm to linear milliwatts."""
    return 10.0 ** (p_dbm / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Scalar system parameters on the linear (mW) scale."""

    m_t1: int
    m_t2: int
    m_pu: int
    m_r: int
    num_relays: int
    p_t_peak: float
    p_r_peak: float
    i_th: float
    n0: float

    def __post_init__(self):
        for name in ("m_t1", "m_t2", "m_pu", "m_r", "num_relays"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        for name in ("p_t_peak", "p_r_peak", "i_th"):
            value = getattr(self, name)
            if math.isnan(value) or value < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {value!r}")
        if not (self.n0 > 0 and math.isfinite(self.n0)):
            raise ConfigurationError(f"n0 must be positive and finite, got {self.n0!r}")

    @classmethod
    def from_dbm(
        cls,
        *,
        m_t1: int,
        m_t2: int,
        m_pu: int,
        m_r: int,
        num_relays: int,
        p_t_dbm: float,
        p_r_dbm: float,
        i_th_dbm: float,
        n0_watts: float = DEFAULT_N0_WATTS,
    ) -> "NetworkConfig":
        """Build a config from dBm budgets and a noise variance in watts."""
        return cls(
            m_t1=m_t1,
            m_t2=m_t2,
            m_pu=m_pu,
            m_r=m_r,
            num_relays=num_relays,
            p_t_peak=dbm_to_linear(p_t_dbm),
            p_r_peak=dbm_to_linear(p_r_dbm),
            i_th=dbm_to_linear(i_th_dbm),
            n0=n0_watts * 1e3,
        )

    @property
    def m_min(self) -> int:
        return min(self.m_t1, self.m_t2)


@dataclass(frozen=True)
class ChannelSet:
    """Complex channel matrices of one fading realization."""

    h_1r: tuple
    h_2r: tuple
    h_rp: tuple
    h_1p: np.ndarray
    h_2p: np.ndarray

    @property
    def num_relays(self) -> int:
        return len(self.h_1r)

    def check(self, config: NetworkConfig) -> None:
        """Raise :class:`ConfigurationError` unless dimensions match ``config``."""
        L = config.num_relays
        if not (len(self.h_1r) == len(self.h_2r) == len(self.h_rp) == L):
            raise ConfigurationError(f"expected {L} relays in every relay channel list")
        expected = [
            (self.h_1r, (config.m_r, config.m_t1), "h_1r"),
            (self.h_2r, (config.m_r, config.m_t2), "h_2r"),
            (self.h_rp, (config.m_r, config.m_pu), "h_rp"),
            ((self.h_1p,), (config.m_t1, config.m_pu), "h_1p"),
            ((self.h_2p,), (config.m_t2, config.m_pu), "h_2p"),
        ]
        for mats, shape, name in expected:
            for mat in mats:
                if np.shape(mat) != shape:
                    raise ConfigurationError(
                        f"{name} has shape {np.shape(mat)}, expected {shape}"
                    )
                if not np.all(np.isfinite(mat)):
                    raise ConfigurationError(f"{name} has non-finite entries")


@dataclass(frozen=True)
class AmplificationProfile:
    """Diagonal relay gains; ``w[i][k]`` is applied at antenna ``k`` of relay ``i``."""

    w: tuple

    def __post_init__(self):
        for wi in self.w:
            wi = np.asarray(wi)
            if np.any(~np.isfinite(wi)) or np.any(wi < 0):
                raise ConfigurationError("amplification factors must be finite and >= 0")

    def as_array(self) -> np.ndarray:
        """Gains stacked into an ``(L, m_r)`` array."""
        return np.asarray(self.w, dtype=float)


def _complex_gaussian(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    # real and imaginary parts interleaved per entry, row-major
    draw = rng.standard_normal((rows, cols, 2))
    return (draw[..., 0] + 1j * draw[..., 1]) / np.sqrt(2.0)


def generate_rayleigh_channels(config: NetworkConfig, seed: int) -> ChannelSet:
    """Draw i.i.d. CN(0, 1) channel matrices.

    The draw order is fixed: ``h_1r[0..L)``, ``h_2r[0..L)``, ``h_rp[0..L)``,
    ``h_1p``, ``h_2p``, each matrix row-major with (real, imag) pairs, all
    from ``numpy.random.default_rng(seed)``.
    """
    rng = np.random.default_rng(seed)
    L = config.num_relays
    h_1r = tuple(_complex_gaussian(rng, config.m_r, config.m_t1) for _ in range(L))
    h_2r = tuple(_complex_gaussian(rng, config.m_r, config.m_t2) for _ in range(L))
    h_rp = tuple(_complex_gaussian(rng, config.m_r, config.m_pu) for _ in range(L))
    h_1p = _complex_gaussian(rng, config.m_t1, config.m_pu)
    h_2p = _complex_gaussian(rng, config.m_t2, config.m_pu)
    return ChannelSet(h_1r=h_1r, h_2r=h_2r, h_rp=h_rp, h_1p=h_1p, h_2p=h_2p)


def uniform_amplification(config: NetworkConfig, w: float) -> AmplificationProfile:
    """Same gain ``w`` at every antenna of every relay (``W_i = w I``)."""
    return AmplificationProfile(
        w=tuple(np.full(config.m_r, float(w)) for _ in range(config.num_relays))
    )


def _relay_input_power(p1, p2, channels: ChannelSet, n0: float) -> np.ndarray:
    """Received power per relay antenna, shape ``(L, m_r)``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    return np.array(
        [
            np.abs(h1) ** 2 @ p1 + np.abs(h2) ** 2 @ p2 + n0
            for h1, h2 in zip(channels.h_1r, channels.h_2r)
        ]
    )


def amplification_from_relay_power(
    relay_powers: Sequence[Sequence[float]],
    p1,
    p2,
    channels: ChannelSet,
    n0: float,
) -> AmplificationProfile:
    """Gains that make every relay antenna transmit its requested power.

    ``|w_i^k|^2`` is the requested output power divided by the power the
    antenna receives from both terminals plus noise.
    """
    relay_powers = np.asarray(relay_powers, dtype=float)
    if np.any(relay_powers < 0) or np.any(np.asarray(p1) < 0) or np.any(np.asarray(p2) < 0):
        raise ValueError("powers must be non-negative")
    received = _relay_input_power(p1, p2, channels, n0)
    w = np.sqrt(relay_powers / received)
    return AmplificationProfile(w=tuple(w))


def relay_output_power(
    amp: AmplificationProfile, p1, p2, channels: ChannelSet, n0: float
) -> np.ndarray:
    """Per-antenna relay transmit power, shape ``(L, m_r)``."""
    return _relay_input_power(p1, p2, channels, n0) * amp.as_array() ** 2
