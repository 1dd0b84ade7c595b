"""End-to-end relayed channels, their eigen-channels and the sum rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import AmplificationProfile, ChannelSet
from .errors import ConfigurationError

__all__ = [
    "EffectiveChannel",
    "compute_effective_channels",
    "sum_rate",
    "rate_gradient",
]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class EffectiveChannel:
    """Two-way relayed channel after self-interference removal.

    ``a1`` carries T1's signal to T2 and ``a2`` carries T2's signal to T1.
    Singular values are sorted in descending order and truncated to
    ``m_min``; stream ``q`` of terminal ``m`` pairs with ``sigma{m}[q]``.
    """

    a1: np.ndarray
    a2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    n1: float
    n2: float
    m_min: int

    def gains(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-stream SNR per unit power, ``sigma**2 / N``."""
        return self.sigma1**2 / self.n1, self.sigma2**2 / self.n2


def _singular_values(a: np.ndarray) -> np.ndarray:
    """Descending singular values with numerically-zero ones set to exactly 0."""
    sigma = np.linalg.svd(a, compute_uv=False)
    if sigma.size:
        # same cutoff numpy.linalg.matrix_rank uses
        sigma[sigma <= sigma[0] * max(a.shape) * np.finfo(float).eps] = 0.0
    return sigma


def compute_effective_channels(
    channels: ChannelSet, amp: AmplificationProfile, n0: float
) -> EffectiveChannel:
    w = amp.as_array()
    L = channels.num_relays
    if w.ndim != 2 or w.shape[0] != L or w.shape[1] != channels.h_1r[0].shape[0]:
        raise ConfigurationError(
            f"amplification profile shape {w.shape} does not match {L} relays "
            f"with {channels.h_1r[0].shape[0]} antennas"
        )
    m_t1 = channels.h_1r[0].shape[1]
    m_t2 = channels.h_2r[0].shape[1]
    a1 = np.zeros((m_t2, m_t1), dtype=complex)
    a2 = np.zeros((m_t1, m_t2), dtype=complex)
    noise1 = 0.0
    noise2 = 0.0
    for wi, h1, h2 in zip(w, channels.h_1r, channels.h_2r):
        # transpose, not Hermitian, as in the reciprocal second hop
        a1 += h2.T @ (wi[:, None] * h1)
        a2 += h1.T @ (wi[:, None] * h2)
        noise1 += np.sum(np.abs(wi[:, None] * h1) ** 2)
        noise2 += np.sum(np.abs(wi[:, None] * h2) ** 2)
    m_min = min(m_t1, m_t2)
    sigma1 = _singular_values(a1)
    sigma2 = _singular_values(a2)
    return EffectiveChannel(
        a1=a1,
        a2=a2,
        sigma1=sigma1,
        sigma2=sigma2,
        n1=n0 * (1.0 + noise1),
        n2=n0 * (1.0 + noise2),
        m_min=m_min,
    )


def _check_powers(p1, p2):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if np.any(p1 < 0) or np.any(p2 < 0):
        raise ValueError("transmit powers must be non-negative")
    return p1, p2


def sum_rate(p1, p2, eff: EffectiveChannel) -> float:
    """Secondary sum rate in bits/s/Hz.

    Only the first ``m_min`` entries of each power vector contribute.
    """
    p1, p2 = _check_powers(p1, p2)
    g1, g2 = eff.gains()
    k = eff.m_min
    return 0.5 * float(np.sum(np.log2(1.0 + g2 * p2[:k])) + np.sum(np.log2(1.0 + g1 * p1[:k])))


def rate_gradient(p1, p2, eff: EffectiveChannel) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`sum_rate` with respect to each power."""
    p1, p2 = _check_powers(p1, p2)
    g1, g2 = eff.gains()
    k = eff.m_min
    d1 = np.zeros_like(p1)
    d2 = np.zeros_like(p2)
    d1[:k] = 0.5 * g1 / (LN2 * (1.0 + g1 * p1[:k]))
    d2[:k] = 0.5 * g2 / (LN2 * (1.0 + g2 * p2[:k]))
    return d1, d2
