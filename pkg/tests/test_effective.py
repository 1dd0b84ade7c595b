import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogrelay.channel import AmplificationProfile, ChannelSet, generate_rayleigh_channels, uniform_amplification
from cogrelay.effective import EffectiveChannel, compute_effective_channels, rate_gradient, sum_rate
from cogrelay.errors import ConfigurationError

from conftest import small_config


def scalar_channels(h1=1.0, h2=2.0):
    one = np.ones((1, 1), dtype=complex)
    return ChannelSet(
        h_1r=(h1 * one,), h_2r=(h2 * one,), h_rp=(one,), h_1p=one.copy(), h_2p=one.copy()
    )


def flat_channel(sigma1, sigma2, n1=1.0, n2=1.0):
    sigma1 = np.asarray(sigma1, dtype=float)
    return EffectiveChannel(
        a1=np.diag(sigma1), a2=np.diag(sigma2), sigma1=sigma1, sigma2=np.asarray(sigma2, dtype=float),
        n1=n1, n2=n2, m_min=len(sigma1),
    )


def test_zero_amplification():
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, 1)
    eff = compute_effective_channels(ch, uniform_amplification(config, 0.0), config.n0)
    assert np.all(eff.a1 == 0) and np.all(eff.a2 == 0)
    assert np.all(eff.sigma1 == 0) and np.all(eff.sigma2 == 0)
    assert eff.n1 == eff.n2 == config.n0


def test_scalar_case():
    n0 = 1e-4
    eff = compute_effective_channels(scalar_channels(), AmplificationProfile(w=(np.array([0.2]),)), n0)
    assert eff.a1[0, 0] == pytest.approx(0.4)
    assert eff.a2[0, 0] == pytest.approx(0.4)
    np.testing.assert_allclose(eff.sigma1, [0.4])
    np.testing.assert_allclose(eff.sigma2, [0.4])
    assert eff.n1 == pytest.approx(n0 * (1 + 0.04 * 1))
    assert eff.n2 == pytest.approx(n0 * (1 + 0.04 * 4))


def test_random_instance_against_explicit_assembly():
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, 11)
    w = np.array([[0.3, 0.1], [0.25, 0.4]])
    amp = AmplificationProfile(w=tuple(w))
    eff = compute_effective_channels(ch, amp, config.n0)
    a1 = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for x in range(2):
            for y in range(2):
                a1[x, y] += sum(ch.h_2r[i][k, x] * w[i, k] * ch.h_1r[i][k, y] for k in range(2))
    np.testing.assert_allclose(eff.a1, a1, rtol=1e-12)
    np.testing.assert_allclose(eff.a2, a1.T, rtol=1e-12)
    # singular values via eigenvalues of A^H A
    ev = np.sort(np.linalg.eigvalsh(a1.conj().T @ a1))[::-1]
    np.testing.assert_allclose(eff.sigma1, np.sqrt(np.maximum(ev, 0)), rtol=1e-10)
    np.testing.assert_allclose(eff.sigma2, eff.sigma1, rtol=1e-10)
    n1 = config.n0 * (1 + sum(abs(w[i, k] * ch.h_1r[i][k, v]) ** 2 for i in range(2) for k in range(2) for v in range(2)))
    assert eff.n1 == pytest.approx(n1, rel=1e-12)


def test_dimension_mismatch():
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, 1)
    with pytest.raises(ConfigurationError):
        compute_effective_channels(ch, uniform_amplification(small_config(num_relays=3), 0.2), config.n0)


def test_sum_rate_examples():
    eff = flat_channel([1.0], [1.0])
    assert sum_rate([0.0], [0.0], eff) == 0.0
    assert sum_rate([1.0], [1.0], eff) == pytest.approx(1.0, rel=1e-15)


def test_sum_rate_literal_transcription():
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, 21)
    eff = compute_effective_channels(ch, uniform_amplification(config, 0.3), config.n0)
    p1, p2 = np.array([3.0, 1.5]), np.array([0.2, 7.0])
    expected = 0.0
    for q in range(2):
        expected += 0.5 * np.log2(1 + eff.sigma2[q] ** 2 * p2[q] / eff.n2)
        expected += 0.5 * np.log2(1 + eff.sigma1[q] ** 2 * p1[q] / eff.n1)
    assert sum_rate(p1, p2, eff) == pytest.approx(expected, rel=1e-12)


def test_extra_antennas_carry_no_rate():
    config = small_config(m_t1=3, m_t2=2)
    ch = generate_rayleigh_channels(config, 2)
    eff = compute_effective_channels(ch, uniform_amplification(config, 0.2), config.n0)
    assert eff.m_min == 2 and eff.sigma1.size == 2
    assert sum_rate([1, 2, 0], [1, 1], eff) == sum_rate([1, 2, 50], [1, 1], eff)
    d1, _ = rate_gradient([1, 2, 50], [1, 1], eff)
    assert d1[2] == 0.0


def test_negative_power_rejected():
    eff = flat_channel([1.0], [1.0])
    with pytest.raises(ValueError):
        sum_rate([-1.0], [0.0], eff)


def test_rate_gradient_matches_finite_differences():
    config = small_config()
    ch = generate_rayleigh_channels(config, 8)
    eff = compute_effective_channels(ch, uniform_amplification(config, 0.2), config.n0)
    p1, p2 = np.array([2.0, 0.5]), np.array([1.0, 3.0])
    d1, _ = rate_gradient(p1, p2, eff)
    for q in range(2):
        h = 1e-6 * max(p1[q], 1)
        up, dn = p1.copy(), p1.copy()
        up[q] += h
        dn[q] -= h
        fd = (sum_rate(up, p2, eff) - sum_rate(dn, p2, eff)) / (2 * h)
        assert d1[q] == pytest.approx(fd, rel=1e-6)


seeds = st.integers(0, 2**32 - 1)
# exactly zero or large enough that w^2 |h|^2 survives next to 1 in floating point
gains = st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 2.0)), min_size=4, max_size=4)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, w=gains)
def test_singular_values_agree(seed, w):
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, seed)
    eff = compute_effective_channels(ch, AmplificationProfile(w=tuple(np.reshape(w, (2, 2)))), config.n0)
    scale = max(eff.sigma1[0], 1e-300)
    assert np.max(np.abs(eff.sigma1 - eff.sigma2)) <= 1e-10 * scale
    assert np.all(np.diff(eff.sigma1) <= 0) and np.all(eff.sigma1 >= 0)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, w=gains)
def test_noise_floor(seed, w):
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, seed)
    eff = compute_effective_channels(ch, AmplificationProfile(w=tuple(np.reshape(w, (2, 2)))), config.n0)
    assert eff.n1 >= config.n0 and eff.n2 >= config.n0
    if not any(w):
        assert eff.n1 == eff.n2 == config.n0
    else:
        assert eff.n1 > config.n0 or eff.n2 > config.n0


@settings(max_examples=50, deadline=None)
@given(seed=seeds, c=st.floats(1e-3, 1e3))
def test_singular_values_scale_with_gain(seed, c):
    config = small_config(num_relays=3)
    ch = generate_rayleigh_channels(config, seed)
    base = compute_effective_channels(ch, uniform_amplification(config, 0.2), config.n0)
    scaled = compute_effective_channels(ch, uniform_amplification(config, 0.2 * c), config.n0)
    np.testing.assert_allclose(scaled.sigma1, c * base.sigma1, rtol=1e-10, atol=1e-12 * c * base.sigma1[0])


@settings(max_examples=50, deadline=None)
@given(
    seed=seeds,
    p=st.lists(st.floats(0, 1e3), min_size=4, max_size=4),
    idx=st.integers(0, 3),
    bump=st.floats(1e-6, 1e3),
)
def test_rate_monotone_in_power(seed, p, idx, bump):
    config = small_config()
    ch = generate_rayleigh_channels(config, seed)
    eff = compute_effective_channels(ch, uniform_amplification(config, 0.2), config.n0)
    x = np.array(p)
    y = x.copy()
    y[idx] += bump
    assert sum_rate(y[:2], y[2:], eff) >= sum_rate(x[:2], x[2:], eff)
