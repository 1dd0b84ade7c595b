import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogrelay.channel import (
    AmplificationProfile,
    NetworkConfig,
    amplification_from_relay_power,
    dbm_to_linear,
    generate_rayleigh_channels,
    relay_output_power,
    uniform_amplification,
)
from cogrelay.errors import ConfigurationError

from conftest import small_config


@pytest.mark.parametrize("dbm, linear", [(0, 1.0), (20, 100.0), (10, 10.0), (-10, 0.1)])
def test_dbm_to_linear(dbm, linear):
    assert dbm_to_linear(dbm) == pytest.approx(linear, rel=1e-15)


def test_negative_infinity_dbm_is_zero():
    assert dbm_to_linear(-np.inf) == 0.0


def test_from_dbm_reads_noise_in_watts():
    config = small_config()
    assert config.n0 == pytest.approx(0.1)  # 1e-4 W = 0.1 mW
    assert config.p_t_peak == pytest.approx(100.0)


@pytest.mark.parametrize(
    "field, value",
    [("m_t1", 0), ("num_relays", 0), ("m_r", 1.5), ("p_t_peak", -1.0), ("i_th", float("nan")), ("n0", 0.0)],
)
def test_config_rejects_invalid(field, value):
    params = dict(m_t1=1, m_t2=1, m_pu=1, m_r=1, num_relays=1, p_t_peak=1.0, p_r_peak=1.0, i_th=1.0, n0=1.0)
    params[field] = value
    with pytest.raises(ConfigurationError):
        NetworkConfig(**params)


def test_channel_dimensions():
    config = NetworkConfig(m_t1=2, m_t2=3, m_pu=4, m_r=3, num_relays=2, p_t_peak=1, p_r_peak=1, i_th=1, n0=1)
    ch = generate_rayleigh_channels(config, 7)
    assert len(ch.h_1r) == len(ch.h_2r) == len(ch.h_rp) == 2
    assert all(h.shape == (3, 2) for h in ch.h_1r)
    assert all(h.shape == (3, 3) for h in ch.h_2r)
    assert all(h.shape == (3, 4) for h in ch.h_rp)
    assert ch.h_1p.shape == (2, 4)
    assert ch.h_2p.shape == (3, 4)
    ch.check(config)


def test_channels_are_deterministic():
    config = small_config(num_relays=3)
    a = generate_rayleigh_channels(config, 99)
    b = generate_rayleigh_channels(config, 99)
    for x, y in zip(a.h_1r + a.h_2r + a.h_rp + (a.h_1p, a.h_2p), b.h_1r + b.h_2r + b.h_rp + (b.h_1p, b.h_2p)):
        assert np.array_equal(x, y)
    c = generate_rayleigh_channels(config, 100)
    assert not np.array_equal(a.h_1p, c.h_1p)


def test_documented_draw_order():
    config = NetworkConfig(m_t1=2, m_t2=1, m_pu=1, m_r=2, num_relays=2, p_t_peak=1, p_r_peak=1, i_th=1, n0=1)
    ch = generate_rayleigh_channels(config, 4)
    # 8 + 4 + 4 relay entries, 2 + 1 direct entries
    raw = np.random.default_rng(4).standard_normal(2 * 19)
    z = (raw[0::2] + 1j * raw[1::2]) / np.sqrt(2)
    expected = np.concatenate(
        [h.ravel() for h in ch.h_1r + ch.h_2r + ch.h_rp] + [ch.h_1p.ravel(), ch.h_2p.ravel()]
    )
    assert np.array_equal(z, expected)


def test_unit_second_moment():
    config = NetworkConfig(m_t1=16, m_t2=16, m_pu=16, m_r=16, num_relays=150, p_t_peak=1, p_r_peak=1, i_th=1, n0=1)
    ch = generate_rayleigh_channels(config, 1)
    entries = np.concatenate([h.ravel() for h in ch.h_1r + ch.h_2r + ch.h_rp])
    assert entries.size >= 100_000
    assert abs(np.mean(np.abs(entries) ** 2) - 1.0) <= 0.02
    # circular symmetry: real and imaginary parts each carry half the power
    assert abs(np.mean(entries.real**2) - 0.5) <= 0.01
    assert abs(np.mean(entries.real * entries.imag)) <= 0.01


def test_check_rejects_wrong_shapes():
    config = small_config()
    ch = generate_rayleigh_channels(small_config(m_r=3), 1)
    with pytest.raises(ConfigurationError):
        ch.check(config)


def test_amplification_rejects_negative():
    with pytest.raises(ConfigurationError):
        AmplificationProfile(w=(np.array([0.1, -0.1]),))


def test_amplification_noise_only():
    config = NetworkConfig(m_t1=1, m_t2=1, m_pu=1, m_r=1, num_relays=1, p_t_peak=1, p_r_peak=1, i_th=1, n0=1e-4)
    ch = generate_rayleigh_channels(config, 0)
    amp = amplification_from_relay_power([[1.0]], [0.0], [0.0], ch, 1e-4)
    assert amp.as_array()[0, 0] == pytest.approx(100.0, rel=1e-12)


def test_amplification_zero_relay_power():
    config = small_config(num_relays=2)
    ch = generate_rayleigh_channels(config, 0)
    amp = amplification_from_relay_power(np.zeros((2, 2)), [1.0, 2.0], [3.0, 4.0], ch, config.n0)
    assert np.all(amp.as_array() == 0.0)


def test_relay_power_round_trip_literal():
    config = small_config(num_relays=1, m_r=2)
    ch = generate_rayleigh_channels(config, 3)
    relay = np.array([[2.5, 0.7]])
    p1, p2 = np.array([1.0, 3.0]), np.array([0.5, 2.0])
    amp = amplification_from_relay_power(relay, p1, p2, ch, config.n0)
    w = amp.as_array()
    for k in range(2):
        received = sum(p1[v] * abs(ch.h_1r[0][k, v]) ** 2 for v in range(2))
        received += sum(p2[u] * abs(ch.h_2r[0][k, u]) ** 2 for u in range(2))
        assert (received + config.n0) * w[0, k] ** 2 == pytest.approx(relay[0, k], rel=1e-12)


def test_uniform_amplification():
    config = small_config(num_relays=3, m_r=4)
    w = uniform_amplification(config, 0.3).as_array()
    assert w.shape == (3, 4)
    assert np.all(w == 0.3)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    relay=st.lists(st.floats(0, 1e3, allow_subnormal=False), min_size=4, max_size=4),
    powers=st.lists(st.floats(0, 1e3, allow_subnormal=False), min_size=4, max_size=4),
)
def test_round_trip_property(seed, relay, powers):
    config = small_config(num_relays=2, m_r=2)
    ch = generate_rayleigh_channels(config, seed)
    relay = np.reshape(relay, (2, 2))
    p1, p2 = np.array(powers[:2]), np.array(powers[2:])
    amp = amplification_from_relay_power(relay, p1, p2, ch, config.n0)
    back = relay_output_power(amp, p1, p2, ch, config.n0)
    np.testing.assert_allclose(back, relay, rtol=1e-10, atol=0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), idx=st.integers(0, 3), bump=st.floats(1e-3, 10))
def test_gain_decreases_with_terminal_power(seed, idx, bump):
    config = small_config(num_relays=2, m_r=2)
    ch = generate_rayleigh_channels(config, seed)
    relay = np.ones((2, 2))
    x = np.array([1.0, 2.0, 0.5, 1.5])
    y = x.copy()
    y[idx] += bump
    w0 = amplification_from_relay_power(relay, x[:2], x[2:], ch, config.n0).as_array()
    w1 = amplification_from_relay_power(relay, y[:2], y[2:], ch, config.n0).as_array()
    assert np.all(w1 < w0)
