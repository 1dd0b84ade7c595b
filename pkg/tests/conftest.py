import numpy as np
import pytest

from cogrelay.channel import NetworkConfig, generate_rayleigh_channels, uniform_amplification

_CRITERIA = pytest.StashKey[list]()


def small_config(**kw):
    params = dict(m_t1=2, m_t2=2, m_pu=2, m_r=2, num_relays=1, p_t_dbm=20, p_r_dbm=10, i_th_dbm=20)
    params.update(kw)
    return NetworkConfig.from_dbm(**params)


def instance(seed=5, w=0.2, **kw):
    config = small_config(**kw)
    return config, generate_rayleigh_channels(config, seed), uniform_amplification(config, w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(label, passed, detail)``."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def record(label, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        print(line)
        lines.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
