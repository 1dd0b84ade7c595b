"""Quick invariant checks runnable from the command line."""

from __future__ import annotations

import dataclasses
from typing import Callable, NamedTuple

import numpy as np

from .channel import (
    NetworkConfig,
    amplification_from_relay_power,
    generate_rayleigh_channels,
    relay_output_power,
    uniform_amplification,
)
from .effective import compute_effective_channels, sum_rate
from .experiments import AMPLIFICATION, SweepSpec, oracle_compare, sweep_amplification
from .optimizer import DualVariables, closed_form_power, dual_function

__all__ = ["CheckResult", "run_selftest"]


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _config(rng, **kw):
    params = dict(m_t1=2, m_t2=2, m_pu=2, m_r=2, num_relays=2, p_t_dbm=20, p_r_dbm=10, i_th_dbm=20)
    params.update(kw)
    return NetworkConfig.from_dbm(**params)


def _round_trip(rng):
    config = _config(rng)
    worst = 0.0
    for _ in range(20):
        ch = generate_rayleigh_channels(config, int(rng.integers(2**32)))
        relay = rng.uniform(0, 10, size=(config.num_relays, config.m_r))
        p1, p2 = rng.uniform(0, 10, config.m_t1), rng.uniform(0, 10, config.m_t2)
        amp = amplification_from_relay_power(relay, p1, p2, ch, config.n0)
        back = relay_output_power(amp, p1, p2, ch, config.n0)
        worst = max(worst, float(np.max(np.abs(back - relay) / np.maximum(relay, 1e-300))))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def _noise_and_singular_values(rng):
    config = _config(rng)
    worst = 0.0
    floors_ok = True
    for _ in range(20):
        ch = generate_rayleigh_channels(config, int(rng.integers(2**32)))
        eff = compute_effective_channels(ch, uniform_amplification(config, rng.uniform(0, 1)), config.n0)
        floors_ok &= eff.n1 >= config.n0 and eff.n2 >= config.n0
        worst = max(worst, float(np.max(np.abs(eff.sigma1 - eff.sigma2)) / max(eff.sigma1[0], 1e-300)))
    return floors_ok and worst <= 1e-10, f"noise floors ok={floors_ok}, singular value mismatch {worst:.2e}"


def _rate_monotone(rng):
    config = _config(rng)
    ch = generate_rayleigh_channels(config, int(rng.integers(2**32)))
    eff = compute_effective_channels(ch, uniform_amplification(config, 0.2), config.n0)
    ok = True
    for _ in range(50):
        p1, p2 = rng.uniform(0, 10, 2), rng.uniform(0, 10, 2)
        base = sum_rate(p1, p2, eff)
        ok &= sum_rate(p1 + rng.uniform(0, 1, 2), p2, eff) >= base
        ok &= sum_rate(p1, p2 + rng.uniform(0, 1, 2), eff) >= base
    return ok, "sum rate non-decreasing in every power"


def _dual_convex(rng):
    config = _config(rng)
    ch = generate_rayleigh_channels(config, int(rng.integers(2**32)))
    amp = uniform_amplification(config, 0.2)
    worst = -np.inf
    for _ in range(50):
        a = DualVariables.from_vector(rng.exponential(0.05, config.num_relays + 4))
        b = DualVariables.from_vector(rng.exponential(0.05, config.num_relays + 4))
        mid = DualVariables.from_vector(0.5 * (a.vector() + b.vector()))
        excess = dual_function(mid, ch, amp, config) - 0.5 * (
            dual_function(a, ch, amp, config) + dual_function(b, ch, amp, config)
        )
        worst = max(worst, excess)
    return worst <= 1e-9, f"max midpoint excess {worst:.2e}"


def _closed_form_monotone(rng):
    config = _config(rng)
    ch = generate_rayleigh_channels(config, int(rng.integers(2**32)))
    amp = uniform_amplification(config, 0.2)
    eff = compute_effective_channels(ch, amp, config.n0)
    ok = True
    for _ in range(50):
        lam = rng.exponential(0.05, config.num_relays + 4) + 1e-6
        bumped = lam.copy()
        bumped[rng.integers(lam.size)] += rng.exponential(0.05)
        lo = closed_form_power(DualVariables.from_vector(bumped), eff, ch, amp, config)
        hi = closed_form_power(DualVariables.from_vector(lam), eff, ch, amp, config)
        ok &= bool(np.all(lo.vector() <= hi.vector()))
    return ok, "powers non-increasing in every multiplier"


def _oracle(rng):
    gaps = [c.relative_gap for c in oracle_compare(10, int(rng.integers(2**32)))]
    return max(gaps) <= 1e-3, f"max relative gap {max(gaps):.2e} over {len(gaps)} instances"


def _csv_deterministic(rng):
    config = _config(rng)
    spec = SweepSpec(AMPLIFICATION, config, (0.1, 0.2), trials=5, seed=int(rng.integers(2**32)))
    first = sweep_amplification(spec).to_csv()
    second = sweep_amplification(dataclasses.replace(spec)).to_csv()
    return first == second, "identical CSV bytes on rerun"


CHECKS: list[tuple[str, Callable]] = [
    ("relay-gain round trip", _round_trip),
    ("noise floors and singular values", _noise_and_singular_values),
    ("sum-rate monotonicity", _rate_monotone),
    ("dual convexity", _dual_convex),
    ("closed-form monotonicity", _closed_form_monotone),
    ("oracle agreement", _oracle),
    ("CSV determinism", _csv_deterministic),
]


def run_selftest(seed: int) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check(rng)
        except Exception as exc:  # report, don't abort the remaining checks
            passed, detail = False, f"raised {exc!r}"
        results.append(CheckResult(name, bool(passed), detail))
    return results
