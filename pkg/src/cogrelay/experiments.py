"""Seeded Monte Carlo sweeps over terminal power and relay amplification.

Trial ``t`` of a run with seed ``s`` draws its channels from
:func:`trial_seed` ``(s, t)``, independently of the sweep value, so every
point of a sweep (and every sweep sharing the seed and antenna layout) sees
the same fading realizations.
"""

from __future__ import annotations

import dataclasses
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import NetworkConfig, dbm_to_linear, generate_rayleigh_channels, uniform_amplification
from .effective import compute_effective_channels, sum_rate
from .errors import ConfigurationError
from .optimizer import INFEASIBLE, SolverOptions, check_structural_feasibility, subgradient_solve
from .oracle import projected_gradient_solve

__all__ = [
    "TERMINAL_POWER",
    "AMPLIFICATION",
    "CSV_HEADER",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "PointResult",
    "trial_seed",
    "solve_trial",
    "monte_carlo_point",
    "sweep_terminal_power",
    "sweep_amplification",
    "run_sweep",
    "OracleInstance",
    "random_oracle_instance",
    "OracleComparison",
    "oracle_compare",
]

TERMINAL_POWER = "terminal-power"
AMPLIFICATION = "amplification"
CSV_HEADER = "sweep_value,mean_rate_bps_hz,stderr,infeasible_trials"


def trial_seed(seed: int, trial: int) -> int:
    """64-bit channel seed for one trial, mixed by ``numpy.random.SeedSequence``."""
    state = np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)]).generate_state(
        1, dtype=np.uint64
    )
    return int(state[0])


class PointResult(NamedTuple):
    mean_rate: float
    stderr: float
    infeasible_trials: int
    trial_rates: tuple = ()
    trial_status: tuple = ()


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    base: NetworkConfig
    sweep_values: tuple
    uniform_w: float = 0.2
    trials: int = 500
    seed: int = 1
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.kind not in (TERMINAL_POWER, AMPLIFICATION):
            raise ConfigurationError(f"unknown sweep kind {self.kind!r}")
        values = tuple(float(v) for v in self.sweep_values)
        if not values:
            raise ConfigurationError("sweep needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        object.__setattr__(self, "sweep_values", values)


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    mean_rate: float
    stderr: float
    infeasible_trials: int
    trial_rates: tuple = ()


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    metadata: dict

    @property
    def values(self) -> np.ndarray:
        return np.array([r.sweep_value for r in self.rows])

    @property
    def means(self) -> np.ndarray:
        return np.array([r.mean_rate for r in self.rows])

    @property
    def argmax_value(self) -> float:
        """Sweep value with the highest mean rate (first one on ties)."""
        return float(self.values[int(np.argmax(self.means))])

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            out.write(f"{r.sweep_value!r},{r.mean_rate!r},{r.stderr!r},{r.infeasible_trials}\n")
        return out.getvalue()

    def trials_csv(self) -> str:
        """Per-trial rates, one line per (sweep value, trial)."""
        out = io.StringIO()
        out.write("sweep_value,trial,rate_bps_hz\n")
        for r in self.rows:
            for t, rate in enumerate(r.trial_rates):
                out.write(f"{r.sweep_value!r},{t},{rate!r}\n")
        return out.getvalue()


def solve_trial(config: NetworkConfig, uniform_w: float, seed: int, trial: int, options=None):
    """Rate and solver status of one fading realization."""
    channels = generate_rayleigh_channels(config, trial_seed(seed, trial))
    amp = uniform_amplification(config, uniform_w)
    report = subgradient_solve(channels, amp, config, options)
    rate = 0.0 if report.status == INFEASIBLE else report.rate
    return rate, report.status


def _solve_trial_args(args):
    return solve_trial(*args)


def monte_carlo_point(
    config: NetworkConfig,
    uniform_w: float,
    trials: int,
    seed: int,
    options: SolverOptions | None = None,
    workers: int = 1,
) -> PointResult:
    """Mean sum rate over ``trials`` fading draws with ``W_i = uniform_w * I``.

    Infeasible trials count as rate 0 and are tallied separately.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    args = [(config, uniform_w, seed, t, options) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_solve_trial_args, args, chunksize=max(1, trials // (4 * workers))))
    else:
        outcomes = [solve_trial(*a) for a in args]
    rates = np.array([r for r, _ in outcomes])
    status = tuple(s for _, s in outcomes)
    mean = float(np.mean(rates))
    stderr = float(np.std(rates, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return PointResult(
        mean_rate=mean,
        stderr=stderr,
        infeasible_trials=sum(s == INFEASIBLE for s in status),
        trial_rates=tuple(float(r) for r in rates),
        trial_status=status,
    )


def _metadata(spec: SweepSpec) -> dict:
    return {
        "kind": spec.kind,
        "config": dataclasses.asdict(spec.base),
        "uniform_w": spec.uniform_w,
        "trials": spec.trials,
        "seed": spec.seed,
        "solver": dataclasses.asdict(spec.options),
    }


def _row(value, point: PointResult) -> SweepRow:
    return SweepRow(
        sweep_value=value,
        mean_rate=point.mean_rate,
        stderr=point.stderr,
        infeasible_trials=point.infeasible_trials,
        trial_rates=point.trial_rates,
    )


def sweep_terminal_power(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """One Monte Carlo point per terminal peak power (values in dBm)."""
    if spec.kind != TERMINAL_POWER:
        raise ConfigurationError("sweep_terminal_power needs a terminal-power spec")
    rows = []
    not_converged = 0
    for value in spec.sweep_values:
        config = dataclasses.replace(spec.base, p_t_peak=dbm_to_linear(value))
        point = monte_carlo_point(config, spec.uniform_w, spec.trials, spec.seed, spec.options, workers)
        not_converged += sum(s not in ("converged", INFEASIBLE) for s in point.trial_status)
        rows.append(_row(value, point))
    meta = _metadata(spec)
    meta["non_converged_trials"] = not_converged
    return SweepResult(rows=tuple(rows), metadata=meta)


def sweep_amplification(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """One Monte Carlo point per uniform relay gain ``w``; reports ``w_opt``."""
    if spec.kind != AMPLIFICATION:
        raise ConfigurationError("sweep_amplification needs an amplification spec")
    rows = []
    not_converged = 0
    for value in spec.sweep_values:
        point = monte_carlo_point(spec.base, value, spec.trials, spec.seed, spec.options, workers)
        not_converged += sum(s not in ("converged", INFEASIBLE) for s in point.trial_status)
        rows.append(_row(value, point))
    result = SweepResult(rows=tuple(rows), metadata=_metadata(spec))
    result.metadata["non_converged_trials"] = not_converged
    result.metadata["w_opt"] = result.argmax_value
    return result


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    if spec.kind == TERMINAL_POWER:
        return sweep_terminal_power(spec, workers)
    return sweep_amplification(spec, workers)


@dataclass(frozen=True)
class OracleInstance:
    config: NetworkConfig
    channels: object
    amp: object
    channel_seed: int
    w: float


def random_oracle_instance(rng: np.random.Generator) -> OracleInstance:
    """Small structurally feasible instance: two antennas everywhere, one or two relays.

    Budgets are drawn in dBm (terminal 0..30, relay 0..20, interference
    0..20) and ``w`` uniformly in [0.05, 0.5]; draws that violate a
    power-independent constraint are rejected.
    """
    while True:
        L = int(rng.integers(1, 3))
        w = float(rng.uniform(0.05, 0.5))
        config = NetworkConfig.from_dbm(
            m_t1=2, m_t2=2, m_pu=2, m_r=2, num_relays=L,
            p_t_dbm=float(rng.uniform(0, 30)),
            p_r_dbm=float(rng.uniform(0, 20)),
            i_th_dbm=float(rng.uniform(0, 20)),
        )
        channel_seed = int(rng.integers(2**63))
        channels = generate_rayleigh_channels(config, channel_seed)
        amp = uniform_amplification(config, w)
        if check_structural_feasibility(channels, amp, config):
            return OracleInstance(config, channels, amp, channel_seed, w)


class OracleComparison(NamedTuple):
    solver_rate: float
    oracle_rate: float
    relative_gap: float
    status: str


def oracle_compare(instances: int, seed: int, options: SolverOptions | None = None) -> list:
    """Solver vs. projected-gradient oracle on ``instances`` random small instances."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(instances):
        inst = random_oracle_instance(rng)
        report = subgradient_solve(inst.channels, inst.amp, inst.config, options)
        ref = projected_gradient_solve(inst.channels, inst.amp, inst.config)
        eff = compute_effective_channels(inst.channels, inst.amp, inst.config.n0)
        ref_rate = sum_rate(ref.p1, ref.p2, eff)
        gap = abs(report.rate - ref_rate) / max(ref_rate, 1e-9)
        out.append(OracleComparison(report.rate, ref_rate, gap, report.status))
    return out
