"""Constraints, Lagrangian, closed-form powers and the dual solver.

The optimization variable is ``x = [p1, p2]``. Every constraint is affine
with non-negative coefficients, ``g(x) = G x + c - bound <= 0``, with rows

    0           T1 power budget
    1           T2 power budget
    2 .. L+1    relay ``i`` output power budget
    L+2         interference at the PU in the first slot
    L+3         interference at the PU in the second slot

and the dual variables are stacked in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import AmplificationProfile, ChannelSet, NetworkConfig
from .effective import EffectiveChannel, compute_effective_channels, rate_gradient, sum_rate
from .errors import ConfigurationError, UnboundedPowerError

__all__ = [
    "PowerAllocation",
    "DualVariables",
    "SolverOptions",
    "SolveReport",
    "KKTResiduals",
    "constraint_matrix",
    "constraint_values",
    "check_structural_feasibility",
    "closed_form_power",
    "lagrangian_value",
    "dual_function",
    "subgradient_solve",
    "kkt_residuals",
]

LN2 = math.log(2.0)

CONVERGED = "converged"
ITERATION_LIMIT = "iteration-limit"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class PowerAllocation:
    """Per-antenna transmit powers of T1 and T2."""

    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float))
        object.__setattr__(self, "p2", np.asarray(self.p2, dtype=float))

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "PowerAllocation":
        return cls(np.zeros(config.m_t1), np.zeros(config.m_t2))

    @classmethod
    def from_vector(cls, x, config: NetworkConfig) -> "PowerAllocation":
        x = np.asarray(x, dtype=float)
        return cls(x[: config.m_t1].copy(), x[config.m_t1 :].copy())

    def vector(self) -> np.ndarray:
        return np.concatenate([self.p1, self.p2])


@dataclass(frozen=True)
class DualVariables:
    lambda1: float
    lambda2: float
    lambda_r: np.ndarray
    lambda_th1: float
    lambda_th2: float

    def __post_init__(self):
        object.__setattr__(self, "lambda_r", np.asarray(self.lambda_r, dtype=float))
        if np.any(self.vector() < 0) or not np.all(np.isfinite(self.vector())):
            raise ValueError("Lagrange multipliers must be finite and non-negative")

    @classmethod
    def from_vector(cls, lam) -> "DualVariables":
        lam = np.asarray(lam, dtype=float)
        return cls(
            lambda1=float(lam[0]),
            lambda2=float(lam[1]),
            lambda_r=lam[2:-2].copy(),
            lambda_th1=float(lam[-2]),
            lambda_th2=float(lam[-1]),
        )

    @classmethod
    def uniform(cls, value: float, num_relays: int) -> "DualVariables":
        return cls.from_vector(np.full(num_relays + 4, float(value)))

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [[self.lambda1, self.lambda2], self.lambda_r, [self.lambda_th1, self.lambda_th2]]
        )


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of :func:`subgradient_solve`.

    ``method="newton"`` scales each dual step by the inverse curvature of the
    dual function; ``method="subgradient"`` uses the plain diminishing step
    ``step0 / sqrt(t)`` with ``step0 = step_scale * P_t / max|g(0)|``.
    """

    method: str = "newton"
    max_iter: int | None = None
    lambda_init: float = 1e-3
    feas_tol_rel: float = 1e-6
    cs_tol: float = 1e-5
    active_tol_rel: float = 1e-10
    step_scale: float = 0.1
    armijo: float = 1e-4

    def __post_init__(self):
        if self.method not in ("newton", "subgradient"):
            raise ConfigurationError(f"unknown solver method {self.method!r}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        for name in ("lambda_init", "feas_tol_rel", "cs_tol", "active_tol_rel", "step_scale", "armijo"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")

    def iteration_cap(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return 500 if self.method == "newton" else 100_000


@dataclass(frozen=True)
class SolveReport:
    allocation: PowerAllocation
    duals: DualVariables
    rate: float
    iterations: int
    max_constraint_violation: float
    duality_gap_estimate: float
    status: str


@dataclass(frozen=True)
class KKTResiduals:
    primal_violation: float
    comp_slackness: float
    stationarity: float
    # stationarity divided by the rate derivative, per coordinate
    stationarity_rel: float = 0.0


def constraint_matrix(
    channels: ChannelSet, amp: AmplificationProfile, config: NetworkConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(G, c, bound)`` with ``g(x) = G @ x + c - bound``."""
    L = config.num_relays
    w2 = amp.as_array() ** 2  # (L, m_r)
    abs1 = np.abs(np.stack(channels.h_1r)) ** 2  # (L, m_r, m_t1)
    abs2 = np.abs(np.stack(channels.h_2r)) ** 2  # (L, m_r, m_t2)
    # PU gain seen from each relay antenna, summed over PU antennas
    rp = np.sum(np.abs(np.stack(channels.h_rp)) ** 2, axis=2)  # (L, m_r)

    n = config.m_t1 + config.m_t2
    G = np.zeros((L + 4, n))
    c = np.zeros(L + 4)
    G[0, : config.m_t1] = 1.0
    G[1, config.m_t1 :] = 1.0
    G[2 : 2 + L, : config.m_t1] = np.einsum("ik,ikv->iv", w2, abs1)
    G[2 : 2 + L, config.m_t1 :] = np.einsum("ik,iku->iu", w2, abs2)
    c[2 : 2 + L] = config.n0 * w2.sum(axis=1)
    G[L + 2, : config.m_t1] = np.sum(np.abs(channels.h_1p) ** 2, axis=1)
    G[L + 2, config.m_t1 :] = np.sum(np.abs(channels.h_2p) ** 2, axis=1)
    G[L + 3, : config.m_t1] = np.einsum("ik,ikv->v", w2 * rp, abs1)
    G[L + 3, config.m_t1 :] = np.einsum("ik,iku->u", w2 * rp, abs2)
    c[L + 3] = config.n0 * np.sum(w2 * rp)
    bound = np.concatenate(
        [[config.p_t_peak] * 2, [config.p_r_peak] * L, [config.i_th] * 2]
    )
    return G, c, bound


def constraint_values(
    alloc: PowerAllocation,
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
) -> np.ndarray:
    """Constraint functions ``g`` (length ``L + 4``); feasible iff all ``<= 0``."""
    G, c, bound = constraint_matrix(channels, amp, config)
    return G @ alloc.vector() + c - bound


def check_structural_feasibility(
    channels: ChannelSet, amp: AmplificationProfile, config: NetworkConfig
) -> bool:
    """Whether zero transmit power satisfies every constraint.

    Relay noise amplification makes the relay budgets and the second-slot
    interference non-zero even when both terminals are silent.
    """
    G, c, bound = constraint_matrix(channels, amp, config)
    return bool(np.all(c - bound <= 0))


def _stream_gains(eff: EffectiveChannel, config: NetworkConfig) -> np.ndarray:
    gains = np.zeros(config.m_t1 + config.m_t2)
    g1, g2 = eff.gains()
    gains[: eff.m_min] = g1
    gains[config.m_t1 : config.m_t1 + eff.m_min] = g2
    return gains


def _water_levels(prices, gains, cap, m_t1=0):
    """Maximizer of the Lagrangian for given per-coordinate prices ``D``."""
    x = np.zeros_like(gains)
    live = gains > 0
    if cap is None:
        if np.any(live & (prices <= 0)):
            j = int(np.flatnonzero(live & (prices <= 0))[0])
            if j < m_t1:
                raise UnboundedPowerError(terminal=1, stream=j)
            raise UnboundedPowerError(terminal=2, stream=j - m_t1)
        x[live] = 1.0 / (2.0 * LN2 * prices[live]) - 1.0 / gains[live]
        return np.maximum(x, 0.0)
    with np.errstate(divide="ignore"):
        level = np.where(prices[live] > 0, 1.0 / (2.0 * LN2 * prices[live]), np.inf)
    x[live] = np.clip(level - 1.0 / gains[live], 0.0, cap[live])
    return x


def closed_form_power(
    duals: DualVariables,
    eff: EffectiveChannel,
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
    cap=None,
) -> PowerAllocation:
    """Per-stream powers maximizing the Lagrangian for fixed multipliers.

    Each stream is water-filled against its own price: the sum of the
    multipliers weighted by how much one unit of its power loads each
    constraint. Streams beyond ``m_min`` or with a zero singular value get
    no power. ``cap`` (scalar or per-coordinate) clips the result; without it
    a zero price on a live stream raises :class:`UnboundedPowerError`.
    """
    G, _, _ = constraint_matrix(channels, amp, config)
    prices = G.T @ duals.vector()
    gains = _stream_gains(eff, config)
    if cap is not None:
        cap = np.broadcast_to(np.asarray(cap, dtype=float), gains.shape)
    x = _water_levels(prices, gains, cap, config.m_t1)
    return PowerAllocation.from_vector(x, config)


def lagrangian_value(
    duals: DualVariables,
    alloc: PowerAllocation,
    eff: EffectiveChannel,
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
) -> float:
    """``R(alloc) - lambda . g(alloc)``."""
    g = constraint_values(alloc, channels, amp, config)
    return sum_rate(alloc.p1, alloc.p2, eff) - float(duals.vector() @ g)


class _Problem:
    """Solver-internal view of one instance in vector form."""

    def __init__(self, channels, amp, config, eff=None):
        self.config = config
        self.eff = eff if eff is not None else compute_effective_channels(channels, amp, config.n0)
        G, c, bound = constraint_matrix(channels, amp, config)
        self.G = G
        self.h = bound - c
        self.gains = _stream_gains(self.eff, config)
        self.live = self.gains > 0
        # largest value each coordinate can take alone; twice that is a cap
        # the optimum never reaches, so it only bounds far-off dual iterates
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(G > 0, np.maximum(self.h, 0.0)[:, None] / G, np.inf)
        self.upper = ratio.min(axis=0)
        self.cap = 2.0 * self.upper

    def power(self, lam):
        return _water_levels(self.G.T @ lam, self.gains, self.cap)

    def rate(self, x):
        return 0.5 * float(np.sum(np.log2(1.0 + self.gains * x)))

    def g(self, x):
        return self.G @ x - self.h

    def dual(self, lam):
        x = self.power(lam)
        return self.rate(x) - float(lam @ self.g(x)), x

    def make_feasible(self, x):
        """Scale ``x`` down uniformly until every constraint holds."""
        load = self.G @ x
        over = load > self.h
        if not np.any(over):
            return x
        factor = float(np.min(self.h[over] / load[over]))
        return x * max(factor, 0.0)


def dual_function(
    duals: DualVariables,
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
) -> float:
    """``max_P L(lambda, P)`` over the (redundantly) boxed power set."""
    return _Problem(channels, amp, config).dual(duals.vector())[0]


def _newton_direction(prob: _Problem, lam, x, grad, free):
    """Regularized Newton step on the free multipliers."""
    prices = prob.G.T @ lam
    inner = prob.live & (x > 0) & (x < prob.cap) & (prices > 0)
    curv = np.zeros_like(x)
    curv[inner] = 1.0 / (2.0 * LN2 * prices[inner] ** 2)
    H = (prob.G[free] * curv) @ prob.G[free].T
    scale = float(np.max(np.diag(H), initial=0.0)) or 1.0
    d = np.zeros_like(lam)
    d[free] = -np.linalg.solve(H + 1e-10 * scale * np.eye(H.shape[0]), grad[free])
    return d


def _finish(prob, lam, x, iterations, status) -> SolveReport:
    x = prob.make_feasible(x)
    x[~prob.live] = 0.0
    g = prob.g(x)
    return SolveReport(
        allocation=PowerAllocation.from_vector(x, prob.config),
        duals=DualVariables.from_vector(lam),
        rate=prob.rate(x),
        iterations=iterations,
        max_constraint_violation=float(max(np.max(g), 0.0)),
        duality_gap_estimate=float(prob.dual(lam)[0] - prob.rate(x)),
        status=status,
    )


def _is_converged(prob, lam, x, opts) -> bool:
    # a stream clipped at the cap is not a stationary point of the Lagrangian
    if np.any(x[prob.live] >= prob.cap[prob.live]):
        return False
    # judged on the unscaled iterate: scaling would zero the binding row
    g = prob.g(x)
    scale = np.minimum(prob.config.p_t_peak, np.maximum(prob.h, 0.0))
    if np.any(g > opts.feas_tol_rel * scale) or np.max(np.abs(lam * g)) > opts.cs_tol:
        return False
    # rows carrying a price must be tight, not merely |lambda g| small
    priced = lam > 0
    return bool(np.all(np.abs(g[priced]) <= opts.active_tol_rel * scale[priced]))


def _segment_search(prob, lam, d, phi, slope, t_hi, armijo):
    """Step length along ``lam + t d`` for ``t`` in ``(0, t_hi]``.

    Tries the full step first; otherwise bisects on the directional
    derivative, which is monotone because the dual is convex and C1.
    """
    phi_t, x_t = prob.dual(lam + t_hi * d)
    if phi_t <= phi + armijo * t_hi * slope:
        return t_hi, phi_t, x_t
    lo, hi = 0.0, t_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if -(d @ prob.g(prob.power(lam + mid * d))) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * hi:
            break
    t = hi if lo == 0.0 else lo
    phi_t, x_t = prob.dual(lam + t * d)
    return t, phi_t, x_t


def _solve_newton(prob: _Problem, opts: SolverOptions) -> SolveReport:
    lam = np.full(prob.G.shape[0], opts.lambda_init)
    phi, x = prob.dual(lam)
    it = 0
    for it in range(1, opts.iteration_cap() + 1):
        if _is_converged(prob, lam, x, opts):
            return _finish(prob, lam, x, it - 1, CONVERGED)
        grad = -prob.g(x)
        # multipliers near zero whose constraint is slack go straight to zero
        eps = min(1e-3 * float(np.max(lam, initial=0.0)),
                  float(np.linalg.norm(lam - np.maximum(lam - grad, 0.0))))
        held = (lam <= eps) & (grad > 0)
        if np.any(held & (lam > 0)):
            lam = np.where(held, 0.0, lam)
            phi, x = prob.dual(lam)
            grad = -prob.g(x)
        free = ~held
        d = _newton_direction(prob, lam, x, grad, free)
        d[(lam <= 0) & (d < 0)] = 0.0
        slope = float(grad @ d)
        if slope >= 0:
            d = np.where(free, -grad, 0.0)
            d[(lam <= 0) & (d < 0)] = 0.0
            slope = float(grad @ d)
            if slope >= 0:
                break
        shrinking = d < 0
        t_max = float(np.min(lam[shrinking] / -d[shrinking])) if np.any(shrinking) else np.inf
        t, phi, x = _segment_search(prob, lam, d, phi, slope, min(1.0, t_max), opts.armijo)
        lam = np.maximum(lam + t * d, 0.0)
        if t == t_max:
            snap = shrinking & (lam <= np.abs(d) * 1e-15) & (lam > 0)
            if np.any(snap):
                lam[snap] = 0.0
                phi, x = prob.dual(lam)
    status = CONVERGED if _is_converged(prob, lam, x, opts) else ITERATION_LIMIT
    return _finish(prob, lam, x, it, status)


def _solve_subgradient(prob: _Problem, opts: SolverOptions) -> SolveReport:
    lam = np.full(prob.G.shape[0], opts.lambda_init)
    g0 = np.abs(prob.g(np.zeros_like(prob.gains)))
    step0 = opts.step_scale * prob.config.p_t_peak / max(float(np.max(g0)), 1e-300)
    best_rate, best_lam, best_x = -np.inf, lam, np.zeros_like(prob.gains)
    it = 0
    for it in range(1, opts.iteration_cap() + 1):
        x = prob.power(lam)
        rate = prob.rate(prob.make_feasible(x))
        if rate > best_rate:
            best_rate, best_lam, best_x = rate, lam, x
        if _is_converged(prob, lam, x, opts):
            return _finish(prob, lam, x, it, CONVERGED)
        # dual subgradient is -g; descend on the dual
        lam = np.maximum(lam + step0 / math.sqrt(it) * prob.g(x), 0.0)
    return _finish(prob, best_lam, best_x, it, ITERATION_LIMIT)


def subgradient_solve(
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
    options: SolverOptions | None = None,
) -> SolveReport:
    """Optimal terminal powers via the Lagrange dual.

    The dual is minimized over ``lambda >= 0`` by projected steps along the
    negative dual subgradient ``g(P(lambda))``, where ``P(lambda)`` is
    :func:`closed_form_power`. The reported allocation is always feasible:
    it is scaled down uniformly if the last primal iterate overshoots.
    """
    options = options or SolverOptions()
    channels.check(config)
    prob = _Problem(channels, amp, config)
    if np.any(prob.h < 0):
        zero = PowerAllocation.zeros(config)
        return SolveReport(
            allocation=zero,
            duals=DualVariables.uniform(0.0, config.num_relays),
            rate=0.0,
            iterations=0,
            max_constraint_violation=float(np.max(-prob.h)),
            duality_gap_estimate=float("nan"),
            status=INFEASIBLE,
        )
    if options.method == "newton":
        return _solve_newton(prob, options)
    return _solve_subgradient(prob, options)


def kkt_residuals(
    report: SolveReport,
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
    eff: EffectiveChannel | None = None,
) -> KKTResiduals:
    """Primal feasibility, complementary slackness and stationarity residuals."""
    if report.status == INFEASIBLE:
        raise ValueError("no KKT residuals for an infeasible instance")
    eff = eff if eff is not None else compute_effective_channels(channels, amp, config.n0)
    alloc = report.allocation
    lam = report.duals.vector()
    G, c, bound = constraint_matrix(channels, amp, config)
    g = G @ alloc.vector() + c - bound
    d1, d2 = rate_gradient(alloc.p1, alloc.p2, eff)
    grad = np.concatenate([d1, d2])
    active = alloc.vector() > 0
    resid = np.abs(grad - G.T @ lam)[active]
    rel = resid / np.maximum(grad[active], 1e-300)
    return KKTResiduals(
        primal_violation=float(max(np.max(g), 0.0)),
        comp_slackness=float(np.max(np.abs(lam * g))),
        stationarity=float(np.max(resid, initial=0.0)),
        stationarity_rel=float(np.max(rel, initial=0.0)),
    )
