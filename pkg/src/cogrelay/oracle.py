"""Brute-force reference solvers for small instances.

Nothing here touches the dual machinery in :mod:`cogrelay.optimizer`; the
constraint polytope is transcribed again from the channel matrices so the
two pipelines can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import AmplificationProfile, ChannelSet, NetworkConfig
from .effective import compute_effective_channels
from .errors import InfeasibleError
from .optimizer import PowerAllocation

__all__ = [
    "OracleOptions",
    "constraint_system",
    "water_filling",
    "project_onto_polytope",
    "projected_gradient_solve",
    "grid_search_solve",
    "grid_error_bound",
]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class OracleOptions:
    max_iter: int = 500
    tol: float = 1e-8
    armijo: float = 1e-4


def constraint_system(
    channels: ChannelSet, amp: AmplificationProfile, config: NetworkConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Feasible set ``{x >= 0 : G x <= h}`` over ``x = [p1, p2]``.

    Rows: T1 budget, T2 budget, one row per relay budget, first-slot
    interference, second-slot interference.
    """
    m1, m2, mr, mp = config.m_t1, config.m_t2, config.m_r, config.m_pu
    n0 = config.n0
    rows = []
    rhs = []
    rows.append([1.0] * m1 + [0.0] * m2)
    rhs.append(config.p_t_peak)
    rows.append([0.0] * m1 + [1.0] * m2)
    rhs.append(config.p_t_peak)
    for i in range(config.num_relays):
        row = [0.0] * (m1 + m2)
        const = 0.0
        for k in range(mr):
            w2 = amp.w[i][k] ** 2
            for v in range(m1):
                row[v] += abs(channels.h_1r[i][k, v]) ** 2 * w2
            for u in range(m2):
                row[m1 + u] += abs(channels.h_2r[i][k, u]) ** 2 * w2
            const += n0 * w2
        rows.append(row)
        rhs.append(config.p_r_peak - const)
    row = [0.0] * (m1 + m2)
    for j in range(mp):
        for v in range(m1):
            row[v] += abs(channels.h_1p[v, j]) ** 2
        for u in range(m2):
            row[m1 + u] += abs(channels.h_2p[u, j]) ** 2
    rows.append(row)
    rhs.append(config.i_th)
    row = [0.0] * (m1 + m2)
    const = 0.0
    for i in range(config.num_relays):
        for j in range(mp):
            for k in range(mr):
                scale = amp.w[i][k] ** 2 * abs(channels.h_rp[i][k, j]) ** 2
                for v in range(m1):
                    row[v] += abs(channels.h_1r[i][k, v]) ** 2 * scale
                for u in range(m2):
                    row[m1 + u] += abs(channels.h_2r[i][k, u]) ** 2 * scale
                const += n0 * scale
    rows.append(row)
    rhs.append(config.i_th - const)
    return np.array(rows), np.array(rhs)


def water_filling(gains, total_power: float, tol: float = 1e-15) -> np.ndarray:
    """Classic water-filling ``P_q = (mu - 1/g_q)^+`` with ``sum P = total_power``.

    The water level is found by bisection. Channels with zero gain get no power.
    """
    gains = np.asarray(gains, dtype=float)
    power = np.zeros_like(gains)
    live = gains > 0
    if total_power <= 0 or not np.any(live):
        return power
    floors = 1.0 / gains[live]
    lo, hi = 0.0, total_power + floors.max()
    for _ in range(400):
        mu = 0.5 * (lo + hi)
        if np.sum(np.maximum(mu - floors, 0.0)) > total_power:
            hi = mu
        else:
            lo = mu
        if hi - lo <= tol * hi:
            break
    power[live] = np.maximum(0.5 * (lo + hi) - floors, 0.0)
    return power


def project_onto_polytope(y, G, h, metric=None, start=None) -> np.ndarray:
    """Closest point of ``{x >= 0 : G x <= h}`` to ``y``.

    Distance is measured in the diagonal metric ``sum metric_j (x_j - y_j)^2``
    (Euclidean when ``metric`` is None). Solved exactly by a primal
    active-set method started from the feasible point ``start`` (default the
    origin, which needs ``h >= 0``).
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    d = np.ones(n) if metric is None else np.asarray(metric, dtype=float)
    d = d / d.max()
    A = np.vstack([G, -np.eye(n)])
    b = np.concatenate([h, np.zeros(n)])
    x = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()
    if np.any(A @ x > b + 1e-12 * np.maximum(np.abs(b), 1.0)):
        raise InfeasibleError("start point is not feasible")
    scale = np.maximum(np.abs(b), 1.0)
    work = [i for i in range(len(b)) if A[i] @ x >= b[i] - 1e-12 * scale[i]]
    work = [i for i in work if i >= len(h)] or work  # prefer the bounds at a vertex
    for _ in range(20 * (len(b) + n)):
        grad = d * (x - y)
        Aw = A[work]
        k = len(work)
        # null-space step: exact zero once the working set spans R^n
        if k:
            rows = Aw / np.linalg.norm(Aw, axis=1)[:, None]
            _, sv, vt = np.linalg.svd(rows)
            rank = int(np.sum(sv > 1e-12 * sv[0]))
            Z = vt[rank:].T
        else:
            Z = np.eye(n)
        if Z.shape[1]:
            p = Z @ np.linalg.solve(Z.T @ (d[:, None] * Z), -(Z.T @ grad))
        else:
            p = np.zeros(n)
        if np.max(np.abs(p), initial=0.0) <= 1e-12 * max(1.0, np.max(np.abs(x - y))):
            if k == 0:
                return np.maximum(x, 0.0)
            mult = np.linalg.lstsq(Aw.T, -grad, rcond=None)[0]
            if np.min(mult) >= -1e-12 * np.max(np.abs(mult)):
                return np.maximum(x, 0.0)
            work.pop(int(np.argmin(mult)))
            continue
        Ap = A @ p
        slack = b - A @ x
        alpha, block = 1.0, None
        for i in range(len(b)):
            if i not in work and Ap[i] > 0:
                ratio = max(slack[i], 0.0) / Ap[i]
                if ratio < alpha:
                    alpha, block = ratio, i
        x = x + alpha * p
        if block is not None:
            work.append(block)
    raise ArithmeticError("active-set projection did not terminate")


def _objective_parts(channels, amp, config):
    eff = compute_effective_channels(channels, amp, config.n0)
    gains = np.zeros(config.m_t1 + config.m_t2)
    g1, g2 = eff.gains()
    gains[: eff.m_min] = g1
    gains[config.m_t1 : config.m_t1 + eff.m_min] = g2
    return gains


def _rate(x, gains):
    return 0.5 * np.sum(np.log2(1.0 + gains * x), axis=-1)


def _split(x, config) -> PowerAllocation:
    x = np.asarray(x, dtype=float)
    return PowerAllocation(p1=x[: config.m_t1].copy(), p2=x[config.m_t1 :].copy())


def projected_gradient_solve(
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
    options: OracleOptions | None = None,
) -> PowerAllocation:
    """Maximize the sum rate over the constraint polytope by projected ascent.

    Each step moves along the gradient scaled by the (diagonal) inverse
    curvature and projects back in that same metric; an Armijo backtrack on
    the segment keeps the ascent monotone. Iteration stops once the scaled
    gradient-mapping norm drops below ``options.tol``.
    """
    options = options or OracleOptions()
    G, h = constraint_system(channels, amp, config)
    if np.any(h < 0):
        raise InfeasibleError("power-independent constraint terms exceed their bounds")
    gains = _objective_parts(channels, amp, config)
    live = gains > 0
    x = np.zeros(gains.size)
    if not np.any(live):
        return _split(x, config)
    # dead coordinates only consume budget (G >= 0) so they stay at zero
    Gl, gl = G[:, live], gains[live]
    xl = np.zeros(gl.size)
    for _ in range(options.max_iter):
        grad = 0.5 * gl / (LN2 * (1.0 + gl * xl))
        curv = 0.5 * gl**2 / (LN2 * (1.0 + gl * xl) ** 2)
        target = project_onto_polytope(xl + grad / curv, Gl, h, metric=curv)
        step = target - xl
        mapping = float(np.sqrt(np.sum(curv * step**2)))
        if mapping <= options.tol:
            xl = target
            break
        slope = float(grad @ step)
        f0 = _rate(xl, gl)
        t = 1.0
        while t > 1e-12:
            if _rate(xl + t * step, gl) >= f0 + options.armijo * t * slope:
                break
            t *= 0.5
        xl = xl + t * step
    x[live] = xl
    return _split(x, config)


def grid_error_bound(channels, amp, config, step) -> float:
    """Upper bound on the rate lost by rounding the optimum down to a grid."""
    gains = _objective_parts(channels, amp, config)
    step = np.broadcast_to(np.asarray(step, dtype=float), gains.shape)
    return float(np.sum(0.5 * gains / LN2 * step))


def grid_search_solve(
    channels: ChannelSet,
    amp: AmplificationProfile,
    config: NetworkConfig,
    grid_steps: int,
    *,
    tight_box: bool = False,
    max_points: int = 20_000_000,
) -> PowerAllocation:
    """Exhaustive search over a uniform grid of ``grid_steps + 1`` points per axis.

    The axis range is ``[0, P_t]``; with ``tight_box`` each axis stops at the
    largest value that coordinate can take on its own while staying feasible.
    """
    n = config.m_t1 + config.m_t2
    if n > 4:
        raise ValueError(f"grid search limited to 4 power coordinates, got {n}")
    if grid_steps < 1:
        raise ValueError("grid_steps must be >= 1")
    total = (grid_steps + 1) ** n
    if total > max_points:
        raise ValueError(f"grid of {total} points exceeds max_points={max_points}")
    G, h = constraint_system(channels, amp, config)
    if np.any(h < 0):
        raise InfeasibleError("power-independent constraint terms exceed their bounds")
    gains = _objective_parts(channels, amp, config)
    upper = np.full(n, config.p_t_peak)
    if tight_box:
        with np.errstate(divide="ignore"):
            ratio = np.where(G > 0, h[:, None] / G, np.inf)
        upper = np.minimum(upper, ratio.min(axis=0))
    axes = [np.linspace(0.0, ub, grid_steps + 1) for ub in upper]

    best_rate = -np.inf
    best = np.zeros(n)
    # chunk over the first axis to bound memory
    if n > 1:
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, n - 1)
    else:
        rest = np.zeros((1, 0))
    for x0 in axes[0]:
        pts = np.column_stack([np.full(len(rest), x0), rest])
        ok = np.all(pts @ G.T <= h * (1 + 1e-12) + 1e-15, axis=1)
        if not np.any(ok):
            continue
        rates = np.where(ok, _rate(pts, gains), -np.inf)
        idx = int(np.argmax(rates))
        if rates[idx] > best_rate:
            best_rate = rates[idx]
            best = pts[idx]
    return _split(best, config)
