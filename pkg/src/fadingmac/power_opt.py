"""Sum-rate power allocation under average power constraints.

The sum bound is concave in the stacked power vector for a nonnegative input
correlation, so projected gradient ascent converges to the global optimum and
a KKT residual certifies it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .finite_prob import ChannelStateModel
from .gmac_rates import (
    GmacParams,
    PowerPolicy,
    _check,
    sum_bound_grad_array,
    sum_bound_hess_diag,
    sum_bound_hessian_blocks,
    sum_bound_value,
)

__all__ = [
    "OptimizationResult",
    "optimize_sum_rate",
    "upa_policy",
    "random_tdma_policy",
    "kkt_residual",
    "project_budget",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
MAX_ITER = 100_000
# One-sided derivatives at zero power can be +inf; the ascent direction only
# needs to be large there.
_GRAD_CAP = 1e8
_ARMIJO = 1e-4
_METRIC_FLOOR = 1e-6


@dataclass(frozen=True)
class OptimizationResult:
    policy: PowerPolicy
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def project_budget(x: np.ndarray, q: np.ndarray, budget: float, metric: np.ndarray | None = None) -> np.ndarray:
    """Projection of ``x`` onto {y >= 0, q @ y <= budget}.

    Euclidean by default; with ``metric`` the distance is sum(metric * (y - x)**2).
    The solution is max(x - lam * q / metric, 0) for the smallest lam >= 0
    meeting the budget, and lam is located exactly among the breakpoints.
    """
    y = np.maximum(x, 0.0)
    if q @ y <= budget:
        return y
    if budget <= 0:
        return np.zeros_like(x)
    u = q if metric is None else q / metric
    pos = u > 0
    ratio = np.where(pos, x / np.where(pos, u, 1.0), -np.inf)
    # q @ max(x - lam u, 0) is piecewise linear and decreasing in lam
    bp = np.sort(ratio[pos])[::-1]
    lam = 0.0
    for k in range(len(bp)):
        active = ratio >= bp[k]
        lam = (q[active] @ x[active] - budget) / (q[active] @ u[active])
        if k + 1 == len(bp) or lam >= bp[k + 1]:
            break
    return np.maximum(x - max(lam, 0.0) * u, 0.0)


def _project(x: np.ndarray, q: np.ndarray, budgets: np.ndarray, metric: np.ndarray | None = None) -> np.ndarray:
    cols = [project_budget(x[:, i], q, budgets[i], None if metric is None else metric[:, i]) for i in range(2)]
    return np.stack(cols, axis=1)


def _kkt(x: np.ndarray, grad: np.ndarray, q: np.ndarray, budgets: np.ndarray) -> float:
    """Largest violation of the first-order conditions, on probability-normalized gradients.

    For each user the multiplier is set midway between the largest normalized
    gradient and the smallest one over positive-power states, which minimizes
    the worst stationarity gap.
    """
    norm = grad / q[:, None]
    worst = 0.0
    for i in range(2):
        g = norm[:, i]
        active = x[:, i] > 0
        used = q @ x[:, i]
        slack = budgets[i] - used
        worst = max(worst, -slack, -float(x[:, i].min()))
        if not active.any():
            # all-zero policy: stationarity needs mu >= max g, slackness needs mu * budget = 0
            mu_needed = max(float(g.max()), 0.0)
            worst = max(worst, mu_needed if budgets[i] > 0 else 0.0)
            continue
        hi = float(g.max())
        lo = float(g[active].min())
        mu = 0.5 * (hi + lo)
        worst = max(worst, 0.5 * (hi - lo), abs(mu * slack))
    return worst


def kkt_residual(model: ChannelStateModel, policy: PowerPolicy, params: GmacParams) -> float:
    _check(model, params)
    x = policy.to_array(model)
    g = sum_bound_grad_array(model, x, params)
    return _kkt(x, g, model.csit_probs, params.budgets)


def upa_policy(model: ChannelStateModel, params: GmacParams) -> PowerPolicy:
    """Constant power at the budget in every CSIT state."""
    return PowerPolicy({s: (params.pbar1, params.pbar2) for s in model.csit_states})


def random_tdma_policy(model: ChannelStateModel, params: GmacParams) -> PowerPolicy:
    """Only the stronger user transmits in each state, scaled to meet each budget on average."""
    if not model.has_perfect_csit:
        raise ValueError("random TDMA needs perfect CSIT to pick the stronger user")
    q = model.csit_probs
    share = np.zeros((len(model.csit_states), 2))
    for k, (h1, h2) in enumerate(model.csit_states):
        if h1 * h1 > h2 * h2:
            share[k] = (1.0, 0.0)
        elif h2 * h2 > h1 * h1:
            share[k] = (0.0, 1.0)
        else:
            share[k] = (0.5, 0.5)
    used = q @ share
    powers = np.zeros_like(share)
    for i, budget in enumerate(params.budgets):
        if used[i] > 0:
            powers[:, i] = share[:, i] * budget / used[i]
    return PowerPolicy.from_array(model, powers)


def _face_newton(x: np.ndarray, g: np.ndarray, blocks: np.ndarray, q: np.ndarray) -> np.ndarray | None:
    """Newton direction on the face of positive powers with the budget usage held fixed.

    Solves the equality-constrained quadratic model with the block-diagonal
    Hessian. The sum bound is flat along some directions (e.g. trading power
    between users in a symmetric state), so a tiny ridge keeps the system
    regular and least squares absorbs what is left.
    """
    n = len(q)
    free = np.flatnonzero(x.ravel() > 0)
    if free.size == 0:
        return None
    hess = np.zeros((2 * n, 2 * n))
    for k in range(n):
        hess[2 * k:2 * k + 2, 2 * k:2 * k + 2] = -blocks[k]
    h = hess[np.ix_(free, free)]
    h += 1e-10 * max(np.trace(h) / free.size, 1e-300) * np.eye(free.size)
    cons = np.zeros((2, free.size))
    cons[free % 2, np.arange(free.size)] = q[free // 2]
    cons = cons[cons.any(axis=1)]
    m = len(cons)
    kkt = np.block([[h, cons.T], [cons, np.zeros((m, m))]])
    rhs = np.concatenate([g.ravel()[free], np.zeros(m)])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    d = np.zeros(2 * n)
    d[free] = sol[:free.size]
    return d.reshape(n, 2)


def optimize_sum_rate(
    model: ChannelStateModel,
    params: GmacParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    init: PowerPolicy | np.ndarray | None = None,
) -> OptimizationResult:
    """Maximize the sum bound over policies meeting the average power budgets.

    Each iteration forms two ascent candidates and keeps the better one:

    * a projected gradient step in the metric of the Hessian diagonal, i.e.
      the scaled projection of ``x + g / D``, with Armijo backtracking from a
      unit step. The scaling absorbs the steep curvature of the correlated
      term near zero power.
    * a Newton step on the current face of positive powers, projected back
      onto the feasible set. It handles the flat and coupled directions the
      diagonal metric cannot see, and gives fast local convergence.

    Stops when the KKT residual drops below ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    _check(model, params)
    q = model.csit_probs
    budgets = params.budgets

    if init is None:
        x = np.tile(budgets, (len(q), 1))
    elif isinstance(init, PowerPolicy):
        x = init.to_array(model)
    else:
        x = np.array(init, dtype=float).reshape(len(q), 2)
    x = _project(x, q, budgets)

    def f(z):
        return sum_bound_value(model, z, params)

    def grad(z):
        return np.minimum(sum_bound_grad_array(model, z, params), _GRAD_CAP)

    def accept(f_new, step):
        # a few ulps of slack so rounding cannot stall the search at the optimum
        return f_new >= fx + _ARMIJO * float(np.sum(g * step)) - 4e-16 * abs(fx)

    fx = f(x)
    g = grad(x)
    res = _kkt(x, g, q, budgets)
    it = 0
    while res >= tol and it < max_iter:
        it += 1
        metric = np.maximum(sum_bound_hess_diag(model, x, params), _METRIC_FLOOR * q[:, None])
        d = _project(x + g / metric, q, budgets, metric) - x
        t = 1.0
        for _ in range(60):
            x_new = x + t * d
            f_new = f(x_new)
            if accept(f_new, t * d):
                break
            t *= 0.5

        d = _face_newton(x, g, sum_bound_hessian_blocks(model, x, params), q)
        if d is not None:
            t = 1.0
            for _ in range(30):
                x_try = _project(x + t * d, q, budgets)
                f_try = f(x_try)
                if accept(f_try, x_try - x):
                    if f_try > f_new:
                        x_new, f_new = x_try, f_try
                    break
                t *= 0.5

        if not np.any(x_new != x):
            break
        x, fx = x_new, f_new
        g = grad(x)
        res = _kkt(x, g, q, budgets)

    converged = res < tol
    if not converged:
        log.warning("power optimizer stopped after %d iterations with KKT residual %.3g", it, res)
    return OptimizationResult(PowerPolicy.from_array(model, x), fx, res, it, converged)
