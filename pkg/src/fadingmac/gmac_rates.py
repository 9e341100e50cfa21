"""Rate bounds of the fading Gaussian MAC under a CSIT-driven power policy.

All three bounds are expectations over the finite joint support of
(h1, h2, csit1, csit2) and are evaluated by exact enumeration; the Monte Carlo
estimator below exists only as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .finite_prob import ChannelStateModel

__all__ = [
    "GmacParams",
    "PowerPolicy",
    "RateTriple",
    "rate_triple",
    "individual_bound",
    "sum_bound",
    "sum_bound_gradient",
    "mc_rate_triple",
]

_HALF_LOG2E = 0.5 / math.log(2.0)


@dataclass(frozen=True)
class GmacParams:
    sigma2: float = 1.0
    rho_tilde: float = 0.0
    pbar1: float = 1.0
    pbar2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"noise variance must be positive, got {self.sigma2!r}")
        if not abs(self.rho_tilde) <= 1:
            raise ValueError(f"input correlation must lie in [-1, 1], got {self.rho_tilde!r}")
        if self.pbar1 < 0 or self.pbar2 < 0:
            raise ValueError("average power budgets must be nonnegative")

    def with_rho(self, rho_tilde: float) -> "GmacParams":
        return GmacParams(self.sigma2, rho_tilde, self.pbar1, self.pbar2)

    @property
    def budgets(self) -> np.ndarray:
        return np.array([self.pbar1, self.pbar2], dtype=float)


@dataclass(frozen=True)
class PowerPolicy:
    """Power pair (P1, P2) for each CSIT state."""

    table: Mapping[tuple, tuple[float, float]]

    def __post_init__(self):
        table = {tuple(k): (float(v[0]), float(v[1])) for k, v in dict(self.table).items()}
        for state, (p1, p2) in table.items():
            if not (p1 >= 0 and p2 >= 0):
                raise ValueError(f"negative or NaN power {(p1, p2)} at CSIT state {state}")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_array(cls, model: ChannelStateModel, powers: np.ndarray) -> "PowerPolicy":
        powers = np.asarray(powers, dtype=float).reshape(len(model.csit_states), 2)
        return cls({s: (float(a), float(b)) for s, (a, b) in zip(model.csit_states, powers)})

    def to_array(self, model: ChannelStateModel) -> np.ndarray:
        """Powers aligned with ``model.csit_states``, shape (n_states, 2)."""
        try:
            return np.array([self.table[s] for s in model.csit_states], dtype=float)
        except KeyError as exc:
            raise ValueError(f"policy is not defined on CSIT state {exc.args[0]}") from None

    def average_power(self, model: ChannelStateModel) -> np.ndarray:
        return model.csit_probs @ self.to_array(model)

    def __hash__(self):
        return hash(tuple(sorted(self.table.items())))


@dataclass(frozen=True)
class RateTriple:
    """Bounds on R1, R2 and R1 + R2, in bits per channel use."""

    r1_bound: float
    r2_bound: float
    sum_bound: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1_bound, self.r2_bound, self.sum_bound)

    def __sub__(self, other: "RateTriple") -> tuple[float, float, float]:
        return tuple(a - b for a, b in zip(self.as_tuple(), other.as_tuple()))


def _check(model: ChannelStateModel, params: GmacParams):
    if model.csir_mode != "perfect":
        raise NotImplementedError("rate bounds are only defined for perfect CSIR")


def _per_row_terms(model, powers, rho):
    """Per-support-row log arguments minus one, each divided by the noise variance later."""
    h1, h2, idx, w = model.rate_rows
    p1 = powers[idx, 0]
    p2 = powers[idx, 1]
    g1 = h1 * h1 * p1
    g2 = h2 * h2 * p2
    cross = 2.0 * h1 * h2 * rho * np.sqrt(p1 * p2)
    return w, g1, g2, g1 + g2 + cross


def _rates_from_array(model, powers, params: GmacParams) -> RateTriple:
    rho, s2 = params.rho_tilde, params.sigma2
    w, g1, g2, gs = _per_row_terms(model, powers, rho)
    shrink = 1.0 - rho * rho
    r1 = 0.5 * np.dot(w, np.log2(1.0 + g1 * shrink / s2))
    r2 = 0.5 * np.dot(w, np.log2(1.0 + g2 * shrink / s2))
    rs = 0.5 * np.dot(w, np.log2(1.0 + np.maximum(gs, 0.0) / s2))
    return RateTriple(float(r1), float(r2), float(rs))


def rate_triple(model: ChannelStateModel, policy: PowerPolicy, params: GmacParams) -> RateTriple:
    """Exact expectations of the two individual bounds and the sum bound."""
    _check(model, params)
    return _rates_from_array(model, policy.to_array(model), params)


def individual_bound(model, policy, params, which: int) -> float:
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    t = rate_triple(model, policy, params)
    return t.r1_bound if which == 1 else t.r2_bound


def sum_bound_value(model: ChannelStateModel, powers: np.ndarray, params: GmacParams) -> float:
    """Sum bound for a raw power array aligned with ``model.csit_states``."""
    _, _, _, gs = _per_row_terms(model, powers, params.rho_tilde)
    w = model.rate_rows[3]
    return float(0.5 * np.dot(w, np.log2(1.0 + np.maximum(gs, 0.0) / params.sigma2)))


def sum_bound(model, policy, params) -> float:
    _check(model, params)
    return sum_bound_value(model, policy.to_array(model), params)


def sum_bound_grad_array(model: ChannelStateModel, powers: np.ndarray, params: GmacParams) -> np.ndarray:
    """Gradient of the sum bound with respect to the (n_states, 2) power array.

    At a zero power the one-sided derivative is returned, which is +inf for the
    first user when the partner transmits with positive correlation.
    """
    h1, h2, idx, w = model.rate_rows
    rho, s2 = params.rho_tilde, params.sigma2
    p1 = powers[idx, 0]
    p2 = powers[idx, 1]
    a, b = h1 * h1, h2 * h2
    c = h1 * h2 * rho
    denom = s2 + np.maximum(a * p1 + b * p2 + 2.0 * c * np.sqrt(p1 * p2), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r21 = np.where(p1 > 0, np.sqrt(p2 / np.where(p1 > 0, p1, 1.0)), np.where(p2 > 0, np.inf, 0.0))
        r12 = np.where(p2 > 0, np.sqrt(p1 / np.where(p2 > 0, p2, 1.0)), np.where(p1 > 0, np.inf, 0.0))
        x1 = np.where(c == 0, 0.0, c * r21)
        x2 = np.where(c == 0, 0.0, c * r12)
    d1 = _HALF_LOG2E * w * (a + x1) / denom
    d2 = _HALF_LOG2E * w * (b + x2) / denom
    n = len(model.csit_states)
    return np.stack([np.bincount(idx, d1, minlength=n), np.bincount(idx, d2, minlength=n)], axis=1)


def sum_bound_hessian_blocks(model: ChannelStateModel, powers: np.ndarray, params: GmacParams) -> np.ndarray:
    """Per-CSIT-state 2x2 Hessians of the sum bound, shape (n_states, 2, 2).

    Powers in different states do not interact, so the full Hessian is block
    diagonal. Where either power of a row is zero the cross term is dropped,
    which gives the limit from the interior along that face.
    """
    h1, h2, idx, w = model.rate_rows
    rho, s2 = params.rho_tilde, params.sigma2
    p1 = powers[idx, 0]
    p2 = powers[idx, 1]
    a, b = h1 * h1, h2 * h2
    both = (p1 > 0) & (p2 > 0)
    c = np.where(both, h1 * h2 * rho, 0.0)
    q1 = np.where(both, p1, 1.0)
    q2 = np.where(both, p2, 1.0)
    denom = s2 + np.maximum(a * p1 + b * p2 + 2.0 * c * np.sqrt(q1 * q2), 0.0)
    u1 = a + c * np.sqrt(q2 / q1)
    u2 = b + c * np.sqrt(q1 / q2)
    k = _HALF_LOG2E * w
    h11 = k * (-0.5 * c * np.sqrt(q2) * q1**-1.5 / denom - (u1 / denom) ** 2)
    h22 = k * (-0.5 * c * np.sqrt(q1) * q2**-1.5 / denom - (u2 / denom) ** 2)
    h12 = k * (0.5 * c / np.sqrt(q1 * q2) / denom - u1 * u2 / denom**2)
    n = len(model.csit_states)
    out = np.empty((n, 2, 2))
    out[:, 0, 0] = np.bincount(idx, h11, minlength=n)
    out[:, 1, 1] = np.bincount(idx, h22, minlength=n)
    out[:, 0, 1] = out[:, 1, 0] = np.bincount(idx, h12, minlength=n)
    return out


def sum_bound_hess_diag(model: ChannelStateModel, powers: np.ndarray, params: GmacParams) -> np.ndarray:
    """Negated Hessian diagonal, shape (n_states, 2); nonnegative for rho_tilde >= 0."""
    blocks = sum_bound_hessian_blocks(model, powers, params)
    return -np.stack([blocks[:, 0, 0], blocks[:, 1, 1]], axis=1)


def sum_bound_gradient(model, policy, params) -> dict[tuple, tuple[float, float]]:
    """Per-CSIT-state partial derivatives of the sum bound."""
    _check(model, params)
    grad = sum_bound_grad_array(model, policy.to_array(model), params)
    return {s: (float(g[0]), float(g[1])) for s, g in zip(model.csit_states, grad)}


class MonteCarloRates(NamedTuple):
    estimate: RateTriple
    stderr: RateTriple
    n_samples: int


def mc_rate_triple(model, policy, params, n_samples: int = 1_000_000, seed: int = 0) -> MonteCarloRates:
    """Sample joint states and average the same log terms as :func:`rate_triple`."""
    _check(model, params)
    rng = np.random.default_rng(seed)
    h1, h2, idx, w = model.rate_rows
    rows = rng.choice(len(w), size=n_samples, p=w / w.sum())
    powers = policy.to_array(model)
    p1 = powers[idx[rows], 0]
    p2 = powers[idx[rows], 1]
    a, b = h1[rows] ** 2, h2[rows] ** 2
    rho, s2 = params.rho_tilde, params.sigma2
    shrink = 1.0 - rho * rho
    samples = 0.5 * np.stack(
        [
            np.log2(1.0 + a * p1 * shrink / s2),
            np.log2(1.0 + b * p2 * shrink / s2),
            np.log2(1.0 + np.maximum(a * p1 + b * p2 + 2.0 * h1[rows] * h2[rows] * rho * np.sqrt(p1 * p2), 0.0) / s2),
        ]
    )
    mean = samples.mean(axis=1)
    se = samples.std(axis=1, ddof=1) / math.sqrt(n_samples)
    return MonteCarloRates(RateTriple(*map(float, mean)), RateTriple(*map(float, se)), n_samples)
