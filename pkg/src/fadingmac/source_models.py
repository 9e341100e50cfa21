"""Required rates for discrete lossless sources and for the Gaussian LT scheme.

The Gaussian quantities assume zero-mean unit-variance sources U1, U2 with
correlation rho, quantized through the forward test channel
W_i = a_i (U_i + V_i), var V_i = (1 - a_i) / a_i, which gives I(U_i; W_i) = R_i
with a_i = 1 - 2**(-2 R_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .finite_prob import FiniteJointPmf, conditional_entropy, entropy
from .gmac_rates import RateTriple

__all__ = [
    "DiscreteSource",
    "GaussianLtConfig",
    "GaussianLtDerived",
    "lossless_lhs",
    "gaussian_lt",
    "mc_conditional_variance",
]


@dataclass(frozen=True)
class DiscreteSource:
    pmf: FiniteJointPmf

    def __post_init__(self):
        if self.pmf.width != 2:
            raise ValueError("a discrete source pmf must be over pairs (u1, u2)")


@dataclass(frozen=True)
class GaussianLtConfig:
    rho: float
    r1: float
    r2: float

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError(f"source correlation must satisfy |rho| < 1, got {self.rho!r}")
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("quantization rates must be nonnegative")


@dataclass(frozen=True)
class GaussianLtDerived:
    a1: float
    a2: float
    rho_w: float
    d1: float
    d2: float
    lhs: RateTriple

    @property
    def d_sum(self) -> float:
        return self.d1 + self.d2


def lossless_lhs(src: DiscreteSource) -> RateTriple:
    """(H(U1|U2), H(U2|U1), H(U1,U2)) in bits."""
    pmf = src.pmf
    return RateTriple(conditional_entropy(pmf, given=1), conditional_entropy(pmf, given=0), entropy(pmf))


def quantizer_gain(rate: float) -> float:
    return -math.expm1(-2.0 * rate * math.log(2.0))


def gaussian_lt(cfg: GaussianLtConfig) -> GaussianLtDerived:
    a1, a2 = quantizer_gain(cfg.r1), quantizer_gain(cfg.r2)
    rho2 = cfg.rho * cfg.rho
    shared = 1.0 - a1 * a2 * rho2
    d1 = (1.0 - a1) * (1.0 - rho2 * a2) / shared
    d2 = (1.0 - a2) * (1.0 - rho2 * a1) / shared
    # I(W1; W2), subtracted from every required rate
    overlap = 0.5 * math.log2(shared)
    lhs = RateTriple(cfg.r1 + overlap, cfg.r2 + overlap, cfg.r1 + cfg.r2 + overlap)
    return GaussianLtDerived(a1, a2, cfg.rho * math.sqrt(a1 * a2), d1, d2, lhs)


def mc_conditional_variance(cfg: GaussianLtConfig, n_samples: int = 1_000_000, seed: int = 0):
    """Monte Carlo estimate of var[U_i | W1, W2] from the linear MMSE residual.

    Returns ``(d1_hat, d2_hat, stderr)`` with ``stderr`` a length-2 array. A
    quantizer with zero rate emits a constant codeword and is dropped from the
    regression; with nothing left the known unit source variance is returned.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, 4))
    u1 = z[:, 0]
    u2 = cfg.rho * z[:, 0] + math.sqrt(1.0 - cfg.rho**2) * z[:, 1]
    cols = []
    for a, u, v in ((quantizer_gain(cfg.r1), u1, z[:, 2]), (quantizer_gain(cfg.r2), u2, z[:, 3])):
        if a > 0:
            cols.append(a * (u + math.sqrt((1.0 - a) / a) * v))
    if not cols:
        return 1.0, 1.0, np.zeros(2)
    w = np.column_stack(cols)
    dof = n_samples - w.shape[1]
    est, se = [], []
    for u in (u1, u2):
        coef = np.linalg.lstsq(w, u, rcond=None)[0]
        resid = float(np.sum((u - w @ coef) ** 2)) / dof
        est.append(resid)
        # Gaussian residuals: var(s^2) = 2 sigma^4 / dof
        se.append(resid * math.sqrt(2.0 / dof))
    return est[0], est[1], np.array(se)
