"""Feasibility verdicts, input-correlation tuning and distortion search."""

from __future__ import annotations

import itertools
import math
import warnings
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import ScenarioConfig
from .finite_prob import ChannelStateModel
from .gmac_rates import GmacParams, PowerPolicy, RateTriple, rate_triple
from .power_opt import DEFAULT_TOL, optimize_sum_rate
from .source_models import DiscreteSource, GaussianLtConfig, gaussian_lt, lossless_lhs

__all__ = [
    "FeasibilityReport",
    "DistortionResult",
    "RateGrid",
    "ResultRow",
    "check",
    "check_lossless",
    "tune_rho",
    "min_distortion_lt",
    "sweep",
    "EPS_FEAS",
]

EPS_FEAS = 1e-9
VERDICTS = ("feasible", "marginal", "infeasible")


@dataclass(frozen=True)
class FeasibilityReport:
    lhs: RateTriple
    rhs: RateTriple
    margins: tuple[float, float, float]
    verdict: str
    policy: PowerPolicy
    rho_tilde: float
    kkt_residual: float = float("nan")
    converged: bool = True

    @property
    def min_margin(self) -> float:
        return min(self.margins)


def verdict_for(margins: Sequence[float], eps: float = EPS_FEAS) -> str:
    worst = min(margins)
    if worst > eps:
        return "feasible"
    if worst >= -eps:
        return "marginal"
    return "infeasible"


def check(lhs: RateTriple, model: ChannelStateModel, params: GmacParams, policy: PowerPolicy,
          eps: float = EPS_FEAS) -> FeasibilityReport:
    """Compare required rates against the channel bounds under ``policy``."""
    rhs = rate_triple(model, policy, params)
    margins = rhs - lhs
    return FeasibilityReport(lhs, rhs, margins, verdict_for(margins, eps), policy, params.rho_tilde)


def check_lossless(src: DiscreteSource, model, params, policy, eps: float = EPS_FEAS) -> FeasibilityReport:
    return check(lossless_lhs(src), model, params, policy, eps)


def _optimized_report(lhs, model, params, tol, eps) -> FeasibilityReport:
    opt = optimize_sum_rate(model, params, tol=tol)
    rep = check(lhs, model, params, opt.policy, eps)
    return FeasibilityReport(rep.lhs, rep.rhs, rep.margins, rep.verdict, rep.policy, rep.rho_tilde,
                             opt.kkt_residual, opt.converged)


def tune_rho(
    lhs: RateTriple | DiscreteSource,
    model: ChannelStateModel,
    params: GmacParams,
    rho_max: float = 1.0,
    tol: float = 1e-4,
    solver_tol: float = DEFAULT_TOL,
    eps: float = EPS_FEAS,
) -> tuple[float, FeasibilityReport]:
    """Largest input correlation in [0, rho_max] at which the optimized policy is feasible.

    The sum margin grows with the correlation and the individual margins
    shrink, so the search bisects on the individual pair and then checks the
    sum inequality at the boundary found. Probes that contradict that
    monotone structure raise a warning.
    """
    if isinstance(lhs, DiscreteSource):
        lhs = lossless_lhs(lhs)
    if not 0 <= rho_max <= 1:
        raise ValueError("rho_max must lie in [0, 1]")
    if not tol > 0:
        raise ValueError("tol must be positive")

    probes: list[tuple[float, FeasibilityReport]] = []

    def at(r):
        rep = _optimized_report(lhs, model, params.with_rho(r), solver_tol, eps)
        probes.append((r, rep))
        return rep

    def pair_ok(rep):
        return min(rep.margins[:2]) > eps

    top = at(rho_max)
    if top.verdict == "feasible" or top.margins[2] <= eps:
        # either done, or the sum inequality fails even at the largest correlation
        best_r, best = rho_max, top
    else:
        lo_rep = at(0.0)
        if not pair_ok(lo_rep):
            best_r, best = 0.0, lo_rep
        else:
            lo, hi = 0.0, rho_max
            best_r, best = lo, lo_rep
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                rep = at(mid)
                if pair_ok(rep):
                    lo, best_r, best = mid, mid, rep
                else:
                    hi = mid
    _warn_if_not_monotone(probes, eps)
    return best_r, best


def _warn_if_not_monotone(probes, eps):
    ordered = sorted(probes, key=lambda t: t[0])
    sums = [rep.margins[2] for _, rep in ordered]
    pairs = [min(rep.margins[:2]) for _, rep in ordered]
    if any(b < a - 1e-9 for a, b in zip(sums, sums[1:])):
        warnings.warn("sum margin decreased with input correlation; bisection assumptions violated")
    if any(b > a + 1e-9 for a, b in zip(pairs, pairs[1:])):
        warnings.warn("individual margins increased with input correlation; bisection assumptions violated")


@dataclass(frozen=True)
class RateGrid:
    """Quantization-rate grid; symmetric R1 = R2 unless ``full_2d``."""

    r_max: float = 4.0
    step: float = 0.01
    full_2d: bool = False

    def rates(self) -> np.ndarray:
        n = int(math.floor(self.r_max / self.step + 1e-9))
        return np.round(np.arange(n + 1) * self.step, 12)

    def points(self) -> list[tuple[float, float]]:
        r = [float(v) for v in self.rates()]
        if self.full_2d:
            return list(itertools.product(r, r))
        return [(v, v) for v in r]


@dataclass(frozen=True)
class DistortionResult:
    r1: float
    r2: float
    d1: float
    d2: float
    d_sum: float
    report: FeasibilityReport


def min_distortion_lt(
    rho: float,
    model: ChannelStateModel,
    params: GmacParams,
    grid: RateGrid | Sequence[tuple[float, float]] = RateGrid(),
    solver_tol: float = DEFAULT_TOL,
    eps: float = EPS_FEAS,
) -> DistortionResult | None:
    """Grid search for the smallest d1 + d2 of the LT scheme; ``None`` if every point is infeasible.

    The input correlation at each grid point is fixed by the rates, and the
    power policy is re-optimized for it. The power budgets and noise come
    from ``params``; its own correlation is ignored.
    """
    points = grid.points() if isinstance(grid, RateGrid) else [tuple(map(float, p)) for p in grid]
    if not points:
        raise ValueError("rate grid is empty")
    if any(r < 0 for p in points for r in p):
        raise ValueError("rates must be nonnegative")

    cache: dict[float, object] = {}
    best: DistortionResult | None = None
    for r1, r2 in sorted(points):
        derived = gaussian_lt(GaussianLtConfig(rho, r1, r2))
        rt = derived.rho_w
        if rt not in cache:
            warm = cache[next(reversed(cache))].policy if cache else None
            cache[rt] = optimize_sum_rate(model, params.with_rho(rt), tol=solver_tol, init=warm)
        opt = cache[rt]
        rep = check(derived.lhs, model, params.with_rho(rt), opt.policy, eps)
        if rep.verdict == "infeasible":
            continue
        d_sum = derived.d1 + derived.d2
        # strict improvement only: ties keep the lexicographically smaller rates
        if best is None or d_sum < best.d_sum:
            rep = FeasibilityReport(rep.lhs, rep.rhs, rep.margins, rep.verdict, rep.policy, rt,
                                    opt.kkt_residual, opt.converged)
            best = DistortionResult(r1, r2, derived.d1, derived.d2, d_sum, rep)
    return best


@dataclass(frozen=True)
class ResultRow:
    axis_value: float
    r1_bound: float
    r2_bound: float
    sum_bound: float
    d1: float
    d2: float
    verdict: str
    kkt_residual: float
    converged: bool


SWEEP_AXES = ("crossover_p", "rho_tilde", "source_rho")


def _scenario_at(scenario: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "crossover_p":
        p = Fraction(value).limit_denominator(10**9)
        return scenario.replace(csit="bsc", crossover=p)
    if axis == "rho_tilde":
        return scenario.replace(rho_tilde=float(value))
    return scenario.replace(source_rho=float(value))


def sweep_point(scenario: ScenarioConfig, axis: str, value: float) -> ResultRow:
    sc = _scenario_at(scenario, axis, value)
    model = sc.channel_model()
    params = sc.params()
    if sc.source == "gaussian":
        res = min_distortion_lt(sc.source_rho, model, params, RateGrid(sc.r_max, sc.r_step, sc.full_2d), sc.tol)
        if res is None:
            nan = float("nan")
            return ResultRow(value, nan, nan, nan, nan, nan, "infeasible", nan, True)
        rep = res.report
        return ResultRow(value, *rep.rhs.as_tuple(), res.d1, res.d2, rep.verdict, rep.kkt_residual, rep.converged)
    opt = optimize_sum_rate(model, params, tol=sc.tol)
    rhs = rate_triple(model, opt.policy, params)
    if sc.source == "discrete":
        verdict = check_lossless(sc.discrete_source(), model, params, opt.policy).verdict
    else:
        verdict = "n/a"
    return ResultRow(value, *rhs.as_tuple(), 0.0, 0.0, verdict, opt.kkt_residual, opt.converged)


def sweep(scenario: ScenarioConfig, axis: str, points: Sequence[float], max_workers: int | None = None) -> list[ResultRow]:
    """One row per axis point, in axis order.

    ``crossover_p`` and ``rho_tilde`` rows hold the optimized rate bounds;
    with a Gaussian source every row comes from the distortion search. Points
    run in separate processes when ``max_workers`` > 1.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    points = [float(p) for p in points]
    if any(b < a for a, b in zip(points, points[1:])):
        raise ValueError("sweep points must be sorted")
    if axis == "rho_tilde" and scenario.source == "gaussian":
        raise ValueError("the LT scheme fixes the input correlation from the rates; sweep source_rho instead")
    if axis == "source_rho" and scenario.source != "gaussian":
        raise ValueError("source_rho sweeps need a gaussian source")
    lo, hi = {"crossover_p": (0.0, 0.5), "rho_tilde": (-1.0, 1.0), "source_rho": (-1.0, 1.0)}[axis]
    for p in points:
        if not lo <= p <= hi or (axis == "source_rho" and abs(p) >= 1):
            raise ValueError(f"sweep point {p} outside the valid range of {axis}")
    if not points:
        return []
    run: Callable = sweep_point
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(run, [scenario] * len(points), [axis] * len(points), points))
    return [run(scenario, axis, p) for p in points]
