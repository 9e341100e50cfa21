"""Command-line entry point: ``fadingmac <command> SCENARIO [options]``.

Every command writes one CSV table (header row first) to ``--out`` or stdout.
Exit status is 0 on success, 1 when a result is reported as an error
(``feasibility --strict`` on a non-feasible verdict, a failed ``validate``
comparison, or an empty distortion search), and 2 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, ScenarioError, load_scenario
from .gmac_rates import mc_rate_triple, rate_triple
from .planner import (
    EPS_FEAS,
    RateGrid,
    check,
    min_distortion_lt,
    sweep,
    tune_rho,
)
from .power_opt import optimize_sum_rate, random_tdma_policy, upa_policy
from .source_models import GaussianLtConfig, gaussian_lt, lossless_lhs, mc_conditional_variance

AXIS_ALIASES = {"p": "crossover_p", "crossover_p": "crossover_p", "rho_tilde": "rho_tilde",
                "rho": "source_rho", "source_rho": "source_rho"}


class InputError(Exception):
    pass


class ResultError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, int, np.floating, np.integer)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        out = f"{v:.6g}"
        return "0" if out == "-0" else out
    return str(v)


def render_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_points(text: str) -> list[float]:
    """Comma list; ``a,b,...,z`` expands to the arithmetic progression a, b, ..., z."""
    items = [t.strip() for t in text.split(",") if t.strip()]
    if "..." not in items:
        try:
            return [float(t) for t in items]
        except ValueError:
            raise InputError(f"cannot parse sweep points {text!r}") from None
    k = items.index("...")
    if k != 2 or len(items) != 4:
        raise InputError("use 'a,b,...,z' for an arithmetic progression")
    a, b, z = (float(items[i]) for i in (0, 1, 3))
    step = b - a
    if step <= 0 or z < a:
        raise InputError("progression must be increasing")
    n = int(round((z - a) / step))
    if abs(a + n * step - z) > 1e-9 * max(1.0, abs(z)):
        raise InputError("progression end is not reached by whole steps")
    return [round(a + i * step, 12) for i in range(n + 1)]


def _policy(name: str, model, params, tol):
    if name == "upa":
        return upa_policy(model, params), None
    if name == "tdma":
        try:
            return random_tdma_policy(model, params), None
        except ValueError as exc:
            raise InputError(str(exc)) from None
    opt = optimize_sum_rate(model, params, tol=tol)
    return opt.policy, opt


def _rho_tilde(args, sc: ScenarioConfig) -> float:
    r = getattr(args, "rho_tilde", None)
    if r is None:
        r = sc.rho_tilde if sc.rho_tilde is not None else sc.rho_max
    if r is None:
        raise InputError("no input correlation: set design.rho_tilde or pass --rho-tilde")
    return r


def cmd_rates(args, sc: ScenarioConfig):
    model = sc.channel_model()
    params = sc.params(_rho_tilde(args, sc))
    policy, _ = _policy(args.policy, model, params, sc.tol)
    t = rate_triple(model, policy, params)
    return ["policy", "rho_tilde", "r1_bound", "r2_bound", "sum_bound"], [[args.policy, params.rho_tilde, *t.as_tuple()]], 0


def cmd_optimize(args, sc: ScenarioConfig):
    model = sc.channel_model()
    params = sc.params(_rho_tilde(args, sc))
    opt = optimize_sum_rate(model, params, tol=args.tol or sc.tol)
    header = ["csit_1", "csit_2", "csit_prob", "p1", "p2", "objective", "kkt_residual", "iterations", "converged"]
    rows = []
    for s, q in zip(model.csit_states, model.csit_probs):
        p1, p2 = opt.policy.table[s]
        rows.append([s[0], s[1], q, p1, p2, opt.objective, opt.kkt_residual, opt.iterations, opt.converged])
    return header, rows, 0


def _lhs_and_rho(args, sc: ScenarioConfig):
    if sc.source == "discrete":
        return lossless_lhs(sc.discrete_source()), None
    if sc.source == "gaussian":
        r1 = args.r1 if args.r1 is not None else sc.source_r1
        r2 = args.r2 if args.r2 is not None else sc.source_r2
        if r1 is None or r2 is None:
            raise InputError("a gaussian source needs quantization rates (source.r1/r2 or --r1/--r2)")
        d = gaussian_lt(GaussianLtConfig(sc.source_rho, r1, r2))
        return d.lhs, d.rho_w
    raise InputError("feasibility needs a source in the scenario")


def cmd_feasibility(args, sc: ScenarioConfig):
    model = sc.channel_model()
    lhs, fixed_rho = _lhs_and_rho(args, sc)
    if args.tune:
        if fixed_rho is not None:
            raise InputError("--tune does not apply to a gaussian source; the rates fix the input correlation")
        rho_max = sc.rho_max if sc.rho_max is not None else _rho_tilde(args, sc)
        _, rep = tune_rho(lhs, model, sc.params(0.0), rho_max=rho_max, solver_tol=sc.tol, eps=args.eps)
    else:
        params = sc.params(fixed_rho if fixed_rho is not None else _rho_tilde(args, sc))
        policy, _ = _policy(args.policy, model, params, sc.tol)
        rep = check(lhs, model, params, policy, args.eps)
    names = ("r1", "r2", "sum")
    rows = []
    for name, l, r, m in zip(names, lhs.as_tuple(), rep.rhs.as_tuple(), rep.margins):
        per = "feasible" if m > args.eps else ("marginal" if m >= -args.eps else "infeasible")
        rows.append([name, rep.rho_tilde, l, r, m, per])
    rows.append(["overall", rep.rho_tilde, "", "", rep.min_margin, rep.verdict])
    status = 1 if args.strict and rep.verdict != "feasible" else 0
    return ["inequality", "rho_tilde", "lhs", "rhs", "margin", "verdict"], rows, status


def _grid(args, sc: ScenarioConfig) -> RateGrid:
    return RateGrid(
        args.r_max if args.r_max is not None else sc.r_max,
        args.r_step if args.r_step is not None else sc.r_step,
        args.full_2d or sc.full_2d,
    )


def cmd_distortion(args, sc: ScenarioConfig):
    if sc.source != "gaussian":
        raise InputError("distortion needs a gaussian source")
    model = sc.channel_model()
    res = min_distortion_lt(sc.source_rho, model, sc.params(0.0), _grid(args, sc), sc.tol)
    if res is None:
        raise ResultError("every grid point is infeasible")
    rep = res.report
    header = ["rho", "r1", "r2", "d1", "d2", "d_sum", "rho_tilde", "r1_bound", "r2_bound", "sum_bound",
              "verdict", "kkt_residual"]
    row = [sc.source_rho, res.r1, res.r2, res.d1, res.d2, res.d_sum, rep.rho_tilde, *rep.rhs.as_tuple(),
           rep.verdict, rep.kkt_residual]
    return header, [row], 0


def cmd_sweep(args, sc: ScenarioConfig):
    axis = AXIS_ALIASES.get(args.axis)
    if axis is None:
        raise InputError(f"unknown axis {args.axis!r}")
    points = parse_points(args.points)
    if args.r_max is not None or args.r_step is not None or args.full_2d:
        g = _grid(args, sc)
        sc = sc.replace(r_max=g.r_max, r_step=g.step, full_2d=g.full_2d)
    try:
        rows = sweep(sc, axis, points, max_workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    header = [axis, "r1_bound", "r2_bound", "sum_bound", "d1", "d2", "verdict", "kkt_residual", "converged"]
    out = [[r.axis_value, r.r1_bound, r.r2_bound, r.sum_bound, r.d1, r.d2, r.verdict, r.kkt_residual, r.converged]
           for r in rows]
    return header, out, 0


def cmd_validate(args, sc: ScenarioConfig):
    seed = args.seed if args.seed is not None else sc.seed
    n = args.samples
    model = sc.channel_model()
    rho = sc.rho_tilde if sc.rho_tilde is not None else (sc.rho_max or 0.0)
    params = sc.params(rho)
    policies = [("upa", upa_policy(model, params)), ("optimal", optimize_sum_rate(model, params, tol=sc.tol).policy)]
    if model.has_perfect_csit:
        policies.append(("tdma", random_tdma_policy(model, params)))
    rows = []

    def add(name, exact, est, se):
        # exact-zero variance (a single joint state) leaves only rounding
        z = abs(est - exact) / se if se > 0 else (0.0 if abs(est - exact) <= 1e-12 else math.inf)
        rows.append([name, exact, est, se, z, z <= 3.0])

    for k, (name, policy) in enumerate(policies):
        exact = rate_triple(model, policy, params)
        mc = mc_rate_triple(model, policy, params, n, seed + k)
        for field, e, m, s in zip(("r1_bound", "r2_bound", "sum_bound"), exact.as_tuple(),
                                  mc.estimate.as_tuple(), mc.stderr.as_tuple()):
            add(f"{name}.{field}", e, m, s)
    if sc.source == "gaussian":
        r1 = sc.source_r1 if sc.source_r1 is not None else 1.0
        r2 = sc.source_r2 if sc.source_r2 is not None else 1.0
        cfg = GaussianLtConfig(sc.source_rho, r1, r2)
        d = gaussian_lt(cfg)
        d1, d2, se = mc_conditional_variance(cfg, max(n, 10_000), seed + len(policies))
        add("lt.d1", d.d1, d1, float(se[0]))
        add("lt.d2", d.d2, d2, float(se[1]))
    status = 0 if all(r[-1] for r in rows) else 1
    return ["quantity", "closed_form", "monte_carlo", "stderr", "z", "pass"], rows, status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fadingmac", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario file (bare names fall back to the bundled set)")
        p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")

    p = sub.add_parser("rates", help="rate bounds under a policy")
    common(p)
    p.add_argument("--policy", choices=("upa", "optimal", "tdma"), default="upa")
    p.add_argument("--rho-tilde", type=float)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("optimize", help="sum-rate optimal power policy")
    common(p)
    p.add_argument("--rho-tilde", type=float)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("feasibility", help="check the source against the rate bounds")
    common(p)
    p.add_argument("--policy", choices=("upa", "optimal", "tdma"), default="optimal")
    p.add_argument("--rho-tilde", type=float)
    p.add_argument("--tune", action="store_true", help="search the largest feasible input correlation up to rho_max")
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--eps", type=float, default=EPS_FEAS)
    p.add_argument("--strict", action="store_true", help="exit 1 unless the verdict is feasible")
    p.set_defaults(func=cmd_feasibility)

    def grid_opts(p):
        p.add_argument("--r-max", type=float)
        p.add_argument("--r-step", type=float)
        p.add_argument("--full-2d", action="store_true")

    p = sub.add_parser("distortion", help="minimum LT distortion for a gaussian source")
    common(p)
    grid_opts(p)
    p.set_defaults(func=cmd_distortion)

    p = sub.add_parser("sweep", help="tabulate results along one axis")
    common(p)
    p.add_argument("--axis", required=True, choices=sorted(AXIS_ALIASES))
    p.add_argument("--points", required=True, help="comma list, or a,b,...,z")
    p.add_argument("--workers", type=int)
    grid_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="Monte Carlo check of the closed forms")
    common(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        header, rows, status = args.func(args, sc)
    except (ScenarioError, InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render_csv(header, rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(args.out, text)
    return status


if __name__ == "__main__":
    sys.exit(main())
