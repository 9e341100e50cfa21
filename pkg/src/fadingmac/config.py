"""Scenario files: a flat INI-style key/value schema with section headers.

Example (the bundled ``two_point.scenario``)::

    [channel]
    fade_values_1 = 1, 0.5
    fade_values_2 = 1, 0.5
    fade_probs_1 = 1/2, 1/2
    fade_probs_2 = 1/2, 1/2
    sigma2 = 1

    [csi]
    csit = perfect

    [power]
    pbar1 = 5
    pbar2 = 5

    [source]
    type = discrete
    values_1 = 0, 1
    values_2 = 0, 1
    pmf = 1/3, 1/3, 0, 1/3

    [design]
    rho_tilde = 0.3

Probabilities accept fractions (``1/3``) and are kept exact. ``fade_probs``
(row-major over values_1 x values_2) gives a joint fade law; ``fade_probs_1``
and ``fade_probs_2`` give independent marginals. The source ``pmf`` is also
row-major over values_1 x values_2.
"""

from __future__ import annotations

import configparser
import dataclasses
import itertools
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .finite_prob import (
    ChannelStateModel,
    FiniteJointPmf,
    bsc_csit,
    perfect_csit,
)
from .gmac_rates import GmacParams
from .source_models import DiscreteSource

__all__ = [
    "ScenarioConfig",
    "ScenarioError",
    "UnknownKeyError",
    "MissingKeyError",
    "NormalizationError",
    "RangeError",
    "ValueFormatError",
    "parse_scenario",
    "serialize_scenario",
    "load_scenario",
]


class ScenarioError(ValueError):
    """Invalid scenario text; ``key`` names the first offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnknownKeyError(ScenarioError):
    pass


class MissingKeyError(ScenarioError):
    pass


class NormalizationError(ScenarioError):
    pass


class RangeError(ScenarioError):
    pass


class ValueFormatError(ScenarioError):
    pass


SCHEMA = {
    "channel": ("fade_values_1", "fade_values_2", "fade_probs", "fade_probs_1", "fade_probs_2", "sigma2"),
    "csi": ("csit", "crossover", "csir"),
    "power": ("pbar1", "pbar2"),
    "source": ("type", "values_1", "values_2", "pmf", "rho", "r1", "r2"),
    "design": ("rho_tilde", "rho_max"),
    "solver": ("tol", "seed"),
    "grid": ("r_max", "r_step", "full_2d"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    fade_values_1: tuple[float, ...] = (1.0, 0.5)
    fade_values_2: tuple[float, ...] = (1.0, 0.5)
    # joint pmf, row-major over fade_values_1 x fade_values_2
    fade_probs: tuple[Fraction, ...] = (Fraction(1, 4),) * 4
    sigma2: float = 1.0
    csit: str = "perfect"
    crossover: Fraction | None = None
    csir: str = "perfect"
    pbar1: float = 1.0
    pbar2: float = 1.0
    source: str = "none"
    source_values_1: tuple[float, ...] = ()
    source_values_2: tuple[float, ...] = ()
    source_pmf: tuple[Fraction, ...] = ()
    source_rho: float | None = None
    source_r1: float | None = None
    source_r2: float | None = None
    rho_tilde: float | None = None
    rho_max: float | None = None
    tol: float = 1e-8
    seed: int = 0
    r_max: float = 4.0
    r_step: float = 0.01
    full_2d: bool = False

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def fade_pmf(self) -> FiniteJointPmf:
        labels = tuple(itertools.product(self.fade_values_1, self.fade_values_2))
        return FiniteJointPmf(labels, self.fade_probs)

    def channel_model(self) -> ChannelStateModel:
        fade = self.fade_pmf()
        alphabets = (self.fade_values_1, self.fade_values_2)
        if self.csit == "perfect":
            return perfect_csit(fade)
        if self.csit == "bsc":
            return bsc_csit(fade, self.crossover, alphabets)
        # no CSIT
        if len(self.fade_values_1) == 2 and len(self.fade_values_2) == 2:
            return bsc_csit(fade, Fraction(1, 2), alphabets)
        c = (self.fade_values_1[0], self.fade_values_2[0])
        labels = tuple((h1, h2) + c + (h1, h2) for h1, h2 in fade.labels)
        return ChannelStateModel(self.fade_values_1, self.fade_values_2, FiniteJointPmf(labels, fade.probs))

    def params(self, rho_tilde: float | None = None) -> GmacParams:
        if rho_tilde is None:
            rho_tilde = self.rho_tilde if self.rho_tilde is not None else (self.rho_max or 0.0)
        return GmacParams(self.sigma2, rho_tilde, self.pbar1, self.pbar2)

    def discrete_source(self) -> DiscreteSource:
        if self.source != "discrete":
            raise ValueError("scenario has no discrete source")
        labels = tuple(itertools.product(self.source_values_1, self.source_values_2))
        return DiscreteSource(FiniteJointPmf(labels, self.source_pmf))


def _num(text: str, key: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueFormatError(key, f"cannot parse {text.strip()!r} as a number") from None


def _float(text: str, key: str) -> float:
    return float(_num(text, key))


def _list(text: str, key: str) -> list[Fraction]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ValueFormatError(key, "empty list")
    return [_num(t, key) for t in items]


def _value(v: Fraction) -> float | int:
    f = float(v)
    return int(f) if f.is_integer() else f


def _check_pmf(probs, key: str, size: int | None = None):
    if size is not None and len(probs) != size:
        raise ValueFormatError(key, f"expected {size} probabilities, got {len(probs)}")
    if any(p < 0 for p in probs):
        raise RangeError(key, "probabilities must be nonnegative")
    total = sum(probs)
    if abs(total - 1) > 1e-12:
        raise NormalizationError(key, f"probabilities sum to {float(total):.12g}, not 1")


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate scenario text; raises a :class:`ScenarioError` subclass."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueFormatError("<file>", str(exc).splitlines()[0]) from None
    for section in cp.sections():
        if section not in SCHEMA:
            raise UnknownKeyError(section, "unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise UnknownKeyError(f"{section}.{key}", "unknown key")

    def get(section, key):
        return cp.get(section, key, fallback=None)

    kw: dict = {}
    ch = "channel"
    if get(ch, "fade_values_1") is not None:
        kw["fade_values_1"] = tuple(_value(v) for v in _list(get(ch, "fade_values_1"), "fade_values_1"))
    if get(ch, "fade_values_2") is not None:
        kw["fade_values_2"] = tuple(_value(v) for v in _list(get(ch, "fade_values_2"), "fade_values_2"))
    v1 = kw.get("fade_values_1", ScenarioConfig.fade_values_1)
    v2 = kw.get("fade_values_2", ScenarioConfig.fade_values_2)
    for key, vals in (("fade_values_1", v1), ("fade_values_2", v2)):
        if any(v < 0 for v in vals):
            raise RangeError(key, "fade amplitudes must be nonnegative")
        if len(set(vals)) != len(vals):
            raise ValueFormatError(key, "fade values must be distinct")

    joint = get(ch, "fade_probs")
    m1, m2 = get(ch, "fade_probs_1"), get(ch, "fade_probs_2")
    if joint is not None and (m1 is not None or m2 is not None):
        raise ValueFormatError("fade_probs", "give either fade_probs or fade_probs_1/fade_probs_2, not both")
    if joint is not None:
        probs = _list(joint, "fade_probs")
        _check_pmf(probs, "fade_probs", len(v1) * len(v2))
        kw["fade_probs"] = tuple(probs)
    elif m1 is not None or m2 is not None:
        if m1 is None or m2 is None:
            raise MissingKeyError("fade_probs_1" if m1 is None else "fade_probs_2", "both marginals are required")
        p1, p2 = _list(m1, "fade_probs_1"), _list(m2, "fade_probs_2")
        _check_pmf(p1, "fade_probs_1", len(v1))
        _check_pmf(p2, "fade_probs_2", len(v2))
        kw["fade_probs"] = tuple(a * b for a, b in itertools.product(p1, p2))
    elif "fade_values_1" in kw or "fade_values_2" in kw:
        n = len(v1) * len(v2)
        kw["fade_probs"] = (Fraction(1, n),) * n
    if get(ch, "sigma2") is not None:
        kw["sigma2"] = _float(get(ch, "sigma2"), "sigma2")
        if not kw["sigma2"] > 0:
            raise RangeError("sigma2", "noise variance must be positive")

    csit = (get("csi", "csit") or "perfect").strip()
    if csit not in ("perfect", "bsc", "none"):
        raise ValueFormatError("csit", f"expected perfect, bsc or none, got {csit!r}")
    kw["csit"] = csit
    if get("csi", "crossover") is not None:
        p = _num(get("csi", "crossover"), "crossover")
        if not 0 <= p <= Fraction(1, 2):
            raise RangeError("crossover", f"BSC crossover must lie in [0, 0.5], got {float(p):g}")
        if csit != "bsc":
            raise ValueFormatError("crossover", "crossover is only meaningful with csit = bsc")
        kw["crossover"] = p
    elif csit == "bsc":
        raise MissingKeyError("crossover", "csit = bsc needs a crossover probability")
    if csit in ("bsc",) and (len(v1) != 2 or len(v2) != 2):
        raise ValueFormatError("csit", "BSC corruption needs exactly two fade values per transmitter")
    csir = (get("csi", "csir") or "perfect").strip()
    if csir != "perfect":
        raise ValueFormatError("csir", "only perfect CSIR is supported")

    for key in ("pbar1", "pbar2"):
        if get("power", key) is not None:
            kw[key] = _float(get("power", key), key)
            if kw[key] < 0:
                raise RangeError(key, "power budget must be nonnegative")

    src = (get("source", "type") or "none").strip()
    if src not in ("none", "discrete", "gaussian"):
        raise ValueFormatError("type", f"source type must be none, discrete or gaussian, got {src!r}")
    kw["source"] = src
    if src == "discrete":
        for key in ("values_1", "values_2", "pmf"):
            if get("source", key) is None:
                raise MissingKeyError(key, "required for a discrete source")
        s1 = tuple(_value(v) for v in _list(get("source", "values_1"), "values_1"))
        s2 = tuple(_value(v) for v in _list(get("source", "values_2"), "values_2"))
        pmf = _list(get("source", "pmf"), "pmf")
        _check_pmf(pmf, "pmf", len(s1) * len(s2))
        kw.update(source_values_1=s1, source_values_2=s2, source_pmf=tuple(pmf))
    elif src == "gaussian":
        if get("source", "rho") is None:
            raise MissingKeyError("rho", "required for a gaussian source")
        rho = _float(get("source", "rho"), "rho")
        if not abs(rho) < 1:
            raise RangeError("rho", "source correlation must satisfy |rho| < 1")
        kw["source_rho"] = rho
        for key in ("r1", "r2"):
            if get("source", key) is not None:
                r = _float(get("source", key), key)
                if r < 0:
                    raise RangeError(key, "rates must be nonnegative")
                kw["source_" + key] = r
    for key in ("values_1", "values_2", "pmf", "rho", "r1", "r2"):
        if get("source", key) is not None and ("source_" + key if key != "pmf" else "source_pmf") not in kw:
            raise ValueFormatError(key, f"not used by source type {src!r}")

    for key in ("rho_tilde", "rho_max"):
        if get("design", key) is not None:
            r = _float(get("design", key), key)
            if not (0 if key == "rho_max" else -1) <= r <= 1:
                raise RangeError(key, "correlation out of range")
            kw[key] = r

    if get("solver", "tol") is not None:
        kw["tol"] = _float(get("solver", "tol"), "tol")
        if not kw["tol"] > 0:
            raise RangeError("tol", "tolerance must be positive")
    if get("solver", "seed") is not None:
        seed = _num(get("solver", "seed"), "seed")
        if seed.denominator != 1 or seed < 0:
            raise RangeError("seed", "seed must be a nonnegative integer")
        kw["seed"] = int(seed)

    if get("grid", "r_max") is not None:
        kw["r_max"] = _float(get("grid", "r_max"), "r_max")
        if kw["r_max"] < 0:
            raise RangeError("r_max", "rate grid must be nonnegative")
    if get("grid", "r_step") is not None:
        kw["r_step"] = _float(get("grid", "r_step"), "r_step")
        if not kw["r_step"] > 0:
            raise RangeError("r_step", "grid step must be positive")
    if get("grid", "full_2d") is not None:
        try:
            kw["full_2d"] = cp.getboolean("grid", "full_2d")
        except ValueError:
            raise ValueFormatError("full_2d", "expected true or false") from None
    return ScenarioConfig(**kw)


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _fmt_list(vals) -> str:
    return ", ".join(_fmt(v) for v in vals)


def serialize_scenario(cfg: ScenarioConfig) -> str:
    """Canonical text form; ``parse_scenario(serialize_scenario(c)) == c``."""
    lines = [
        "[channel]",
        f"fade_values_1 = {_fmt_list(cfg.fade_values_1)}",
        f"fade_values_2 = {_fmt_list(cfg.fade_values_2)}",
        f"fade_probs = {_fmt_list(cfg.fade_probs)}",
        f"sigma2 = {_fmt(cfg.sigma2)}",
        "",
        "[csi]",
        f"csit = {cfg.csit}",
    ]
    if cfg.crossover is not None:
        lines.append(f"crossover = {_fmt(cfg.crossover)}")
    lines += ["csir = perfect", "", "[power]", f"pbar1 = {_fmt(cfg.pbar1)}", f"pbar2 = {_fmt(cfg.pbar2)}", ""]
    lines += ["[source]", f"type = {cfg.source}"]
    if cfg.source == "discrete":
        lines += [
            f"values_1 = {_fmt_list(cfg.source_values_1)}",
            f"values_2 = {_fmt_list(cfg.source_values_2)}",
            f"pmf = {_fmt_list(cfg.source_pmf)}",
        ]
    elif cfg.source == "gaussian":
        lines.append(f"rho = {_fmt(cfg.source_rho)}")
        for key in ("r1", "r2"):
            if getattr(cfg, "source_" + key) is not None:
                lines.append(f"{key} = {_fmt(getattr(cfg, 'source_' + key))}")
    lines += ["", "[design]"]
    for key in ("rho_tilde", "rho_max"):
        if getattr(cfg, key) is not None:
            lines.append(f"{key} = {_fmt(getattr(cfg, key))}")
    lines += ["", "[solver]", f"tol = {_fmt(cfg.tol)}", f"seed = {cfg.seed}", ""]
    lines += ["[grid]", f"r_max = {_fmt(cfg.r_max)}", f"r_step = {_fmt(cfg.r_step)}", f"full_2d = {_fmt(cfg.full_2d)}"]
    return "\n".join(lines) + "\n"


def bundled_scenarios() -> list[str]:
    return sorted(p.name for p in resources.files("fadingmac.scenarios").iterdir() if p.name.endswith(".scenario"))


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read a scenario file; a bare name that does not exist locally falls back to the bundled set."""
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        res = resources.files("fadingmac.scenarios").joinpath(p.name)
        if not res.is_file():
            raise FileNotFoundError(f"no scenario file {str(path)!r}")
        text = res.read_text(encoding="utf-8")
    return parse_scenario(text)
