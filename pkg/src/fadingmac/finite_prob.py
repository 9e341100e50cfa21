"""Finite joint distributions, entropies and CSIT corruption models.

Probabilities are kept as :class:`fractions.Fraction` whenever every input is
rational, so constructions like the BSC corruption stay exact; float inputs
are accepted and validated against a 1e-12 normalization tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FiniteJointPmf",
    "ChannelStateModel",
    "entropy",
    "conditional_entropy",
    "product_fade",
    "bsc_csit",
    "perfect_csit",
    "no_csit",
]

NORM_TOL = 1e-12


def _as_prob(p) -> Fraction | float:
    if isinstance(p, (Fraction, int)):
        return Fraction(p)
    if isinstance(p, Real):
        return float(p)
    raise TypeError(f"probability must be a real number, got {type(p).__name__}")


@dataclass(frozen=True)
class FiniteJointPmf:
    """A probability mass function over an ordered list of outcome tuples."""

    labels: tuple[tuple, ...]
    probs: tuple[Fraction | float, ...]

    def __post_init__(self):
        labels = tuple(tuple(l) if isinstance(l, (tuple, list)) else (l,) for l in self.labels)
        probs = tuple(_as_prob(p) for p in self.probs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        if len(labels) != len(probs):
            raise ValueError("labels and probs must have the same length")
        if len(labels) == 0:
            raise ValueError("pmf must have at least one outcome")
        if len(set(labels)) != len(labels):
            raise ValueError("pmf labels must be distinct")
        if any(p < 0 for p in probs):
            raise ValueError("pmf probabilities must be nonnegative")
        total = sum(probs)
        if abs(total - 1) > NORM_TOL:
            raise ValueError(f"pmf probabilities sum to {float(total)!r}, not 1")
        widths = {len(l) for l in labels}
        if len(widths) != 1:
            raise ValueError("all outcome tuples must have the same length")

    @classmethod
    def from_dict(cls, table: dict) -> "FiniteJointPmf":
        return cls(tuple(table.keys()), tuple(table.values()))

    @property
    def width(self) -> int:
        return len(self.labels[0])

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probs))

    def prob(self, label) -> Fraction | float:
        return self.as_dict().get(tuple(label), 0)

    def marginal(self, coords: Sequence[int]) -> "FiniteJointPmf":
        """Marginal over the given coordinate indices, in first-seen order."""
        acc: dict = {}
        for label, p in zip(self.labels, self.probs):
            key = tuple(label[i] for i in coords)
            acc[key] = acc.get(key, 0) + p
        return FiniteJointPmf.from_dict(acc)

    def support(self) -> "FiniteJointPmf":
        """Drop zero-probability outcomes."""
        kept = [(l, p) for l, p in zip(self.labels, self.probs) if p > 0]
        return FiniteJointPmf(tuple(l for l, _ in kept), tuple(p for _, p in kept))

    def allclose(self, other: "FiniteJointPmf", atol: float = 1e-12) -> bool:
        """Entrywise comparison over the union of both supports."""
        a, b = self.as_dict(), other.as_dict()
        return all(abs(float(a.get(k, 0)) - float(b.get(k, 0))) <= atol for k in set(a) | set(b))


def entropy(pmf: FiniteJointPmf) -> float:
    """Shannon entropy in bits (0 log 0 = 0)."""
    p = pmf.array
    p = p[p > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


def conditional_entropy(pmf: FiniteJointPmf, given: int) -> float:
    """H(U_other | U_given) for a pmf over pairs; ``given`` is 0 or 1."""
    if pmf.width != 2:
        raise ValueError(f"conditional_entropy needs a pmf over pairs, got width {pmf.width}")
    if given not in (0, 1):
        raise ValueError("given must be 0 or 1")
    return max(entropy(pmf) - entropy(pmf.marginal([given])), 0.0)


@dataclass(frozen=True)
class ChannelStateModel:
    """Joint law of the fade pair, the CSIT pair and the CSIR pair.

    ``joint`` is a pmf over 6-tuples ``(h1, h2, csit1, csit2, csir1, csir2)``.
    Fades are amplitudes; squaring happens in the rate evaluator.
    """

    fade_alphabet_1: tuple[float, ...]
    fade_alphabet_2: tuple[float, ...]
    joint: FiniteJointPmf
    csir_mode: str = "perfect"

    def __post_init__(self):
        object.__setattr__(self, "fade_alphabet_1", tuple(self.fade_alphabet_1))
        object.__setattr__(self, "fade_alphabet_2", tuple(self.fade_alphabet_2))
        if self.joint.width != 6:
            raise ValueError("joint pmf must be over (h1, h2, csit1, csit2, csir1, csir2)")
        if any(h < 0 for h in self.fade_alphabet_1 + self.fade_alphabet_2):
            raise ValueError("fade amplitudes must be nonnegative")
        if self.csir_mode not in ("perfect", "custom"):
            raise ValueError(f"unknown csir_mode {self.csir_mode!r}")
        for label, p in zip(self.joint.labels, self.joint.probs):
            if p == 0:
                continue
            h1, h2, _, _, r1, r2 = label
            if h1 not in self.fade_alphabet_1 or h2 not in self.fade_alphabet_2:
                raise ValueError(f"fade pair {(h1, h2)} outside the declared alphabets")
            if self.csir_mode == "perfect" and (r1, r2) != (h1, h2):
                raise ValueError("csir_mode='perfect' requires the CSIR pair to equal the fade pair")

    def fade_pmf(self) -> FiniteJointPmf:
        return self.joint.marginal([0, 1])

    def csit_pmf(self) -> FiniteJointPmf:
        return self.joint.marginal([2, 3])

    @cached_property
    def csit_states(self) -> tuple[tuple, ...]:
        """CSIT pairs with positive probability, sorted."""
        pmf = self.csit_pmf()
        return tuple(sorted(l for l, p in zip(pmf.labels, pmf.probs) if p > 0))

    @cached_property
    def csit_probs(self) -> np.ndarray:
        pmf = self.csit_pmf().as_dict()
        return np.array([float(pmf[s]) for s in self.csit_states])

    @cached_property
    def rate_rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Aggregated support over (h1, h2, csit index): arrays h1, h2, idx, weight."""
        index = {s: i for i, s in enumerate(self.csit_states)}
        acc: dict = {}
        for (h1, h2, c1, c2, _, _), p in zip(self.joint.labels, self.joint.probs):
            if p > 0:
                key = (h1, h2, index[(c1, c2)])
                acc[key] = acc.get(key, 0) + p
        keys = sorted(acc)
        h1 = np.array([float(k[0]) for k in keys])
        h2 = np.array([float(k[1]) for k in keys])
        idx = np.array([k[2] for k in keys], dtype=int)
        w = np.array([float(acc[k]) for k in keys])
        return h1, h2, idx, w

    @property
    def has_perfect_csit(self) -> bool:
        return all(p == 0 or l[0:2] == l[2:4] for l, p in zip(self.joint.labels, self.joint.probs))


def product_fade(
    values_1: Sequence[float],
    probs_1: Sequence,
    values_2: Sequence[float],
    probs_2: Sequence,
) -> FiniteJointPmf:
    """Fade pmf over (h1, h2) for independent transmitters."""
    if len(values_1) != len(probs_1) or len(values_2) != len(probs_2):
        raise ValueError("fade values and probabilities must have matching lengths")
    labels, probs = [], []
    for (a, pa), (b, pb) in itertools.product(zip(values_1, probs_1), zip(values_2, probs_2)):
        labels.append((a, b))
        probs.append(_as_prob(pa) * _as_prob(pb))
    return FiniteJointPmf(tuple(labels), tuple(probs))


def _alphabets(fade: FiniteJointPmf) -> tuple[tuple, tuple]:
    if fade.width != 2:
        raise ValueError("fade pmf must be over pairs (h1, h2)")
    a1 = tuple(sorted({l[0] for l in fade.labels}, reverse=True))
    a2 = tuple(sorted({l[1] for l in fade.labels}, reverse=True))
    return a1, a2


def perfect_csit(fade: FiniteJointPmf) -> ChannelStateModel:
    """Couple CSIT and CSIR to the true fade pair."""
    a1, a2 = _alphabets(fade)
    labels = tuple((h1, h2, h1, h2, h1, h2) for h1, h2 in fade.labels)
    return ChannelStateModel(a1, a2, FiniteJointPmf(labels, fade.probs), "perfect")


def bsc_csit(fade: FiniteJointPmf, p, alphabets: tuple[Iterable, Iterable] | None = None) -> ChannelStateModel:
    """CSIT as the output of independent per-transmitter BSC(p) corruptions of the fade.

    Each fade alphabet must have exactly two values; ``alphabets`` can supply
    them explicitly when a value has zero probability in ``fade``.
    """
    p = _as_prob(p)
    if not 0 <= p <= Fraction(1, 2):
        raise ValueError(f"BSC crossover must lie in [0, 0.5], got {float(p)!r}")
    a1, a2 = (tuple(a) for a in alphabets) if alphabets is not None else _alphabets(fade)
    if len(a1) != 2 or len(a2) != 2:
        raise ValueError("BSC corruption needs exactly two fade values per transmitter")
    flip1 = {a1[0]: a1[1], a1[1]: a1[0]}
    flip2 = {a2[0]: a2[1], a2[1]: a2[0]}
    stay = 1 - p
    labels, probs = [], []
    for (h1, h2), q in zip(fade.labels, fade.probs):
        for c1, p1 in ((h1, stay), (flip1[h1], p)):
            for c2, p2 in ((h2, stay), (flip2[h2], p)):
                labels.append((h1, h2, c1, c2, h1, h2))
                probs.append(q * p1 * p2)
    return ChannelStateModel(a1, a2, FiniteJointPmf(tuple(labels), tuple(probs)), "perfect")


def no_csit(fade: FiniteJointPmf) -> ChannelStateModel:
    """Uninformative CSIT: BSC with crossover one half."""
    return bsc_csit(fade, Fraction(1, 2))

