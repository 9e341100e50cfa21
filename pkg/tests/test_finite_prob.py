import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadingmac.finite_prob import (
    ChannelStateModel,
    FiniteJointPmf,
    bsc_csit,
    conditional_entropy,
    entropy,
    no_csit,
    perfect_csit,
    product_fade,
)

T = Fraction(1, 3)


def triangle_pmf():
    return FiniteJointPmf(((0, 0), (1, 1), (0, 1), (1, 0)), (T, T, T, 0))


def test_entropy_of_triangle_source_is_log2_3():
    assert entropy(triangle_pmf()) == pytest.approx(1.585, abs=1e-3)
    assert entropy(triangle_pmf()) == pytest.approx(math.log2(3), abs=1e-12)


def test_entropy_point_mass_and_uniform():
    assert entropy(FiniteJointPmf(((0, 0),), (1,))) == 0.0
    four = FiniteJointPmf(tuple(itertools.product((0, 1), (0, 1))), (Fraction(1, 4),) * 4)
    assert entropy(four) == pytest.approx(2.0, abs=1e-15)


def test_conditional_entropy_cases():
    assert conditional_entropy(triangle_pmf(), given=1) == pytest.approx(2 / 3, abs=1e-12)
    same = FiniteJointPmf(((0, 0), (1, 1)), (Fraction(1, 2), Fraction(1, 2)))
    assert conditional_entropy(same, given=1) == pytest.approx(0.0, abs=1e-15)
    # independent with the two_point marginal P(U1=0) = 2/3
    p0 = Fraction(2, 3)
    indep = FiniteJointPmf(
        ((0, 0), (0, 1), (1, 0), (1, 1)), (p0 * p0, p0 * (1 - p0), (1 - p0) * p0, (1 - p0) ** 2)
    )
    h2 = (1 / 3) * math.log2(3) + (2 / 3) * math.log2(3 / 2)
    assert h2 == pytest.approx(0.918, abs=1e-3)
    assert conditional_entropy(indep, given=1) == pytest.approx(h2, abs=1e-12)


def test_conditional_entropy_rejects_non_pairs():
    triple = FiniteJointPmf(((0, 0, 0),), (1,))
    with pytest.raises(ValueError):
        conditional_entropy(triple, given=0)


@pytest.mark.parametrize(
    "labels, probs",
    [
        (((0,), (1,)), (0.5, 0.4)),
        (((0,), (1,)), (1.2, -0.2)),
        (((0,), (0,)), (0.5, 0.5)),
    ],
)
def test_pmf_rejects_invalid(labels, probs):
    with pytest.raises(ValueError):
        FiniteJointPmf(labels, probs)


pmf_weights = st.lists(st.integers(min_value=0, max_value=50), min_size=4, max_size=12).filter(lambda w: sum(w) > 0)


def _pair_pmf(weights):
    n = len(weights)
    labels = tuple((i % 3, i // 3) for i in range(n))
    total = sum(weights)
    return FiniteJointPmf(labels, tuple(Fraction(w, total) for w in weights))


@given(pmf_weights)
def test_chain_rule(weights):
    pmf = _pair_pmf(weights)
    lhs = entropy(pmf)
    rhs = entropy(pmf.marginal([1])) + conditional_entropy(pmf, given=1)
    assert abs(lhs - rhs) < 1e-12
    assert conditional_entropy(pmf, given=1) <= entropy(pmf.marginal([0])) + 1e-12


@given(pmf_weights, st.randoms())
def test_entropy_permutation_invariant(weights, rnd):
    pmf = _pair_pmf(weights)
    order = list(range(len(weights)))
    rnd.shuffle(order)
    shuffled = FiniteJointPmf(tuple(pmf.labels[i] for i in order), tuple(pmf.probs[i] for i in order))
    assert abs(entropy(pmf) - entropy(shuffled)) < 1e-12


def test_bsc_noiseless_and_fully_noisy(fade):
    m = bsc_csit(fade, 0)
    for label, p in zip(m.joint.labels, m.joint.probs):
        if p > 0:
            assert label[0:2] == label[2:4]
    m = bsc_csit(fade, Fraction(1, 2))
    joint = m.joint.marginal([0, 1, 2, 3]).as_dict()
    csit = m.csit_pmf().as_dict()
    for (h1, h2, c1, c2), p in joint.items():
        assert p == fade.prob((h1, h2)) * csit[(c1, c2)]
    assert all(v == Fraction(1, 4) for v in csit.values())


def test_bsc_per_transmitter_probabilities(fade):
    m = bsc_csit(fade, Fraction(1, 10))
    user1 = m.joint.marginal([0, 2]).as_dict()
    assert user1[(1, 1)] == Fraction(45, 100)
    assert user1[(1, 0.5)] == Fraction(5, 100)


def test_bsc_rejects_bad_input(fade):
    with pytest.raises(ValueError):
        bsc_csit(fade, 0.7)
    with pytest.raises(ValueError):
        bsc_csit(fade, -0.1)
    three = product_fade([1, 0.5, 0.2], [T, T, T], [1, 0.5], [0.5, 0.5])
    with pytest.raises(ValueError):
        bsc_csit(three, 0.1)


def test_perfect_csit(fade):
    m = perfect_csit(fade)
    assert len(m.joint.labels) == 4
    for label, p in zip(m.joint.labels, m.joint.probs):
        assert p == Fraction(1, 4)
        assert label[0:2] == label[2:4] == label[4:6]
    single = perfect_csit(FiniteJointPmf(((1, 1),), (1,)))
    assert single.joint.probs == (1,)
    corr = FiniteJointPmf(((1, 1), (1, 0.5), (0.5, 1), (0.5, 0.5)), (0.4, 0.1, 0.1, 0.4))
    m = perfect_csit(corr)
    assert m.fade_pmf().allclose(corr)
    assert m.csit_pmf().allclose(corr)


def test_perfect_csir_is_enforced(fade):
    labels = ((1, 1, 1, 1, 0.5, 1),)
    with pytest.raises(ValueError):
        ChannelStateModel((1, 0.5), (1, 0.5), FiniteJointPmf(labels, (1,)), "perfect")


def test_no_csit_is_half_crossover(fade):
    assert no_csit(fade).joint == bsc_csit(fade, Fraction(1, 2)).joint


crossovers = st.fractions(min_value=0, max_value=Fraction(1, 2), max_denominator=50)
fade_weights = st.lists(st.integers(1, 20), min_size=4, max_size=4)


def _fade(weights):
    total = sum(weights)
    labels = tuple(itertools.product((1, 0.5), (1, 0.5)))
    return FiniteJointPmf(labels, tuple(Fraction(w, total) for w in weights))


@given(fade_weights, crossovers)
def test_bsc_marginal_recovers_fade(weights, p):
    fade = _fade(weights)
    assert bsc_csit(fade, p).fade_pmf().as_dict() == fade.as_dict()


def _garble(model, r):
    """Pass both CSIT coordinates through a further independent BSC(r)."""
    flip = {1: 0.5, 0.5: 1}
    acc = {}
    for (h1, h2, c1, c2, t1, t2), q in zip(model.joint.labels, model.joint.probs):
        for d1, w1 in ((c1, 1 - r), (flip[c1], r)):
            for d2, w2 in ((c2, 1 - r), (flip[c2], r)):
                key = (h1, h2, d1, d2, t1, t2)
                acc[key] = acc.get(key, 0) + q * w1 * w2
    return FiniteJointPmf.from_dict(acc)


@settings(max_examples=60)
@given(fade_weights, crossovers, crossovers)
def test_bsc_composition(weights, a, b):
    p, p2 = sorted((a, b))
    if p2 == p or p == Fraction(1, 2):
        return
    fade = _fade(weights)
    r = (p2 - p) / (1 - 2 * p)
    composed = _garble(bsc_csit(fade, p), r)
    assert composed.allclose(bsc_csit(fade, p2).joint, atol=1e-12)
    # exact rationals throughout
    assert composed.as_dict() == {k: v for k, v in bsc_csit(fade, p2).joint.as_dict().items() if k in composed.as_dict()}


def test_float_inputs_are_accepted():
    pmf = FiniteJointPmf(((0,), (1,)), (0.3, 0.7))
    assert not pmf.is_exact
    assert np.allclose(pmf.array, [0.3, 0.7])
