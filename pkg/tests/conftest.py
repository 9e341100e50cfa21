from fractions import Fraction

import pytest

from fadingmac.finite_prob import FiniteJointPmf, bsc_csit, perfect_csit, product_fade
from fadingmac.gmac_rates import GmacParams
from fadingmac.source_models import DiscreteSource

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)


@pytest.fixture
def fade():
    """Two-point fades {1, 0.5}, equiprobable and independent across users."""
    return product_fade([1, 0.5], [HALF, HALF], [1, 0.5], [HALF, HALF])


@pytest.fixture
def perfect_model(fade):
    return perfect_csit(fade)


@pytest.fixture
def design_params():
    return GmacParams(sigma2=1.0, rho_tilde=0.3, pbar1=5.0, pbar2=5.0)


@pytest.fixture
def triangle_source():
    pmf = FiniteJointPmf(((0, 0), (1, 1), (0, 1), (1, 0)), (THIRD, THIRD, THIRD, 0))
    return DiscreteSource(pmf)


@pytest.fixture
def bsc_model(fade):
    return lambda p: bsc_csit(fade, Fraction(p).limit_denominator(1000))


@pytest.fixture
def single_state_model():
    return perfect_csit(FiniteJointPmf(((1, 1),), (1,)))
