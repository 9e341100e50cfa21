"""Rate regions, power allocation and feasibility checks for sending correlated
sources over a fading Gaussian MAC with partial CSIT."""

from .finite_prob import (
    ChannelStateModel,
    FiniteJointPmf,
    bsc_csit,
    conditional_entropy,
    entropy,
    no_csit,
    perfect_csit,
    product_fade,
)
from .gmac_rates import (
    GmacParams,
    PowerPolicy,
    RateTriple,
    individual_bound,
    mc_rate_triple,
    rate_triple,
    sum_bound,
    sum_bound_gradient,
)
from .power_opt import (
    OptimizationResult,
    kkt_residual,
    optimize_sum_rate,
    random_tdma_policy,
    upa_policy,
)
from .source_models import (
    DiscreteSource,
    GaussianLtConfig,
    GaussianLtDerived,
    gaussian_lt,
    lossless_lhs,
    mc_conditional_variance,
)
from .planner import (
    DistortionResult,
    FeasibilityReport,
    RateGrid,
    check,
    check_lossless,
    min_distortion_lt,
    sweep,
    tune_rho,
)
from .config import ScenarioConfig, load_scenario, parse_scenario, serialize_scenario

__version__ = "0.1.0"
