"""Weighted insurance premiums H[lambda, X] = E[X w(lambda, X)] / E[w(lambda, X)]."""

from .calibration import CalibrationResult, Status, bracket_target, roundtrip, solve
from .errors import (
    AllZeroWeights,
    DivergentExpectation,
    DivergentPremium,
    DomainEmpty,
    GridDegenerate,
    LossFileError,
    MaxIterExceeded,
    QuadratureFailure,
    SpecParseError,
    ValidationError,
    WeightedPremiumError,
    ZeroNormalizer,
)
from .loss_models import (
    Empirical,
    Exponential,
    Gamma,
    LogNormal,
    LossModel,
    Pareto,
    QuadratureOpts,
    Uniform,
    cdf,
    expect_transform,
    mean,
    read_losses,
)
from .premium import (
    LambdaDomain,
    Path,
    PremiumOptions,
    PremiumResult,
    WeightedCdf,
    premium,
    premium_curve,
    premium_tail,
    probe_lambda_domain,
    weighted_cdf,
    weighted_distribution,
)
from .verifier import (
    CheckReport,
    GridSpec,
    assumption_audit,
    lattice_check,
    log_chain_check,
    mixed_partial_check,
    positivity_check,
    ratio_monotone_check,
    rel_error_bound_check,
)
from .weights import (
    BUILTINS,
    CTE_WEIGHT,
    ESSCHER,
    KAMPS,
    W4_WEIGHT,
    W5_WEIGHT,
    W6_WEIGHT,
    W7_WEIGHT,
    CustomWeight,
    LambdaProfile,
    WeightFamily,
    constant_weight,
    get_family,
    negative_control,
    product_weight,
)

__version__ = "0.1.0"
