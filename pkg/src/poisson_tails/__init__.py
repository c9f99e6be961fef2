"""Tight two-sided Poisson tail bounds with an exact summation oracle.

The package exposes the divergence kernel, exact tail machinery, the
bound families with their envelope constants, crossover comparison of
the competing upper bounds, and the positive-operator application that
consumes the tail estimates.
"""

from .bounds import (
    BoundFamily,
    BoundResult,
    EnvelopeConstants,
    blm_bounds,
    envelope_constants,
    klar_sandwich,
    normal_cdf,
    short_explicit,
    short_phi_sandwich,
    thm1_bounds,
    thm2_bounds,
)
from .compare import (
    CrossoverSet,
    CurveSample,
    Region,
    crossovers,
    curve_csv_text,
    piecewise_short_upper,
    piecewise_thm1_upper,
    quotient,
    sample_curve,
    write_curve_csv,
)
from .divergence import DiscretizedThreshold, Side, TailQuery, discretize, kl_divergence
from .exact import (
    GammaMedian,
    InternalConsistencyError,
    StirlingInterval,
    gamma_median,
    lemma3_check,
    poisson_cdf,
    poisson_log_cdf,
    poisson_log_pmf,
    poisson_log_sf,
    poisson_pmf,
    poisson_sf,
    stirling_interval,
    upper_incomplete_gamma_reg,
    window_mass,
)
from .szasz import (
    Affine,
    Descriptor,
    DescriptorParseError,
    MomentDivergenceError,
    OperatorValue,
    PatchedAffine,
    Polynomial,
    PowerDeficit,
    SzaszProblem,
    TruncationDivergenceError,
    boundary_rate,
    half_normal_negative_moment,
    parse_descriptor,
    remark5_bound,
    szasz_apply,
    theorem3_bound,
)
from .validate import SUITES, SuiteResult, run_suite

__version__ = "0.1.0"
