"""hdclt: exact and certified Gaussian-approximation error over hyper-rectangles."""

from .logdomain import LogReal, TailPair, log_add, log_pow, pow_prob
from .distributions import (
    ComponentModel,
    GaussianMarginal,
    LatticeDistribution,
    LatticeMarginal,
    STD_GAUSSIAN,
    convolve_iid,
    gauss_tailpair,
    lattice_cdf,
    mills_lower,
    moment_2m,
    rademacher,
    stirling_bounds,
)
from .product_factorization import (
    RectangleFamily,
    SortedEndpoints,
    lemma3_bound,
    product_diff_exact,
    rect_prob,
    rect_prob_equal_coords,
    sup_diff_equal_coords,
)
from .nonuniform_be import (
    BoundConstants,
    MomentProfile,
    PowerSchedule,
    calibrate_constants,
    check_assumptions,
    envelope_d,
    envelope_l,
    lemma1_bound,
    lemma2_bound,
)
from .theorem_bounds import (
    BoundReport,
    Partition,
    i31_extremal_profile,
    partition_endpoints,
    theorem1_bound,
    theorem2_bound,
    theorem2_c,
)
from .phase_transition import (
    CaseIConfig,
    CaseIIConfig,
    case1_rho_lower,
    case1_threshold_log_p,
    case2_exact_rho_lower,
    case2_quantities,
    eta_feasible,
    eta_max,
    select_f,
)
from .mc_estimator import GaussianComponents, McConfig, simulate_rho
from .errors import ConfigError, ResourceCapError

__version__ = "0.1.0"
