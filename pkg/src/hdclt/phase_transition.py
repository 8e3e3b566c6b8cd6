"""Witness rectangles certifying failure of the Gaussian approximation.

Two constructions: Case I uses the set (-inf, sqrt(n)]^p whose lattice
probability is exactly 1 while the Gaussian side drops below 2/e once p
clears an explicit threshold of order e^{n/2}; Case II uses
(-inf, n^{1/4} f(n)]^p with a deterministic rule selecting f(n).  Lattice
probabilities come from exact rational binomial tails; everything asymptotic
("for large enough n") is replaced by explicit onset finders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .distributions import gauss_tailpair
from .errors import ConfigError, ResourceCapError
from .logdomain import TailPair, pow_prob, tailpair_from_sf_fraction

__all__ = [
    "CaseIConfig",
    "CaseIIConfig",
    "Case1Result",
    "SelectedF",
    "Case2Quantities",
    "Case2Exact",
    "case1_threshold_log_p",
    "case1_rho_lower",
    "case1_gauss_side_onset",
    "select_f",
    "case2_quantities",
    "case2_exact_rho_lower",
    "binomial_upper_tail_fraction",
    "eta_feasible",
    "eta_max",
    "EXACT_BINOMIAL_N_CAP",
]

EXACT_BINOMIAL_N_CAP = 10**5
TWO_OVER_E = 2.0 / math.e
_LOG_2 = math.log(2.0)


def _require_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ConfigError(f"n must be a positive even integer, got {n}")


def case1_threshold_log_p(n: int) -> float:
    """log of the Case I dimension threshold sqrt(pi/2)(sqrt(n+4)+sqrt(n)) e^{n/2}."""
    return math.log(math.sqrt(math.pi / 2.0) * (math.sqrt(n + 4.0) + math.sqrt(n))) + n / 2.0


@dataclass(frozen=True)
class CaseIConfig:
    n: int
    log_p: float

    def __post_init__(self) -> None:
        _require_even(self.n)
        threshold = case1_threshold_log_p(self.n)
        if self.log_p < threshold:
            raise ConfigError(
                f"Case I requires log_p >= {threshold} at n = {self.n}, got {self.log_p}"
            )


@dataclass(frozen=True)
class Case1Result:
    gauss_side: float  # Phi(sqrt(n))^p
    rho_lower: float  # 1 - Phi(sqrt(n))^p
    gauss_side_le_2_over_e: bool


def case1_rho_lower(cfg: CaseIConfig) -> Case1Result:
    """1 - Phi(sqrt(n))^p: a valid lower bound on the GA error since the
    lattice probability of (-inf, sqrt(n)]^p is exactly 1."""
    powered = pow_prob(gauss_tailpair(math.sqrt(cfg.n)), cfg.log_p)
    gauss_side = math.exp(powered.log_cdf)
    rho = math.exp(powered.log_sf)
    return Case1Result(gauss_side, rho, gauss_side <= TWO_OVER_E)


def case1_gauss_side_onset(n_values) -> int | None:
    """Smallest even n in n_values where the threshold-p Gaussian side is <= 2/e."""
    for n in sorted(n_values):
        if n % 2:
            continue
        cfg = CaseIConfig(n, case1_threshold_log_p(n))
        if case1_rho_lower(cfg).gauss_side_le_2_over_e:
            return n
    return None


# ---------------------------------------------------------------------------
# Case II
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectedF:
    f_n: float
    n1: int
    branch: str  # "sub_comparable" or "comparable"


def _even_round(x: float) -> int:
    return 2 * round(x / 2.0)


def select_f(n: int, log_p: float, delta: float, eta: float) -> SelectedF:
    """Deterministic choice of f(n) and the even integer n1 = n^{3/4} f(n).

    Below the comparable-order regime, f solves sqrt(n) f^2 = 2(log p - log n)
    and is clamped into [n^{delta/4}, n^{1/4}/(1+eta)]; in the comparable-order
    regime f sits at the top of the corridor.  n1 is rounded to the nearest
    even integer (ties to even multiples of 2 via banker's rounding) and f is
    recomputed from it.
    """
    _require_even(n)
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    if eta <= 0.0:
        raise ConfigError(f"eta must be positive, got {eta}")
    f_lo = n ** (delta / 4.0)
    f_hi = n**0.25 / (1.0 + eta)
    if f_lo > f_hi:
        raise ConfigError(
            f"empty f-corridor at n = {n}: n^(delta/4) = {f_lo} > "
            f"n^(1/4)/(1+eta) = {f_hi}"
        )
    lo_log_p = n ** (delta + 0.5)
    hi_log_p = case1_threshold_log_p(n)
    if not lo_log_p <= log_p <= hi_log_p:
        raise ConfigError(
            f"Case II requires n^(delta+1/2) = {lo_log_p} <= log_p <= {hi_log_p}, "
            f"got {log_p}"
        )
    comparable_cut = 0.75 * math.log(n) + n / (2.0 * (1.0 + eta) ** 2)
    if log_p < comparable_cut:
        branch = "sub_comparable"
        target_sq = 2.0 * (log_p - math.log(n)) / math.sqrt(n)
        f_target = math.sqrt(target_sq) if target_sq > 0.0 else f_lo
    else:
        branch = "comparable"
        f_target = f_hi
    f_clamped = min(max(f_target, f_lo), f_hi)
    n1 = max(2, _even_round(n**0.75 * f_clamped))
    n1 = min(n1, n)
    return SelectedF(n1 / n**0.75, n1, branch)


@dataclass(frozen=True)
class CaseIIConfig:
    n: int
    log_p: float
    delta: float
    eta: float
    f_n: float
    n1: int

    def __post_init__(self) -> None:
        _require_even(self.n)
        if self.n1 < 2 or self.n1 % 2 or self.n1 > self.n:
            raise ConfigError(f"n1 must be an even integer in [2, n], got {self.n1}")
        if self.n ** (self.delta + 0.5) > self.log_p:
            raise ConfigError("Case II requires n^(delta+1/2) <= log_p")

    @classmethod
    def build(cls, n: int, log_p: float, delta: float, eta: float) -> "CaseIIConfig":
        sel = select_f(n, log_p, delta, eta)
        return cls(n, log_p, delta, eta, sel.f_n, sel.n1)

    @property
    def branch(self) -> str:
        return select_f(self.n, self.log_p, self.delta, self.eta).branch


@dataclass(frozen=True)
class Case2Quantities:
    log_g_n: float
    log_e1n: float
    log_e2n: float
    log_p_e1n: float
    log_p_e2n: float

    @property
    def g_n(self) -> float:
        return math.exp(self.log_g_n)

    @property
    def e1n(self) -> float:
        return math.exp(self.log_e1n)

    @property
    def e2n(self) -> float:
        return math.exp(self.log_e2n)


def case2_quantities(cfg: CaseIIConfig) -> Case2Quantities:
    """The bound chain quantities: exact-prefactor binomial bound g(n), the
    Stirling-exponential envelope E1n, and the Mills-ratio envelope E2n."""
    n, n1, eta = cfg.n, cfg.n1, cfg.eta
    k = (n - n1) // 2
    if k == 0:
        log_g = -math.inf
    else:
        log_g = math.log(k) + math.log(math.comb(n, k)) - n * _LOG_2
    u_sq = 1.0 - 1.0 / (1.0 + eta) ** 2
    log_e1 = (
        1.0
        - math.log(2.0 * math.pi)
        + 0.5 * math.log(u_sq)
        + math.log((n - n1) / math.sqrt(n))
        - n1**2 / (2.0 * n)
        - n1**4 / (14.0 * n**3)
    ) if n1 < n else -math.inf
    t_val = n1 / math.sqrt(n)
    log_e2 = (
        0.5 * math.log(2.0 / math.pi)
        - n1**2 / (2.0 * n)
        - math.log(math.sqrt(t_val * t_val + 4.0) + t_val)
    )
    return Case2Quantities(
        log_g_n=log_g,
        log_e1n=log_e1,
        log_e2n=log_e2,
        log_p_e1n=cfg.log_p + log_e1,
        log_p_e2n=cfg.log_p + log_e2,
    )


def binomial_upper_tail_fraction(n: int, n1: int) -> Fraction:
    """P(S > n1) for the n-step +-1 walk, exact: sum_{k > (n+n1)/2} C(n,k)/2^n."""
    _require_even(n)
    if n1 % 2:
        raise ConfigError("n1 must be even")
    start = (n + n1) // 2 + 1
    if start > n:
        return Fraction(0)
    total = 0
    for k in range(start, n + 1):
        total += math.comb(n, k)
    return Fraction(total, 2**n)


@dataclass(frozen=True)
class Case2Exact:
    l1n_exact: float  # exact lattice probability of the witness set
    l2n: float  # Gaussian probability of the witness set
    rho_lower: float
    log_sf_walk: float  # log P(S > n1)
    p_times_sf_walk: float


def case2_exact_rho_lower(cfg: CaseIIConfig, n_cap: int = EXACT_BINOMIAL_N_CAP) -> Case2Exact:
    """|L1n_exact - L2n| with the lattice side from the exact binomial tail."""
    if cfg.n > n_cap:
        raise ResourceCapError(f"n = {cfg.n} exceeds exact-binomial cap {n_cap}")
    tail = binomial_upper_tail_fraction(cfg.n, cfg.n1)
    walk_pair: TailPair = tailpair_from_sf_fraction(tail)
    l1 = math.exp(pow_prob(walk_pair, cfg.log_p).log_cdf)
    l2 = math.exp(pow_prob(gauss_tailpair(cfg.n1 / math.sqrt(cfg.n)), cfg.log_p).log_cdf)
    log_sf = walk_pair.log_sf
    return Case2Exact(
        l1n_exact=l1,
        l2n=l2,
        rho_lower=abs(l1 - l2),
        log_sf_walk=log_sf,
        p_times_sf_walk=math.exp(cfg.log_p + log_sf) if log_sf != -math.inf else 0.0,
    )


# ---------------------------------------------------------------------------
# Feasible eta for the comparable-order branch
# ---------------------------------------------------------------------------

def _eta_lhs(eta: float) -> float:
    u = 1.0 + eta
    return 1.0 / u**3 + 1.0 / (7.0 * u**5) - 1.0


def eta_feasible(eta: float) -> bool:
    """Whether the comparable-order branch inequality holds at this eta."""
    if eta < 0.0:
        raise ValueError("eta must be >= 0")
    return _eta_lhs(eta) >= 0.0


def eta_max(tol: float = 1e-12) -> float:
    """Unique positive root of (1+eta)^-3 + (1+eta)^-5/7 - 1, by bisection."""
    lo, hi = 0.0, 1.0
    assert _eta_lhs(lo) > 0.0 > _eta_lhs(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _eta_lhs(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
