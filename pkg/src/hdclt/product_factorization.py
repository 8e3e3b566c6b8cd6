"""Product-form probabilities of hyper-rectangles and their differences.

Under iid coordinates, P(T in prod_j [a_j, b_j]) factorizes into per-coordinate
interval masses.  This module computes such products exactly in log scale,
computes the *exact* difference of two product probabilities by a telescoping
sum (no cancellation of nearly-equal products), evaluates the sorted
telescoping upper bound L1(a) + L2(b), and takes exact sups over the
one-parameter equal-coordinate rectangle families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

from .distributions import LatticeMarginal, gauss_tailpair
from .logdomain import (
    NEG_INF,
    LogReal,
    TailPair,
    log_add,
    pow_prob,
    tailpair_from_cdf_fraction,
)
from .search import golden_section_max

__all__ = [
    "RectangleFamily",
    "SortedEndpoints",
    "Marginal",
    "rect_prob",
    "rect_prob_equal_coords",
    "product_diff_exact",
    "product_diff_exact_log",
    "lemma3_bound",
    "lemma3_bound_log",
    "sup_diff_equal_coords",
    "SupDiffResult",
]

P_DIM_CAP = 10**7


class Marginal(Protocol):
    """A coordinate law: TailPair provider plus interval masses."""

    def tailpair(self, x: float) -> TailPair: ...

    def neg_tailpair(self, x: float) -> TailPair: ...

    def log_interval_mass(self, a: float, b: float) -> float: ...

    def interval_tailpair(self, a: float, b: float) -> TailPair: ...


@dataclass(frozen=True)
class RectangleFamily:
    """Per-coordinate closed interval endpoints; +-inf allowed."""

    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        if not self.a:
            raise ValueError("p_dim must be >= 1")
        if len(self.a) > P_DIM_CAP:
            raise ValueError(f"p_dim exceeds cap {P_DIM_CAP}")
        for lo, hi in zip(self.a, self.b):
            if math.isnan(lo) or math.isnan(hi):
                raise ValueError("endpoints must not be NaN")
            if lo > hi:
                raise ValueError(f"need a_j <= b_j, got ({lo}, {hi})")

    @property
    def p_dim(self) -> int:
        return len(self.a)

    @classmethod
    def equal_coords(cls, a: float, b: float, p: int) -> "RectangleFamily":
        return cls((a,) * p, (b,) * p)


@dataclass(frozen=True)
class SortedEndpoints:
    """A coordinate vector sorted both ways."""

    increasing: tuple[float, ...]
    decreasing: tuple[float, ...]

    @classmethod
    def from_vector(cls, values: Sequence[float]) -> "SortedEndpoints":
        inc = tuple(sorted(values))
        return cls(inc, tuple(reversed(inc)))


def rect_prob(marginal: Marginal, rect: RectangleFamily) -> LogReal:
    """prod_j P(a_j <= T <= b_j) accumulated in log scale."""
    total = 0.0
    for lo, hi in zip(rect.a, rect.b):
        lm = marginal.log_interval_mass(lo, hi)
        if lm == NEG_INF:
            return LogReal.zero()
        total += lm
    return LogReal.from_log(total)


def rect_prob_equal_coords(tp: TailPair, log_p: float) -> TailPair:
    """(F^p, 1-F^p) for the rectangle (-inf, t]^p given (F, 1-F) at t.

    Identical to rect_prob when all coordinates share one endpoint, but valid
    for log p up to ~1e6.  Requires p >= 1.
    """
    if log_p < 0.0:
        raise ValueError("rect_prob_equal_coords requires p >= 1 (log_p >= 0)")
    return pow_prob(tp, log_p)


def _signed_log_diff(log_x: float, log_y: float) -> LogReal:
    """x - y from their logs, as a LogReal."""
    if log_x == log_y:
        return LogReal.zero()
    if log_x > log_y:
        sign, hi, lo = 1, log_x, log_y
    else:
        sign, hi, lo = -1, log_y, log_x
    return LogReal(sign, hi + math.log1p(-math.exp(lo - hi)))


def _cdf_log_diff(tp_f: TailPair, tp_g: TailPair) -> LogReal:
    """F - G from two TailPairs, using whichever side is better conditioned."""
    if max(tp_f.log_cdf, tp_g.log_cdf) <= max(tp_f.log_sf, tp_g.log_sf):
        return _signed_log_diff(tp_f.log_cdf, tp_g.log_cdf)
    # F - G = (1-G) - (1-F)
    return _signed_log_diff(tp_g.log_sf, tp_f.log_sf)


def product_diff_exact_log(
    f: Marginal, g: Marginal, rect: RectangleFamily
) -> LogReal:
    """prod_j q_j - prod_j g_j evaluated by the exact telescoping sum.

    Each term is (prod_{j<k} q_j) (q_k - g_k) (prod_{j>k} g_j); accumulating
    the signed terms in log scale avoids the cancellation of two nearly equal
    products, and each q_k - g_k is differenced on whichever of (mass,
    complement) is better conditioned.
    """
    pairs_q = [f.interval_tailpair(lo, hi) for lo, hi in zip(rect.a, rect.b)]
    pairs_g = [g.interval_tailpair(lo, hi) for lo, hi in zip(rect.a, rect.b)]
    p = rect.p_dim
    prefix_q = [0.0] * (p + 1)
    for k in range(p):
        prefix_q[k + 1] = prefix_q[k] + pairs_q[k].log_cdf
    suffix_g = [0.0] * (p + 1)
    for k in range(p - 1, -1, -1):
        suffix_g[k] = suffix_g[k + 1] + pairs_g[k].log_cdf
    total = LogReal.zero()
    for k in range(p):
        delta = _cdf_log_diff(pairs_q[k], pairs_g[k])
        if delta.sign == 0:
            continue
        weight = prefix_q[k] + suffix_g[k + 1]
        if weight == NEG_INF:
            continue
        total = log_add(total, LogReal(delta.sign, delta.log_abs + weight))
    return total


def product_diff_exact(f: Marginal, g: Marginal, rect: RectangleFamily) -> float:
    """|prod_j q_j - prod_j g_j|, exact telescoping in log-safe form."""
    return abs(product_diff_exact_log(f, g, rect).to_float())


def lemma3_bound_log(f: Marginal, g: Marginal, rect: RectangleFamily) -> LogReal:
    """The sorted telescoping upper bound L1(a) + L2(b) on the product diff.

    L1 runs over the decreasing sort of a (through the laws of -T at -a); L2
    over the increasing sort of b.  Products of p-1 max-cdf factors are kept
    as prefix/suffix log sums.  The result is inflated by a p-dependent
    roundoff margin so the returned value is a certified upper bound even at
    mathematical-equality instances (e.g. p = 1 with opposite-sign
    deviations), where independent float paths would otherwise tie at 1 ulp.
    """
    la = _telescope_side(
        sorted(-x for x in rect.a),
        lambda x: f.neg_tailpair(x),
        lambda x: g.neg_tailpair(x),
    )
    lb = _telescope_side(
        sorted(rect.b),
        lambda x: f.tailpair(x),
        lambda x: g.tailpair(x),
    )
    total = log_add(la, lb)
    if total.sign == 0:
        return total
    margin = (rect.p_dim + 16) * 1e-14
    return LogReal(total.sign, total.log_abs + math.log1p(margin))


def lemma3_bound(f: Marginal, g: Marginal, rect: RectangleFamily) -> float:
    return lemma3_bound_log(f, g, rect).to_float()


def _telescope_side(points, f_tp, g_tp) -> LogReal:
    logs_max = []
    d_logs = []
    for x in points:
        tpf = f_tp(x)
        tpg = g_tp(x)
        logs_max.append(max(tpf.log_cdf, tpg.log_cdf))
        d_logs.append(abs(_cdf_log_diff(tpf, tpg)).log_abs)
    p = len(points)
    prefix = [0.0] * (p + 1)
    for k in range(p):
        prefix[k + 1] = prefix[k] + logs_max[k]
    suffix = [0.0] * (p + 1)
    for k in range(p - 1, -1, -1):
        suffix[k] = suffix[k + 1] + logs_max[k]
    total = LogReal.zero()
    for k in range(p):
        if d_logs[k] == NEG_INF:
            continue
        weight = prefix[k] + suffix[k + 1]
        if weight == NEG_INF:
            continue
        total = log_add(total, LogReal(1, d_logs[k] + weight))
    return total


# ---------------------------------------------------------------------------
# Exact sup over one-parameter rectangle families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupDiffResult:
    t_star: float
    rho: float


_LOG2 = math.log(2.0)


def _powered_fraction(mass: Fraction, log_p: float) -> float:
    """mass^p for an exact rational mass, via the stable power path."""
    return math.exp(pow_prob(tailpair_from_cdf_fraction(mass), log_p).log_cdf)


def _gauss_cdf_pow(t: float, log_p: float) -> float:
    """Phi(t)^p."""
    return math.exp(pow_prob(gauss_tailpair(t), log_p).log_cdf)


def _gauss_symmetric_pow(t: float, log_p: float) -> float:
    """P(|Z| <= t)^p = (1 - 2(1-Phi(t)))^p for t >= 0."""
    log_sf2 = _LOG2 + gauss_tailpair(t).log_sf
    if log_sf2 >= 0.0:
        return 0.0  # t == 0: the interval has mass 0
    return math.exp(pow_prob(TailPair.from_log_sf(log_sf2), log_p).log_cdf)


def sup_diff_equal_coords(
    marg: LatticeMarginal,
    log_p: float,
    side: str = "left_infinite",
    golden_iters: int = 60,
    golden_tol: float = 1e-12,
) -> SupDiffResult:
    """Exact sup_t |F_side(t)^p - Phi_side(t)^p| over an equal-coordinate family.

    Candidates are every lattice jump point (both one-sided limits) plus
    golden-section stationary candidates on each open interval between
    consecutive jumps, where the lattice side is constant and only the
    Gaussian side moves.  Exact on the lattice side since F^p is piecewise
    constant.
    """
    if log_p < 0.0:
        raise ValueError("requires p >= 1 (log_p >= 0)")
    if side == "left_infinite":
        return _sup_left_infinite(marg, log_p, golden_iters, golden_tol)
    if side == "symmetric":
        return _sup_symmetric(marg, log_p, golden_iters, golden_tol)
    raise ValueError(f"unknown side {side!r}")


def _sup_left_infinite(
    marg: LatticeMarginal, log_p: float, golden_iters: int, golden_tol: float
) -> SupDiffResult:
    prefix = marg.prefix
    pos = marg.positions
    n_atoms = len(pos)
    best_t, best_rho = pos[0], 0.0

    def consider(t: float, rho: float) -> None:
        nonlocal best_t, best_rho
        if rho > best_rho:
            best_t, best_rho = t, rho

    lat_levels = [_powered_fraction(prefix[k], log_p) for k in range(n_atoms + 1)]
    for k in range(n_atoms):
        g = _gauss_cdf_pow(pos[k], log_p)
        consider(pos[k], abs(lat_levels[k + 1] - g))  # t = atom (inclusive)
        consider(pos[k], abs(lat_levels[k] - g))  # t -> atom^-
    for k in range(n_atoms - 1):
        lo, hi = pos[k], pos[k + 1]
        if not lo < hi:
            continue
        level = lat_levels[k + 1]
        t_g, rho_g = golden_section_max(
            lambda t: abs(level - _gauss_cdf_pow(t, log_p)),
            lo,
            hi,
            golden_iters,
            golden_tol,
        )
        consider(t_g, rho_g)
    return SupDiffResult(best_t, best_rho)


def _sup_symmetric(
    marg: LatticeMarginal, log_p: float, golden_iters: int, golden_tol: float
) -> SupDiffResult:
    prefix = marg.prefix
    # Jumps of t -> mass([-t, t]) happen at the absolute atom positions.
    abs_positions = sorted({abs(u) for u in marg.positions})

    def mass_left(u: float) -> Fraction:
        # mass of [-t, t] as t -> u^-: atoms at +-u excluded.
        hi = marg.count_lt(u)
        lo = marg.count_le(-u)
        if hi <= lo:
            return Fraction(0)
        return prefix[hi] - prefix[lo]

    best_t, best_rho = 0.0, 0.0

    def consider(t: float, rho: float) -> None:
        nonlocal best_t, best_rho
        if rho > best_rho:
            best_t, best_rho = t, rho

    for u in abs_positions:
        g = _gauss_symmetric_pow(u, log_p)
        consider(u, abs(_powered_fraction(marg.interval_mass_fraction(-u, u), log_p) - g))
        consider(u, abs(_powered_fraction(mass_left(u), log_p) - g))
    for k in range(len(abs_positions) - 1):
        lo, hi = abs_positions[k], abs_positions[k + 1]
        if not lo < hi:
            continue
        level = _powered_fraction(marg.interval_mass_fraction(-lo, lo), log_p)
        t_g, rho_g = golden_section_max(
            lambda t: abs(level - _gauss_symmetric_pow(t, log_p)),
            lo,
            hi,
            golden_iters,
            golden_tol,
        )
        consider(t_g, rho_g)
    return SupDiffResult(best_t, best_rho)
