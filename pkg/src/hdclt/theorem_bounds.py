"""Assembled upper-bound pipelines for the Gaussian-approximation error.

Given a sorted endpoint vector t, the per-coordinate envelopes combine into
four pieces (I1..I4 resp. J1..J4) over an endpoint partition of the line, and
into t-free aggregates A1n/A2n/A3n whose sum bounds the error uniformly in t.
Pieces are computed in log scale and exponentiated last; sums of p-indexed
terms with identical structure use closed forms (count x term), never loops
over astronomically large p.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError
from .nonuniform_be import (
    ENVELOPE_LOW_CONSTANT,
    BoundConstants,
    MomentProfile,
)

__all__ = [
    "Partition",
    "BoundReport",
    "partition_endpoints",
    "theorem1_bound",
    "theorem2_bound",
    "theorem2_c",
    "i31_value",
    "i31_extremal_profile",
    "sup_x_times_pow",
    "D_GROWTH",
]

_INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)
_SQRT_4PI = math.sqrt(4.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# d > 1 with d^{-1} = the flat envelope level below x = 1.
D_GROWTH = 1.0 / ENVELOPE_LOW_CONSTANT
_LOG_D = math.log(D_GROWTH)


def _safe_exp(x: float) -> float:
    if x >= 709.0:
        return math.inf
    return math.exp(x)


def sup_x_times_pow(d: float) -> float:
    """sup_{x>0} x * d^{-x} = (log d)^{-1} d^{-(log d)^{-1}} for d > 1."""
    if d <= 1.0:
        raise ValueError("requires d > 1")
    log_d = math.log(d)
    return (1.0 / log_d) * d ** (-1.0 / log_d)


@dataclass(frozen=True)
class Partition:
    """Endpoint counts per region of the real line.

    Counts are cumulative: l1 coordinates strictly below ``lower``, l2 at or
    above ``lower`` but strictly below ``mid`` (= 1), l3 additionally at or
    below ``upper``; the remaining p - l3 lie strictly above ``upper``.
    """

    l1: int
    l2: int
    l3: int
    thresholds: tuple[float, float, float]  # (lower, mid, upper)
    p_dim: int

    def __post_init__(self) -> None:
        if not 0 <= self.l1 <= self.l2 <= self.l3 <= self.p_dim:
            raise ValueError("partition indices must be nested in [0, p_dim]")


def partition_endpoints(t: Sequence[float], lower: float, upper: float) -> Partition:
    """Classify a sorted endpoint vector against (lower, 1, upper)."""
    if not lower < 1.0 <= upper:
        raise ValueError("need lower < 1 <= upper")
    for x, y in zip(t, t[1:]):
        if x > y:
            raise ValueError("t must be sorted non-decreasing")
    l1 = bisect.bisect_left(t, lower)  # strictly below lower
    l2 = bisect.bisect_left(t, 1.0)  # strictly below 1
    l3 = bisect.bisect_right(t, upper)  # at or below upper
    return Partition(l1, l2, l3, (lower, 1.0, upper), len(t))


@dataclass(frozen=True)
class BoundReport:
    """Pieces, t-free aggregates and their sum, plus the full configuration."""

    pieces: tuple[float, float, float, float]
    aggregates: tuple[float, float, float]
    total: float
    n: int
    log_p: float
    param_kind: str  # "a_n" or "epsilon"
    param_value: float
    constants: dict
    extras: dict

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.pieces):
            raise ValueError("pieces must be non-negative")


def _log_sum_exp(values: list[float]) -> float:
    finite = [v for v in values if v != -math.inf]
    if not finite:
        return -math.inf
    hi = max(finite)
    return hi + math.log(sum(math.exp(v - hi) for v in finite))


def i31_value(ts_mid: Sequence[float], n: int, a_val: float, b2: float) -> float:
    """sum_k b2 n^{-1/4} e^{-t_k^2/2} prod_{j != k} (1 - z_j) over the middle block.

    z_j = (4 pi)^{-1/2} a_n n^{-1/4} e^{-t_j^2/2}; log-domain prefix/suffix
    products keep this stable for long blocks.
    """
    m = len(ts_mid)
    if m == 0:
        return 0.0
    coef = _INV_SQRT_4PI * a_val * n**-0.25
    z = [coef * math.exp(-0.5 * t * t) for t in ts_mid]
    log1mz = [math.log1p(-zj) for zj in z]
    prefix = [0.0] * (m + 1)
    for k in range(m):
        prefix[k + 1] = prefix[k] + log1mz[k]
    suffix = [0.0] * (m + 1)
    for k in range(m - 1, -1, -1):
        suffix[k] = suffix[k + 1] + log1mz[k]
    log_terms = [
        math.log(b2) - 0.25 * math.log(n) - 0.5 * ts_mid[k] * ts_mid[k]
        + prefix[k] + suffix[k + 1]
        for k in range(m)
    ]
    return _safe_exp(_log_sum_exp(log_terms))


def i31_extremal_profile(z: Sequence[float]) -> int:
    """Split index m for the middle-block sum's monotonicity pattern.

    For z sorted non-increasing in (0, 1) the sum is non-increasing in its
    first m coordinates and non-decreasing in the rest, where the partial
    derivative sign at coordinate l is the sign of sum_{j != l} z_j/(1-z_j) - 1.
    Returns m = the number of coordinates on the non-increasing side.
    """
    if not z:
        return 0
    for zj in z:
        if not 0.0 < zj < 1.0:
            raise ValueError("z entries must lie in (0, 1)")
    for x, y in zip(z, z[1:]):
        if x < y:
            raise ValueError("z must be sorted non-increasing")
    w = [zj / (1.0 - zj) for zj in z]
    total = sum(w)
    return sum(1 for wl in w if total - wl < 1.0)


def _outer_sum_log(ts: Sequence[float], b1: float, exponent: float) -> float:
    """log sum_k b1 e^{-t_k^2 * exponent} over an explicit coordinate block."""
    if not ts:
        return -math.inf
    return math.log(b1) + _log_sum_exp([-exponent * t * t for t in ts])


def theorem1_bound(
    t: Sequence[float],
    n: int,
    log_p: float,
    profile: MomentProfile,
    constants: BoundConstants,
) -> BoundReport:
    """Four-piece bound plus t-free aggregates for a given (n, log p).

    The aggregate A1n uses the tightest admissible growth constant, i.e. the
    exact identity p = e^{log_p}; A2n uses the closed form of
    sup_{x>0} x d^{-x}; A3n uses sup_{x>0}(log x - xz) = -1 - log z.
    Raises ConfigError when a_n^3 >= sqrt(n) (the partition collapses) or when
    the explicit vector has more coordinates than p.
    """
    a_val = constants.a_n(n)
    if a_val**3 >= math.sqrt(n):
        raise ConfigError(f"a_n^3 = {a_val ** 3} >= sqrt(n) = {math.sqrt(n)}")
    ts = sorted(t)
    if ts and math.log(len(ts)) > log_p + 1e-12:
        raise ConfigError("t has more coordinates than p = e^log_p")
    threshold = n**0.25 / a_val
    part = partition_endpoints(ts, -threshold, threshold)
    l1, l2, l3 = part.l1, part.l2, part.l3
    exponent_out = 1.0 - 1.0 / profile.l_const

    coef = _INV_SQRT_4PI * a_val * n**-0.25
    log_mid_all = sum(
        math.log1p(-coef * math.exp(-0.5 * x * x)) for x in ts[l2:l3]
    )
    log_low_pow = (l2 - 1) * math.log(ENVELOPE_LOW_CONSTANT) if l2 >= 1 else 0.0

    i1 = 0.0
    if l1 >= 1:
        i1 = _safe_exp(log_low_pow + log_mid_all + _outer_sum_log(ts[:l1], constants.b1, exponent_out))
    i2 = 0.0
    if l2 - l1 >= 1:
        log_inner = _outer_sum_log(ts[l1:l2], constants.b2, 0.5) - 0.25 * math.log(n)
        i2 = _safe_exp(log_low_pow + log_mid_all + log_inner)
    i3 = 0.0
    if l3 - l2 >= 1:
        i3 = ENVELOPE_LOW_CONSTANT**l2 * i31_value(ts[l2:l3], n, a_val, constants.b2)
    i4 = 0.0
    if part.p_dim - l3 >= 1:
        i4 = _safe_exp(
            l2 * math.log(ENVELOPE_LOW_CONSTANT)
            + log_mid_all
            + _outer_sum_log(ts[l3:], constants.b1, exponent_out)
        )

    thr_sq = threshold * threshold
    a1n = constants.b1 * _safe_exp(log_p - thr_sq * exponent_out)
    a2n = constants.b2 * D_GROWTH * sup_x_times_pow(D_GROWTH) * n**-0.25
    a3n = _SQRT_4PI * constants.b2 / a_val + constants.b2 * n**-0.25 * _safe_exp(
        log_p - 0.5 * thr_sq
    )

    _check_pieces_vs_aggregates((i1, i2, i3, i4), (a1n, a2n, a3n))
    return BoundReport(
        pieces=(i1, i2, i3, i4),
        aggregates=(a1n, a2n, a3n),
        total=a1n + a2n + a3n,
        n=n,
        log_p=log_p,
        param_kind="a_n",
        param_value=a_val,
        constants={
            "b1": constants.b1,
            "b2": constants.b2,
            "m_n_coeff": constants.m_n_coeff,
            "a_n": constants.a_n.description,
            "l": profile.l_const,
        },
        extras={"partition": (l1, l2, l3), "threshold": threshold},
    )


def _check_pieces_vs_aggregates(pieces, aggregates) -> None:
    i1, i2, i3, i4 = pieces
    a1n, a2n, a3n = aggregates
    slack = 1e-9
    if i1 + i4 > a1n * (1.0 + slack) + 1e-300:
        raise AssertionError(f"I1+I4 = {i1 + i4} exceeds A1n = {a1n}")
    if i2 > a2n * (1.0 + slack) + 1e-300:
        raise AssertionError(f"I2 = {i2} exceeds A2n = {a2n}")
    if i3 > a3n * (1.0 + slack) + 1e-300:
        raise AssertionError(f"I3 = {i3} exceeds A3n = {a3n}")


def theorem2_c(b2: float, l_const: float) -> float:
    """The admissible-epsilon ceiling min{[8 b2 sqrt(2 pi) (sqrt 2 + 1)]^-3, (1 - 1/l)^3}."""
    first = (8.0 * b2 * _SQRT_2PI * (math.sqrt(2.0) + 1.0)) ** -3
    second = (1.0 - 1.0 / l_const) ** 3
    return min(first, second)


def theorem2_bound(
    t: Sequence[float],
    n: int,
    epsilon: float,
    profile: MomentProfile,
    constants: BoundConstants,
) -> BoundReport:
    """Epsilon-range pipeline: log p = eps * sqrt(n), thresholds +-eps^{1/3} n^{1/4}.

    Reports each aggregate against its target fraction of eps (eps/12, eps/12,
    eps/4 + eps/12) and the total against both eps/2 and 7 eps/12; the
    "for large enough n" verdicts live in extras, nothing is asserted here.
    """
    c_limit = theorem2_c(constants.b2, profile.l_const)
    if not 0.0 < epsilon < c_limit:
        raise ValueError(f"epsilon must lie in (0, c) with c = {c_limit}")
    log_p = epsilon * math.sqrt(n)
    ts = sorted(t)
    if ts and math.log(len(ts)) > log_p + 1e-12:
        raise ConfigError("t has more coordinates than p = e^log_p")
    eps_13 = epsilon ** (1.0 / 3.0)
    eps_23 = epsilon ** (2.0 / 3.0)
    threshold = eps_13 * n**0.25
    if ts and threshold < 1.0:
        # t-free aggregate evaluation stays available below the onset where
        # the partition regions exist.
        raise ConfigError(f"threshold {threshold} < 1: partition collapses at this n")
    if ts:
        part = partition_endpoints(ts, -threshold, threshold)
        l4, l5, l6 = part.l1, part.l2, part.l3
    else:
        l4 = l5 = l6 = 0
    p_dim = len(ts)
    exponent_out = 1.0 - 1.0 / profile.l_const

    denom = _SQRT_2PI * (math.sqrt(eps_23 + 4.0 / math.sqrt(n)) + eps_13)
    zeta_coef = n**-0.25 / denom
    log_mid_all = sum(
        math.log1p(-zeta_coef * math.exp(-0.5 * x * x)) for x in ts[l5:l6]
    )
    log_low_pow = (l5 - 1) * math.log(ENVELOPE_LOW_CONSTANT) if l5 >= 1 else 0.0

    j1 = 0.0
    if l4 >= 1:
        j1 = _safe_exp(log_low_pow + log_mid_all + _outer_sum_log(ts[:l4], constants.b1, exponent_out))
    j2 = 0.0
    if l5 - l4 >= 1:
        log_inner = (
            math.log(epsilon)
            + _outer_sum_log(ts[l4:l5], constants.b2, 0.5)
            - 0.25 * math.log(n)
        )
        j2 = _safe_exp(log_low_pow + log_mid_all + log_inner)
    j3 = 0.0
    if l6 - l5 >= 1:
        j3 = ENVELOPE_LOW_CONSTANT**l5 * _j31_value(
            ts[l5:l6], n, zeta_coef, epsilon * constants.b2
        )
    j4 = 0.0
    if p_dim - l6 >= 1:
        j4 = _safe_exp(
            l5 * math.log(ENVELOPE_LOW_CONSTANT)
            + log_mid_all
            + _outer_sum_log(ts[l6:], constants.b1, exponent_out)
        )

    a_j14 = constants.b1 * _safe_exp(-eps_23 * math.sqrt(n) * (exponent_out - eps_13))
    a_j2 = epsilon * constants.b2 * D_GROWTH * sup_x_times_pow(D_GROWTH) * n**-0.25
    z_n = n**-0.25 * math.exp(-0.5) / denom
    a_j3 = denom * 2.0 * epsilon * constants.b2 + epsilon * constants.b2 * n**-0.25 * _safe_exp(
        -eps_23 * math.sqrt(n) * (0.5 - eps_13)
    )

    total = a_j14 + a_j2 + a_j3
    extras = {
        "partition": (l4, l5, l6) if ts else None,
        "threshold": threshold,
        "c": c_limit,
        "z_n": z_n,
        "j1_plus_j4_below_eps_12": a_j14 < epsilon / 12.0,
        "j2_below_eps_12": a_j2 < epsilon / 12.0,
        "j3_below_eps_3": a_j3 < epsilon / 4.0 + epsilon / 12.0,
        "total_below_eps_half": total < epsilon / 2.0,
        "total_below_7eps_12": total < 7.0 * epsilon / 12.0,
    }
    return BoundReport(
        pieces=(j1, j2, j3, j4),
        aggregates=(a_j14, a_j2, a_j3),
        total=total,
        n=n,
        log_p=log_p,
        param_kind="epsilon",
        param_value=epsilon,
        constants={
            "b1": constants.b1,
            "b2": constants.b2,
            "m_n_coeff": constants.m_n_coeff,
            "a_n": constants.a_n.description,
            "l": profile.l_const,
        },
        extras=extras,
    )


def _j31_value(ts_mid: Sequence[float], n: int, zeta_coef: float, eps_b2: float) -> float:
    """Middle-block sum with the epsilon-range factors (1 - zeta_j)."""
    m = len(ts_mid)
    if m == 0:
        return 0.0
    z = [zeta_coef * math.exp(-0.5 * x * x) for x in ts_mid]
    log1mz = [math.log1p(-zj) for zj in z]
    prefix = [0.0] * (m + 1)
    for k in range(m):
        prefix[k + 1] = prefix[k] + log1mz[k]
    suffix = [0.0] * (m + 1)
    for k in range(m - 1, -1, -1):
        suffix[k] = suffix[k + 1] + log1mz[k]
    log_terms = [
        math.log(eps_b2) - 0.25 * math.log(n) - 0.5 * ts_mid[k] * ts_mid[k]
        + prefix[k] + suffix[k + 1]
        for k in range(m)
    ]
    return _safe_exp(_log_sum_exp(log_terms))
