"""Signed log-scale arithmetic for probabilities far outside float range.

Everything downstream carries probabilities as ``(sign, log|x|)`` pairs or as
:class:`TailPair` objects holding both ``log F`` and ``log(1-F)``, so that
quantities like ``F**p`` with ``log p`` up to ~1e6 stay computable without
overflow or catastrophic cancellation.  All functions here are pure and
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "LogReal",
    "TailPair",
    "log_add",
    "log_sub",
    "log_pow",
    "pow_prob",
    "log_fraction",
    "tailpair_from_ratio",
    "tailpair_from_cdf_fraction",
    "tailpair_from_sf_fraction",
]

NEG_INF = float("-inf")

# Below this log-magnitude, 1 - exp(x) is 1 to double precision and the
# complementary log is the value itself.
_LOG_TINY = -37.0


def _logaddexp(a: float, b: float) -> float:
    """log(e^a + e^b), evaluated from the larger magnitude."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def _log1mexp(x: float) -> float:
    """log(1 - e^x) for x <= 0, stable on both ends."""
    if x == NEG_INF:
        return 0.0
    if x >= 0.0:
        if x == 0.0:
            return NEG_INF
        raise ValueError("log1mexp requires x <= 0")
    if x > -0.6931471805599453:  # ln 2
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def log_fraction(value: Fraction) -> float:
    """Natural log of a non-negative rational, exact up to float rounding.

    Works for arbitrarily large numerators/denominators (``math.log`` accepts
    big ints directly).
    """
    if value < 0:
        raise ValueError("log_fraction requires a non-negative value")
    if value == 0:
        return NEG_INF
    return math.log(value.numerator) - math.log(value.denominator)


@dataclass(frozen=True, slots=True)
class LogReal:
    """A real number x stored as (sign(x), log|x|).

    ``sign`` is -1, 0 or +1 and is 0 exactly when ``log_abs`` is -inf.
    ``log_abs`` must be finite otherwise (no +inf, no NaN).
    """

    sign: int
    log_abs: float

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if math.isnan(self.log_abs) or self.log_abs == math.inf:
            raise ValueError(f"log_abs must be finite or -inf, got {self.log_abs!r}")
        if (self.sign == 0) != (self.log_abs == NEG_INF):
            raise ValueError("sign == 0 iff log_abs == -inf")

    @classmethod
    def zero(cls) -> "LogReal":
        return cls(0, NEG_INF)

    @classmethod
    def one(cls) -> "LogReal":
        return cls(1, 0.0)

    @classmethod
    def from_float(cls, x: float) -> "LogReal":
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot represent {x!r}")
        if x == 0.0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_abs: float, sign: int = 1) -> "LogReal":
        if log_abs == NEG_INF:
            return cls.zero()
        return cls(sign, log_abs)

    def to_float(self) -> float:
        # Round trip is ~0.5*|log_abs| ulps of the result; near-exact for
        # moderate magnitudes, proportionally degraded for extreme ones.
        if self.sign == 0:
            return 0.0
        try:
            magnitude = math.exp(self.log_abs)
        except OverflowError:
            magnitude = math.inf
        return magnitude if self.sign > 0 else -magnitude

    def __neg__(self) -> "LogReal":
        return LogReal(-self.sign, self.log_abs)

    def __abs__(self) -> "LogReal":
        return LogReal(abs(self.sign), self.log_abs)

    def __add__(self, other: "LogReal") -> "LogReal":
        return log_add(self, other)

    def __sub__(self, other: "LogReal") -> "LogReal":
        return log_add(self, -other)

    def __mul__(self, other: "LogReal") -> "LogReal":
        s = self.sign * other.sign
        if s == 0:
            return LogReal.zero()
        return LogReal(s, self.log_abs + other.log_abs)


def log_add(x: LogReal, y: LogReal) -> LogReal:
    """x + y with exact sign handling; -inf and sign-0 flow through."""
    if x.sign == 0:
        return y
    if y.sign == 0:
        return x
    if x.sign == y.sign:
        return LogReal(x.sign, _logaddexp(x.log_abs, y.log_abs))
    # Opposite signs: subtract magnitudes from the larger one.
    if x.log_abs == y.log_abs:
        return LogReal.zero()
    if x.log_abs > y.log_abs:
        big, small = x, y
    else:
        big, small = y, x
    return LogReal(big.sign, big.log_abs + _log1mexp(small.log_abs - big.log_abs))


def log_sub(x: LogReal, y: LogReal) -> LogReal:
    """x - y."""
    return log_add(x, -y)


def log_pow(x: LogReal, e: float) -> LogReal:
    """x**e on the log scale (arithmetic on exponents, no overflow).

    Negative bases are only allowed with integer exponents.
    """
    if x.sign == 0:
        if e > 0:
            return LogReal.zero()
        raise ValueError("0**e undefined for e <= 0")
    if x.sign < 0:
        if e != int(e):
            raise ValueError("negative base requires an integer exponent")
        sign = 1 if int(e) % 2 == 0 else -1
    else:
        sign = 1
    log_abs = x.log_abs * e
    if log_abs == math.inf:
        raise OverflowError("log_pow magnitude exponent overflows to +inf")
    if x.log_abs == 0.0:
        log_abs = 0.0  # 1**e == 1 exactly
    return LogReal(sign, log_abs)


@dataclass(frozen=True, slots=True)
class TailPair:
    """``(log F, log(1-F))`` for a probability F.

    Both fields are <= 0; whichever side is tiny is held at full relative
    precision, so conversions must route through the smaller field.
    """

    log_cdf: float
    log_sf: float

    def __post_init__(self) -> None:
        if math.isnan(self.log_cdf) or math.isnan(self.log_sf):
            raise ValueError("TailPair fields must not be NaN")
        if self.log_cdf > 0.0 or self.log_sf > 0.0:
            raise ValueError(
                f"TailPair fields must be <= 0, got ({self.log_cdf}, {self.log_sf})"
            )

    @property
    def cdf(self) -> float:
        return math.exp(self.log_cdf)

    @property
    def sf(self) -> float:
        return math.exp(self.log_sf)

    def consistency_gap(self) -> float:
        """|logsumexp(log_cdf, log_sf)| — 0 for an exact pair."""
        return abs(_logaddexp(self.log_cdf, self.log_sf))

    @classmethod
    def from_log_cdf(cls, log_cdf: float) -> "TailPair":
        if log_cdf == 0.0:
            return cls(0.0, NEG_INF)
        if log_cdf == NEG_INF:
            return cls(NEG_INF, 0.0)
        if log_cdf > -1e-8:
            # 1 - e^x = -x * (1 + x/2 + x^2/6 + ...) for small |x|
            log_sf = math.log(-log_cdf) + math.log1p(log_cdf / 2.0 + log_cdf * log_cdf / 6.0)
        else:
            log_sf = _log1mexp(log_cdf)
        return cls(log_cdf, log_sf)

    @classmethod
    def from_log_sf(cls, log_sf: float) -> "TailPair":
        mirrored = cls.from_log_cdf(log_sf)
        return cls(mirrored.log_sf, mirrored.log_cdf)

    def swapped(self) -> "TailPair":
        return TailPair(self.log_sf, self.log_cdf)


def _complement_log(log_small: float) -> float:
    """log(1 - e^log_small) where log_small <= 0, tolerating underflow."""
    if log_small > _LOG_TINY:
        return _log1mexp(log_small)
    # exp underflows gracefully to 0.0, giving -0.0 here.
    return -math.exp(log_small)


def tailpair_from_ratio(num: int, den: int) -> TailPair:
    """Exact cdf = num/den -> TailPair; normalization of the ratio not required."""
    if den <= 0 or num < 0 or num > den:
        raise ValueError("need 0 <= num <= den with den > 0")
    if num == 0:
        return TailPair(NEG_INF, 0.0)
    if num == den:
        return TailPair(0.0, NEG_INF)
    log_den = math.log(den)
    if 2 * num <= den:
        log_cdf = math.log(num) - log_den
        return TailPair(log_cdf, _complement_log(log_cdf))
    log_sf = math.log(den - num) - log_den
    return TailPair(_complement_log(log_sf), log_sf)


def tailpair_from_cdf_fraction(cdf: Fraction) -> TailPair:
    """Exact rational cdf -> TailPair, keeping the smaller side precise."""
    return tailpair_from_ratio(cdf.numerator, cdf.denominator)


def tailpair_from_sf_fraction(sf: Fraction) -> TailPair:
    return tailpair_from_cdf_fraction(1 - sf)


def pow_prob(tp: TailPair, log_p: float) -> TailPair:
    """(F, 1-F) -> (F^p, 1-F^p) where the power is given as log p.

    ``-ln F`` is taken from the sf side when the cdf side is within 1e-8 of 0,
    expanding ``-ln(1 - SF)`` stably, so the result keeps full relative
    precision even when F is 1 to within double rounding.
    """
    if math.isnan(log_p) or math.isinf(log_p):
        raise ValueError("log_p must be finite")
    if tp.log_cdf == NEG_INF:
        return TailPair(NEG_INF, 0.0)
    if tp.log_sf == NEG_INF:
        return TailPair(0.0, NEG_INF)  # F == 1 exactly
    if tp.log_cdf > -1e-8:
        # -ln F = s + s^2/2 + s^3/3 + ... with s = SF
        s = math.exp(tp.log_sf)
        log_neg_log_f = tp.log_sf + math.log1p(s / 2.0 + s * s / 3.0)
    else:
        log_neg_log_f = math.log(-tp.log_cdf)
    log_u = log_p + log_neg_log_f  # u = -ln(F^p)
    if log_u >= 709.0:
        return TailPair(NEG_INF, 0.0)
    u = math.exp(log_u)
    log_cdf = -u  # may round to -0.0 when u underflows; the sf side is exact
    if log_u <= _LOG_TINY:
        log_sf = log_u  # 1 - e^-u == u to double precision
    else:
        log_sf = math.log(-math.expm1(-u))
    return TailPair(log_cdf, min(log_sf, 0.0))
