"""Exact laws of normalized lattice sums plus high-precision Gaussian helpers.

The lattice side is exact: pmfs are rationals, n-fold convolutions are done in
big-rational arithmetic, and tail sums are accumulated over the numerically
smaller tail before the single final conversion to log scale.  The Gaussian
side uses ``erfc`` up to |t| = 8 and a complementary-error asymptotic series
beyond, keeping *relative* accuracy in the far tail.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import ResourceCapError
from .logdomain import (
    NEG_INF,
    TailPair,
    log_fraction,
    tailpair_from_cdf_fraction,
    tailpair_from_ratio,
)

__all__ = [
    "LatticeDistribution",
    "ComponentModel",
    "LatticeMarginal",
    "GaussianMarginal",
    "STD_GAUSSIAN",
    "rademacher",
    "convolve_iid",
    "lattice_cdf",
    "gauss_tailpair",
    "gauss_log_interval",
    "gauss_quantile",
    "mills_lower",
    "stirling_bounds",
    "moment_2m",
]

SUPPORT_CAP = 10**6
MOMENT_ORDER_CAP = 10**4
GAUSS_SERIES_SWITCH = 8.0
GAUSS_SERIES_CAP = 48

_SQRT2 = math.sqrt(2.0)
_LOG_HALF = math.log(0.5)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(eq=True)
class LatticeDistribution:
    """Exact pmf on the arithmetic lattice ``offset + step*k``.

    Masses are non-negative rationals summing to exactly 1; the first and last
    masses are nonzero (trimmed support).  Instances are treated as immutable
    after construction.
    """

    offset: Fraction
    step: Fraction
    masses: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        self.offset = Fraction(self.offset)
        self.step = Fraction(self.step)
        self.masses = tuple(Fraction(m) for m in self.masses)
        if self.step <= 0:
            raise ValueError("step must be positive")
        if not self.masses:
            raise ValueError("masses must be non-empty")
        if any(m < 0 for m in self.masses):
            raise ValueError("masses must be non-negative")
        if sum(self.masses) != 1:
            raise ValueError("masses must sum to exactly 1")
        if self.masses[0] == 0 or self.masses[-1] == 0:
            raise ValueError("support must be trimmed (nonzero end masses)")

    def __len__(self) -> int:
        return len(self.masses)

    def position(self, k: int) -> Fraction:
        return self.offset + k * self.step

    def support(self) -> list[Fraction]:
        return [self.position(k) for k in range(len(self.masses))]

    @property
    def prefix(self) -> tuple[Fraction, ...]:
        """prefix[k] = sum of the first k masses (len + 1 entries)."""
        cached = self.__dict__.get("_prefix")
        if cached is None:
            acc = Fraction(0)
            out = [acc]
            for m in self.masses:
                acc += m
                out.append(acc)
            cached = tuple(out)
            self.__dict__["_prefix"] = cached
        return cached

    @property
    def prefix_ratio(self) -> tuple[tuple[int, ...], int]:
        """(integer prefix sums, common denominator) over an unreduced grid.

        Keeps cdf arithmetic in plain ints; equivalent to ``prefix`` but
        without per-step gcd normalization.
        """
        cached = self.__dict__.get("_prefix_ratio")
        if cached is None:
            den = math.lcm(*(m.denominator for m in self.masses))
            acc = 0
            nums = [0]
            for m in self.masses:
                acc += m.numerator * (den // m.denominator)
                nums.append(acc)
            cached = (tuple(nums), den)
            self.__dict__["_prefix_ratio"] = cached
        return cached

    def mean(self) -> Fraction:
        return sum(m * self.position(k) for k, m in enumerate(self.masses))

    def variance(self) -> Fraction:
        mu = self.mean()
        return sum(m * (self.position(k) - mu) ** 2 for k, m in enumerate(self.masses))

    def moment(self, order: int) -> Fraction:
        """Raw moment E[X^order], exact."""
        return sum(m * self.position(k) ** order for k, m in enumerate(self.masses))

    def is_symmetric(self) -> bool:
        """Exact test that the pmf is symmetric about 0."""
        if 2 * self.offset + (len(self.masses) - 1) * self.step != 0:
            return False
        return self.masses == tuple(reversed(self.masses))

    def count_le(self, threshold: Fraction) -> int:
        """Number of support points <= threshold (exact)."""
        lo, hi = 0, len(self.masses)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.position(mid) <= threshold:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def cdf_fraction(self, t) -> Fraction:
        """P(S <= t), exact, right-continuous."""
        if isinstance(t, float):
            if math.isnan(t):
                raise ValueError("t must not be NaN")
            if t == math.inf:
                return Fraction(1)
            if t == -math.inf:
                return Fraction(0)
        return self.prefix[self.count_le(Fraction(t))]

    def sf_fraction(self, t) -> Fraction:
        """P(S > t), exact."""
        return 1 - self.cdf_fraction(t)


def rademacher() -> LatticeDistribution:
    """The +-1 coin: mass 1/2 at -1 and +1."""
    return LatticeDistribution(Fraction(-1), Fraction(2), (Fraction(1, 2), Fraction(1, 2)))


def _mass_convolve(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ma in enumerate(a):
        if ma == 0:
            continue
        for j, mb in enumerate(b):
            if mb != 0:
                out[i + j] += ma * mb
    return out


def convolve_iid(d: LatticeDistribution, n: int, cap: int = SUPPORT_CAP) -> LatticeDistribution:
    """Exact law of the sum of n iid copies of d, by binary exponentiation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    expected = n * (len(d) - 1) + 1
    if expected > cap:
        raise ResourceCapError(
            f"convolution support {expected} exceeds cap {cap}"
        )
    result: list[Fraction] | None = None
    base = list(d.masses)
    remaining = n
    while remaining:
        if remaining & 1:
            result = base[:] if result is None else _mass_convolve(result, base)
        remaining >>= 1
        if remaining:
            base = _mass_convolve(base, base)
    assert result is not None
    return LatticeDistribution(d.offset * n, d.step, tuple(result))


@lru_cache(maxsize=128)
def _rademacher_sum(n: int) -> LatticeDistribution:
    # Closed-form binomial masses; exactly equals convolve_iid(rademacher(), n).
    denom = 2**n
    masses = tuple(Fraction(math.comb(n, k), denom) for k in range(n + 1))
    return LatticeDistribution(Fraction(-n), Fraction(2), masses)


def lattice_cdf(d: LatticeDistribution, t) -> TailPair:
    """Exact (log P(S<=t), log P(S>t)); the smaller tail is summed exactly."""
    return tailpair_from_cdf_fraction(d.cdf_fraction(t))


# ---------------------------------------------------------------------------
# Gaussian helpers
# ---------------------------------------------------------------------------

def _gauss_log_sf_far(t: float, series_cap: int) -> float:
    """log(1-Phi(t)) for t > GAUSS_SERIES_SWITCH via the asymptotic series.

    1-Phi(t) = phi(t)/t * sum_k (-1)^k (2k-1)!!/t^(2k); the series is truncated
    at the smallest term (or the cap), which bounds the relative error.
    """
    tt = t * t
    total = 1.0
    term = 1.0
    prev = math.inf
    for k in range(1, series_cap + 1):
        term *= -(2 * k - 1) / tt
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
        if abs(term) <= 1e-18 * total:
            break
    return -0.5 * tt - _HALF_LOG_2PI - math.log(t) + math.log(total)


def gauss_tailpair(t: float, series_cap: int = GAUSS_SERIES_CAP) -> TailPair:
    """Standard normal (log Phi(t), log(1-Phi(t))).

    Relative error of the smaller side is below 1e-13 for |t| <= 40 and below
    1e-10 out to |t| = 1e4.  Infinite arguments give the degenerate pairs.
    """
    if math.isnan(t):
        raise ValueError("t must not be NaN")
    if t == math.inf:
        return TailPair(0.0, NEG_INF)
    if t == -math.inf:
        return TailPair(NEG_INF, 0.0)
    if t == 0.0:
        return TailPair(_LOG_HALF, _LOG_HALF)
    at = abs(t)
    if at <= GAUSS_SERIES_SWITCH:
        log_small = _LOG_HALF + math.log(math.erfc(at / _SQRT2))
    else:
        log_small = _gauss_log_sf_far(at, series_cap)
    if log_small > -37.0:
        log_big = math.log1p(-math.exp(log_small))
    else:
        log_big = -math.exp(log_small)
    if t > 0:
        return TailPair(log_big, log_small)
    return TailPair(log_small, log_big)


def gauss_log_interval(a: float, b: float) -> float:
    """log P(a <= Z <= b) for standard normal Z, cancellation-safe."""
    if math.isnan(a) or math.isnan(b):
        raise ValueError("endpoints must not be NaN")
    if a > b:
        raise ValueError("need a <= b")
    if a == b or a == math.inf or b == -math.inf:
        return NEG_INF
    if a == -math.inf and b == math.inf:
        return 0.0
    if a == -math.inf:
        return gauss_tailpair(b).log_cdf
    if b == math.inf:
        return gauss_tailpair(a).log_sf
    if a < 0.0 < b or (a == 0.0 and b > 0.0) or (a < 0.0 and b == 0.0):
        # Straddles 0: erf terms add with the same sign, no cancellation.
        mass = 0.5 * (math.erf(b / _SQRT2) + math.erf(-a / _SQRT2))
        return math.log(mass) if mass > 0.0 else NEG_INF
    if a >= 0.0:
        hi = gauss_tailpair(a).log_sf
        lo = gauss_tailpair(b).log_sf
    else:  # b <= 0
        hi = gauss_tailpair(b).log_cdf
        lo = gauss_tailpair(a).log_cdf
    if hi == lo:
        return NEG_INF
    return hi + math.log1p(-math.exp(lo - hi))


def gauss_quantile(q: float) -> float:
    """Inverse of Phi by bisection on gauss_tailpair (deterministic)."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    log_q = math.log(q)
    lo, hi = -42.0, 42.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gauss_tailpair(mid).log_cdf < log_q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mills_lower(t: float) -> float:
    """Lower bound 2/(sqrt(t^2+4)+t) on the Mills ratio (1-Phi(t))/phi(t)."""
    if not t > 0.0:
        raise ValueError("mills_lower requires t > 0")
    return 2.0 / (math.sqrt(t * t + 4.0) + t)


def stirling_bounds(m: int) -> tuple[float, float]:
    """(lower_log, upper_log) bracketing ln(m!) for any positive integer m."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    core = (m + 0.5) * math.log(m) - m
    return (_HALF_LOG_2PI + core, core + 1.0)


# ---------------------------------------------------------------------------
# Normalized lattice marginal
# ---------------------------------------------------------------------------

class LatticeMarginal:
    """Law of ``S / sqrt(scale_sq)`` for an exact lattice-distributed S.

    All cdf queries resolve ties exactly: a float threshold x is compared with
    an atom u via the sign-aware rational comparison of u^2 against x^2 *
    scale_sq, so lattice boundaries are never misclassified by rounding.
    """

    def __init__(self, dist: LatticeDistribution, scale_sq: Fraction) -> None:
        scale_sq = Fraction(scale_sq)
        if scale_sq <= 0:
            raise ValueError("scale_sq must be positive")
        self.dist = dist
        self.scale_sq = scale_sq
        self._pos_fr = dist.support()
        self._pos_sq = [u * u for u in self._pos_fr]
        scale = math.sqrt(float(scale_sq))
        self.positions = [float(u) / scale for u in self._pos_fr]
        self.prefix = dist.prefix
        self._prefix_num, self._den = dist.prefix_ratio
        self._tie_band = 1e-12

    def __len__(self) -> int:
        return len(self._pos_fr)

    def _atom_le(self, k: int, x: float, x2s: Fraction) -> bool:
        """Exact test: atom_k <= x * sqrt(scale_sq)."""
        u = self._pos_fr[k]
        if x >= 0.0:
            return u <= 0 or self._pos_sq[k] <= x2s
        return u < 0 and self._pos_sq[k] >= x2s

    def _atom_lt(self, k: int, x: float, x2s: Fraction) -> bool:
        """Exact test: atom_k < x * sqrt(scale_sq)."""
        u = self._pos_fr[k]
        if x >= 0.0:
            if u < 0:
                return True
            if u == 0:
                return x > 0.0
            return self._pos_sq[k] < x2s
        return u < 0 and self._pos_sq[k] > x2s

    def _count(self, x: float, strict: bool) -> int:
        n = len(self._pos_fr)
        if x == math.inf:
            return n
        if x == -math.inf:
            return 0
        guess = bisect.bisect_right(self.positions, x)
        band = self._tie_band * (abs(x) + 1.0)
        test = self._atom_lt if strict else self._atom_le
        x2s: Fraction | None = None
        i = guess
        # Resolve the tie zone around the float guess exactly; the rational
        # comparison value is only built when a tie actually needs deciding.
        while i < n and self.positions[i] <= x + band:
            if x2s is None:
                xfr = Fraction(x)
                x2s = xfr * xfr * self.scale_sq
            if test(i, x, x2s):
                i += 1
            else:
                break
        while i > 0 and self.positions[i - 1] >= x - band:
            if x2s is None:
                xfr = Fraction(x)
                x2s = xfr * xfr * self.scale_sq
            if not test(i - 1, x, x2s):
                i -= 1
            else:
                break
        return i

    def count_le(self, x: float) -> int:
        return self._count(x, strict=False)

    def count_lt(self, x: float) -> int:
        return self._count(x, strict=True)

    def cdf_fraction(self, x: float) -> Fraction:
        return self.prefix[self.count_le(x)]

    def tailpair(self, x: float) -> TailPair:
        return tailpair_from_ratio(self._prefix_num[self.count_le(x)], self._den)

    def neg_tailpair(self, x: float) -> TailPair:
        """TailPair of the law of -T at x: P(-T <= x) = 1 - P(T < -x)."""
        below = self._prefix_num[self.count_lt(-x)]
        return tailpair_from_ratio(self._den - below, self._den)

    def interval_mass_fraction(self, a: float, b: float) -> Fraction:
        if math.isnan(a) or math.isnan(b):
            raise ValueError("endpoints must not be NaN")
        if a > b:
            raise ValueError("need a <= b")
        hi = self.count_le(b)
        lo = self.count_lt(a)
        if hi <= lo:
            return Fraction(0)
        return self.prefix[hi] - self.prefix[lo]

    def _interval_num(self, a: float, b: float) -> int:
        if math.isnan(a) or math.isnan(b):
            raise ValueError("endpoints must not be NaN")
        if a > b:
            raise ValueError("need a <= b")
        hi = self.count_le(b)
        lo = self.count_lt(a)
        if hi <= lo:
            return 0
        return self._prefix_num[hi] - self._prefix_num[lo]

    def log_interval_mass(self, a: float, b: float) -> float:
        num = self._interval_num(a, b)
        if num == 0:
            return NEG_INF
        return math.log(num) - math.log(self._den)

    def interval_tailpair(self, a: float, b: float) -> TailPair:
        """(mass, 1 - mass) of [a, b], both sides exact."""
        return tailpair_from_ratio(self._interval_num(a, b), self._den)


class GaussianMarginal:
    """Standard normal marginal with the same interface as LatticeMarginal."""

    def tailpair(self, x: float) -> TailPair:
        return gauss_tailpair(x)

    def neg_tailpair(self, x: float) -> TailPair:
        return gauss_tailpair(x)  # symmetric law

    def log_interval_mass(self, a: float, b: float) -> float:
        return gauss_log_interval(a, b)

    def interval_tailpair(self, a: float, b: float) -> TailPair:
        """(mass, 1 - mass) of [a, b]; the complement is Phi(a) + (1 - Phi(b))."""
        log_mass = gauss_log_interval(a, b)
        lo = gauss_tailpair(a).log_cdf if a != -math.inf else NEG_INF
        hi = gauss_tailpair(b).log_sf if b != math.inf else NEG_INF
        if lo == NEG_INF and hi == NEG_INF:
            log_comp = NEG_INF
        elif lo >= hi:
            log_comp = lo + math.log1p(math.exp(hi - lo))
        else:
            log_comp = hi + math.log1p(math.exp(lo - hi))
        return TailPair(min(0.0, log_mass), min(0.0, log_comp))


STD_GAUSSIAN = GaussianMarginal()


# ---------------------------------------------------------------------------
# Component models
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ComponentModel:
    """A single-coordinate component law replicated over iid coordinates.

    ``s_n_sq`` is the exact sum of the n per-summand variances; for the
    Rademacher model it equals n exactly.
    """

    kind: str
    component: LatticeDistribution
    n: int
    s_n_sq: Fraction

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        self.s_n_sq = Fraction(self.s_n_sq)
        if self.s_n_sq <= 0:
            raise ValueError("s_n_sq must be positive")
        if self.kind == "rademacher" and self.s_n_sq != self.n:
            raise ValueError("rademacher model requires s_n_sq == n exactly")
        self._sum_dist: LatticeDistribution | None = None
        self._marginal: LatticeMarginal | None = None

    @classmethod
    def rademacher_model(cls, n: int) -> "ComponentModel":
        return cls("rademacher", rademacher(), n, Fraction(n))

    @classmethod
    def lattice_model(cls, component: LatticeDistribution, n: int) -> "ComponentModel":
        return cls("lattice", component, n, n * component.variance())

    def sum_distribution(self, cap: int = SUPPORT_CAP) -> LatticeDistribution:
        """Exact law of the sum of the n component copies."""
        if self._sum_dist is None:
            if self.kind == "rademacher":
                if self.n + 1 > cap:
                    raise ResourceCapError(f"support {self.n + 1} exceeds cap {cap}")
                self._sum_dist = _rademacher_sum(self.n)
            else:
                self._sum_dist = convolve_iid(self.component, self.n, cap=cap)
        return self._sum_dist

    def marginal(self) -> LatticeMarginal:
        """Law of the normalized coordinate sum s_n^{-1} * S."""
        if self._marginal is None:
            self._marginal = LatticeMarginal(self.sum_distribution(), self.s_n_sq)
        return self._marginal


def moment_2m(model: ComponentModel, m: int, cap: int = MOMENT_ORDER_CAP) -> float:
    """n^{m-1} * sum_i E(X_i1/s_n)^{2m}, computed exactly then rounded."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if 2 * m > cap:
        raise ResourceCapError(f"moment order {2 * m} exceeds cap {cap}")
    return float(moment_2m_fraction(model, m))


def moment_2m_fraction(model: ComponentModel, m: int) -> Fraction:
    raw = model.component.moment(2 * m)
    return Fraction(model.n) ** m * raw / model.s_n_sq**m
