"""One-dimensional non-uniform CLT error envelopes and the assumption checker.

Two envelope shapes are used downstream: a global exponential envelope
``b1 * exp(-t^2 (1 - 1/q))`` valid on the whole line, and a moderate-deviation
envelope ``b2 * r_n * exp(-t^2/2)`` valid for |t| < M_n with
``r_n = max(M_n^3/n, n^{-1/2})``.  The constants b1, b2 are not theorems here:
they are configuration inputs whose defaults come from an explicit calibration
procedure (max observed error/shape ratio over a small-n Rademacher grid,
times a safety factor), and every report carries the constants it used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .distributions import (
    ComponentModel,
    gauss_tailpair,
    moment_2m_fraction,
)

__all__ = [
    "MomentProfile",
    "BoundConstants",
    "PowerSchedule",
    "AssumptionReport",
    "check_assumptions",
    "lemma1_bound",
    "lemma2_bound",
    "envelope_l",
    "envelope_d",
    "calibrate_constants",
    "measured_error_points",
    "envelope_d_violations",
    "envelope_l_violations",
    "ENVELOPE_LOW_CONSTANT",
]

_PHI_1 = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
# 1 - phi(1)/(sqrt(5)+1): the flat envelope level used below x = 1.
ENVELOPE_LOW_CONSTANT = 1.0 - _PHI_1 / (math.sqrt(5.0) + 1.0)
_INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)


@dataclass(frozen=True)
class PowerSchedule:
    """a_n = n**exponent; picklable and self-describing for manifests."""

    exponent: float

    def __call__(self, n: float) -> float:
        return float(n) ** self.exponent

    @property
    def description(self) -> str:
        return f"n**{self.exponent:g}"


@dataclass(frozen=True)
class MomentProfile:
    """The assumption contract for one component model."""

    s_n_sq: float
    l_const: float
    model: ComponentModel

    def __post_init__(self) -> None:
        if not 1.0 < self.l_const <= 2.0:
            raise ValueError("l_const must lie in (1, 2]")
        if self.s_n_sq <= 0.0:
            raise ValueError("s_n_sq must be positive")

    @classmethod
    def for_model(cls, model: ComponentModel, l_const: float = 2.0) -> "MomentProfile":
        return cls(float(model.s_n_sq), l_const, model)


@dataclass(frozen=True)
class BoundConstants:
    """Envelope constants: b1, b2, the M_n coefficient, and the a_n schedule."""

    b1: float
    b2: float
    m_n_coeff: float = 1.0
    a_n: PowerSchedule = field(default_factory=lambda: PowerSchedule(0.125))

    def __post_init__(self) -> None:
        if self.b1 <= 0 or self.b2 <= 0 or self.m_n_coeff <= 0:
            raise ValueError("all constants must be positive")

    def schedule_ok(self, n_values: Iterable[int]) -> bool:
        """a_n non-decreasing and a_n^3/sqrt(n) decreasing over the range."""
        ns = sorted(n_values)
        a_vals = [self.a_n(n) for n in ns]
        ratios = [a**3 / math.sqrt(n) for a, n in zip(a_vals, ns)]
        return all(x <= y for x, y in zip(a_vals, a_vals[1:])) and all(
            x > y for x, y in zip(ratios, ratios[1:])
        )


# ---------------------------------------------------------------------------
# Assumption checker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    symmetric: bool
    odd_moments_zero: bool
    first_nonzero_odd_order: int | None
    variance_ratio: float  # n^{-1} s_n^2
    a3_ok: bool
    a4_ok_at_profile_l: bool
    l_max: float | None
    m_max: int

    @property
    def a2_ok(self) -> bool:
        return self.odd_moments_zero

    @property
    def all_ok(self) -> bool:
        return self.a2_ok and self.a3_ok and self.a4_ok_at_profile_l


def _a4_feasible(model: ComponentModel, l_value: Fraction, m_max: int) -> bool:
    l_pow = Fraction(1)
    for m in range(1, m_max + 1):
        l_pow *= l_value
        bound = Fraction(math.factorial(2 * m), math.factorial(m))
        if moment_2m_fraction(model, m) * l_pow > bound:
            return False
    return True


def check_assumptions(profile: MomentProfile, m_max: int = 50) -> AssumptionReport:
    """Verdicts for the moment assumptions, all in exact rational arithmetic.

    Symmetry of the pmf is sufficient for the vanishing odd moments and is
    reported separately; odd moments themselves are checked exactly up to
    order 2*m_max - 1.  The largest feasible l in (1, 2] is located by
    bisection on dyadic rationals (exact feasibility tests).
    """
    model = profile.model
    component = model.component
    symmetric = component.is_symmetric()
    first_bad: int | None = None
    for m in range(1, m_max + 1):
        if component.moment(2 * m - 1) != 0:
            first_bad = 2 * m - 1
            break
    odd_ok = first_bad is None

    variance_ratio = float(model.s_n_sq) / model.n
    a3_ok = variance_ratio > 0.0 and math.isfinite(variance_ratio)

    l_max: float | None
    if _a4_feasible(model, Fraction(2), m_max):
        l_max = 2.0
    else:
        lo, hi = Fraction(1), Fraction(2)  # feasible at lo excluded, test above 1
        eps = Fraction(1, 2**40)
        if not _a4_feasible(model, 1 + eps, m_max):
            l_max = None
        else:
            lo = 1 + eps
            for _ in range(50):
                mid = (lo + hi) / 2
                if _a4_feasible(model, mid, m_max):
                    lo = mid
                else:
                    hi = mid
            l_max = float(lo)
    a4_at_profile = l_max is not None and (
        profile.l_const <= l_max or _a4_feasible(model, Fraction(profile.l_const), m_max)
    )
    return AssumptionReport(
        symmetric=symmetric,
        odd_moments_zero=odd_ok,
        first_nonzero_odd_order=first_bad,
        variance_ratio=variance_ratio,
        a3_ok=a3_ok,
        a4_ok_at_profile_l=a4_at_profile,
        l_max=l_max,
        m_max=m_max,
    )


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------

def lemma1_bound(t: float, q: float, b1: float) -> float:
    """Global exponential envelope b1 * exp(-t^2 (1 - 1/q)), q in (1, 2]."""
    if not 1.0 < q <= 2.0:
        raise ValueError("q must lie in (1, 2]")
    return b1 * math.exp(-t * t * (1.0 - 1.0 / q))


def lemma2_bound(t: float, n: int, constants: BoundConstants) -> float:
    """Moderate-deviation envelope b2 * r_n * exp(-t^2/2) for |t| < M_n."""
    m_n = constants.m_n_coeff * n**0.25
    if abs(t) >= m_n:
        raise ValueError(f"|t| = {abs(t)} outside the validity range M_n = {m_n}")
    r_n = max(m_n**3 / n, n**-0.5)
    return constants.b2 * r_n * math.exp(-0.5 * t * t)


def envelope_l(x: float, n: int, constants: BoundConstants) -> float:
    """Upper envelope for max{F_n(x), Phi(x)}, piecewise in x.

    1 above the threshold a_n^{-1} n^{1/4}; a flat level below x = 1; and
    1 - (4 pi)^{-1/2} a_n n^{-1/4} e^{-x^2/2} on the middle range (closed on
    both ends).
    """
    a_val = constants.a_n(n)
    threshold = n**0.25 / a_val
    if x > threshold:
        return 1.0
    if x < 1.0:
        return ENVELOPE_LOW_CONSTANT
    return 1.0 - _INV_SQRT_4PI * a_val * n**-0.25 * math.exp(-0.5 * x * x)


def envelope_d(x: float, n: int, profile: MomentProfile, constants: BoundConstants) -> float:
    """Two-regime envelope for |F_n(x) - Phi(x)| with threshold a_n^{-1} n^{1/4}.

    The inner regime applies at the threshold itself (closed inequality).
    """
    threshold = n**0.25 / constants.a_n(n)
    if abs(x) <= threshold:
        return constants.b2 * n**-0.25 * math.exp(-0.5 * x * x)
    return constants.b1 * math.exp(-x * x * (1.0 - 1.0 / profile.l_const))


# ---------------------------------------------------------------------------
# Calibration of b1, b2 and envelope verification helpers
# ---------------------------------------------------------------------------

def measured_error_points(model: ComponentModel) -> list[tuple[float, float]]:
    """(x, |F_n(x) - Phi(x)|) at every atom and at every left limit.

    Between atoms F_n is constant and Phi is monotone, so these candidates
    realize the sup of the error over the whole line.
    """
    marg = model.marginal()
    prefix = marg.prefix
    out: list[tuple[float, float]] = []
    for k, x in enumerate(marg.positions):
        phi_x = math.exp(gauss_tailpair(x).log_cdf)
        out.append((x, abs(float(prefix[k + 1]) - phi_x)))  # at the atom
        out.append((x, abs(float(prefix[k]) - phi_x)))  # left limit
    return out


def calibrate_constants(
    n_values: tuple[int, ...] = (4, 8, 16),
    l_const: float = 2.0,
    m_n_coeff: float = 1.0,
    a_exponent: float = 0.125,
    safety: float = 1.1,
    model_factory: Callable[[int], ComponentModel] = ComponentModel.rademacher_model,
) -> BoundConstants:
    """Default (b1, b2) via max observed error/shape ratios on a small-n grid.

    This is a calibration procedure, not a theorem check: the returned
    constants make both envelopes dominate the measured errors on the
    calibration grid by construction, with a multiplicative safety margin.
    """
    ratio1 = 0.0
    ratio2 = 0.0
    exponent1 = 1.0 - 1.0 / l_const
    for n in n_values:
        model = model_factory(n)
        m_n = m_n_coeff * n**0.25
        r_n = max(m_n**3 / n, n**-0.5)
        for x, err in measured_error_points(model):
            ratio1 = max(ratio1, err / math.exp(-x * x * exponent1))
            if abs(x) < m_n:
                ratio2 = max(ratio2, err / (r_n * math.exp(-0.5 * x * x)))
    return BoundConstants(
        b1=safety * ratio1,
        b2=safety * ratio2,
        m_n_coeff=m_n_coeff,
        a_n=PowerSchedule(a_exponent),
    )


def envelope_d_violations(
    model: ComponentModel, profile: MomentProfile, constants: BoundConstants
) -> list[tuple[float, float, float]]:
    """(x, err, envelope) triples where the error envelope fails to dominate."""
    out = []
    for x, err in measured_error_points(model):
        env = envelope_d(x, model.n, profile, constants)
        if err > env:
            out.append((x, err, env))
    return out


def envelope_l_violations(
    model: ComponentModel, constants: BoundConstants
) -> list[tuple[float, float, float]]:
    """Violations of envelope_l >= max{F_n(x), Phi(x)} on the asserted regions.

    Checked below x = 1 and on [1, threshold]; above the threshold the
    envelope is 1 and domination is trivial.  Candidates: atoms with their
    inclusive cdf values, left limits, the two region endpoints, and the
    single interior maximizer of Phi(x) - envelope(x) on the middle range.
    """
    n = model.n
    a_val = constants.a_n(n)
    threshold = n**0.25 / a_val
    marg = model.marginal()
    prefix = marg.prefix

    def max_side(x: float, f_val: float) -> float:
        return max(f_val, math.exp(gauss_tailpair(x).log_cdf))

    candidates: list[tuple[float, float]] = []
    for k, x in enumerate(marg.positions):
        if x > threshold:
            break
        candidates.append((x, max_side(x, float(prefix[k + 1]))))
        candidates.append((x, max_side(x, float(prefix[k]))))
    for x in (1.0, threshold):
        f_val = float(marg.cdf_fraction(x))
        candidates.append((x, max_side(x, f_val)))
    # Right end of the low region: x -> 1^- keeps the flat envelope level but
    # sees F(1^-) and Phi(1).
    below_one = float(prefix[marg.count_lt(1.0)])
    candidates.append((math.nextafter(1.0, 0.0), max_side(1.0, below_one)))
    # Interior stationary point of Phi(x) - (1 - C e^{-x^2/2}): x* = phi(0)/C.
    c_mid = _INV_SQRT_4PI * a_val * n**-0.25
    x_star = 1.0 / (math.sqrt(2.0 * math.pi) * c_mid)
    if 1.0 <= x_star <= threshold:
        candidates.append((x_star, max_side(x_star, float(marg.cdf_fraction(x_star)))))

    out = []
    for x, value in candidates:
        env = envelope_l(x, n, constants)
        if value > env:
            out.append((x, value, env))
    return out
