"""Shared helpers: cached models, high-precision oracles, acceptance summary."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath

from hdclt import ComponentModel

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@lru_cache(maxsize=None)
def rademacher_model(n: int) -> ComponentModel:
    return ComponentModel.rademacher_model(n)


def mp_gauss_sf(t, dps: int = 50) -> mpmath.mpf:
    """1 - Phi(t) at dps decimal digits."""
    with mpmath.workdps(dps):
        return mpmath.erfc(mpmath.mpf(t) / mpmath.sqrt(2)) / 2


def mp_gauss_cdf(t, dps: int = 50) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return mpmath.erfc(-mpmath.mpf(t) / mpmath.sqrt(2)) / 2


def mp_log(x, dps: int = 50) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return mpmath.log(x)


def mp_pow_prob_cdf(cdf, log_p, dps: int = 50) -> mpmath.mpf:
    """cdf ** exp(log_p) in high precision; cdf may be a Fraction or mpf."""
    with mpmath.workdps(dps):
        if isinstance(cdf, Fraction):
            cdf = mpmath.mpf(cdf.numerator) / cdf.denominator
        p = mpmath.exp(mpmath.mpf(log_p))
        return mpmath.exp(p * mpmath.log(cdf))


def rel_err(value: float, reference) -> float:
    reference = float(reference)
    if reference == 0.0:
        return abs(value)
    return abs(value - reference) / abs(reference)


def exact_rademacher_cdf_by_counting(n: int, threshold: Fraction) -> Fraction:
    """P(sum of n Rademacher <= threshold) by combinatorial counting."""
    total = 0
    for k in range(n + 1):
        if Fraction(2 * k - n) <= threshold:
            total += math.comb(n, k)
    return Fraction(total, 2**n)
