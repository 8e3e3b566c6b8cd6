"""Tiny deterministic 1-d maximization helper."""

from __future__ import annotations

from typing import Callable

GOLDEN = 0.6180339887498949  # (sqrt(5) - 1) / 2


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    iters: int = 60,
    tol: float = 1e-12,
) -> tuple[float, float]:
    """Maximize f on [lo, hi] by golden-section search.

    Exact for unimodal f; for general f it is used as one candidate source
    among several, never as the sole authority.
    """
    if hi < lo:
        raise ValueError("need lo <= hi")
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    x_best, f_best = (x1, f1) if f1 >= f2 else (x2, f2)
    for x, fx in ((lo, f(lo)), (hi, f(hi))):
        if fx > f_best:
            x_best, f_best = x, fx
    return x_best, f_best
