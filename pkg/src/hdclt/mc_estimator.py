"""Monte Carlo cross-check of the Gaussian-approximation error at moderate p.

The Gaussian side is never simulated: each rectangle's reference probability
is computed exactly, so only the data side carries sampling noise.
Randomness contract: draws come from Philox streams keyed by
(seed, chunk index) with a fixed chunk size, so every (trial, i, j) index maps
to one draw independently of execution order, worker count, or the total
number of trials requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ComponentModel, STD_GAUSSIAN, gauss_quantile
from .errors import ResourceCapError
from .product_factorization import RectangleFamily, rect_prob

__all__ = [
    "McConfig",
    "GaussianComponents",
    "McRectRow",
    "McResult",
    "simulate_rho",
    "TRIAL_CHUNK",
]

TRIAL_CHUNK = 4096
DEFAULT_BUDGET = 10**9


@dataclass(frozen=True)
class GaussianComponents:
    """Null model: iid standard normal summands (T is exactly the reference law)."""


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int
    p_dim: int
    rects: tuple[RectangleFamily, ...] = ()
    t_grid: tuple[float, ...] = ()
    budget: int = DEFAULT_BUDGET

    def __post_init__(self) -> None:
        if self.trials < 10**3:
            raise ValueError("trials must be >= 1000")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 1 <= self.p_dim <= 10**4:
            raise ValueError("p_dim must lie in [1, 1e4]")
        if bool(self.rects) == bool(self.t_grid):
            raise ValueError("provide exactly one of rects / t_grid")

    def rectangle_family(self) -> tuple[RectangleFamily, ...]:
        if self.rects:
            for r in self.rects:
                if r.p_dim != self.p_dim:
                    raise ValueError("rectangle p_dim mismatch")
            return self.rects
        return tuple(
            RectangleFamily.equal_coords(-math.inf, t, self.p_dim) for t in self.t_grid
        )


@dataclass(frozen=True)
class McRectRow:
    index: int
    t: float | None
    phat: float
    exact_gauss: float
    diff: float
    ci_halfwidth: float


@dataclass(frozen=True)
class McResult:
    rows: tuple[McRectRow, ...]
    max_abs_diff: float
    max_index: int
    union_ci_halfwidth: float
    trials: int
    seed: int
    n: int
    p_dim: int

    def as_dict(self) -> dict:
        return {
            "rows": [vars(r) for r in self.rows],
            "max_abs_diff": self.max_abs_diff,
            "max_index": self.max_index,
            "union_ci_halfwidth": self.union_ci_halfwidth,
            "trials": self.trials,
            "seed": self.seed,
            "n": self.n,
            "p_dim": self.p_dim,
        }


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    # Distinct 128-bit Philox keys per (seed, chunk): order-independent streams.
    return np.random.Generator(np.random.Philox(key=(seed << 64) | chunk_index))


def _draw_block(model, rng: np.random.Generator, trials: int, n: int, p: int) -> np.ndarray:
    """One (trials, p) block of normalized coordinate sums T."""
    if isinstance(model, GaussianComponents):
        draws = rng.standard_normal((trials, n, p))
        return draws.sum(axis=1) / math.sqrt(n)
    if model.kind == "rademacher":
        bits = rng.integers(0, 2, size=(trials, n, p), dtype=np.int8)
        sums = (2 * bits.astype(np.int32) - 1).sum(axis=1)
        return sums / math.sqrt(float(model.s_n_sq))
    component = model.component
    values = np.array([float(x) for x in component.support()], dtype=np.float64)
    cumulative = np.cumsum([float(m) for m in component.masses])
    cumulative[-1] = 1.0  # guard float dust at the top
    u = rng.random((trials, n, p))
    draws = values[np.searchsorted(cumulative, u, side="right")]
    return draws.sum(axis=1) / math.sqrt(float(model.s_n_sq))


def simulate_rho(
    model: ComponentModel | GaussianComponents, n: int, cfg: McConfig
) -> McResult:
    """Empirical P(T in A) minus the exact Gaussian probability, per rectangle.

    Returns per-rectangle estimates with binomial CIs, and the family maximum
    with a Bonferroni-adjusted CI half-width.  Deterministic given cfg.seed.
    """
    if isinstance(model, ComponentModel) and model.n != n:
        raise ValueError("model.n must match n")
    rects = cfg.rectangle_family()
    cost = cfg.trials * cfg.p_dim * n
    if cost > cfg.budget:
        raise ResourceCapError(f"trials*p*n = {cost} exceeds budget {cfg.budget}")

    lows = np.array([r.a for r in rects])  # (K, p)
    highs = np.array([r.b for r in rects])
    hits = np.zeros(len(rects), dtype=np.int64)
    done = 0
    chunk_index = 0
    while done < cfg.trials:
        take = min(TRIAL_CHUNK, cfg.trials - done)
        rng = _chunk_rng(cfg.seed, chunk_index)
        t_block = _draw_block(model, rng, take, n, cfg.p_dim)  # (take, p)
        inside = np.logical_and(
            t_block[:, None, :] >= lows[None, :, :],
            t_block[:, None, :] <= highs[None, :, :],
        ).all(axis=2)
        hits += inside.sum(axis=0)
        done += take
        chunk_index += 1

    exact = np.array([rect_prob(STD_GAUSSIAN, r).to_float() for r in rects])
    phat = hits / cfg.trials
    diffs = phat - exact
    se = np.sqrt(phat * (1.0 - phat) / cfg.trials)
    ci = 1.959963984540054 * se + 0.5 / cfg.trials
    k = len(rects)
    z_union = gauss_quantile(1.0 - 0.05 / (2.0 * k))
    max_index = int(np.argmax(np.abs(diffs)))
    union_ci = float(z_union * se[max_index] + 0.5 / cfg.trials)

    rows = tuple(
        McRectRow(
            index=i,
            t=cfg.t_grid[i] if cfg.t_grid else None,
            phat=float(phat[i]),
            exact_gauss=float(exact[i]),
            diff=float(diffs[i]),
            ci_halfwidth=float(ci[i]),
        )
        for i in range(k)
    )
    return McResult(
        rows=rows,
        max_abs_diff=float(abs(diffs[max_index])),
        max_index=max_index,
        union_ci_halfwidth=union_ci,
        trials=cfg.trials,
        seed=cfg.seed,
        n=n,
        p_dim=cfg.p_dim,
    )
