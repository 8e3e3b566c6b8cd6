"""Monte Carlo cross-check: determinism, CI scaling, exact-engine agreement."""

import math

import pytest

from hdclt.distributions import gauss_tailpair
from hdclt.errors import ResourceCapError
from hdclt.mc_estimator import GaussianComponents, McConfig, simulate_rho
from hdclt.product_factorization import RectangleFamily

from conftest import rademacher_model

GRID = tuple(round(-1.0 + 0.25 * k, 2) for k in range(17))


def exact_family_max(n: int, p: int, grid) -> float:
    marg = rademacher_model(n).marginal()
    best = 0.0
    for t in grid:
        lat = float(marg.cdf_fraction(t)) ** p
        gau = math.exp(gauss_tailpair(t).log_cdf) ** p
        best = max(best, abs(lat - gau))
    return best


class TestMcConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            McConfig(trials=10, seed=0, p_dim=5, t_grid=(0.0,))
        with pytest.raises(ValueError):
            McConfig(trials=2000, seed=-1, p_dim=5, t_grid=(0.0,))
        with pytest.raises(ValueError):
            McConfig(trials=2000, seed=0, p_dim=5)  # neither rects nor grid
        with pytest.raises(ValueError):
            McConfig(
                trials=2000,
                seed=0,
                p_dim=5,
                t_grid=(0.0,),
                rects=(RectangleFamily.equal_coords(-math.inf, 0.0, 5),),
            )

    def test_budget(self):
        cfg = McConfig(trials=10**6, seed=0, p_dim=100, t_grid=(0.0,), budget=10**6)
        with pytest.raises(ResourceCapError):
            simulate_rho(rademacher_model(10), 10, cfg)


class TestDeterminism:
    def test_bit_identical_reruns(self):
        cfg = McConfig(trials=5000, seed=123456789, p_dim=8, t_grid=GRID[:9])
        model = rademacher_model(6)
        assert simulate_rho(model, 6, cfg) == simulate_rho(model, 6, cfg)

    def test_seed_changes_output(self):
        model = rademacher_model(6)
        a = simulate_rho(model, 6, McConfig(trials=5000, seed=1, p_dim=8, t_grid=GRID[:9]))
        b = simulate_rho(model, 6, McConfig(trials=5000, seed=2, p_dim=8, t_grid=GRID[:9]))
        assert a != b


class TestAccuracy:
    def test_gaussian_null_within_ci(self):
        cfg = McConfig(trials=20000, seed=7, p_dim=15, t_grid=GRID[:10])
        result = simulate_rho(GaussianComponents(), 10, cfg)
        for row in result.rows:
            assert abs(row.diff) <= result.union_ci_halfwidth + row.ci_halfwidth

    def test_rademacher_matches_exact_engine(self):
        cfg = McConfig(trials=30000, seed=20240817, p_dim=20, t_grid=GRID)
        result = simulate_rho(rademacher_model(10), 10, cfg)
        exact = exact_family_max(10, 20, GRID)
        assert abs(result.max_abs_diff - exact) <= 3 * result.union_ci_halfwidth

    def test_ci_shrinks_at_root_trials_rate(self):
        model = rademacher_model(8)
        small = simulate_rho(model, 8, McConfig(trials=4000, seed=5, p_dim=10, t_grid=GRID[:9]))
        large = simulate_rho(model, 8, McConfig(trials=16000, seed=5, p_dim=10, t_grid=GRID[:9]))
        avg_small = sum(r.ci_halfwidth for r in small.rows) / len(small.rows)
        avg_large = sum(r.ci_halfwidth for r in large.rows) / len(large.rows)
        ratio = avg_large / avg_small
        assert abs(ratio - 0.5) <= 0.1

    def test_hundred_configuration_battery(self):
        # per config: every per-rectangle estimate within 3 standard errors of
        # the exact lattice probability; >= 95% of configs must agree.
        agreements = 0
        configs = 0
        for idx in range(100):
            n = 4 + (idx % 7)
            p = 5 + (idx * 3) % 21
            shift = (idx % 5) * 0.1
            grid = tuple(round(-0.5 + shift + 0.3 * k, 2) for k in range(8))
            cfg = McConfig(trials=2000, seed=1000 + idx, p_dim=p, t_grid=grid)
            model = rademacher_model(n)
            result = simulate_rho(model, n, cfg)
            marg = model.marginal()
            ok = True
            for row in result.rows:
                exact_lat = float(marg.cdf_fraction(row.t)) ** p
                se = math.sqrt(max(exact_lat * (1 - exact_lat), 1e-9) / cfg.trials)
                if abs(row.phat - exact_lat) > 3 * se + 1e-3:
                    ok = False
            configs += 1
            agreements += ok
        assert configs == 100
        assert agreements >= 95


class TestExplicitRectangles:
    def test_general_rects(self):
        rects = (
            RectangleFamily((-1.0, -math.inf), (1.0, 0.5)),
            RectangleFamily((-0.5, -0.5), (math.inf, 2.0)),
        )
        cfg = McConfig(trials=4000, seed=99, p_dim=2, rects=rects)
        result = simulate_rho(rademacher_model(8), 8, cfg)
        assert len(result.rows) == 2
        for row in result.rows:
            assert row.t is None
            assert 0.0 <= row.phat <= 1.0
            assert 0.0 < row.exact_gauss < 1.0

    def test_p_dim_mismatch(self):
        rects = (RectangleFamily.equal_coords(-math.inf, 0.0, 3),)
        cfg = McConfig(trials=2000, seed=0, p_dim=2, rects=rects)
        with pytest.raises(ValueError):
            simulate_rho(rademacher_model(4), 4, cfg)
