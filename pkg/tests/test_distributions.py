"""Exact lattice laws, Gaussian tails, and the classical inequalities."""

import math
from fractions import Fraction

import pytest

from hdclt.distributions import (
    ComponentModel,
    LatticeDistribution,
    LatticeMarginal,
    convolve_iid,
    gauss_log_interval,
    gauss_quantile,
    gauss_tailpair,
    lattice_cdf,
    mills_lower,
    moment_2m,
    moment_2m_fraction,
    rademacher,
    stirling_bounds,
)
from hdclt.errors import ResourceCapError
from hdclt.logdomain import NEG_INF

from conftest import exact_rademacher_cdf_by_counting, mp_gauss_sf, rademacher_model, rel_err

F = Fraction


def three_point() -> LatticeDistribution:
    return LatticeDistribution(F(-1), F(1), (F(1, 4), F(1, 2), F(1, 4)))


class TestLatticeDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            LatticeDistribution(F(0), F(1), (F(1, 2), F(1, 4)))  # sum != 1
        with pytest.raises(ValueError):
            LatticeDistribution(F(0), F(-1), (F(1),))
        with pytest.raises(ValueError):
            LatticeDistribution(F(0), F(1), (F(0), F(1)))  # untrimmed

    def test_symmetry(self):
        assert rademacher().is_symmetric()
        assert three_point().is_symmetric()
        shifted = LatticeDistribution(F(0), F(2), (F(1, 2), F(1, 2)))
        assert not shifted.is_symmetric()

    def test_prefix_ratio_matches_prefix(self):
        d = convolve_iid(three_point(), 3)
        nums, den = d.prefix_ratio
        assert all(F(nums[k], den) == d.prefix[k] for k in range(len(nums)))


class TestConvolveIid:
    def test_n2_direct(self):
        d = convolve_iid(rademacher(), 2)
        assert d.support() == [F(-2), F(0), F(2)]
        assert d.masses == (F(1, 4), F(1, 2), F(1, 4))

    def test_n4_binomial(self):
        d = convolve_iid(rademacher(), 4)
        assert d.masses == (F(1, 16), F(4, 16), F(6, 16), F(4, 16), F(1, 16))

    def test_identity(self):
        d = three_point()
        assert convolve_iid(d, 1) == d

    def test_split_composition_exact(self):
        d = three_point()
        for a, b in ((1, 2), (3, 4), (5, 3)):
            combined = convolve_iid(d, a + b)
            da, db = convolve_iid(d, a), convolve_iid(d, b)
            from hdclt.distributions import _mass_convolve

            assert tuple(_mass_convolve(da.masses, db.masses)) == combined.masses
            assert da.offset + db.offset == combined.offset

    def test_matches_binomial_fast_path(self):
        for n in (1, 2, 3, 7, 16, 33, 64):
            assert convolve_iid(rademacher(), n) == rademacher_model(n).sum_distribution()

    def test_support_cap(self):
        with pytest.raises(ResourceCapError):
            convolve_iid(rademacher(), 10, cap=5)


class TestLatticeCdf:
    def test_small_example(self):
        d = convolve_iid(rademacher(), 2)
        tp = lattice_cdf(d, 0)
        assert tp.log_cdf == pytest.approx(math.log(0.75), abs=1e-15)

    def test_n100_tail_against_counting_oracle(self):
        # Exact tail sum over C(100, k)/2^100 for k >= 87, computed
        # independently of the engine's prefix machinery.
        d = rademacher_model(100).sum_distribution()
        tail = sum(math.comb(100, k) for k in range(87, 101))
        oracle_sf = F(tail, 2**100)
        assert d.sf_fraction(72) == oracle_sf
        tp = lattice_cdf(d, 72)
        expected_log = math.log(oracle_sf.numerator) - math.log(oracle_sf.denominator)
        assert tp.log_sf == pytest.approx(expected_log, abs=1e-10)
        assert tp.log_sf == pytest.approx(-32.657, abs=0.2)

    def test_below_support(self):
        d = convolve_iid(rademacher(), 2)
        assert lattice_cdf(d, -3).log_cdf == NEG_INF
        assert lattice_cdf(d, 3).log_sf == NEG_INF

    def test_right_continuity_and_monotonicity(self):
        d = convolve_iid(three_point(), 4)
        values = [d.cdf_fraction(t) for t in [x / 2 for x in range(-10, 11)]]
        assert all(x <= y for x, y in zip(values, values[1:]))
        assert d.cdf_fraction(d.position(len(d) - 1)) == 1
        # closed right endpoint: the atom at 0 is included at t = 0
        assert d.cdf_fraction(0) - d.cdf_fraction(F(-1, 2)) == d.masses[4]

    def test_counting_oracle_small_n(self):
        for n in (2, 3, 5, 8):
            d = convolve_iid(rademacher(), n)
            for t in (F(-n), F(0), F(1), F(n - 1), F(n)):
                assert d.cdf_fraction(t) == exact_rademacher_cdf_by_counting(n, t)


class TestGaussTailpair:
    def test_symmetry_at_zero(self):
        tp = gauss_tailpair(0.0)
        assert tp.log_cdf == tp.log_sf == math.log(0.5)

    def test_sf_one(self):
        assert rel_err(gauss_tailpair(1.0).sf, mp_gauss_sf(1)) < 1e-12

    def test_sf_sqrt20(self):
        assert rel_err(gauss_tailpair(math.sqrt(20)).sf, mp_gauss_sf(math.sqrt(20))) < 1e-9

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5, 5.0, 7.9, 8.0, 8.1, 9.5, 12.0, 20.0, 31.4, 40.0])
    def test_relative_error_below_40(self, t):
        for sign in (1.0, -1.0):
            tp = gauss_tailpair(sign * t)
            small = min(tp.log_cdf, tp.log_sf)
            oracle = mp_gauss_sf(t, dps=60)
            import mpmath

            with mpmath.workdps(60):
                assert abs(small - float(mpmath.log(oracle))) < 1e-13

    @pytest.mark.parametrize("t", [50.0, 100.0, 1000.0, 10000.0])
    def test_relative_error_far_tail(self, t):
        import mpmath

        tp = gauss_tailpair(t)
        with mpmath.workdps(80):
            expected = mpmath.log(mpmath.erfc(mpmath.mpf(t) / mpmath.sqrt(2)) / 2)
        assert abs(tp.log_sf - float(expected)) <= 1e-10 * abs(float(expected))

    def test_consistency_gap(self):
        for t in (-9.3, -2.0, 0.7, 3.0, 8.5, 30.0):
            assert gauss_tailpair(t).consistency_gap() <= 1e-12

    def test_infinite_arguments(self):
        assert gauss_tailpair(math.inf).log_cdf == 0.0
        assert gauss_tailpair(-math.inf).log_cdf == NEG_INF


class TestGaussInterval:
    @pytest.mark.parametrize(
        "a,b",
        [(-1.0, 1.0), (0.0, 2.0), (-3.0, -0.5), (5.0, 6.0), (-7.0, -6.0), (2.0, 2.5)],
    )
    def test_against_oracle(self, a, b):
        import mpmath

        with mpmath.workdps(50):
            expected = mpmath.log(mp_gauss_sf(a) - mp_gauss_sf(b))
        assert gauss_log_interval(a, b) == pytest.approx(float(expected), abs=1e-12)

    def test_infinite_endpoints(self):
        assert gauss_log_interval(-math.inf, math.inf) == 0.0
        assert gauss_log_interval(-math.inf, 0.0) == pytest.approx(math.log(0.5))
        assert gauss_log_interval(1.0, math.inf) == gauss_tailpair(1.0).log_sf
        assert gauss_log_interval(2.0, 2.0) == NEG_INF

    def test_quantile_round_trip(self):
        for q in (0.01, 0.3, 0.5, 0.975, 1 - 1e-6):
            t = gauss_quantile(q)
            assert math.exp(gauss_tailpair(t).log_cdf) == pytest.approx(q, rel=1e-9)


class TestMillsLower:
    def test_limit_at_zero(self):
        assert mills_lower(1e-12) == pytest.approx(1.0, rel=1e-9)

    def test_t1(self):
        assert mills_lower(1.0) == pytest.approx(2.0 / (math.sqrt(5) + 1), rel=1e-15)
        ratio = gauss_tailpair(1.0).sf * math.sqrt(2 * math.pi) * math.exp(0.5)
        assert ratio >= mills_lower(1.0)

    def test_t10(self):
        assert mills_lower(10.0) == pytest.approx(2.0 / (math.sqrt(104) + 10), rel=1e-15)
        assert mills_lower(10.0) == pytest.approx(0.09902, abs=1e-5)

    def test_domain(self):
        with pytest.raises(ValueError):
            mills_lower(0.0)
        with pytest.raises(ValueError):
            mills_lower(-1.0)


class TestStirlingBounds:
    def test_m1_boundary(self):
        lower, upper = stirling_bounds(1)
        assert upper == 0.0  # upper side is tight at m = 1
        assert lower == pytest.approx(math.log(0.92214), abs=1e-5)
        assert lower <= 0.0 <= upper

    def test_m10(self):
        lower, upper = stirling_bounds(10)
        target = math.log(3628800)
        assert target == pytest.approx(15.1044, abs=1e-4)
        assert lower <= target <= upper

    def test_m_large_gap(self):
        lower, upper = stirling_bounds(10**6)
        # float cancellation of the ~1e7-sized shared terms leaves ~1e-9 dust
        assert upper - lower == pytest.approx(1 - 0.5 * math.log(2 * math.pi), abs=1e-8)
        target = math.lgamma(10**6 + 1)
        assert lower <= target <= upper

    def test_domain(self):
        with pytest.raises(ValueError):
            stirling_bounds(0)


class TestMoment2m:
    def test_rademacher_always_one(self):
        for n in (1, 5, 12):
            model = rademacher_model(n)
            for m in (1, 2, 7, 50):
                assert moment_2m_fraction(model, m) == 1

    def test_normalization_at_m1(self):
        # mean-zero component laws: n^0 * n * E(X/s_n)^2 == 1 exactly
        four_point = LatticeDistribution(F(-3), F(2), (F(1, 8), F(3, 8), F(3, 8), F(1, 8)))
        for dist in (three_point(), four_point):
            model = ComponentModel.lattice_model(dist, 6)
            assert dist.mean() == 0
            assert moment_2m_fraction(model, 1) == 1

    def test_three_point_example(self):
        model = ComponentModel.lattice_model(three_point(), 1)
        assert model.s_n_sq == F(1, 2)
        assert moment_2m(model, 2) == 2.0

    def test_rademacher_a4_with_l2(self):
        for m in range(1, 51):
            bound = F(math.factorial(2 * m), math.factorial(m) * 2**m)
            assert moment_2m_fraction(rademacher_model(8), m) <= bound

    def test_order_cap(self):
        with pytest.raises(ResourceCapError):
            moment_2m(rademacher_model(4), 10**5)


class TestLatticeMarginal:
    def test_exact_tie_resolution_on_integer_grid(self):
        # n = 4: s_n = 2, atoms at integers -2..2
        marg = rademacher_model(4).marginal()
        assert marg.count_le(0.0) == 3
        assert marg.count_lt(0.0) == 2
        assert marg.cdf_fraction(0.0) == F(11, 16)

    def test_exact_tie_resolution_on_irrational_grid(self):
        # n = 2: the atom sqrt(2) lies strictly above its float approximation.
        marg = rademacher_model(2).marginal()
        top = marg.positions[-1]
        assert marg.cdf_fraction(top) == F(3, 4)
        assert marg.cdf_fraction(math.nextafter(top, 2.0)) == 1

    def test_neg_tailpair_symmetric_model(self):
        marg = rademacher_model(6).marginal()
        for x in (-1.3, 0.0, 0.7, 2.0):
            assert marg.neg_tailpair(x).log_cdf == pytest.approx(
                marg.tailpair(x).log_cdf, abs=1e-12
            )

    def test_interval_mass(self):
        marg = rademacher_model(4).marginal()
        assert marg.interval_mass_fraction(-1.0, 1.0) == F(4 + 6 + 4, 16)
        assert marg.interval_mass_fraction(0.5, 0.75) == 0
        assert marg.log_interval_mass(-math.inf, math.inf) == 0.0
        tp = marg.interval_tailpair(-1.0, 1.0)
        assert tp.cdf == pytest.approx(14 / 16, rel=1e-14)


class TestComponentModel:
    def test_rademacher_requires_exact_s_n_sq(self):
        with pytest.raises(ValueError):
            ComponentModel("rademacher", rademacher(), 4, F(5))

    def test_lattice_model_variance(self):
        model = ComponentModel.lattice_model(three_point(), 10)
        assert model.s_n_sq == 10 * F(1, 2)
