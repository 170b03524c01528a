import math

import numpy as np
import pytest
from scipy import integrate

from laplace_stein.errors import UnsupportedSourceError
from laplace_stein.laplace import LaplaceParams, cdf, char_fn, pdf
from laplace_stein.metrics import EmpiricalSample, dkw_band, kolmogorov_empirical
from laplace_stein.seeding import substream
from laplace_stein import transforms as tr

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)


def ks_against(values, cdf_fn):
    """Exact one-sample Kolmogorov statistic against an arbitrary CDF."""
    xs = np.sort(values)
    n = xs.size
    f = np.asarray(cdf_fn(xs), dtype=float)
    return max(np.max(np.arange(1, n + 1) / n - f),
               np.max(f - np.arange(0, n) / n))


class TestSources:
    def test_rademacher_moments(self):
        src = tr.rademacher(SQRT2)
        assert src.sigma2 == pytest.approx(2.0, rel=1e-15)
        assert src.abs_mean == SQRT2
        assert src.abs_third == pytest.approx(2 * SQRT2)
        assert src.b_equiv == pytest.approx(1.0, rel=1e-15)
        assert src.beta == pytest.approx(src.sigma2 / (2 * src.abs_mean))

    def test_uniform_moments(self):
        src = tr.uniform_symmetric(SQRT6)
        assert src.sigma2 == pytest.approx(2.0)
        assert src.abs_mean == pytest.approx(SQRT6 / 2)
        assert src.abs_third == pytest.approx(SQRT6 ** 3 / 4)

    def test_laplace_moments(self):
        src = tr.laplace_source(0.5)
        assert src.sigma2 == 0.5
        assert src.abs_mean == 0.5
        assert src.abs_third == 6 * 0.125

    @pytest.mark.parametrize("make", [lambda: tr.rademacher(SQRT2),
                                      lambda: tr.uniform_symmetric(SQRT6),
                                      lambda: tr.laplace_source(1.0)])
    def test_sign_balance_and_mean_zero(self, make):
        src = make()
        n = 10 ** 5
        x = np.asarray(src.sampler(substream(1234, src.label), n))
        assert abs(np.mean(np.sign(x))) <= 4.0 / math.sqrt(n)
        assert abs(np.mean(x)) <= 4.0 * math.sqrt(src.sigma2 / n)
        var_se = np.std(x ** 2, ddof=1) / math.sqrt(n)
        assert abs(np.mean(x ** 2) - src.sigma2) <= 4.0 * var_se

    def test_builtin_sources_matched_variance(self):
        for src in tr.builtin_sources(1.0):
            assert src.sigma2 == pytest.approx(2.0)


class TestSgnBias:
    def test_rademacher_sign_bias_is_uniform(self):
        # |y|-reweighting of two equal atoms leaves them equal, so U*Y is
        # uniform on (-c, c)
        c = SQRT2
        ts = tr.sgn_bias_sample(tr.rademacher(c), 10 ** 5, 7)
        band = dkw_band(ts.n, alpha=0.01)
        uniform_cdf = lambda x: np.clip((x + c) / (2 * c), 0.0, 1.0)
        assert ks_against(ts.values, uniform_cdf) <= band

    def test_laplace_sign_bias_is_fixed_point(self):
        b = 1.0
        ts = tr.sgn_bias_sample(tr.laplace_source(b), 10 ** 5, 11)
        assert ks_against(ts.values, lambda x: cdf(x, LaplaceParams(0, b))) \
            <= dkw_band(ts.n, alpha=0.01)

    def test_sign_symmetry(self):
        ts = tr.sgn_bias_sample(tr.laplace_source(1.0), 10 ** 5, 3)
        assert abs(np.mean(np.sign(ts.values))) <= 4.0 / math.sqrt(ts.n)

    def test_empty_sample(self):
        ts = tr.sgn_bias_sample(tr.rademacher(1.0), 0, 1)
        assert ts.values.shape == (0,)

    def test_reproducible(self):
        a = tr.sgn_bias_sample(tr.rademacher(1.0), 100, 5)
        b = tr.sgn_bias_sample(tr.rademacher(1.0), 100, 5)
        assert np.array_equal(a.values, b.values)
        c = tr.sym_equilibrium_sample(tr.rademacher(1.0), 100, 5)
        assert not np.array_equal(a.values, c.values)

    def test_unsupported_source(self):
        bare = tr.SourceDistribution(label="bare", sigma2=1.0, abs_mean=0.8,
                                     abs_third=1.0, sampler=lambda rng, n:
                                     rng.normal(size=n))
        with pytest.raises(UnsupportedSourceError):
            tr.sgn_bias_sample(bare, 10, 1)


class TestSymEquilibrium:
    def test_rademacher_triangular_law(self):
        # X_L = U*Z with |Z| = c sqrt(U) has the tent density (c-|s|)/c^2
        c = SQRT2
        ts = tr.sym_equilibrium_sample(tr.rademacher(c), 10 ** 5, 13)

        def tent_cdf(s):
            s = np.clip(np.asarray(s, float), -c, c)
            return np.where(s < 0, (c + s) ** 2 / (2 * c ** 2),
                            1.0 - (c - s) ** 2 / (2 * c ** 2))

        assert ks_against(ts.values, tent_cdf) <= dkw_band(ts.n, alpha=0.01)

    def test_rademacher_second_moment(self):
        # second moment c^2/6 = b^2/3 at c = sqrt(2) b
        ts = tr.sym_equilibrium_sample(tr.rademacher(SQRT2), 10 ** 6, 17)
        sq = ts.values ** 2
        se = np.std(sq, ddof=1) / math.sqrt(ts.n)
        assert abs(np.mean(sq) - 1.0 / 3.0) <= 4.0 * se

    def test_uniform_z_inverse_closed_form(self):
        us = np.linspace(1e-9, 1 - 1e-9, 1001)
        r = tr._smoothstep_inverse(us)
        assert np.max(np.abs(3 * r ** 2 - 2 * r ** 3 - us)) <= 1e-12

    def test_laplace_fixed_point(self):
        b = 1.0
        ts = tr.sym_equilibrium_sample(tr.laplace_source(b), 10 ** 5, 3)
        d_k = kolmogorov_empirical(EmpiricalSample.from_values(ts.values),
                                   LaplaceParams(0.0, b))
        assert d_k.value <= dkw_band(ts.n, alpha=0.01)

    def test_empty(self):
        assert tr.sym_equilibrium_sample(tr.uniform_symmetric(1.0), 0,
                                         1).values.shape == (0,)


class TestEquilibriumMoment:
    def test_laplace_is_fixed_point(self):
        src = tr.laplace_source(1.3)
        assert tr.equilibrium_moment(2, src) == pytest.approx(
            2 * 1.3 ** 2, rel=1e-14)

    def test_odd_vanishes(self):
        assert tr.equilibrium_moment(1, tr.rademacher(2.0)) == 0.0

    def test_rademacher(self):
        assert tr.equilibrium_moment(2, tr.rademacher(SQRT2)) == pytest.approx(
            1.0 / 3.0, rel=1e-14)

    def test_uniform(self):
        c = SQRT6
        assert tr.equilibrium_moment(2, tr.uniform_symmetric(c)) == \
            pytest.approx(c ** 2 / 10.0, rel=1e-13)

    def test_unknown_moments(self):
        bare = tr.SourceDistribution(label="bare", sigma2=1.0, abs_mean=0.8,
                                     abs_third=1.0,
                                     sampler=lambda rng, n: rng.normal(size=n))
        with pytest.raises(UnsupportedSourceError):
            tr.equilibrium_moment(2, bare)


class TestEquilibriumCf:
    def test_limit_at_zero(self):
        assert tr.equilibrium_cf(0.0, tr.rademacher(1.0)) == 1.0

    def test_laplace_fixed_point_algebra(self):
        src = tr.laplace_source(1.0)
        for t in (0.5, 1.0, 2.0):
            assert tr.equilibrium_cf(t, src) == pytest.approx(
                char_fn(t, LaplaceParams(0, 1)), rel=1e-14)

    def test_rademacher_value(self):
        got = tr.equilibrium_cf(1.0, tr.rademacher(SQRT2))
        assert got == pytest.approx(1.0 - math.cos(SQRT2), rel=1e-14)

    def test_series_switchover_is_continuous(self):
        # the exact branch carries ~1e-8 cancellation error at the cutoff
        # (1 - cf(t) loses half its digits there), which is what the series
        # branch removes; continuity across the cutover is limited by it
        src = tr.uniform_symmetric(SQRT6)
        lo = tr.equilibrium_cf(1e-4 * (1 - 1e-9), src)
        hi = tr.equilibrium_cf(1e-4 * (1 + 1e-9), src)
        assert abs(lo - hi) <= 1e-7

    @pytest.mark.parametrize("make", [lambda: tr.rademacher(SQRT2),
                                      lambda: tr.uniform_symmetric(SQRT6),
                                      lambda: tr.laplace_source(1.0)])
    def test_empirical_cf_matches(self, make):
        src = make()
        ts = tr.sym_equilibrium_sample(src, 10 ** 5, 29)
        for t in (0.5, 1.0, 2.0):
            phases = np.cos(t * ts.values)
            se = np.std(phases, ddof=1) / math.sqrt(ts.n)
            assert abs(np.mean(phases) - tr.equilibrium_cf(t, src)) <= 4 * se


class TestEquilibriumDensity:
    def test_laplace_center(self):
        assert tr.equilibrium_density(0.0, tr.laplace_source(1.0)) == \
            pytest.approx(0.5, abs=1e-4)

    def test_laplace_fixed_point_on_grid(self):
        src = tr.laplace_source(1.0)
        for s in (-2.0, -0.7, 0.4, 1.3, 3.0):
            assert tr.equilibrium_density(s, src) == pytest.approx(
                pdf(s, LaplaceParams(0, 1)), abs=1e-10)

    def test_outside_bounded_support(self):
        src = tr.uniform_symmetric(1.5)
        assert tr.equilibrium_density(2.0, src) == 0.0
        assert tr.equilibrium_density(-1.6, src) == 0.0

    def test_integrates_to_one(self):
        src = tr.laplace_source(1.0)
        val = sum(integrate.quad(
            lambda s: tr.equilibrium_density(s, src), lo, hi, limit=200)[0]
            for lo, hi in ((-40.0, 0.0), (0.0, 40.0)))
        assert val == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("s", [0.25, 0.8, -1.2])
    def test_tensor_quadrature_cross_check(self, s):
        for src in (tr.uniform_symmetric(SQRT6), tr.laplace_source(1.0)):
            assert tr.equilibrium_density_2d(s, src) == pytest.approx(
                tr.equilibrium_density(s, src), abs=1e-8)

    def test_matches_sampler(self):
        # uniform source: X_L has density 3 (c-|s|)^2 / (2 c^3)
        c = SQRT6
        src = tr.uniform_symmetric(c)
        want = lambda s: 3 * (c - abs(s)) ** 2 / (2 * c ** 3)
        for s in (0.0, 0.5, 1.5):
            assert tr.equilibrium_density(s, src) == pytest.approx(
                want(s), rel=1e-10)

        def xl_cdf(s):
            s = np.clip(np.asarray(s, float), -c, c)
            return np.where(s < 0, (c + s) ** 3 / (2 * c ** 3),
                            1.0 - (c - s) ** 3 / (2 * c ** 3))

        ts = tr.sym_equilibrium_sample(src, 10 ** 5, 41)
        assert ks_against(ts.values, xl_cdf) <= dkw_band(ts.n, alpha=0.01)

    def test_requires_density(self):
        with pytest.raises(UnsupportedSourceError):
            tr.equilibrium_density(0.5, tr.rademacher(1.0))


class TestZeroBias:
    def test_rademacher_gives_uniform(self):
        c = SQRT2
        ts = tr.zero_bias_sample(tr.rademacher(c), 10 ** 5, 19)
        uniform_cdf = lambda x: np.clip((x + c) / (2 * c), 0.0, 1.0)
        assert ks_against(ts.values, uniform_cdf) <= dkw_band(ts.n, alpha=0.01)

    def test_zero_bias_identity_rademacher(self):
        # E[X f(X)] = E[X^2] E[f'(X_z)] with f = x^3:
        # LHS = c^4, RHS = c^2 E[3 U^2] = c^4 for U ~ Uniform(-c, c)
        c = 1.7
        ts = tr.zero_bias_sample(tr.rademacher(c), 10 ** 6, 23)
        rhs = c ** 2 * np.mean(3.0 * ts.values ** 2)
        se = c ** 2 * np.std(3.0 * ts.values ** 2, ddof=1) / math.sqrt(ts.n)
        assert abs(rhs - c ** 4) <= 4 * se

    def test_uniform_epanechnikov_moment(self):
        c = SQRT6
        ts = tr.zero_bias_sample(tr.uniform_symmetric(c), 10 ** 6, 27)
        sq = ts.values ** 2
        se = np.std(sq, ddof=1) / math.sqrt(ts.n)
        assert abs(np.mean(sq) - c ** 2 / 5.0) <= 4 * se

    def test_laplace_mixture_moment(self):
        b = 0.8
        ts = tr.zero_bias_sample(tr.laplace_source(b), 10 ** 6, 31)
        sq = ts.values ** 2
        se = np.std(sq, ddof=1) / math.sqrt(ts.n)
        assert abs(np.mean(sq) - 4.0 * b ** 2) <= 4 * se

    def test_mean_zero(self):
        ts = tr.zero_bias_sample(tr.rademacher(SQRT2), 10 ** 5, 3)
        assert abs(np.mean(ts.values)) <= 4.0 * np.std(ts.values) / \
            math.sqrt(ts.n)

    def test_empty_and_unsupported(self):
        assert tr.zero_bias_sample(tr.rademacher(1.0), 0, 1).values.size == 0
        numeric = tr.from_density(
            "numeric-uniform",
            lambda x: np.where(np.abs(np.asarray(x, float)) <= 1.0, 0.5, 0.0),
            half_width=1.0)
        with pytest.raises(UnsupportedSourceError):
            tr.zero_bias_sample(numeric, 10, 1)


class TestZeroBiasRelation:
    @pytest.mark.parametrize("f_dd", [lambda x: np.ones_like(x), np.square,
                                      np.cos])
    def test_vanishes_for_rademacher(self, f_dd):
        est = tr.verify_zero_bias_relation(tr.rademacher(SQRT2), f_dd,
                                           10 ** 5, 37)
        assert abs(est.value) <= 4.0 * est.std_error

    def test_square_case_analytic_sides(self):
        # both sides equal c^2/12: (1/2) E[(X_L)^2] and E[U^3] E[(X_z)^2]
        c = SQRT2
        src = tr.rademacher(c)
        assert 0.5 * tr.equilibrium_moment(2, src) == pytest.approx(
            c ** 2 / 12.0, rel=1e-14)
        assert 0.25 * (c ** 2 / 3.0) == pytest.approx(c ** 2 / 12.0)


class TestCouplingInequality:
    @pytest.mark.parametrize("make", [lambda: tr.rademacher(SQRT2),
                                      lambda: tr.uniform_symmetric(SQRT6)])
    def test_independent_coupling_gap_bound(self, make):
        # E|X - X_L| under independent draws is at most
        # E|X| + E|X|^3/(6 b^2), and E|X_L| equals the second term exactly.
        src = make()
        n = 10 ** 6
        b2 = src.sigma2 / 2.0
        x = np.asarray(src.sampler(substream(43, "coupling", src.label), n))
        xl = tr.sym_equilibrium_sample(src, n, 47).values
        gap = np.abs(x - xl)
        se = np.std(gap, ddof=1) / math.sqrt(n)
        bound = src.abs_mean + src.abs_third / (6.0 * b2)
        assert np.mean(gap) <= bound + 4.0 * se

        abs_xl = np.abs(xl)
        se_l = np.std(abs_xl, ddof=1) / math.sqrt(n)
        assert abs(np.mean(abs_xl) - src.abs_third / (6.0 * b2)) <= 4.0 * se_l

    @pytest.mark.parametrize("make", [lambda: tr.rademacher(SQRT2),
                                      lambda: tr.uniform_symmetric(SQRT6)])
    def test_cubic_chain(self, make):
        # E[f(X)] - f(0) = (1/2) E[X^2] E[f''(X_L)] for f = x^3, both sides
        # estimated independently
        src = make()
        n = 10 ** 6
        x = np.asarray(src.sampler(substream(53, "chain", src.label), n))
        xl = tr.sym_equilibrium_sample(src, n, 59).values
        lhs = np.mean(x ** 3)
        se_l = np.std(x ** 3, ddof=1) / math.sqrt(n)
        rhs = 0.5 * src.sigma2 * np.mean(6.0 * xl)
        se_r = 0.5 * src.sigma2 * np.std(6.0 * xl, ddof=1) / math.sqrt(n)
        assert abs(lhs - rhs) <= 4.0 * math.hypot(se_l, se_r)


class TestNumericRecipes:
    def test_matches_closed_forms_for_uniform(self):
        c = SQRT6
        exact = tr.uniform_symmetric(c)
        numeric = tr.from_density(
            "uniform-numeric",
            lambda x: np.where(np.abs(np.asarray(x, float)) <= c,
                               1.0 / (2 * c), 0.0),
            half_width=c)
        assert numeric.abs_mean == pytest.approx(exact.abs_mean, rel=1e-12)
        assert numeric.sigma2 == pytest.approx(exact.sigma2, rel=1e-12)
        assert numeric.abs_third == pytest.approx(exact.abs_third, rel=1e-12)

        # both samplers consume (uniforms, signs) in the same order, so the
        # draws are comparable elementwise; agreement bounds the inverse-CDF
        # tabulation error
        n = 10 ** 4
        for mk_num, mk_ex in ((numeric.y_sampler, exact.y_sampler),
                              (numeric.z_sampler, exact.z_sampler)):
            got = mk_num(substream(61, "num"), n)
            want = mk_ex(substream(61, "num"), n)
            assert np.max(np.abs(got - want)) <= 1e-8

    def test_unbounded_support_requires_tail_scale(self):
        with pytest.raises(ValueError):
            tr.from_density("bad", lambda x: np.exp(-np.abs(x)) / 2.0)

    def test_laplace_numeric_equilibrium_close_to_fixed_point(self):
        b = 1.0
        numeric = tr.from_density(
            "laplace-numeric", lambda x: pdf(x, LaplaceParams(0.0, b)),
            tail_scale=b)
        ts = tr.sym_equilibrium_sample(numeric, 10 ** 5, 67)
        d_k = kolmogorov_empirical(EmpiricalSample.from_values(ts.values),
                                   LaplaceParams(0.0, b))
        assert d_k.value <= dkw_band(ts.n, alpha=0.01)
