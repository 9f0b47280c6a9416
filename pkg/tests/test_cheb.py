import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as nppoly

from uiesampler.cheb import (
    ChebSeries,
    Interval,
    adaptive_fit,
    barycentric_eval,
    cc_weights,
    cheb_points,
    clenshaw_eval,
    coeffs_to_vals,
    cumsum,
    definite_integral,
    multiply,
    vals_to_coeffs,
)
from uiesampler.exceptions import InvalidArgumentError, NoConvergenceError

UNIT = Interval(-1, 1)


def T(k):
    c = np.zeros(k + 1)
    c[k] = 1.0
    return c


def horner(series, x):
    """Monomial-basis oracle: expand to power series and evaluate by Horner."""
    p = npcheb.cheb2poly(series.coeffs)
    t = series.interval.to_unit(x)
    return nppoly.polyval(t, p)


class TestInterval:
    def test_rejects_reversed(self):
        with pytest.raises(InvalidArgumentError):
            Interval(1, 0)

    def test_rejects_infinite(self):
        with pytest.raises(InvalidArgumentError):
            Interval(0, np.inf)


class TestChebPoints:
    @pytest.mark.parametrize("interval, m, expected", [
        (UNIT, 2, [-1, 1]),
        (UNIT, 3, [-1, 0, 1]),
        (Interval(0, 2), 3, [0, 1, 2]),
    ])
    def test_small_grids(self, interval, m, expected):
        np.testing.assert_allclose(cheb_points(interval, m).points, expected, atol=1e-15)

    def test_matches_cosine_formula(self):
        m = 11
        g = cheb_points(UNIT, m)
        j = np.arange(m - 1, -1, -1)
        np.testing.assert_allclose(g.points, np.cos(np.pi * j / (m - 1)), atol=1e-15)

    @pytest.mark.parametrize("m", [2, 5, 64, 513])
    def test_invariants(self, m):
        g = cheb_points(Interval(-3.0, 7.5), m)
        assert g.points[0] == -3.0 and g.points[-1] == 7.5
        assert np.all(np.diff(g.points) > 0)

    @pytest.mark.parametrize("m", [0, 1, 2.5])
    def test_bad_size(self, m):
        with pytest.raises(InvalidArgumentError):
            cheb_points(UNIT, m)


class TestTransforms:
    def test_t2(self):
        g = cheb_points(UNIT, 5)
        c = vals_to_coeffs(2 * g.points**2 - 1, g).coeffs
        np.testing.assert_allclose(c, [0, 0, 1, 0, 0], atol=1e-15)

    def test_constant(self):
        g = cheb_points(Interval(2, 5), 7)
        c = vals_to_coeffs(np.ones(7), g).coeffs
        np.testing.assert_allclose(c, [1, 0, 0, 0, 0, 0, 0], atol=1e-15)

    def test_cube(self):
        # x^3 = (3 T_1 + T_3) / 4
        g = cheb_points(UNIT, 5)
        c = vals_to_coeffs(g.points**3, g).coeffs
        np.testing.assert_allclose(c, [0, 0.75, 0, 0.25, 0], atol=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            vals_to_coeffs(np.ones(4), cheb_points(UNIT, 5))

    def test_coeffs_to_vals_examples(self):
        g = cheb_points(UNIT, 3)
        np.testing.assert_allclose(coeffs_to_vals(ChebSeries(UNIT, [1, 0, 0]), g), [1, 1, 1])
        np.testing.assert_allclose(coeffs_to_vals(ChebSeries(UNIT, [0, 1]), g), [-1, 0, 1],
                                   atol=1e-15)

    @pytest.mark.parametrize("m", [2, 3, 4, 17, 100, 257])
    def test_dct_matches_direct(self, m):
        rng = np.random.default_rng(m)
        g = cheb_points(Interval(-2, 1), m)
        v = rng.standard_normal(m)
        a = vals_to_coeffs(v, g).coeffs
        b = vals_to_coeffs(v, g, method="direct").coeffs
        np.testing.assert_allclose(a, b, atol=1e-13 * np.abs(v).max() * np.log2(m + 1))

    @settings(max_examples=50, deadline=None)
    @given(m=st.integers(2, 300), seed=st.integers(0, 2**32 - 1))
    def test_round_trip(self, m, seed):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(m)
        g = cheb_points(Interval(-1.5, 4.0), m)
        back = vals_to_coeffs(coeffs_to_vals(ChebSeries(g.interval, c), g), g).coeffs
        np.testing.assert_allclose(back, c, atol=1e-13 * np.abs(c).max() * max(1, np.log2(m)))

    def test_vector_valued(self):
        rng = np.random.default_rng(0)
        g = cheb_points(UNIT, 9)
        v = rng.standard_normal((3, 9))
        c = vals_to_coeffs(v, g).coeffs
        for i in range(3):
            np.testing.assert_allclose(c[i], vals_to_coeffs(v[i], g).coeffs, atol=1e-15)

    def test_values_on_larger_grid_use_padding(self):
        s = ChebSeries(UNIT, T(3))
        g = cheb_points(UNIT, 10)
        np.testing.assert_allclose(coeffs_to_vals(s, g), 4 * g.points**3 - 3 * g.points,
                                   atol=1e-14)


class TestClenshaw:
    def test_t3_at_half(self):
        assert clenshaw_eval(ChebSeries(UNIT, T(3)), 0.5) == pytest.approx(-1.0, abs=1e-15)

    def test_right_endpoint_is_coefficient_sum(self):
        rng = np.random.default_rng(1)
        c = rng.standard_normal(12)
        s = ChebSeries(Interval(3, 8), c)
        assert clenshaw_eval(s, 8.0) == pytest.approx(c.sum(), rel=1e-13)

    @pytest.mark.parametrize("seed", range(5))
    def test_against_horner(self, seed):
        rng = np.random.default_rng(seed)
        s = ChebSeries(Interval(-0.5, 2.0), rng.standard_normal(10))
        x = rng.uniform(-0.5, 2.0, 50)
        ref = horner(s, x)
        np.testing.assert_allclose(clenshaw_eval(s, x), ref, rtol=1e-12, atol=1e-12)

    def test_vector_series_shape(self):
        s = ChebSeries(UNIT, np.ones((4, 3)))
        assert clenshaw_eval(s, np.zeros((2, 5))).shape == (4, 2, 5)


class TestBarycentric:
    def test_reproduces_node_values(self):
        g = cheb_points(Interval(0, 3), 8)
        v = np.arange(8.0) ** 2
        for j in range(8):
            assert barycentric_eval(v, g, g.points[j]) == v[j]

    def test_t4_exact(self):
        g = cheb_points(UNIT, 9)
        v = np.cos(4 * np.arccos(g.points))
        x = np.linspace(-1, 1, 101)
        np.testing.assert_allclose(barycentric_eval(v, g, x), np.cos(4 * np.arccos(x)),
                                   atol=1e-13)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_transform_path(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 60))
        g = cheb_points(Interval(-4, 1), m)
        v = rng.standard_normal(m)
        x = rng.uniform(-4, 1, 30)
        a = barycentric_eval(v, g, x)
        b = clenshaw_eval(vals_to_coeffs(v, g), x)
        np.testing.assert_allclose(a, b, atol=1e-12 * np.abs(v).max() * m)

    def test_vector_values(self):
        g = cheb_points(UNIT, 5)
        v = np.vstack([g.points, g.points**2])
        out = barycentric_eval(v, g, np.array([0.3, g.points[1]]))
        np.testing.assert_allclose(out, [[0.3, g.points[1]], [0.09, g.points[1] ** 2]],
                                   atol=1e-15)


class TestMultiply:
    def test_t1_squared(self):
        p = multiply(ChebSeries(UNIT, T(1)), ChebSeries(UNIT, T(1)))
        np.testing.assert_allclose(p.coeffs, [0.5, 0, 0.5], atol=1e-15)

    def test_identity(self):
        s = ChebSeries(Interval(1, 2), [0.3, -1.0, 2.5])
        np.testing.assert_allclose(multiply(s, ChebSeries(s.interval, [1.0])).coeffs, s.coeffs,
                                   atol=1e-15)

    def test_t2_t3(self):
        # T_m T_n = (T_{m+n} + T_{|m-n|}) / 2
        p = multiply(ChebSeries(UNIT, T(2)), ChebSeries(UNIT, T(3)))
        np.testing.assert_allclose(p.coeffs, [0, 0.5, 0, 0, 0, 0.5], atol=1e-15)

    def test_interval_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            multiply(ChebSeries(UNIT, [1]), ChebSeries(Interval(0, 1), [1]))

    def test_matches_numpy_chebmul(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal(7), rng.standard_normal(11)
        p = multiply(ChebSeries(UNIT, a), ChebSeries(UNIT, b))
        np.testing.assert_allclose(p.coeffs, npcheb.chebmul(a, b), atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_commutative_associative(self, seed):
        rng = np.random.default_rng(seed)
        I = Interval(-2, 3)
        a, b, c = (ChebSeries(I, rng.standard_normal(rng.integers(1, 12))) for _ in range(3))
        np.testing.assert_allclose(multiply(a, b).coeffs, multiply(b, a).coeffs, atol=1e-12)
        lhs = multiply(multiply(a, b), c).coeffs
        rhs = multiply(a, multiply(b, c)).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1, np.abs(lhs).max()))


class TestCalculus:
    def test_cumsum_t0(self):
        np.testing.assert_allclose(cumsum(ChebSeries(UNIT, [1.0])).coeffs, [1, 1], atol=1e-15)

    def test_cumsum_t2(self):
        # int_{-1}^x (2t^2 - 1) dt = 2x^3/3 - x - 1/3 = T_3/6 - T_1/2 - 1/3
        g = cumsum(ChebSeries(UNIT, T(2)))
        np.testing.assert_allclose(g.coeffs, [-1 / 3, -0.5, 0, 1 / 6], atol=1e-15)
        x = np.linspace(-1, 1, 13)
        np.testing.assert_allclose(g(x), 2 * x**3 / 3 - x - 1 / 3, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_cumsum_finite_difference(self, seed):
        rng = np.random.default_rng(seed)
        s = ChebSeries(Interval(-1.0, 2.5), rng.standard_normal(15))
        G = cumsum(s)
        assert abs(G(-1.0)) <= 1e-15 * np.abs(G.coeffs).sum()
        x = rng.uniform(-0.9, 2.4, 20)
        h = 1e-5
        fd = (G(x + h) - G(x - h)) / (2 * h)
        np.testing.assert_allclose(fd, s(x), atol=1e-8 * np.abs(s.coeffs).sum())

    @pytest.mark.parametrize("k, expected", [(0, 2.0), (1, 0.0), (2, -2 / 3)])
    def test_definite_integral(self, k, expected):
        assert definite_integral(ChebSeries(UNIT, T(k))) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("k", [1, 3, 5, 9, 21])
    def test_odd_terms_vanish(self, k):
        assert definite_integral(ChebSeries(Interval(-3, 3), T(k))) == 0.0

    def test_definite_matches_cumsum(self):
        rng = np.random.default_rng(9)
        s = ChebSeries(Interval(0.5, 4.0), rng.standard_normal(20))
        assert definite_integral(s) == pytest.approx(cumsum(s)(4.0), rel=1e-13)

    def test_cc_weights(self):
        g = cheb_points(Interval(0, 2), 9)
        w = cc_weights(g)
        assert w.sum() == pytest.approx(2.0, rel=1e-15)
        for p in range(9):
            assert w @ g.points**p == pytest.approx(2.0 ** (p + 1) / (p + 1), rel=1e-13)
        assert np.all(w > 0)


class TestAdaptiveFit:
    def test_exp(self):
        f = adaptive_fit(np.exp, UNIT)
        assert 14 <= len(f) <= 20
        # compare with a high-degree fixed fit: the dropped tail is negligible
        g = cheb_points(UNIT, 129)
        ref = vals_to_coeffs(np.exp(g.points), g).coeffs
        scale = np.abs(ref).max()
        np.testing.assert_allclose(f.coeffs, ref[:len(f)], atol=1e-15 * scale)
        assert np.abs(ref[len(f):]).max() < 1e-15 * scale

    def test_t5(self):
        f = adaptive_fit(lambda x: 16 * x**5 - 20 * x**3 + 5 * x, UNIT)
        assert len(f) == 6
        np.testing.assert_allclose(f.coeffs, T(5), atol=1e-14)

    def test_square_on_shifted_interval(self):
        f = adaptive_fit(lambda x: x**2, Interval(0, 2))
        assert len(f) == 3

    def test_scalar_only_function(self):
        import math
        f = adaptive_fit(math.sin, UNIT)
        assert f(0.3) == pytest.approx(math.sin(0.3), abs=1e-14)

    @pytest.mark.parametrize("fn, interval", [
        (lambda x: np.exp(-x**2 / 2), Interval(-9, 9)),
        (lambda x: np.cos(7 * x) + x, Interval(-2, 1)),
        (lambda x: 1 / (1 + 25 * x**2), UNIT),
    ])
    def test_reproduces_function(self, fn, interval):
        f = adaptive_fit(fn, interval)
        x = np.random.default_rng(0).uniform(interval.a, interval.b, 100)
        fx = fn(x)
        np.testing.assert_allclose(f(x), fx, atol=1e-12 * np.abs(fx).max())

    def test_zero_function(self):
        f = adaptive_fit(lambda x: 0 * x, UNIT)
        assert len(f) == 1 and f.coeffs[0] == 0

    def test_no_convergence_names_function(self):
        def kinked(x):
            return np.abs(x)
        with pytest.raises(NoConvergenceError, match="kinked"):
            adaptive_fit(kinked, UNIT, max_size=2**10)
