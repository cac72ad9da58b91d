import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sp_integrate
from scipy.special import hyp2f1

from uavbackhaul.channel import los_prob_backhaul
from uavbackhaul.errors import DomainError, NonConvergence
from uavbackhaul.numerics import (STENCIL_OFFSETS, QuadratureSpec, derivative_stencil, derivatives_from_stencil, gauss_2f1_11c,
                                  gauss_2f1_11c_array, h_bound, integrate, integrate_semi_infinite, nth_derivative)

TIGHT = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=4000)


class TestIntegrate:
    def test_polynomial_is_exact(self):
        assert integrate(lambda x: 2 * x, 0.0, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_exponential(self):
        assert integrate(lambda x: np.exp(-x), 0.0, 10.0, TIGHT) == pytest.approx(1 - math.exp(-10), rel=1e-12)

    def test_backhaul_los_moment_against_dense_trapezoid(self, table3):
        g = table3.geometry

        def f(x):
            return x * los_prob_backhaul(x, g.delta_h, table3.backhaul_los)

        x = np.linspace(0.0, 5000.0, 1_000_001)
        oracle = np.trapezoid(f(x), x)
        assert integrate(f, 0.0, 5000.0, TIGHT) == pytest.approx(oracle, rel=1e-6)

    def test_vector_valued_integrand(self):
        k = np.arange(1, 4)[:, None]
        got = integrate(lambda x: x ** k, 0.0, 1.0, TIGHT)
        np.testing.assert_allclose(got, 1.0 / (k[:, 0] + 1), rtol=1e-12)

    def test_breakpoints_handle_kinks(self):
        got = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, TIGHT, breakpoints=[0.3])
        assert got == pytest.approx(0.3**2 / 2 + 0.7**2 / 2, rel=1e-12)

    def test_empty_range(self):
        assert integrate(np.exp, 2.0, 2.0) == 0.0

    def test_reversed_limits_rejected(self):
        with pytest.raises(DomainError):
            integrate(np.exp, 1.0, 0.0)

    def test_budget_exhaustion_reports_best_estimate(self):
        spec = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=3)
        with pytest.raises(NonConvergence) as info:
            integrate(lambda x: np.sin(50 * x) ** 2, 0.0, 10.0, spec)
        assert math.isfinite(info.value.estimate)
        assert info.value.error > 0

    @given(a=st.floats(-5, 5), w=st.floats(0.01, 10), c=st.floats(0.1, 3))
    def test_matches_scipy_quad(self, a, w, c):
        def f(x):
            return np.exp(-c * x) * np.cos(x)

        oracle, _ = sp_integrate.quad(f, a, a + w, epsabs=1e-13, epsrel=1e-12)
        assert integrate(f, a, a + w, TIGHT) == pytest.approx(oracle, rel=1e-9, abs=1e-12)


class TestSemiInfinite:
    def test_exponential(self):
        assert integrate_semi_infinite(lambda x: np.exp(-x), 0.0, TIGHT) == pytest.approx(1.0, rel=1e-10)

    def test_lorentzian(self):
        assert integrate_semi_infinite(lambda x: 1 / (1 + x**2), 0.0, TIGHT) == pytest.approx(math.pi / 2, rel=1e-10)

    def test_heavy_tail_with_scale_matches_large_cutoff(self):
        def f(x):
            return 1.0 / (100.0 + x) ** 2.5

        tail = integrate_semi_infinite(f, 100.0, TIGHT, scale=200.0)
        finite = integrate(f, 100.0, 5e4, TIGHT) + 1.0 / (1.5 * (100.0 + 5e4) ** 1.5)
        assert tail == pytest.approx(finite, rel=1e-8)

    def test_scale_must_be_positive(self):
        with pytest.raises(DomainError):
            integrate_semi_infinite(np.exp, 0.0, scale=0.0)


class TestHypergeometric:
    @pytest.mark.parametrize("c", [1.2, 1.5, 2.0, 3.7])
    def test_zero_argument(self, c):
        assert gauss_2f1_11c(c, 0.0) == 1.0

    def test_log_identity(self):
        assert gauss_2f1_11c(2.0, 0.5) == pytest.approx(-math.log(0.5) / 0.5, rel=1e-12)

    def test_near_one_matches_integral_representation(self):
        # 2F1(1,1;c;z) = (c-1) int_0^1 (1-t)^(c-2) / (1-zt) dt
        c, z = 1.5, 0.99
        rep, _ = sp_integrate.quad(lambda t: (c - 1) / (1 - z * t), 0, 1, weight="alg", wvar=(0, c - 2),
                                   epsabs=0, epsrel=1e-13, limit=500)
        assert gauss_2f1_11c(c, z) == pytest.approx(rep, rel=1e-8)

    def test_small_negative_argument_uses_series(self):
        assert gauss_2f1_11c(2.0, -0.1) == pytest.approx(hyp2f1(1, 1, 2, -0.1), rel=1e-12)

    @given(c=st.floats(1.05, 6.0), z=st.floats(0.0, 0.995))
    def test_matches_scipy(self, c, z):
        assert gauss_2f1_11c(c, z) == pytest.approx(hyp2f1(1, 1, c, z), rel=1e-9)

    def test_array_form_matches_scalar(self):
        z = np.array([0.0, 0.1, 0.5, 0.89, 0.9, 0.95, 0.999])
        np.testing.assert_allclose(gauss_2f1_11c_array(1.5, z), [gauss_2f1_11c(1.5, v) for v in z], rtol=1e-10)

    @pytest.mark.parametrize("c,z", [(1.0, 0.5), (2.0, 1.0), (2.0, -1.0)])
    def test_domain(self, c, z):
        with pytest.raises(DomainError):
            gauss_2f1_11c(c, z)


class TestDerivative:
    def test_cubic_second_derivative(self):
        assert nth_derivative(lambda s: s**3, 2.0, 2) == pytest.approx(12.0, rel=1e-8)

    def test_exponential_first_derivative(self):
        assert nth_derivative(lambda s: np.exp(-3 * s), 0.5, 1) == pytest.approx(-3 * math.exp(-1.5), rel=1e-8)

    @pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
    def test_exponential_all_orders(self, k):
        # Round-off grows like eps / h^k, so the fourth order is the loosest.
        got = nth_derivative(lambda s: np.exp(-0.7 * s), 1.3, k)
        assert got == pytest.approx((-0.7) ** k * math.exp(-0.91), rel=1e-4)

    def test_vectorized_matches_scalar(self):
        s = np.array([0.2, 1.0, 5.0])
        got = nth_derivative(lambda x: np.sin(x) * np.exp(-x), s, 2, vectorized=True)
        want = [nth_derivative(lambda x: math.sin(x) * math.exp(-x), v, 2) for v in s]
        np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_stencil_shape(self):
        assert derivative_stencil(np.zeros((2, 3))).shape == (9, 2, 3)

    def test_abs_tol_waives_negligible_disagreement(self):
        s = 1.0
        noisy = np.exp(-derivative_stencil(s)) + 1e-7 * (STENCIL_OFFSETS == 1)
        with pytest.raises(NonConvergence):
            derivatives_from_stencil(noisy, s, 2)
        d, _ = derivatives_from_stencil(noisy, s, 2, abs_tol=1.0)
        assert math.isfinite(float(d))

    @pytest.mark.parametrize("k", [-1, 5, 1.5])
    def test_order_domain(self, k):
        with pytest.raises(DomainError):
            nth_derivative(np.exp, 1.0, k)


class TestHBound:
    @pytest.mark.parametrize("m", [1, 2, 5])
    def test_zero(self, m):
        assert h_bound(m, 0.0) == 0.0

    def test_values(self):
        assert h_bound(2, 1.0) == pytest.approx(0.75)
        assert h_bound(3, 0.2) == pytest.approx(1 - 1 / 1.728, rel=1e-12)

    @given(m=st.integers(1, 6), x=st.floats(0, 1e6))
    def test_bounded_and_increasing(self, m, x):
        h = h_bound(m, x)
        assert 0.0 <= h <= 1.0
        assert h_bound(m, x * 1.5 + 1e-3) >= h
