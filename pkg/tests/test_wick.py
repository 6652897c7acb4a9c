import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wickllt.basis import ChaosVector, GaussianSpace, basis_vector, eval_at, kernel_view
from wickllt.wick import (
    NotNormalizedError,
    TruncationPolicy,
    center_density,
    gamma,
    ou_apply,
    s_transform,
    stochastic_exponential,
    wick_power,
    wick_product,
)

from conftest import random_low_degree, unit_density

small_coeff = st.floats(min_value=-0.8, max_value=0.8, allow_nan=False)


class TestWickProduct:
    def test_degree_one_squares_to_degree_two(self, line16):
        h1 = basis_vector(line16, (1,))
        result = wick_product(h1, h1)
        expected = basis_vector(line16, (2,))
        assert np.array_equal(result.vector.coeffs, expected.coeffs)
        assert result.discarded_mass == 0.0

    def test_unit_element(self, line16):
        rng = np.random.default_rng(0)
        f = random_low_degree(line16, rng, max_degree=6)
        result = wick_product(unit_density(line16), f)
        assert np.array_equal(result.vector.coeffs, f.coeffs)

    def test_exponential_binomial_convolution(self):
        space = GaussianSpace(1, 12)
        prod = wick_product(
            stochastic_exponential([0.3], space), stochastic_exponential([-0.1], space)
        ).vector
        for k in range(13):
            assert prod.coeffs[space.position((k,))] == pytest.approx(
                0.2**k / math.factorial(k), abs=1e-15
            )

    @given(data=st.data())
    @settings(max_examples=25, deadline=None)
    def test_commutative_and_bilinear(self, plane8, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
        f = random_low_degree(plane8, rng)
        g = random_low_degree(plane8, rng)
        h = random_low_degree(plane8, rng)
        a = data.draw(small_coeff)
        fg = wick_product(f, g).vector
        gf = wick_product(g, f).vector
        # identical term sets, different accumulation order: rounding only
        assert np.allclose(fg.coeffs, gf.coeffs, atol=1e-13)
        left = wick_product(f + a * h, g).vector
        right = fg + a * wick_product(h, g).vector
        assert np.allclose(left.coeffs, right.coeffs, atol=1e-12)

    def test_exact_associativity_within_cap(self, line16):
        rng = np.random.default_rng(4)
        f = random_low_degree(line16, rng, max_degree=4)
        g = random_low_degree(line16, rng, max_degree=4)
        h = random_low_degree(line16, rng, max_degree=4)
        left = wick_product(wick_product(f, g).vector, h).vector
        right = wick_product(f, wick_product(g, h).vector).vector
        # degrees above 16 - 4 are corrupted by the intermediate cap, but the
        # operands have degree <= 4 each so nothing is lost here
        assert np.allclose(left.coeffs, right.coeffs, atol=1e-13)

    def test_group_law_of_exponentials(self, line16):
        h, ell = 0.35, -0.2
        prod = wick_product(
            stochastic_exponential([h], line16), stochastic_exponential([ell], line16)
        ).vector
        target = stochastic_exponential([h + ell], line16)
        assert np.abs(prod.coeffs - target.coeffs).max() <= 1e-12

    @given(
        h1=small_coeff, h2=small_coeff, l1=small_coeff, l2=small_coeff
    )
    @settings(max_examples=25, deadline=None)
    def test_group_law_random_shifts(self, plane8, h1, h2, l1, l2):
        h = np.array([h1, h2])
        ell = np.array([l1, l2])
        prod = wick_product(
            stochastic_exponential(h, plane8), stochastic_exponential(ell, plane8)
        ).vector
        target = stochastic_exponential(h + ell, plane8)
        assert np.abs(prod.coeffs - target.coeffs).max() <= 1e-12


class TestDiscardedMass:
    def test_exact_mass_when_affordable(self):
        space = GaussianSpace(1, 6)
        rng = np.random.default_rng(9)
        f = random_low_degree(space, rng, max_degree=6, scale=0.5)
        result = wick_product(f, f)
        # brute-force oracle: convolve the coefficient sequences fully
        full = np.zeros(13)
        for i in range(7):
            for j in range(7):
                full[i + j] += f.coeffs[i] * f.coeffs[j]
        expected = sum(
            math.factorial(k) * full[k] ** 2 for k in range(7, 13)
        )
        assert result.discarded_mass == pytest.approx(expected, rel=1e-12)
        assert not result.mass_is_bound

    def test_bound_dominates_exact(self):
        from wickllt.wick import _discarded_bound

        space = GaussianSpace(1, 6)
        rng = np.random.default_rng(10)
        f = random_low_degree(space, rng, max_degree=6, scale=0.5)
        exact = wick_product(f, f).discarded_mass
        assert _discarded_bound(f, f, 6) >= exact

    def test_no_report_requested(self, line16):
        rng = np.random.default_rng(11)
        f = random_low_degree(line16, rng, max_degree=16)
        result = wick_product(f, f, TruncationPolicy(16, report_discarded=False))
        assert result.discarded_mass is None

    def test_mid_cap_drop_is_exact(self, line16):
        f = basis_vector(line16, (3,))
        result = wick_product(f, f, TruncationPolicy(4))
        # the degree-6 output is dropped by the cap but representable: 6! * 1
        assert result.vector.coeffs[line16.position((6,))] == 0.0
        assert result.discarded_mass == pytest.approx(720.0)
        assert not result.mass_is_bound


class TestWickPower:
    def test_power_one_is_identity(self, line16):
        rng = np.random.default_rng(1)
        f = random_low_degree(line16, rng)
        assert np.array_equal(wick_power(f, 1).vector.coeffs, f.coeffs)

    def test_power_matches_repeated_products(self, line16):
        rng = np.random.default_rng(2)
        f = random_low_degree(line16, rng, max_degree=3)
        by_power = wick_power(f, 5).vector
        acc = f
        for _ in range(4):
            acc = wick_product(acc, f).vector
        assert np.allclose(by_power.coeffs, acc.coeffs, atol=1e-13)

    def test_exponent_zero(self, line16):
        rng = np.random.default_rng(3)
        f = random_low_degree(line16, rng)
        assert np.array_equal(wick_power(f, 0).vector.coeffs, unit_density(line16).coeffs)


class TestGamma:
    def test_halving_on_degree_two(self, line16):
        f = basis_vector(line16, (2,))
        assert gamma(0.5, f).coeffs[line16.position((2,))] == pytest.approx(0.25)

    def test_identity_at_one(self, line16):
        rng = np.random.default_rng(4)
        f = random_low_degree(line16, rng)
        assert np.array_equal(gamma(1.0, f).coeffs, f.coeffs)

    def test_exponential_maps_to_scaled_shift(self):
        space = GaussianSpace(1, 12)
        scaled = gamma(0.7, stochastic_exponential([0.4], space))
        target = stochastic_exponential([0.28], space)
        assert np.abs(scaled.coeffs - target.coeffs).max() <= 1e-15

    def test_unit_preserved(self, line16):
        assert np.array_equal(gamma(0.3, unit_density(line16)).coeffs, unit_density(line16).coeffs)

    @given(lam=st.floats(min_value=0, max_value=1), seed=st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_contraction(self, plane8, lam, seed):
        f = random_low_degree(plane8, np.random.default_rng(seed), max_degree=8)
        assert gamma(lam, f).norm_sq() <= f.norm_sq() + 1e-12

    @pytest.mark.parametrize("lam", [-0.1, 1.1, 2.0])
    def test_domain_rejected(self, line16, lam):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            gamma(lam, unit_density(line16))

    def test_functor_property(self, plane8):
        rng = np.random.default_rng(6)
        f = random_low_degree(plane8, rng, max_degree=4)
        g = random_low_degree(plane8, rng, max_degree=4)
        for lam in (0.0, 0.3, 1.0):
            left = gamma(lam, wick_product(f, g).vector)
            right = wick_product(gamma(lam, f), gamma(lam, g)).vector
            assert np.abs(left.coeffs - right.coeffs).max() <= 1e-14


class TestOrnsteinUhlenbeck:
    def test_time_zero_exact(self, line16):
        rng = np.random.default_rng(7)
        f = random_low_degree(line16, rng, max_degree=6)
        est = ou_apply(0.0, f, [0.8], mc_samples=10)
        assert est.value == pytest.approx(eval_at(f, [0.8]))
        assert est.standard_error == 0.0

    def test_degree_one_halved_at_log_two(self, line16):
        f = basis_vector(line16, (1,))
        est = ou_apply(math.log(2.0), f, [1.0], mc_samples=200_000, seed=5)
        assert abs(est.value - 0.5) <= 3 * est.standard_error

    def test_constant_fixed(self, line16):
        est = ou_apply(0.7, unit_density(line16), [0.3], mc_samples=100, seed=2)
        assert est.value == pytest.approx(1.0)

    def test_matches_gamma_route(self, plane8):
        rng = np.random.default_rng(8)
        f = random_low_degree(plane8, rng, max_degree=4)
        t = 0.4
        w = [0.5, -0.2]
        est = ou_apply(t, f, w, mc_samples=400_000, seed=9)
        target = eval_at(gamma(math.exp(-t), f), w)
        assert abs(est.value - target) <= 3 * est.standard_error


class TestStochasticExponential:
    def test_zero_shift_is_unit(self, line16):
        assert np.array_equal(
            stochastic_exponential([0.0], line16).coeffs, unit_density(line16).coeffs
        )

    def test_unit_shift_reciprocal_factorials(self):
        space = GaussianSpace(1, 12)
        f = stochastic_exponential([1.0], space)
        for k in range(13):
            assert f.coeffs[space.position((k,))] == pytest.approx(
                1.0 / math.factorial(k), abs=1e-16
            )

    def test_mixed_coefficients(self, plane8):
        f = stochastic_exponential([1.0, 2.0], plane8)
        assert f.coeffs[plane8.position((1, 1))] == pytest.approx(2.0)


class TestSTransform:
    def test_unit(self, line16):
        for h in ([0.0], [0.5], [-2.0]):
            assert s_transform(unit_density(line16), h) == 1.0

    def test_degree_two_square(self, line16):
        assert s_transform(basis_vector(line16, (2,)), [0.5]) == pytest.approx(0.25)

    def test_matches_inner_with_exponential(self, plane8):
        from wickllt.basis import chaos_inner

        rng = np.random.default_rng(12)
        f = random_low_degree(plane8, rng, max_degree=4)
        h = np.array([0.3, -0.4])
        assert s_transform(f, h) == pytest.approx(
            chaos_inner(f, stochastic_exponential(h, plane8)), rel=1e-12
        )

    def test_factorization_under_wick(self, plane8):
        rng = np.random.default_rng(13)
        h = np.array([0.3, 0.3])
        for _ in range(100):
            f = random_low_degree(plane8, rng, max_degree=4)
            g = random_low_degree(plane8, rng, max_degree=4)
            prod = wick_product(f, g).vector
            assert s_transform(prod, h) == pytest.approx(
                s_transform(f, h) * s_transform(g, h), rel=1e-10, abs=1e-12
            )


class TestCenterDensity:
    def test_pure_shift_centers_to_unit(self, line16):
        f = stochastic_exponential([0.4], line16)
        centered = center_density(f)
        assert np.abs(centered.coeffs - unit_density(line16).coeffs).max() <= 1e-12

    def test_mean_free_input_unchanged(self, line16):
        c = np.zeros(line16.size)
        c[0] = 1.0
        c[line16.position((2,))] = 0.1
        f = ChaosVector(line16, c)
        centered = center_density(f)
        assert np.array_equal(centered.coeffs, f.coeffs)

    def test_shifted_quadratic(self, line16):
        c = np.zeros(line16.size)
        c[0] = 1.0
        c[line16.position((2,))] = 0.1
        quad = ChaosVector(line16, c)
        f = wick_product(stochastic_exponential([0.4], line16), quad).vector
        centered = center_density(f)
        assert np.abs(centered.coeffs - quad.coeffs).max() <= 1e-12
        assert kernel_view(centered).kernel2[0, 0] == pytest.approx(0.1, abs=1e-12)

    def test_degree_structure(self, plane8):
        rng = np.random.default_rng(14)
        f = random_low_degree(plane8, rng, max_degree=4)
        c = f.coeffs.copy()
        c[0] = 1.0
        f = ChaosVector(plane8, c)
        centered = center_density(f)
        assert centered.coeffs[0] == pytest.approx(1.0, abs=1e-14)
        view = kernel_view(centered)
        assert np.abs(view.mean).max() <= 1e-14
        assert np.allclose(view.kernel2, kernel_view(f).g2, atol=1e-13)

    def test_idempotent(self, plane8):
        rng = np.random.default_rng(15)
        f = random_low_degree(plane8, rng, max_degree=4)
        c = f.coeffs.copy()
        c[0] = 1.0
        f = ChaosVector(plane8, c)
        once = center_density(f)
        twice = center_density(once)
        assert np.abs(once.coeffs - twice.coeffs).max() <= 1e-12

    def test_rejects_unnormalized(self, line16):
        c = np.zeros(line16.size)
        c[0] = 0.9
        with pytest.raises(NotNormalizedError, match="not a normalized density"):
            center_density(ChaosVector(line16, c))
