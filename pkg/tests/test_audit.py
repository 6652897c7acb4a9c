import math

import numpy as np
import pytest

from wickllt.audit import (
    GridSpec,
    audit_density,
    check_excess_size,
    check_square_integrability,
    check_variance_domination,
    variance_pairing,
)
from wickllt.basis import ChaosVector, GaussianSpace
from wickllt.wick import stochastic_exponential

from conftest import random_low_degree, unit_density


def quadratic_density(space, amount=0.1):
    c = np.zeros(space.size)
    c[0] = 1.0
    c[space.position(tuple(2 if i == 0 else 0 for i in range(space.dimension)))] = amount
    return ChaosVector(space, c)


class TestSquareIntegrability:
    def test_unit_density(self, line16):
        report = check_square_integrability(unit_density(line16))
        assert report.l2_norm == pytest.approx(1.0)
        assert report.normalization == 1.0
        assert report.min_on_grid == pytest.approx(1.0)
        assert report.verdicts["normalization"].passed
        assert report.verdicts["nonnegativity"].passed

    def test_exponential_norm_value(self, line20):
        report = check_square_integrability(stochastic_exponential([0.5], line20))
        assert report.l2_norm == pytest.approx(math.exp(0.125), rel=1e-10)
        assert report.min_on_grid > 0.0
        assert report.verdicts["normalization"].passed

    def test_normalization_violation(self, line16):
        c = np.zeros(line16.size)
        c[0] = 0.9
        report = check_square_integrability(ChaosVector(line16, c))
        assert not report.verdicts["normalization"].passed
        assert not report.all_passed


class TestVarianceDomination:
    def test_unit_density_boundary(self, line16):
        report = check_variance_domination(unit_density(line16))
        assert report.min_eigenvalue_m == pytest.approx(0.0, abs=1e-15)
        assert report.trace_m == pytest.approx(0.0, abs=1e-15)
        assert report.verdicts["variance_domination"].passed

    def test_quadratic_density(self, line16):
        report = check_variance_domination(quadratic_density(line16))
        assert report.min_eigenvalue_m == pytest.approx(0.2)
        assert report.trace_m == pytest.approx(0.2)
        assert report.verdicts["variance_domination"].passed

    def test_pure_shift_boundary(self, line16):
        report = check_variance_domination(stochastic_exponential([0.4], line16))
        assert report.min_eigenvalue_m == pytest.approx(0.0, abs=1e-14)
        assert report.verdicts["variance_domination"].passed

    def test_negative_excess_fails(self, line16):
        c = np.zeros(line16.size)
        c[0] = 1.0
        c[line16.position((2,))] = -0.1
        report = check_variance_domination(ChaosVector(line16, c))
        assert not report.verdicts["variance_domination"].passed


class TestExcessSize:
    def test_unit_density(self, line16):
        report = check_excess_size(unit_density(line16))
        assert report.frobenius_sq_m == 0.0
        assert report.verdicts["excess_frobenius"].passed

    def test_quadratic_density(self, line16):
        report = check_excess_size(quadratic_density(line16))
        assert report.frobenius_sq_m == pytest.approx(0.04)
        assert report.spectral_radius_2g == pytest.approx(0.2)

    def test_two_dimensional_diagonal(self, plane12):
        from wickllt.measures import gaussian_cov

        f = gaussian_cov(np.diag([0.3, 0.3]), plane12)
        report = check_excess_size(f)
        assert report.frobenius_sq_m == pytest.approx(0.72, rel=1e-10)
        assert report.spectral_radius_2g == pytest.approx(0.6, rel=1e-10)
        assert report.verdicts["excess_frobenius"].passed

    def test_frobenius_is_exactly_four_g(self, plane12):
        rng = np.random.default_rng(3)
        f = random_low_degree(plane12, rng, max_degree=4)
        c = f.coeffs.copy()
        c[0] = 1.0
        f = ChaosVector(plane12, c)
        from wickllt.basis import kernel_view

        report = check_excess_size(f)
        g = kernel_view(f).g2
        assert report.frobenius_sq_m == pytest.approx(4.0 * float(np.sum(g * g)), rel=1e-14)

    def test_pass_implies_admissible_spectrum(self, plane12):
        rng = np.random.default_rng(4)
        for _ in range(20):
            f = random_low_degree(plane12, rng, max_degree=4, scale=0.2)
            c = f.coeffs.copy()
            c[0] = 1.0
            report = check_excess_size(ChaosVector(plane12, c))
            if report.verdicts["excess_frobenius"].passed:
                assert report.spectral_radius_2g <= math.sqrt(report.frobenius_sq_m) + 1e-12
                assert report.spectral_radius_2g < 1.0


class TestVariancePairing:
    def test_unit_density(self, line16):
        result = variance_pairing(unit_density(line16), [1.0])
        assert result.formula_value == pytest.approx(1.0)
        assert result.quadrature_value == pytest.approx(1.0, rel=1e-12)

    def test_quadratic_density(self, line16):
        result = variance_pairing(quadratic_density(line16), [1.0])
        assert result.formula_value == pytest.approx(1.2)
        assert result.quadrature_value == pytest.approx(1.2, rel=1e-10)

    def test_shift_invariance(self, line16):
        result = variance_pairing(stochastic_exponential([0.4], line16), [1.0])
        assert result.formula_value == pytest.approx(1.0, abs=1e-14)
        assert result.quadrature_value == pytest.approx(1.0, rel=1e-10)

    def test_identity_on_random_inputs(self, plane8):
        rng = np.random.default_rng(5)
        for _ in range(30):
            f = random_low_degree(plane8, rng, max_degree=6)
            c = f.coeffs.copy()
            c[0] = 1.0
            f = ChaosVector(plane8, c)
            h = rng.standard_normal(2) + np.array([0.0, 1.5])
            result = variance_pairing(f, h)
            assert result.quadrature_value == pytest.approx(
                result.formula_value, rel=1e-8
            )

    def test_high_dimension_formula_only(self):
        space = GaussianSpace(5, 4)
        result = variance_pairing(unit_density(space), np.ones(5))
        assert result.formula_value == pytest.approx(5.0)
        assert result.quadrature_value is None


class TestFullAudit:
    def test_report_shape_and_json(self, line16):
        report = audit_density(quadratic_density(line16))
        assert report.all_passed
        data = report.to_json_dict()
        assert set(data["verdicts"]) == {
            "normalization",
            "nonnegativity",
            "variance_domination",
            "excess_frobenius",
        }
        assert data["all_passed"] is True

    def test_deterministic(self, line16):
        f = quadratic_density(line16)
        a = audit_density(f, GridSpec(seed=5)).to_json_dict()
        b = audit_density(f, GridSpec(seed=5)).to_json_dict()
        assert a == b

    def test_mc_grid_high_dimension(self):
        space = GaussianSpace(5, 4)
        report = audit_density(unit_density(space), GridSpec(mc_points=512))
        assert report.all_passed
