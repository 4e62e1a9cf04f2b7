"""Test Hecke eigenforms and the Euler-product functionals."""

from __future__ import annotations

import mpmath
import pytest
from sympy import Matrix

from mflab.eigenforms import (
    eigenbasis,
    eisenstein_form,
    euler_products_from_values,
    family_prime_sum_stats,
    hecke_matrix,
    hecke_residuals,
    l1_sym2,
    l1_sym2_from_values,
    l1_sym2_smoothed,
    lambda_array,
)
from mflab.models import CutoffTooSmall, InsufficientTruncation, NoCuspForms, RangeError
from mflab.qseries import miller_basis

TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


class TestEigenbasis:
    """Test the normalized eigenbasis."""

    def test_delta_is_tau(self, delta):
        assert delta.label == "12.1"
        for n, tau in enumerate(TAU, start=1):
            assert delta.a(n) == tau
        assert delta.t2_eigenvalue == -24
        assert delta.lam(1) == 1

    def test_weight_24_eigenvalues(self, weight24):
        """T_2 eigenvalues of S_24 are 540 -+ 12 sqrt(144169), ascending."""
        low, high = weight24
        assert low.index == 0 and high.index == 1
        with mpmath.workprec(128):
            root = 12 * mpmath.sqrt(144169)
            assert abs(low.t2_eigenvalue - (540 - root)) < mpmath.mpf(10) ** -25
            assert abs(high.t2_eigenvalue - (540 + root)) < mpmath.mpf(10) ** -25

    def test_first_coefficient_is_one(self, weight24):
        for f in weight24:
            assert f.a(0) == 0
            assert f.a(1) == 1

    def test_hecke_residuals(self, weight24):
        for f in weight24:
            residuals = hecke_residuals(f, 120)
            assert residuals.multiplicativity < 1e-20
            assert residuals.recursion < 1e-20
            assert residuals.deligne_excess < 0

    def test_no_cusp_forms(self):
        with pytest.raises(NoCuspForms):
            eigenbasis(14, 100)
        with pytest.raises(NoCuspForms):
            eigenbasis(13, 100)
        with pytest.raises(NoCuspForms):
            eigenbasis(10, 100)

    def test_insufficient_truncation(self):
        with pytest.raises(InsufficientTruncation):
            eigenbasis(24, 5)

    def test_hecke_matrix_weight_twelve(self):
        assert hecke_matrix(12, 2, miller_basis(12, 10)) == Matrix([[-24]])

    def test_prime_power_beyond_truncation(self, delta):
        """tau(121) = tau(11)^2 - 11^11 through the recursion at N = 120."""
        with mpmath.workprec(128):
            value = delta.lambda_prime_power(11, 2) * mpmath.mpf(121) ** (mpmath.mpf(11) / 2)
            assert abs(value - 498319933) < 1e-15

    def test_lambda_array(self, delta):
        lam = lambda_array(delta)
        assert lam.shape == (121,)
        assert lam[0] == 0.0
        assert lam[1] == 1.0
        assert lam[2] == pytest.approx(-24 / 2**5.5)


class TestEisensteinForm:
    """Test E_k as a SeriesForm."""

    def test_constant_term(self, e4):
        assert e4.label == "E4"
        assert e4.a(0) == 1
        assert e4.a(1) == 240
        assert e4.valuation() == 0


class TestSymmetricSquare:
    """Test the Euler product of L(1, sym^2 f)."""

    def test_forced_algebra_gives_zeta_three(self):
        """lambda(p^2) = 0 collapses each factor to (1 - p^-3)^-1."""
        result = l1_sym2_from_values(1000, lambda p: mpmath.mpf(0))
        assert abs(result.value - mpmath.zeta(3)) < 1e-6
        assert result.heuristic

    def test_cutoff_too_small(self):
        with pytest.raises(CutoffTooSmall):
            l1_sym2_from_values(50, lambda p: mpmath.mpf(0))

    def test_cutoff_beyond_truncation(self, delta):
        with pytest.raises(InsufficientTruncation):
            l1_sym2(delta, 200)

    def test_delta_value_is_positive(self, delta):
        result = l1_sym2(delta, 113)
        assert result.prime_cutoff == 113
        assert 0.5 < result.value < 2

    def test_smoothed_needs_forty_X_terms(self, delta):
        with pytest.raises(InsufficientTruncation) as exc_info:
            l1_sym2_smoothed(delta, 4)
        assert exc_info.value.required == 160

    @pytest.mark.slow
    def test_euler_product_and_smoothed_sum_agree(self):
        (f,) = eigenbasis(12, 100001)
        euler = float(l1_sym2(f, 10000).value)
        smoothed = l1_sym2_smoothed(f, 2500)
        assert abs(euler - smoothed) / euler < 1e-3
        assert abs(euler - float(l1_sym2(f, 1000).value)) < 1e-2


class TestEulerProducts:
    """Test the four products and degenerate-factor reporting."""

    def test_silent_eigenvalues(self):
        products = euler_products_from_values(
            50, lambda p: mpmath.mpf(0), lambda p: mpmath.mpf(-1)
        )
        assert products.prod_eis == 1
        assert products.in_unit_interval("prod_hol")
        assert products.in_unit_interval("prod_hol_half")
        assert not products.degenerate["prod_hol"]

    def test_degenerate_factors_are_reported(self):
        products = euler_products_from_values(
            50, lambda p: mpmath.mpf(2), lambda p: mpmath.mpf(3)
        )
        assert products.degenerate["prod_eis"] == [2, 3]
        assert not products.in_unit_interval("prod_eis")
        lo, hi = products.factor_ranges["prod_eis"]
        assert lo == pytest.approx(-1.0)
        assert hi < 1


class TestFamilyPrimeSums:
    """Test per-form prime sums over a Hecke basis."""

    def test_family_sum(self, weight24):
        stats = family_prime_sum_stats(24, 10, 20, 1, forms=weight24)
        assert len(stats.per_form) == 2
        assert abs(stats.family_sum - sum(stats.per_form)) < 1e-12

    def test_range_validation(self):
        with pytest.raises(RangeError):
            family_prime_sum_stats(24, 10, 30, 1)

    def test_empty_family(self):
        stats = family_prime_sum_stats(14, 10, 20, 1)
        assert stats.per_form == []
        assert stats.family_sum == 0
