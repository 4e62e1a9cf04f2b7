"""Test the nested minimax exponents."""

from __future__ import annotations

import mpmath
import pytest

from mflab.exponents import (
    alpha_closed_form,
    beta_objective,
    closed_form_deviation,
    derived_exponents,
    exact_alpha_objective_report,
    inner_max,
    minimax_alpha,
    minimax_beta,
    tolerance_stability,
)
from mflab.models import ExponentResult


@pytest.fixture(scope="module")
def exponents():
    return derived_exponents()


def _mp(text: str) -> mpmath.mpf:
    with mpmath.workdps(40):
        return mpmath.mpf(text)


class TestInnerMax:
    """Test the golden-section inner maximization."""

    def test_interior_quadratic(self):
        with mpmath.workdps(40):
            result = inner_max(lambda lam: beta_objective(mpmath.mpf("0.5"), lam), mpmath.mpf(0), mpmath.mpf(2))
            # Stationary point beta / (2 - beta).
            assert abs(result.argopt - mpmath.mpf(1) / 3) < 1e-10

    def test_endpoint_maximum(self):
        with mpmath.workdps(40):
            result = inner_max(lambda lam: -lam, mpmath.mpf(0), mpmath.mpf(1))
            assert result.argopt == 0
            assert result.value == 0


class TestMinimax:
    """Test the optimizers against their closed forms."""

    def test_beta(self):
        result = minimax_beta()
        with mpmath.workdps(40):
            assert abs(result.argopt - (2 - mpmath.sqrt(2))) < 1e-8
            assert abs(result.value + (3 - 2 * mpmath.sqrt(2))) < 1e-15

    def test_alpha(self):
        result = minimax_alpha()
        with mpmath.workdps(40):
            assert abs(result.argopt - (3 - 8 / mpmath.sqrt(15))) < 1e-7
            kappa = mpmath.mpf(31) / 2 - 4 * mpmath.sqrt(15)
            assert abs(result.value + kappa) < 1e-12

    def test_unrestricted_alpha_agrees(self):
        restricted = minimax_alpha()
        unrestricted = minimax_alpha(lower=0.0)
        assert abs(restricted.argopt - unrestricted.argopt) < 1e-7

    def test_tolerance_stability(self):
        changes = tolerance_stability(1e-6)
        assert set(changes) == {"beta", "alpha"}
        assert all(v < 5 for v in changes.values())


class TestClosedForm:
    """Test the piecewise closed form of the inner maximum."""

    def test_known_values(self):
        assert alpha_closed_form(_mp("0.5")) == pytest.approx(0.275)
        assert alpha_closed_form(_mp("0.2")) == pytest.approx(0.7)
        assert alpha_closed_form(_mp("1")) == 0

    def test_numeric_agreement(self):
        assert closed_form_deviation(points=25) < 1e-9


class TestDerivedExponents:
    """Test kappa, delta and the eta exponents."""

    def test_values(self, exponents):
        assert float(exponents.kappa) == pytest.approx(0.008066615, abs=1e-9)
        assert float(exponents.delta) == pytest.approx(0.008066615 / 7, abs=1e-9)
        assert float(exponents.eta1) == pytest.approx(2 * 0.008066615 / 7, abs=1e-9)

    def test_eta2_equals_delta(self, exponents):
        assert abs(exponents.eta2 - exponents.delta) < mpmath.mpf(10) ** -30

    def test_printable(self, exponents):
        printed = exponents.printable()
        assert set(printed) == set(ExponentResult.model_fields)
        assert printed["beta"].startswith("0.585786")

    def test_relations_enforced(self, exponents):
        with pytest.raises(ValueError):
            ExponentResult(**{**exponents.model_dump(), "delta": "0.5"})


class TestExactObjective:
    """Test the unsimplified alpha objective at the optimizer."""

    def test_upper_branch(self):
        report = exact_alpha_objective_report()
        with mpmath.workdps(40):
            alpha = 3 - 8 / mpmath.sqrt(15)
            assert abs(report.upper_branch_max + (1 - alpha) / 4) < 1e-9
        assert not report.upper_branch_below_twelfth
        assert report.upper_branch_dominated
        assert report.max_exact_minus_simplified >= 0
