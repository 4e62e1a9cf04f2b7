"""Test zero location, the valence identity, balls and the zero-sum identity."""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from mflab.eigenforms import eisenstein_form
from mflab.evaluate import SQRT3_HALF
from mflab.models import Bump, HPoint, HyperbolicBall, Rectangle, RegionError
from mflab.zerofind import (
    ball_area,
    ball_area_quadrature,
    ball_zero_statistic,
    family_ball_zero_report,
    bump_euclidean_laplacian,
    bump_laplacian,
    bump_value,
    hyperbolic_distance,
    no_zero_height,
    rsd_eisenstein_zeros,
    rudnick_check,
    valence_check,
    zeros_in_region,
)


def _point(x, y) -> HPoint:
    return HPoint(x=mpmath.mpf(x), y=mpmath.mpf(y))


class TestValence:
    """Test weighted zero counts in F against k/12."""

    def test_delta_has_only_the_cusp(self, delta, config):
        report = valence_check(delta, config)
        assert report.passed
        assert report.cusp_order == 1
        assert report.interior_total == 0
        assert report.zeros == []

    def test_e4_vanishes_at_rho(self, e4, config):
        report = valence_check(e4, config)
        assert report.passed
        assert report.expected == Fraction(1, 3)
        (zero,) = report.zeros
        assert zero.elliptic_weight == Fraction(1, 3)
        assert float(zero.location.x) == pytest.approx(-0.5, abs=1e-9)
        assert float(zero.location.y) == pytest.approx(SQRT3_HALF, abs=1e-9)

    def test_e6_vanishes_at_i(self, config):
        report = valence_check(eisenstein_form(6, 64), config)
        assert report.passed
        (zero,) = report.zeros
        assert zero.elliptic_weight == Fraction(1, 2)
        assert float(zero.location.y) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.slow
    def test_weight_24_has_one_interior_zero(self, weight24, config):
        for form in weight24:
            report = valence_check(form, config)
            assert report.passed
            assert report.interior_total == 1

    def test_no_zero_height(self, delta):
        assert no_zero_height(delta) == pytest.approx(SQRT3_HALF)


class TestRegionSearch:
    """Test zero search in explicit boxes."""

    def test_unbounded_box_rejected(self, delta, config):
        with pytest.raises(RegionError):
            zeros_in_region(delta, Rectangle(x1=-0.5, x2=0.5, y1=1.0, y2=math.inf), config)

    def test_box_without_zeros(self, delta, config):
        found = zeros_in_region(delta, Rectangle(x1=-0.4, x2=0.4, y1=1.0, y2=2.0), config)
        assert found.zeros == []
        assert found.weighted_total == 0


class TestEisensteinArc:
    """Test that zeros of E_k lie on the unit arc."""

    def test_e12_zero_on_arc(self, config):
        report = rsd_eisenstein_zeros(12, config)
        assert len(report.zeros) == 1
        assert report.max_deviation < 1e-8
        assert math.pi / 2 <= report.arguments[0] <= 2 * math.pi / 3 + 1e-9


class TestBalls:
    """Test hyperbolic ball geometry and zero statistics."""

    def test_distance(self):
        assert float(hyperbolic_distance(_point(0, 1), _point(0, 2))) == pytest.approx(math.log(2))

    def test_area_matches_quadrature(self, config):
        ball = HyperbolicBall(center=_point(0, 2), radius=0.2)
        assert ball.inside_fundamental_domain()
        assert ball_area_quadrature(ball, config) == pytest.approx(ball_area(0.2), rel=1e-8)

    def test_zero_free_ball(self, delta, config):
        ball = HyperbolicBall(center=_point(0, 2), radius=0.2)
        stat = ball_zero_statistic(delta, ball, config)
        assert stat.count == 0
        assert stat.expected == pytest.approx(3 / math.pi * ball_area(0.2))
        assert stat.ratio_error == pytest.approx(-stat.expected)

    def test_ball_outside_F(self, delta, config):
        ball = HyperbolicBall(center=_point("0.45", 1), radius=0.2)
        with pytest.raises(RegionError):
            ball_zero_statistic(delta, ball, config)

    def test_unfolded_ball_counts_multiplicity(self, config):
        # B(i, 0.6) holds rho and rho + 1, each at distance arccosh(2/sqrt 3) ~ 0.549.
        e4 = eisenstein_form(4, 120)
        ball = HyperbolicBall(center=_point(0, 1), radius=0.6)
        assert not ball.inside_fundamental_domain()
        stat = ball_zero_statistic(e4, ball, config, unfolded=True)
        assert stat.count == 2
        assert stat.expected == pytest.approx(4 / 12 * 3 / math.pi * ball_area(0.6))


class TestFamilyBallZeros:
    """Test family means of ball zero counts."""

    BALL = HyperbolicBall(center=HPoint(x=0, y=2), radius=0.5)

    def test_no_cusp_forms(self, config):
        report = family_ball_zero_report(14, self.BALL, config)
        assert report.stats == []
        assert report.mean_count is None
        assert report.mean_abs_ratio_error is None
        assert report.within_factor_three is None
        assert report.expected == pytest.approx(14 / 12 * 3 / math.pi * ball_area(0.5))

    def test_delta_has_no_zeros_in_H(self, delta, config):
        report = family_ball_zero_report(12, self.BALL, config, forms=[delta])
        assert report.unfolded
        assert report.mean_count == 0.0
        assert report.within_factor_three is False

    @pytest.mark.slow
    def test_weight_60_matches_density(self, config):
        report = family_ball_zero_report(60, self.BALL, config, terms=80)
        assert len(report.stats) == 5
        assert report.expected == pytest.approx(3.83, abs=0.01)
        assert report.within_factor_three


class TestBumps:
    """Test the tensor bump and its Laplacian."""

    BUMP = Bump(center=HPoint(x=0.1, y=1.5), half_widths=(0.1, 0.1))

    def test_vanishes_outside_support(self):
        values = bump_value(self.BUMP, np.array([0.25, 0.1]), np.array([1.5, 1.65]))
        assert np.all(values == 0)

    def test_laplacian_matches_finite_differences(self):
        x, y, h = 0.13, 1.47, 1e-4
        phi = lambda a, b: bump_value(self.BUMP, np.array([a]), np.array([b]))[0]  # noqa: E731
        numeric = (
            phi(x + h, y) + phi(x - h, y) + phi(x, y + h) + phi(x, y - h) - 4 * phi(x, y)
        ) / (h * h)
        exact = bump_euclidean_laplacian(self.BUMP, np.array([x]), np.array([y]))[0]
        assert exact == pytest.approx(numeric, rel=1e-4)
        assert bump_laplacian(self.BUMP, np.array([x]), np.array([y]))[0] == pytest.approx(
            y * y * exact
        )


class TestZeroSumIdentity:
    """Test the bump identity on a zero-free region."""

    def test_delta_without_zeros(self, delta, config):
        check = rudnick_check(delta, TestBumps.BUMP, config.model_copy(update={"quad_tol": 1e-6}))
        assert check.zeros_used == 0
        assert check.lhs == 0
        assert check.defect < 1e-7

    def test_support_must_be_interior(self, delta, config):
        bump = Bump(center=HPoint(x=0.45, y=1.5), half_widths=(0.1, 0.1))
        with pytest.raises(RegionError):
            rudnick_check(delta, bump, config)
