"""Test reduction, series evaluation and the Petersson norm."""

from __future__ import annotations

import math
from unittest.mock import patch

import mpmath
import numpy as np
import pytest

from mflab.eigenforms import l1_sym2
from mflab.evaluate import (
    DensityEvaluator,
    eval_f,
    eval_logF,
    in_fundamental_domain,
    petersson_norm,
    reduce_points,
    reduce_to_F,
    strip_integral,
    tail_majorant,
    truncation_bound,
    with_l1sym2,
)
from mflab.models import HPoint, Mobius, NormalizationError, RegionError

# <Delta, Delta> over F with dx dy / y^2.
DELTA_NORM = mpmath.mpf("1.035362056804320922e-6")


def _point(x, y) -> HPoint:
    with mpmath.workprec(160):
        return HPoint(x=mpmath.mpf(x), y=mpmath.mpf(y))


def _delta_at_i() -> mpmath.mpf:
    """Delta(i) = Gamma(1/4)^24 / (2^24 pi^18)."""
    return mpmath.gamma(mpmath.mpf(1) / 4) ** 24 / (2**24 * mpmath.pi**18)


class TestReduction:
    """Test reduction into the fundamental domain."""

    def test_point_lands_in_F(self):
        z = _point("0.3", "0.1")
        with mpmath.workprec(128):
            reduced, gamma = reduce_to_F(z)
            assert in_fundamental_domain(float(reduced.x), float(reduced.y), slack=1e-12)
            image = gamma.apply(z)
            assert abs(image.z - reduced.z) < mpmath.mpf(10) ** -30

    def test_point_already_in_F(self):
        z = _point("0.1", "2")
        with mpmath.workprec(128):
            reduced, gamma = reduce_to_F(z)
        assert gamma == Mobius.identity()
        assert abs(reduced.x - z.x) < 1e-30
        assert reduced.y == z.y

    def test_half_open_boundary(self):
        """Re z = 1/2 is translated to -1/2."""
        with mpmath.workprec(128):
            reduced, _ = reduce_to_F(_point("0.5", "3"))
            assert reduced.x == mpmath.mpf(-0.5)

    def test_vectorized_reduction(self):
        x, y = reduce_points(np.array([0.3, 2.7, -0.1]), np.array([0.1, 0.05, 0.9]))
        assert np.all(np.abs(x) <= 0.5)
        assert np.all(x * x + y * y >= 1 - 1e-12)


class TestTailBounds:
    """Test the truncation majorants."""

    def test_bound_decreases_with_N(self):
        y = mpmath.mpf(1)
        assert truncation_bound(12, 60, y) > truncation_bound(12, 120, y)

    def test_bound_is_tiny_in_F(self):
        with mpmath.workprec(128):
            assert truncation_bound(12, 120, mpmath.sqrt(3) / 2) < mpmath.mpf(10) ** -200

    def test_infinite_when_terms_still_grow(self):
        assert tail_majorant(mpmath.mpf(2), 6, 12, 1, mpmath.mpf("0.01")) == mpmath.inf


class TestEvaluation:
    """Test high-precision evaluation of y^{k/2} f(z)."""

    def test_delta_at_i(self, delta):
        with mpmath.workprec(128):
            expected = _delta_at_i()
            value = eval_f(delta, _point(0, 1))
            assert abs(value.value - expected) < expected * mpmath.mpf(10) ** -15
            log_value = eval_logF(delta, _point(0, 1))
            assert abs(log_value.log_mag - mpmath.log(expected)) < mpmath.mpf(10) ** -15
            assert not log_value.indeterminate

    def test_invariance_under_inversion(self, delta):
        z = _point("0.1", "0.5")
        with mpmath.workprec(128):
            image = Mobius(a=0, b=-1, c=1, d=0).apply(z)
            first = eval_logF(delta, z)
            second = eval_logF(delta, image)
            assert abs(first.log_mag - second.log_mag) < mpmath.mpf(10) ** -15

    def test_e4_vanishes_at_rho(self, e4):
        with mpmath.workprec(160):
            rho = HPoint(x=mpmath.mpf(-0.5), y=mpmath.sqrt(3) / 2)
        with mpmath.workprec(128):
            value = eval_f(e4, rho, with_derivative=True)
            assert abs(value.value) < mpmath.mpf(10) ** -15
            assert value.derivative is not None

    def test_normalized_requires_constant(self, delta):
        with pytest.raises(NormalizationError):
            eval_logF(delta, _point(0, 1), normalized=True)

    def test_pinned_precision_is_kept(self, delta):
        """Evaluation under the working precision never switches the global context."""
        z = _point("0.1", "1.2")
        bits = delta.precision_bits + 32
        with mpmath.workprec(bits):
            with patch("mflab.utils.mpmath.workprec", side_effect=AssertionError):
                eval_f(delta, z, with_derivative=True)
                eval_logF(delta, z)
            assert mpmath.mp.prec == bits

    def test_log_value_rounded_to_form_precision(self, delta):
        with mpmath.workprec(delta.precision_bits + 64):
            value = eval_logF(delta, _point("0.1", "1.2"))
        assert value.log_mag._mpf_[3] <= delta.precision_bits
        assert value.phase._mpf_[3] <= delta.precision_bits


class TestDensityEvaluator:
    """Test the float64 path against the high-precision one."""

    def test_agrees_with_high_precision(self, delta):
        evaluator = DensityEvaluator(delta)
        points = [("0.1", "0.9"), ("-0.4", "1.5"), ("0.25", "0.3"), ("0", "3")]
        xs = np.array([float(x) for x, _ in points])
        ys = np.array([float(y) for _, y in points])
        fast = evaluator.log_abs_F(xs, ys)
        for (x, y), value in zip(points, fast):
            exact = eval_logF(delta, _point(x, y))
            assert value == pytest.approx(float(exact.log_mag), abs=1e-8)

    def test_density_is_twice_log(self, delta):
        evaluator = DensityEvaluator(delta)
        x, y = np.array([0.2]), np.array([1.1])
        assert evaluator.log_density(x, y)[0] == pytest.approx(2 * evaluator.log_abs_F(x, y)[0])


class TestPeterssonNorm:
    """Test the strip integral, quadrature and the L-function route."""

    def test_strip_is_additive(self, delta):
        with mpmath.workprec(128):
            whole = strip_integral(delta, 1.0)
            parts = strip_integral(delta, 1.0, 2.0) + strip_integral(delta, 2.0)
            assert abs(whole - parts) < whole * mpmath.mpf(10) ** -25

    def test_strip_requires_cusp_form(self, e4):
        with pytest.raises(RegionError):
            strip_integral(e4, 1.0)

    def test_delta_norm(self, delta, config):
        norm = petersson_norm(delta, config)
        assert float(norm.norm_quadrature) == pytest.approx(float(DELTA_NORM), rel=1e-6)
        assert float(norm.strip_part + norm.bulk_part) == pytest.approx(float(norm.norm_quadrature))
        assert float(norm.relative_gap) < 0.1

    def test_normalize(self, delta_normalized):
        expected = 1 / math.sqrt(float(DELTA_NORM))
        assert float(delta_normalized.norm_const) == pytest.approx(expected, rel=1e-6)
        assert delta_normalized.normalized

    def test_attached_l1sym2_is_reused(self, delta, config):
        f = with_l1sym2(delta, 113)
        assert f.l1sym2 == l1_sym2(delta, 113)
        with patch("mflab.evaluate.l1_sym2", side_effect=AssertionError):
            norm = petersson_norm(f, config, prime_cutoff=113)
        assert float(norm.relative_gap) < 0.1
