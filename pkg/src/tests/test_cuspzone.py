"""Test the cusp-zone approximations, detectors and interval statistics."""

from __future__ import annotations

import math
from unittest.mock import patch

import pytest

from mflab.cuspzone import (
    cusp_approx_error,
    cusp_region_count,
    dyadic_mean_square,
    g_function,
    g_interval_stats,
    geodesic_zero_count,
    l1_cutoff,
    lemma_window,
    ordinate,
    scan_grid,
    short_interval_stats,
    sign_changes,
)
from mflab.evaluate import with_l1sym2
from mflab.models import InsufficientTruncation, RangeError, RegionError, WindowError


class TestWindow:
    """Test the one-term window and its ordinates."""

    def test_window_bounds(self, config):
        low, high = lemma_window(100, config)
        assert low == 0.0
        assert high == pytest.approx(math.sqrt(100 / math.log(100)))

    def test_ordinate(self):
        assert ordinate(12, 1) == pytest.approx(11 / (4 * math.pi))
        assert ordinate(12, 2) == pytest.approx(ordinate(12, 1) / 2)

    def test_one_term_approximation(self, delta, config):
        """At y_1 only the tau(2) term competes with the leading one."""
        result = cusp_approx_error(delta, 1, 0.0, config)
        assert result.in_window
        assert 0.05 < float(result.error) < 0.15

    def test_outside_window_is_flagged(self, delta, config):
        result = cusp_approx_error(delta, 5, 0.25, config)
        assert not result.in_window
        assert float(result.error) >= 0

    def test_strict_rejects_outside_window(self, delta, config):
        with pytest.raises(WindowError):
            cusp_approx_error(delta, 5, 0.25, config, strict=True)
        assert cusp_approx_error(delta, 1, 0.0, config, strict=True).in_window


class TestSignChanges:
    """Test threshold sign-change pairs of lambda."""

    def test_delta_pair(self, delta, config):
        pairs = sign_changes(delta, (2, 10), "all", 0.01, config)
        assert (pairs[0].l1, pairs[0].l2) == (2, 3)
        for first, second in zip(pairs, pairs[1:]):
            assert first.l2 < second.l1

    def test_threshold_dominates(self, delta, config):
        assert sign_changes(delta, (2, 10), "all", 10.0, config) == []

    def test_odd_parity(self, delta, config):
        pairs = sign_changes(delta, (3, 25), "odd", 0.1, config)
        assert pairs
        assert (pairs[0].l1, pairs[0].l2) == (5, 7)
        for pair in pairs:
            assert pair.l1 % 2 == 1 and pair.l2 % 2 == 1
            assert pair.lambda_l1 * pair.lambda_l2 < 0
            assert min(abs(pair.lambda_l1), abs(pair.lambda_l2)) > 0.1


class TestGeodesics:
    """Test scans along Re z = 0 and Re z = -1/2."""

    def test_scan_grid(self):
        grid = scan_grid(12, 0.5, 2.0)
        assert len(grid) == 9
        assert grid[0] == 0.5 and grid[-1] == 2.0
        assert grid == sorted(grid)

    @pytest.mark.parametrize("line", ["re0", "rehalf"])
    def test_delta_has_no_line_zeros(self, delta, config, line):
        count = geodesic_zero_count(delta, 0.9, line, config, y_top=3.0)
        assert count.count == 0
        assert count.skipped == []

    def test_above_no_zero_height(self, delta, config):
        count = geodesic_zero_count(delta, 5.0, "re0", config)
        assert count.count == 0
        assert count.ordinates == []

    def test_region_count(self, delta, config):
        assert cusp_region_count(delta, 1.0, config).count == 0

    def test_region_count_needs_Y(self, delta, config):
        with pytest.raises(RegionError):
            cusp_region_count(delta, 0.5, config)


class TestIntervalStatistics:
    """Test the sampled short-interval and dyadic statistics."""

    def test_range_validation(self, delta, config):
        with pytest.raises(RangeError):
            short_interval_stats(delta, 20, 0, config)
        with pytest.raises(RangeError):
            short_interval_stats(delta, 20, 30, config)

    def test_needs_terms(self, delta, config):
        with pytest.raises(InsufficientTruncation):
            short_interval_stats(delta, 100, 4, config)

    def test_seeded_samples_repeat(self, delta, config):
        first = short_interval_stats(delta, 20, 4, config, samples=50, seed=3)
        second = short_interval_stats(delta, 20, 4, config, samples=50, seed=3)
        other = short_interval_stats(delta, 20, 4, config, samples=50, seed=4)
        assert first == second
        assert first.linear.mean != other.linear.mean
        assert first.linear.asserted
        assert first.square.main_term > 0

    def test_attached_l1sym2_is_reused(self, delta, config):
        plain = short_interval_stats(delta, 20, 4, config, samples=50, seed=3)
        plain_dyadic = dyadic_mean_square(delta, 30, config)
        f = with_l1sym2(delta, l1_cutoff(delta, config))
        with patch("mflab.cuspzone.l1_sym2", side_effect=AssertionError):
            attached = short_interval_stats(f, 20, 4, config, samples=50, seed=3)
            attached_dyadic = dyadic_mean_square(f, 30, config)
        assert attached == plain
        assert attached_dyadic == plain_dyadic

    def test_dyadic_mean_square(self, delta, config):
        stat = dyadic_mean_square(delta, 30, config)
        assert stat.value > 0
        assert stat.ratio == pytest.approx(stat.value / stat.main_term)
        with pytest.raises(InsufficientTruncation):
            dyadic_mean_square(delta, 61, config)


class TestGFunction:
    """Test the multiplicative sign function g."""

    def test_values_for_delta(self, delta):
        g = g_function(delta, 0.5, 45)
        assert g[0] == 0 and g[1] == 1
        assert g[2] == 0 and g[10] == 0
        assert g[3] == 1 and g[5] == 1 and g[15] == 1
        assert g[9] == -1 and g[45] == -1

    def test_interval_stats(self, delta, config):
        stat = g_interval_stats(delta, 0.5, 20, 5, config, samples=40, seed=1)
        assert len(stat.short_means_g) == 40
        assert 0 <= stat.violation_fraction <= 1
        assert stat.gap_threshold == pytest.approx(math.log(5) ** (-1 / 200))

    def test_short_length(self, delta, config):
        with pytest.raises(RangeError):
            g_interval_stats(delta, 0.5, 20, 1, config)
