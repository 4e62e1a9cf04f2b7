# src/tests/test_core.py
"""Test core mflab orchestration."""

from __future__ import annotations

import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from mflab.config import LabConfig
from mflab.core import Lab
from mflab.fs import cache_path, load_cache
from mflab.massmap import CUSP_HEIGHTS
from mflab.models import (
    FamilyBallReport,
    FundamentalDomain,
    HPoint,
    HyperbolicBall,
    Rectangle,
    SiegelDomain,
    ValidationError,
)


def _lab(temp_dir: str, **overrides) -> Lab:
    return Lab(LabConfig(threads=1, cache_dir=Path(temp_dir), **overrides))


class TestLabRun:
    """Test the run wrapper and its error mapping."""

    def test_unknown_command(self):
        """Test that unknown commands are rejected before dispatch."""
        with tempfile.TemporaryDirectory() as temp_dir:
            with pytest.raises(ValidationError, match="Unknown command"):
                _lab(temp_dir).run("bogus")

    def test_library_error_becomes_exit_one(self):
        """Test that an odd weight yields a failed result, not an exception."""
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run("basis", weight=13, terms=10)
            assert not result.success
            assert result.exit_code == 1
            assert result.report["error"] == "InvalidWeight"
            assert result.message.startswith("InvalidWeight")

    def test_validation_error_becomes_exit_two(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run(
                "cusp", weight=12, terms=120, region=FundamentalDomain()
            )
            assert result.exit_code == 2
            assert result.report["error"] == "ValidationError"

    def test_duration_outside_report(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run("basis", weight=12, terms=10)
            assert result.duration_s >= 0
            assert "duration_s" not in result.report


class TestBasisAndEigen:
    """Test the exact basis and the cached eigenbasis."""

    def test_basis_table(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run("basis", weight=24, terms=10)
            assert result.success
            assert result.report["dimension"] == 2
            rows = result.tables["basis"]
            assert len(rows) == 11
            assert rows[1]["g1"] == "1" and rows[1]["g2"] == "0"
            assert rows[2]["g1"] == "0" and rows[2]["g2"] == "1"

    def test_eigen_writes_and_reuses_cache(self):
        """Test that a second lab decodes the stored eigenforms instead of recomputing."""
        with tempfile.TemporaryDirectory() as temp_dir:
            first = _lab(temp_dir).run("eigen", weight=12, terms=120)
            assert first.success
            path = cache_path(Path(temp_dir), 12, 120, 128)
            assert first.written_files == [str(path)]
            assert load_cache(path) is not None

            with patch("mflab.core.eigenbasis", side_effect=AssertionError("recomputed")):
                second = _lab(temp_dir).run("eigen", weight=12, terms=120)
            assert second.report == first.report

            (form,) = first.report["forms"]
            assert form["label"] == "12.1"
            assert form["a"][:4] == ["0.0", "1.0", "-24.0", "252.0"]

    def test_no_cache(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            lab = Lab(LabConfig(threads=1, cache_dir=Path(temp_dir)), use_cache=False)
            result = lab.run("eigen", weight=12, terms=120)
            assert result.written_files == []
            assert list(Path(temp_dir).iterdir()) == []

    def test_family_of_empty_weight(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            assert _lab(temp_dir).family(14, 60) == []


class TestZeros:
    """Test the zeros subcommand."""

    def test_valence_for_delta(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run(
                "zeros", weight=12, terms=120, region=FundamentalDomain()
            )
            assert result.success
            (summary,) = result.report["summary"]
            assert summary["weighted_total"] == "1"
            assert summary["expected"] == "1"
            assert summary["cusp_order"] == 1
            assert result.tables["zeros"] == []

    def test_eisenstein_zero_at_rho(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run(
                "zeros", weight=4, terms=64, region=FundamentalDomain(), eisenstein=True
            )
            assert result.success
            (row,) = result.tables["zeros"]
            assert row["form"] == "E4"
            assert row["elliptic_weight"] == "1/3"
            assert result.report["summary"][0]["expected"] == "1/3"

    def test_rectangle_and_ball(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            lab = _lab(temp_dir)
            box = lab.run(
                "zeros", weight=12, terms=120, region=Rectangle(x1=-0.4, x2=0.4, y1=1.0, y2=2.0)
            )
            assert box.success
            assert box.report["summary"][0]["interior_total"] == "0"
            ball = lab.run(
                "zeros",
                weight=12,
                terms=120,
                region=HyperbolicBall(center=HPoint(x=0, y=2), radius=0.2),
            )
            assert ball.report["summary"][0]["count"] == "0"
            assert "zeros" not in ball.tables
            assert ball.report["unfolded"] is False
            assert ball.report["mean_count"] == 0.0

    def test_ball_leaving_F_is_unfolded(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run(
                "zeros",
                weight=4,
                terms=120,
                region=HyperbolicBall(center=HPoint(x=0, y=1), radius=0.6),
                eisenstein=True,
            )
            assert result.success
            assert result.report["unfolded"] is True
            (row,) = result.tables["summary"]
            assert row["form"] == "E4"
            assert row["count"] == "2"


class TestMass:
    """Test the mass subcommand and the normalization cache."""

    def test_siegel_mass_stores_norm(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run("mass", weight=12, terms=120, region=SiegelDomain(Y=2))
            assert result.success
            (row,) = result.tables["mass"]
            assert row["method"] == "strip"
            assert 0 < row["mass"] < 1
            cache = load_cache(cache_path(Path(temp_dir), 12, 120, 128))
            assert cache.eigenforms[0].norm_const is not None


    def test_local_tables(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run(
                "mass", weight=24, terms=120, region=SiegelDomain(Y=2), local=True
            )
            assert result.success
            assert len(result.tables["sup_norm"]) == 2
            for row in result.tables["sup_norm"]:
                assert row["ratio_quarter"] == pytest.approx(row["max_value"] / 24**0.25)
            for mass_row in result.tables["mass"]:
                cusp = [r for r in result.tables["cusp"] if r["form"] == mass_row["form"]]
                assert [r["Y"] for r in cusp] == list(CUSP_HEIGHTS)
                assert all(b["mass"] < a["mass"] <= 1 for a, b in zip(cusp, cusp[1:]))
                at_two = next(r for r in cusp if r["Y"] == 2.0)
                assert at_two["mass"] == pytest.approx(mass_row["mass"])
            assert all(row["precondition_ok"] for row in result.tables["mass_hypothesis"])
            assert "family_balls" not in result.tables

    def test_family_balls_table(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            family = FamilyBallReport(
                weight=12, balls=84, per_form_sup=[0.1], family_mean_square=0.01, reference=12 ** (-1 / 21)
            )
            with patch("mflab.core.family_ball_discrepancy", return_value=family) as mock_family:
                result = _lab(temp_dir).run(
                    "mass", weight=12, terms=120, region=SiegelDomain(Y=2), family=True
                )
            assert result.success
            (form,) = mock_family.call_args.kwargs["forms"]
            assert form.normalized
            (row,) = result.tables["family_balls"]
            assert row["forms"] == 1
            assert row["family_mean_square"] == 0.01
            assert result.report["family_balls"]["balls"] == 84


class TestCusp:
    """Test the cusp subcommand on a small weight."""

    def test_delta_report(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run("cusp", weight=12, terms=120)
            assert result.success
            assert result.report["Y"] == 1.0
            assert not result.report["detectors_asserted"]
            assert [row["l"] for row in result.tables["approximations"]] == [1, 2]
            assert {row["kind"] for row in result.tables["counts"]} == {"re0", "rehalf", "region"}
            assert all(row["count"] == 0 for row in result.tables["counts"])
            kinds = [row["statistic"] for row in result.tables["statistics"]]
            assert kinds == ["linear", "square", "dyadic", "g"]


class TestExponents:
    """Test the exponents subcommand."""

    def test_report(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            result = _lab(temp_dir).run("exponents")
            assert result.success
            assert result.report["kappa"] == pytest.approx(0.008066615, abs=1e-9)
            assert result.report["eta2"] == pytest.approx(result.report["delta"])
            assert result.report["exact_objective"]["upper_branch_below_twelfth"] is False
            assert {row["name"] for row in result.tables["exponents"]} >= {"beta", "alpha", "delta"}
