# =============================================================================
# tests/test_cli.py
# =============================================================================
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List

from typer.testing import CliRunner

import mflab.cli as cli
from mflab.cli import app
from mflab.models import FundamentalDomain, InsufficientTruncation, RunResult, SiegelDomain

runner = CliRunner()


class DummyLab:
    """Stand-in for Lab that records its config and the last call."""

    instances: List["DummyLab"] = []

    def __init__(self, config: Any = None, **_: Any) -> None:
        self.config = config
        self.calls: List[Dict[str, Any]] = []
        DummyLab.instances.append(self)

    def run(self, command: str, **params: Any) -> RunResult:
        self.calls.append({"command": command, **params})
        return RunResult(
            success=True,
            exit_code=0,
            command=command,
            report={"command": command},
            tables={"rows": [{"a": 1, "b": 2}]},
        )


def _install_dummy(monkeypatch) -> None:
    DummyLab.instances = []
    monkeypatch.setattr(cli, "Lab", DummyLab, raising=True)


def test_basis_json_output() -> None:
    result = runner.invoke(app, ["basis", "--weight", "12", "--terms", "5"])
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["dimension"] == 1
    assert report["basis"] == [["0", "1", "-24", "252", "-1472", "4830"]]


def test_basis_csv_output() -> None:
    result = runner.invoke(app, ["basis", "-k", "12", "-N", "3", "--format", "csv"])
    assert result.exit_code == 0
    assert result.stdout.splitlines() == ["# basis", "n,g1", "0,0", "1,1", "2,-24", "3,252"]


def test_invalid_weight_exits_one() -> None:
    result = runner.invoke(app, ["basis", "-k", "13", "-N", "5"])
    assert result.exit_code == 1
    assert "InvalidWeight" in result.output


def test_invalid_format_exits_two(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(app, ["basis", "-k", "12", "--format", "xml"])
    assert result.exit_code == 2
    assert "ValidationError" in result.output


def test_invalid_region_exits_two(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(app, ["zeros", "-k", "12", "--region", "disk:1,2"])
    assert result.exit_code == 2
    assert "Unknown region spec" in result.output


def test_zeros_defaults(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(app, ["zeros", "-k", "40", "--tol", "1e-8"])
    assert result.exit_code == 0
    (lab,) = DummyLab.instances
    (call,) = lab.calls
    assert call["terms"] == 160
    assert call["region"] == FundamentalDomain()
    assert call["eisenstein"] is False
    assert lab.config.zero_tol == 1e-8


def test_mass_maps_tol_and_grid(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(
        app, ["mass", "-k", "24", "--region", "siegel:2", "--grid", "4x4", "--tol", "1e-6"]
    )
    assert result.exit_code == 0
    (lab,) = DummyLab.instances
    assert lab.config.quad_tol == 1e-6
    assert lab.calls[0]["grid"] == 4
    assert lab.calls[0]["region"] == SiegelDomain(Y=2)
    assert lab.calls[0]["local"] is False
    assert lab.calls[0]["family"] is False


def test_mass_local_and_family_flags(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(app, ["mass", "-k", "24", "--local", "--family"])
    assert result.exit_code == 0
    (lab,) = DummyLab.instances
    (call,) = lab.calls
    assert call["local"] is True
    assert call["family"] is True
    assert call["grid"] is None


def test_bad_grid_exits_two(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(app, ["mass", "-k", "24", "--grid", "3x4"])
    assert result.exit_code == 2


def test_cusp_passes_seed_and_threshold(monkeypatch) -> None:
    _install_dummy(monkeypatch)
    result = runner.invoke(
        app, ["cusp", "-k", "80", "--seed", "7", "--threshold", "0.2", "--threads", "2"]
    )
    assert result.exit_code == 0
    (lab,) = DummyLab.instances
    assert lab.config.seed == 7
    assert lab.config.threads == 2
    assert lab.calls[0]["threshold"] == 0.2
    assert lab.calls[0]["region"] is None


def test_csv_tables_to_file(monkeypatch, tmp_path: Path) -> None:
    _install_dummy(monkeypatch)
    out = tmp_path / "rows.csv"
    result = runner.invoke(app, ["eigen", "-k", "12", "--format", "csv", "--out", str(out)])
    assert result.exit_code == 0
    assert out.read_text() == "a,b\n1,2\n"


def test_config_file(monkeypatch, tmp_path: Path) -> None:
    _install_dummy(monkeypatch)
    config = tmp_path / "lab.yaml"
    config.write_text("prec_bits: 192\nrect_grid: 8\n")
    result = runner.invoke(app, ["eigen", "-k", "12", "--config", str(config), "--prec-bits", "256"])
    assert result.exit_code == 0
    (lab,) = DummyLab.instances
    assert lab.config.prec_bits == 256
    assert lab.config.rect_grid == 8


def test_unknown_config_key(monkeypatch, tmp_path: Path) -> None:
    _install_dummy(monkeypatch)
    config = tmp_path / "lab.yaml"
    config.write_text("precision: 192\n")
    result = runner.invoke(app, ["eigen", "-k", "12", "--config", str(config)])
    assert result.exit_code == 2
    assert "Unknown config keys" in result.output


def test_failed_run_surfaces_error(monkeypatch) -> None:
    class FailingLab(DummyLab):
        def run(self, command: str, **params: Any) -> RunResult:
            return RunResult(
                success=False,
                exit_code=1,
                command=command,
                report={"error": "InsufficientTruncation", "message": "needs 200 terms"},
            )

    monkeypatch.setattr(cli, "Lab", FailingLab, raising=True)
    result = runner.invoke(app, ["eigen", "-k", "12"])
    assert result.exit_code == 1
    assert "InsufficientTruncation" in result.output
    assert result.stdout == ""


def test_raised_library_error(monkeypatch) -> None:
    class RaisingLab(DummyLab):
        def run(self, command: str, **params: Any) -> RunResult:
            raise InsufficientTruncation("needs 200 terms", required=200)

    monkeypatch.setattr(cli, "Lab", RaisingLab, raising=True)
    result = runner.invoke(app, ["eigen", "-k", "12"])
    assert result.exit_code == 1
    assert "needs 200 terms" in result.output


def test_check_failure_keeps_report(monkeypatch) -> None:
    class CheckFailedLab(DummyLab):
        def run(self, command: str, **params: Any) -> RunResult:
            return RunResult(
                success=False,
                exit_code=1,
                command=command,
                report={"checks": []},
                message="Acceptance checks failed",
            )

    monkeypatch.setattr(cli, "Lab", CheckFailedLab, raising=True)
    result = runner.invoke(app, ["verify", "--profile", "quick"])
    assert result.exit_code == 1
    assert json.loads(result.stdout) == {"checks": []}
    assert "Acceptance checks failed" in result.output


def test_exponents_report(tmp_path: Path) -> None:
    out = tmp_path / "exponents.json"
    result = runner.invoke(app, ["exponents", "--out", str(out)])
    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert abs(report["delta"] - 0.0011523736) < 1e-9
    assert report["printable"]["beta"].startswith("0.585786")


def test_version_flag() -> None:
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert result.stdout.startswith("mflab: ")
    assert "mpmath:" in result.stdout


def test_no_command_prints_help() -> None:
    result = runner.invoke(app, [])
    assert result.exit_code == 0
    assert "basis" in result.stdout
