"""Test region specs, grid specs and configuration loading."""

import tempfile
from pathlib import Path

import pytest

from mflab.models import (
    FundamentalDomain,
    HyperbolicBall,
    Rectangle,
    SiegelDomain,
    ValidationError,
)
from mflab.parsing import (
    load_config_file,
    parse_grid_spec,
    parse_region_spec,
    resolve_config,
)


class TestRegionSpecs:
    """Test the region mini-grammar."""

    def test_each_kind(self):
        assert parse_region_spec("fundamental") == FundamentalDomain()
        assert parse_region_spec("siegel:2") == SiegelDomain(Y=2)
        assert parse_region_spec("rect:-0.5,0.5,1,2") == Rectangle(x1=-0.5, x2=0.5, y1=1, y2=2)
        ball = parse_region_spec("ball:0,2,0.3")
        assert isinstance(ball, HyperbolicBall)
        assert ball.center.y == 2 and ball.radius == 0.3

    def test_infinite_height(self):
        region = parse_region_spec(" RECT:-0.5,0.5,1,inf ")
        assert region.y2 == float("inf")

    def test_wrong_arity(self):
        with pytest.raises(ValidationError, match="needs 4 numbers"):
            parse_region_spec("rect:0,1,2")

    def test_bad_number(self):
        with pytest.raises(ValidationError, match="Invalid number"):
            parse_region_spec("siegel:high")

    def test_invalid_geometry(self):
        with pytest.raises(ValidationError, match="Invalid region"):
            parse_region_spec("siegel:0.5")
        with pytest.raises(ValidationError, match="Invalid region"):
            parse_region_spec("ball:0,-1,0.2")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError, match="Unknown region spec"):
            parse_region_spec("disk:0,1")
        with pytest.raises(ValidationError, match="Unknown region spec"):
            parse_region_spec("fundamental:1")


class TestGridSpecs:
    """Test MxM grid specs."""

    @pytest.mark.parametrize("spec,expected", [("16x16", 16), ("4", 4), ("8X8", 8)])
    def test_valid(self, spec, expected):
        assert parse_grid_spec(spec) == expected

    @pytest.mark.parametrize("spec", ["3x4", "axb", "0x0", "2x2x2"])
    def test_invalid(self, spec):
        with pytest.raises(ValidationError):
            parse_grid_spec(spec)


class TestConfigFile:
    """Test YAML configuration loading."""

    def test_load_valid_config(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "lab.yaml"
            path.write_text("prec_bits: 192\nquad_tol: 1.0e-10\n")
            assert load_config_file(path) == {"prec_bits": 192, "quad_tol": 1e-10}

    def test_empty_config(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "lab.yaml"
            path.write_text("")
            assert load_config_file(path) == {}

    def test_missing_file(self):
        with pytest.raises(ValidationError, match="not found"):
            load_config_file(Path("/nonexistent/lab.yaml"))

    def test_invalid_yaml(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "lab.yaml"
            path.write_text("prec_bits: [unclosed\n")
            with pytest.raises(ValidationError, match="Invalid YAML"):
                load_config_file(path)

    def test_not_a_mapping(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "lab.yaml"
            path.write_text("- 1\n- 2\n")
            with pytest.raises(ValidationError, match="YAML object"):
                load_config_file(path)

    def test_unknown_keys(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "lab.yaml"
            path.write_text("precision: 192\nseed: 3\n")
            with pytest.raises(ValidationError, match="Unknown config keys: precision"):
                load_config_file(path)


class TestResolveConfig:
    """Test the defaults < file < environment < flags precedence."""

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("MFLAB_PREC_BITS", raising=False)
        config = resolve_config(threads=1)
        assert config.prec_bits == 128
        assert config.window_c2 == 0.0 and config.window_c3 == 1.0

    def test_precedence(self, monkeypatch):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "lab.yaml"
            path.write_text("prec_bits: 160\nthreads: 2\nseed: 5\n")
            monkeypatch.setenv("MFLAB_PREC_BITS", "192")
            monkeypatch.setenv("MFLAB_THREADS", "3")
            config = resolve_config(path, threads=4, seed=None)
            assert config.prec_bits == 192
            assert config.threads == 4
            assert config.seed == 5

    def test_cache_dir_from_environment(self, monkeypatch):
        with tempfile.TemporaryDirectory() as temp_dir:
            monkeypatch.setenv("MFLAB_CACHE_DIR", temp_dir)
            assert resolve_config(threads=1).cache_dir == Path(temp_dir)

    def test_invalid_values(self, monkeypatch):
        monkeypatch.delenv("MFLAB_PREC_BITS", raising=False)
        with pytest.raises(ValidationError, match="Invalid configuration"):
            resolve_config(prec_bits=32)
        with pytest.raises(ValidationError, match="Invalid configuration"):
            resolve_config(window_c3=0.0)
