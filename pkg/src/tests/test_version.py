# =============================================================================
# tests/test_version.py
# =============================================================================
from __future__ import annotations

import re
from importlib.metadata import PackageNotFoundError

import pytest

import mflab.version as version
from mflab.version import (
    NUMERIC_PACKAGES,
    __version__,
    detect_mpmath_backend,
    get_mflab_version,
    get_version_info,
)

SEMVER_RE = re.compile(r"^\d+\.\d+\.\d+(?:[-+][A-Za-z0-9.\-_]+)?$")


def _missing(name: str) -> str:
    raise PackageNotFoundError(name)


def test_library_version_constant_format():
    assert isinstance(__version__, str)
    assert SEMVER_RE.match(__version__) is not None


def test_get_mflab_version_falls_back_to_constant(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setattr(version, "pkg_version", _missing)
    assert get_mflab_version() == __version__


def test_package_version_missing(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setattr(version, "pkg_version", _missing)
    assert version._package_version("gmpy2") is None


def test_package_version_present():
    assert version._package_version("mpmath") is not None


def test_mpmath_backend():
    assert detect_mpmath_backend() in {"gmpy", "python", "sage"}


def test_version_info_aggregation(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setattr("mflab.version.get_mflab_version", lambda: "0.1.0")
    monkeypatch.setattr("mflab.version._package_version", lambda name: f"{name}-1.0")
    monkeypatch.setattr("mflab.version.detect_mpmath_backend", lambda: "gmpy")

    info = get_version_info()
    assert list(info) == ["mflab", *NUMERIC_PACKAGES, "mpmath_backend"]
    assert info["mflab"] == "0.1.0"
    assert info["numpy"] == "numpy-1.0"
    assert info["mpmath_backend"] == "gmpy"
