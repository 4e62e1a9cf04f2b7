# =============================================================================
# src/mflab/version.py
# =============================================================================
from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version as pkg_version
from typing import Optional

import mpmath.libmp

from mflab.logging import logger

# Library version (bumped via release workflow)
__version__ = "0.1.0"

# Packages whose versions affect numerical output.
NUMERIC_PACKAGES = ("mpmath", "gmpy2", "numpy", "sympy")


def get_mflab_version() -> str:
    """Return the installed mflab library version."""
    try:
        return pkg_version("mflab")
    except PackageNotFoundError:
        return __version__


def _package_version(name: str) -> Optional[str]:
    try:
        return pkg_version(name)
    except PackageNotFoundError:
        logger.debug("Package metadata not found", package=name)
        return None


def detect_mpmath_backend() -> str:
    """'gmpy' when mpmath runs on gmpy2 integers, otherwise 'python'."""
    return mpmath.libmp.BACKEND


def get_version_info() -> dict[str, str | None]:
    """Collect the package version, the numeric stack and the mpmath backend."""
    info: dict[str, str | None] = {"mflab": get_mflab_version()}
    for name in NUMERIC_PACKAGES:
        info[name] = _package_version(name)
    info["mpmath_backend"] = detect_mpmath_backend()
    return info
