"""Shared fixtures: eigenforms are expensive, so they live for the whole session."""

from __future__ import annotations

import os
import tempfile

# The module-level logger reads its directory at import time.
os.environ.setdefault("MFLAB_LOG_DIR", tempfile.mkdtemp(prefix="mflab_test_logs_"))

import pytest  # noqa: E402

from mflab.config import LabConfig  # noqa: E402
from mflab.eigenforms import eigenbasis, eisenstein_form  # noqa: E402
from mflab.evaluate import normalize  # noqa: E402


@pytest.fixture(scope="session")
def config() -> LabConfig:
    """Default numerics on a single worker."""
    return LabConfig(threads=1)


@pytest.fixture(scope="session")
def delta():
    """The discriminant as a normalized eigenform, N = 120."""
    return eigenbasis(12, 120)[0]


@pytest.fixture(scope="session")
def weight24():
    """Both eigenforms of weight 24, N = 120."""
    return eigenbasis(24, 120)


@pytest.fixture(scope="session")
def delta_normalized(delta, config):
    return normalize(delta, config)


@pytest.fixture(scope="session")
def e4():
    return eisenstein_form(4, 64)
