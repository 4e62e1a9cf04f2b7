# Main interaction entrypoint for the mflab library
# src/mflab/__init__.py
"""High-precision laboratory for zeros and mass of Hecke cusp forms on SL2(Z)."""

from __future__ import annotations

from mflab.config import LabConfig
from mflab.core import Lab
from mflab.models import HeckeEigenform, MflabError, RunResult

__all__ = ["Lab", "LabConfig", "HeckeEigenform", "MflabError", "RunResult"]
