"""Numerical configuration for mflab runs."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from mflab.utils import default_threads

ENV_PREFIX = "MFLAB_"

# Environment variables recognized as overrides, mapped to LabConfig fields.
ENV_FIELDS = {
    "MFLAB_PREC_BITS": "prec_bits",
    "MFLAB_THREADS": "threads",
    "MFLAB_CACHE_DIR": "cache_dir",
}


class LabConfig(BaseModel):
    """
    Every numerical default of the lab.

    Instances are immutable; derive variants with `model_copy(update=...)`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    prec_bits: int = Field(default=128, description="Mantissa bits for mpmath work")
    quad_tol: float = Field(default=1e-8, description="Relative quadrature tolerance")
    quad_nodes: int = Field(default=16, description="Gauss-Legendre nodes per axis")
    quad_max_depth: int = Field(default=12, description="Max dyadic subdivision depth")
    zero_tol: float = Field(default=1e-10, description="Zero localization tolerance")
    newton_radius: float = Field(
        default=1e-3, description="Box diameter at which Newton takes over"
    )
    newton_max_steps: int = Field(default=50)
    snap_factor: float = Field(
        default=10.0, description="Snap to i or rho within snap_factor * zero_tol"
    )
    perturb_retries: int = Field(default=5)
    window_c2: float = Field(default=0.0, description="Lower one-term window constant")
    window_c3: float = Field(default=1.0, description="Upper one-term window constant")
    interval_samples: int = Field(default=1000)
    seed: int = Field(default=1)
    rect_grid: int = Field(default=16, description="Rectangle lattice size m")
    rect_y_cap: float = Field(default=4.0)
    threads: int = Field(default_factory=default_threads)
    cache_dir: Path = Field(default=Path("./.mflab_cache"))
    l1_prime_cutoff: int = Field(default=10000)
    sample_budget: int = Field(
        default=200000, description="Max boundary samples per zero search"
    )

    @field_validator("prec_bits")
    @classmethod
    def validate_prec(cls, v: int) -> int:
        if v < 53:
            raise ValueError(f"prec_bits must be at least 53, got {v}")
        return v

    @field_validator("quad_tol", "zero_tol", "newton_radius")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("Tolerances must be positive")
        return v

    @field_validator("threads", "quad_nodes", "rect_grid", "interval_samples")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Counts must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_window(self) -> "LabConfig":
        if self.window_c2 < 0 or self.window_c3 <= 0:
            raise ValueError("Window constants must satisfy c2 >= 0 and c3 > 0")
        if self.rect_y_cap <= 1:
            raise ValueError("rect_y_cap must exceed 1")
        return self


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Collect MFLAB_* overrides from the environment."""
    environ = os.environ if environ is None else environ
    return {
        field: environ[name] for name, field in ENV_FIELDS.items() if environ.get(name)
    }


def build_config(
    file_values: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    **overrides: Any,
) -> LabConfig:
    """
    Merge defaults < file values < environment < explicit overrides.

    Overrides whose value is None are ignored so CLI flags can pass through.
    """
    merged: Dict[str, Any] = {}
    merged.update(file_values or {})
    merged.update(env_overrides(environ))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return LabConfig(**merged)
