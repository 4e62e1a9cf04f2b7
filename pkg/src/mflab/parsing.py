"""Parsing of region specs, grid specs and YAML configuration files."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from mflab.config import LabConfig, build_config
from mflab.logging import logger
from mflab.models import (
    FundamentalDomain,
    HPoint,
    HyperbolicBall,
    Rectangle,
    Region,
    SiegelDomain,
    ValidationError,
)

REGION_GRAMMAR = "rect:x1,x2,y1,y2 | ball:x,y,r | siegel:Y | fundamental"


def _numbers(body: str, count: int, kind: str) -> list[float]:
    parts = [p.strip() for p in body.split(",")]
    if len(parts) != count:
        raise ValidationError(
            f"Region '{kind}' needs {count} numbers, got {len(parts)} ({REGION_GRAMMAR})"
        )
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise ValidationError(f"Invalid number in region '{kind}': {e}") from e


def parse_region_spec(spec: str) -> Region:
    """
    Parse the region mini-grammar.

    Args:
        spec: One of `rect:x1,x2,y1,y2`, `ball:x,y,r`, `siegel:Y`, `fundamental`
              (`inf` is accepted for y2)

    Returns:
        The matching region model

    Raises:
        ValidationError: On unknown kinds, wrong arity or invalid geometry
    """
    logger.debug("Parsing region spec", spec=spec)
    text = spec.strip().lower()
    kind, _, body = text.partition(":")

    try:
        if kind == "fundamental" and not body:
            return FundamentalDomain()
        if kind == "rect":
            x1, x2, y1, y2 = _numbers(body, 4, kind)
            return Rectangle(x1=x1, x2=x2, y1=y1, y2=y2)
        if kind == "ball":
            x, y, r = _numbers(body, 3, kind)
            return HyperbolicBall(center=HPoint(x=x, y=y), radius=r)
        if kind == "siegel":
            (Y,) = _numbers(body, 1, kind)
            return SiegelDomain(Y=Y)
    except ValueError as e:
        raise ValidationError(f"Invalid region '{spec}': {e}") from e

    raise ValidationError(f"Unknown region spec '{spec}' (expected {REGION_GRAMMAR})")


def parse_grid_spec(spec: str) -> int:
    """Parse an `MxM` grid spec (or a bare `M`) into the lattice size M."""
    text = spec.strip().lower()
    parts = text.split("x")
    try:
        sizes = [int(p) for p in parts]
    except ValueError as e:
        raise ValidationError(f"Invalid grid spec '{spec}': {e}") from e
    if len(sizes) not in (1, 2) or (len(sizes) == 2 and sizes[0] != sizes[1]):
        raise ValidationError(f"Grid spec must be square MxM, got '{spec}'")
    if sizes[0] < 1:
        raise ValidationError(f"Grid size must be positive, got '{spec}'")
    return sizes[0]


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a YAML configuration file into a plain mapping.

    Raises:
        ValidationError: On missing files, invalid YAML or unknown keys
    """
    logger.debug("Loading config file", path=str(path))

    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ValidationError(f"Config file not found: {path}")
    except yaml.YAMLError as e:
        raise ValidationError(f"Invalid YAML in config file: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError("Config file must contain a YAML object")

    unknown = sorted(set(data) - set(LabConfig.model_fields))
    if unknown:
        raise ValidationError(f"Unknown config keys: {', '.join(unknown)}")
    return data


def resolve_config(config_path: Optional[Path] = None, **overrides: Any) -> LabConfig:
    """Build a LabConfig from an optional YAML file, the environment and overrides."""
    file_values = load_config_file(config_path) if config_path else None
    try:
        config = build_config(file_values, **overrides)
    except ValueError as e:
        raise ValidationError(f"Invalid configuration: {e}") from e
    logger.debug("Configuration resolved", **config.model_dump(mode="json"))
    return config
