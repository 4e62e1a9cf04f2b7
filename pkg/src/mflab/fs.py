"""Filesystem utilities: eigenform caches and report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath

from mflab.logging import logger
from mflab.models import (
    CachedEigenform,
    CacheError,
    CacheFile,
    HeckeEigenform,
    QExpansion,
    decode_mpf,
    encode_mpf,
)

CACHE_VERSION = 1


def ensure_directory_exists(path: Path) -> None:
    """
    Create directory if it doesn't exist, including parent directories.

    Raises:
        CacheError: If the path is a file or cannot be created
    """
    path = path.resolve()

    if path.exists():
        if not path.is_dir():
            raise CacheError(f"Path exists but is not a directory: {path}")
        return

    try:
        path.mkdir(parents=True, exist_ok=True)
        logger.debug("Directory created", path=str(path))
    except OSError as e:
        logger.error("Failed to create directory", path=str(path), error=str(e))
        raise CacheError(f"Failed to create directory {path}: {e}") from e


def atomic_write_text(path: Path, text: str) -> None:
    """Write text through a temporary file in the same directory, then rename."""
    ensure_directory_exists(path.parent)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        Path(tmp).unlink(missing_ok=True)
        raise CacheError(f"Failed to write {path}: {e}") from e


# =============================================================================
# Reports
# =============================================================================


def render_json(data: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_csv(rows: Sequence[Dict[str, Any]]) -> str:
    """CSV text with the header taken from the first row's keys."""
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def write_json_report(path: Path, data: Any) -> Path:
    atomic_write_text(path, render_json(data))
    logger.info("JSON report written", path=str(path))
    return path


def write_csv_tables(path: Path, tables: Dict[str, List[Dict[str, Any]]]) -> List[Path]:
    """
    Write one CSV per table.

    A single table goes to `path` itself; several go to `<stem>_<name>.csv`
    beside it, in sorted name order.
    """
    written = []
    names = sorted(tables)
    for name in names:
        target = path if len(names) == 1 else path.with_name(f"{path.stem}_{name}.csv")
        atomic_write_text(target, render_csv(tables[name]))
        written.append(target)
    logger.info("CSV tables written", path=str(path), tables=len(written))
    return written


# =============================================================================
# Eigenform cache
# =============================================================================


def _checksum(payload: Dict[str, Any]) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cache_path(cache_dir: Path, k: int, N: int, prec_bits: int) -> Path:
    return cache_dir / f"S{k}_N{N}_p{prec_bits}.json"


def encode_value(value: mpmath.mpf) -> str:
    """Integers as decimal strings, everything else bit-exact."""
    if mpmath.isint(value):
        return str(int(value))
    return encode_mpf(value)


def _encode_form(f: HeckeEigenform) -> CachedEigenform:
    payload = {
        "index": f.index,
        "t2_eigenvalue": encode_value(f.t2_eigenvalue),
        "a_coeffs": [encode_value(a) for a in f.a_coeffs],
        "lambdas": [encode_value(v) for v in f.lambdas],
        "norm_const": encode_value(f.norm_const) if f.norm_const is not None else None,
    }
    return CachedEigenform(**payload, checksum=_checksum(payload))


def build_cache_file(
    k: int,
    N: int,
    prec_bits: int,
    basis: List[QExpansion],
    forms: List[HeckeEigenform],
) -> CacheFile:
    """Encode a Miller basis and its eigenforms; integers as decimal strings."""
    if any(not g.integral for g in basis):
        raise CacheError(f"Miller basis of weight {k} is not integral")
    encoded = [_encode_form(f) for f in forms]
    payload = {
        "version": CACHE_VERSION,
        "weight": k,
        "terms": N,
        "precision_bits": prec_bits,
        "basis": [[str(c) for c in g.numerators] for g in basis],
        "eigenforms": [e.model_dump() for e in encoded],
    }
    return CacheFile(**payload, checksum=_checksum(payload))


def store_cache(path: Path, cache: CacheFile) -> Path:
    atomic_write_text(path, render_json(cache.model_dump()))
    logger.info(
        "Eigenform cache stored",
        path=str(path),
        weight=cache.weight,
        terms=cache.terms,
        forms=len(cache.eigenforms),
    )
    return path


def load_cache(path: Path) -> Optional[CacheFile]:
    """
    Read and verify a cache file.

    Returns:
        The cache, or None when no file exists

    Raises:
        CacheError: On unreadable JSON, a version mismatch or a bad checksum
    """
    if not path.exists():
        logger.debug("Cache miss", path=str(path))
        return None

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        cache = CacheFile(**data)
    except (OSError, ValueError, TypeError) as e:
        raise CacheError(f"Unreadable cache file {path}: {e}") from e

    if cache.version != CACHE_VERSION:
        raise CacheError(
            f"Cache version {cache.version} in {path} does not match {CACHE_VERSION}"
        )
    payload = cache.model_dump(exclude={"checksum"})
    if _checksum(payload) != cache.checksum:
        raise CacheError(f"Checksum mismatch in cache file {path}")
    for entry in cache.eigenforms:
        if _checksum(entry.model_dump(exclude={"checksum"})) != entry.checksum:
            raise CacheError(f"Checksum mismatch for eigenform {entry.index} in {path}")

    logger.debug("Cache hit", path=str(path))
    return cache


def decode_cache(cache: CacheFile) -> Tuple[List[QExpansion], List[HeckeEigenform]]:
    """Rebuild the exact basis and the eigenforms bit for bit."""
    k, N = cache.weight, cache.terms
    basis = [QExpansion.build(k, [int(c) for c in row]) for row in cache.basis]
    forms = []
    with mpmath.workprec(cache.precision_bits):
        for entry in cache.eigenforms:
            forms.append(
                HeckeEigenform(
                    label=f"{k}.{entry.index + 1}",
                    weight=k,
                    terms=N,
                    a_coeffs=tuple(decode_mpf(a) for a in entry.a_coeffs),
                    precision_bits=cache.precision_bits,
                    majorant_const=mpmath.mpf(2),
                    majorant_exponent=k / 2,
                    lambdas=tuple(decode_mpf(v) for v in entry.lambdas),
                    t2_eigenvalue=decode_mpf(entry.t2_eigenvalue),
                    index=entry.index,
                    norm_const=(
                        decode_mpf(entry.norm_const) if entry.norm_const is not None else None
                    ),
                )
            )
    return basis, forms
