# =============================================================================
# src/mflab/cli.py
# =============================================================================
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional

import typer
from rich.console import Console
from rich.table import Table

from mflab import logging as mf_logging
from mflab.core import Lab
from mflab.fs import render_csv, render_json, write_csv_tables, write_json_report
from mflab.models import MflabError, RunResult, ValidationError
from mflab.parsing import REGION_GRAMMAR, parse_grid_spec, parse_region_spec, resolve_config
from mflab.version import get_version_info

app = typer.Typer(no_args_is_help=False, add_completion=False)
console = Console(stderr=True)

FORMATS = ("json", "csv")

WEIGHT = typer.Option(..., "--weight", "-k", help="Even weight k")
TERMS = typer.Option(None, "--terms", "-N", help="Truncation N (default max(120, 4k))")
PREC_BITS = typer.Option(None, "--prec-bits", help="Mantissa bits (default 128)")
SEED = typer.Option(None, "--seed", help="Seed for every sampled statistic (default 1)")
OUT = typer.Option(None, "--out", "-o", help="Output file; stdout when omitted")
FORMAT = typer.Option("json", "--format", "-f", help="Output format: json or csv")
THREADS = typer.Option(None, "--threads", help="Worker threads (default: CPU count)")
CONFIG = typer.Option(None, "--config", help="YAML file with LabConfig values")
CACHE_DIR = typer.Option(None, "--cache-dir", help="Eigenform cache directory")
VERBOSE = typer.Option(False, "--verbose", "-v", help="Enable verbose logging")
REGION_HELP = f"Region: {REGION_GRAMMAR} (y2 may be inf)"


def _enable_verbose_logging(verbose: bool) -> None:
    """Route the library logger to DEBUG for --verbose."""
    mf_logging.configure_logging(debug=verbose)


def _print_error(name: str, message: str) -> None:
    typer.echo(render_json({"error": name, "message": message}).strip(), err=True)


def _default_terms(weight: int, terms: Optional[int]) -> int:
    return terms if terms is not None else max(120, 4 * weight)


def _build_lab(
    prec_bits: Optional[int],
    seed: Optional[int],
    threads: Optional[int],
    config_path: Optional[Path],
    cache_dir: Optional[Path],
    **overrides: Any,
) -> Lab:
    config = resolve_config(
        config_path,
        prec_bits=prec_bits,
        seed=seed,
        threads=threads,
        cache_dir=cache_dir,
        **overrides,
    )
    return Lab(config)


def _emit(result: RunResult, out: Optional[Path], fmt: str) -> None:
    """Write the report (json) or its tables (csv) to --out or stdout."""
    if fmt == "json":
        if out:
            write_json_report(out, result.report)
        else:
            typer.echo(render_json(result.report), nl=False)
        return
    if out:
        write_csv_tables(out, result.tables)
        return
    for index, name in enumerate(sorted(result.tables)):
        if index:
            typer.echo("")
        typer.echo(f"# {name}")
        typer.echo(render_csv(result.tables[name]), nl=False)


def _summarize(result: RunResult) -> None:
    """Rich summary table on stderr for interactive --verbose runs."""
    table = Table(title=f"mflab {result.command}")
    table.add_column("field")
    table.add_column("value")
    table.add_row("success", str(result.success))
    table.add_row("exit_code", str(result.exit_code))
    table.add_row("duration_s", f"{result.duration_s:.3f}")
    for name, rows in sorted(result.tables.items()):
        table.add_row(f"rows[{name}]", str(len(rows)))
    console.print(table)


def _execute(
    make_lab: Dict[str, Any],
    command: str,
    out: Optional[Path],
    fmt: str,
    verbose: bool,
    **params: Any,
) -> None:
    """Shared run path: config, command, output, exit code."""
    _enable_verbose_logging(verbose)
    if fmt not in FORMATS:
        _print_error("ValidationError", f"--format must be json or csv, got '{fmt}'")
        raise typer.Exit(code=2)

    try:
        lab = _build_lab(**make_lab)
        result = lab.run(command, **params)
    except ValidationError as e:
        _print_error(type(e).__name__, str(e))
        raise typer.Exit(code=2)
    except MflabError as e:
        _print_error(type(e).__name__, str(e))
        raise typer.Exit(code=1)

    if "error" in result.report and not result.success:
        _print_error(result.report["error"], result.report["message"])
        raise typer.Exit(code=result.exit_code)

    try:
        _emit(result, out, fmt)
    except MflabError as e:
        _print_error(type(e).__name__, str(e))
        raise typer.Exit(code=1)

    if verbose:
        _summarize(result)
    if not result.success:
        _print_error("CheckFailed", result.message or f"{command} reported a failure")
    raise typer.Exit(code=result.exit_code)


def _parse_region(spec: Optional[str], default: Optional[str] = "fundamental") -> Any:
    text = spec if spec is not None else default
    if text is None:
        return None
    try:
        return parse_region_spec(text)
    except ValidationError as e:
        _print_error(type(e).__name__, str(e))
        raise typer.Exit(code=2)


@app.command()
def basis(
    weight: int = WEIGHT,
    terms: Optional[int] = TERMS,
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    config: Optional[Path] = CONFIG,
    verbose: bool = VERBOSE,
) -> None:
    """Exact Miller basis of S_k."""
    make_lab = dict(prec_bits=None, seed=None, threads=None, config_path=config, cache_dir=None)
    _execute(make_lab, "basis", out, fmt, verbose, weight=weight, terms=_default_terms(weight, terms))


@app.command()
def eigen(
    weight: int = WEIGHT,
    terms: Optional[int] = TERMS,
    prec_bits: Optional[int] = PREC_BITS,
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    threads: Optional[int] = THREADS,
    config: Optional[Path] = CONFIG,
    cache_dir: Optional[Path] = CACHE_DIR,
    verbose: bool = VERBOSE,
) -> None:
    """Hecke eigenbasis, stored in the eigenform cache."""
    make_lab = dict(
        prec_bits=prec_bits, seed=None, threads=threads, config_path=config, cache_dir=cache_dir
    )
    _execute(make_lab, "eigen", out, fmt, verbose, weight=weight, terms=_default_terms(weight, terms))


@app.command()
def zeros(
    weight: int = WEIGHT,
    terms: Optional[int] = TERMS,
    region: Optional[str] = typer.Option(None, "--region", help=REGION_HELP),
    eisenstein: bool = typer.Option(False, "--eisenstein", help="Use E_k instead of the eigenforms"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Zero localization tolerance"),
    prec_bits: Optional[int] = PREC_BITS,
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    threads: Optional[int] = THREADS,
    config: Optional[Path] = CONFIG,
    cache_dir: Optional[Path] = CACHE_DIR,
    verbose: bool = VERBOSE,
) -> None:
    """Zeros in a region (default: the fundamental domain, with the valence check)."""
    make_lab = dict(
        prec_bits=prec_bits,
        seed=None,
        threads=threads,
        config_path=config,
        cache_dir=cache_dir,
        zero_tol=tol,
    )
    _execute(
        make_lab,
        "zeros",
        out,
        fmt,
        verbose,
        weight=weight,
        terms=_default_terms(weight, terms),
        region=_parse_region(region),
        eisenstein=eisenstein,
    )


@app.command()
def mass(
    weight: int = WEIGHT,
    terms: Optional[int] = TERMS,
    region: Optional[str] = typer.Option(None, "--region", help=REGION_HELP),
    grid: Optional[str] = typer.Option(None, "--grid", help="Rectangle lattice MxM"),
    local: bool = typer.Option(False, "--local", help="Add cusp masses, sup norm and the mass hypothesis"),
    family: bool = typer.Option(False, "--family", help="Add the ball-family mean-square discrepancy"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Quadrature tolerance"),
    prec_bits: Optional[int] = PREC_BITS,
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    threads: Optional[int] = THREADS,
    config: Optional[Path] = CONFIG,
    cache_dir: Optional[Path] = CACHE_DIR,
    verbose: bool = VERBOSE,
) -> None:
    """Mass of a region under mu_f; --grid, --local and --family add further tables."""
    try:
        grid_size = parse_grid_spec(grid) if grid else None
    except ValidationError as e:
        _print_error(type(e).__name__, str(e))
        raise typer.Exit(code=2)
    make_lab = dict(
        prec_bits=prec_bits,
        seed=None,
        threads=threads,
        config_path=config,
        cache_dir=cache_dir,
        quad_tol=tol,
    )
    _execute(
        make_lab,
        "mass",
        out,
        fmt,
        verbose,
        weight=weight,
        terms=_default_terms(weight, terms),
        region=_parse_region(region),
        grid=grid_size,
        local=local,
        family=family,
    )


@app.command()
def cusp(
    weight: int = WEIGHT,
    terms: Optional[int] = TERMS,
    region: Optional[str] = typer.Option(None, "--region", help="siegel:Y (default from the window)"),
    threshold: float = typer.Option(0.1, "--threshold", help="Sign-change threshold on |lambda|"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Zero localization tolerance"),
    seed: Optional[int] = SEED,
    prec_bits: Optional[int] = PREC_BITS,
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    threads: Optional[int] = THREADS,
    config: Optional[Path] = CONFIG,
    cache_dir: Optional[Path] = CACHE_DIR,
    verbose: bool = VERBOSE,
) -> None:
    """Cusp approximations, sign-change detectors and zero counts high in the cusp."""
    make_lab = dict(
        prec_bits=prec_bits,
        seed=seed,
        threads=threads,
        config_path=config,
        cache_dir=cache_dir,
        zero_tol=tol,
    )
    _execute(
        make_lab,
        "cusp",
        out,
        fmt,
        verbose,
        weight=weight,
        terms=_default_terms(weight, terms),
        region=_parse_region(region, default=None),
        threshold=threshold,
    )


@app.command()
def exponents(
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    verbose: bool = VERBOSE,
) -> None:
    """Minimax exponents beta, alpha, kappa, delta, eta1, eta2."""
    make_lab = dict(prec_bits=None, seed=None, threads=None, config_path=None, cache_dir=None)
    _execute(make_lab, "exponents", out, fmt, verbose)


@app.command()
def verify(
    profile: str = typer.Option("quick", "--profile", help="quick or full"),
    seed: Optional[int] = SEED,
    prec_bits: Optional[int] = PREC_BITS,
    out: Optional[Path] = OUT,
    fmt: str = FORMAT,
    threads: Optional[int] = THREADS,
    config: Optional[Path] = CONFIG,
    cache_dir: Optional[Path] = CACHE_DIR,
    verbose: bool = VERBOSE,
) -> None:
    """Run the acceptance suite; exits 1 on any failed check."""
    make_lab = dict(
        prec_bits=prec_bits, seed=seed, threads=threads, config_path=config, cache_dir=cache_dir
    )
    _execute(make_lab, "verify", out, fmt, verbose, profile=profile)


@app.callback(invoke_without_command=True)
def version_callback(
    ctx: typer.Context,
    version: bool = typer.Option(
        False, "--version", help="Show mflab and numerical backend versions"
    ),
) -> None:
    """High-precision laboratory for Hecke cusp forms on SL2(Z)."""
    if not version:
        if ctx.invoked_subcommand is None:
            typer.echo(ctx.get_help())
            raise typer.Exit(code=0)
        return

    lines = [f"{name}: {value or '(not installed)'}" for name, value in get_version_info().items()]
    typer.echo("\n".join(lines))
    raise typer.Exit(code=0)


def main() -> None:
    """Main entry point for console_scripts."""
    app()
