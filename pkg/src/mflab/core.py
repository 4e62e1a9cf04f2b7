# src/mflab/core.py
"""Core mflab orchestration behind every subcommand."""

from __future__ import annotations

import math
import time
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import mpmath

from mflab.acceptance import AcceptanceSuite, profile_plan
from mflab.config import LabConfig
from mflab.cuspzone import (
    LINE_X,
    cusp_approx_error,
    cusp_region_count,
    detector_consistency,
    dyadic_mean_square,
    g_interval_stats,
    l1_cutoff,
    geodesic_zero_count,
    lemma_window,
    ordinate,
    short_interval_stats,
)
from mflab.eigenforms import MIN_L1_CUTOFF, eigenbasis, eisenstein_form, hecke_residuals
from mflab.evaluate import normalize, with_l1sym2
from mflab.exponents import (
    closed_form_deviation,
    derived_exponents,
    exact_alpha_objective_report,
    minimax_alpha,
)
from mflab.fs import build_cache_file, cache_path, decode_cache, load_cache, store_cache
from mflab.logging import logger
from mflab.massmap import (
    CUSP_HEIGHTS,
    HYPOTHESIS_H,
    UNIFORM_DENSITY,
    cusp_mass,
    family_ball_discrepancy,
    hyperbolic_area,
    mass_hypothesis,
    mass_region,
    que_discrepancy,
    sup_norm_report,
)
from mflab.models import (
    FundamentalDomain,
    HeckeEigenform,
    HyperbolicBall,
    MflabError,
    QExpansion,
    Rectangle,
    Region,
    RunResult,
    SeriesForm,
    SiegelDomain,
    ValidationError,
    ZeroRecord,
    ZeroSet,
)
from mflab.qseries import cusp_dimension, miller_basis
from mflab.zerofind import (
    family_ball_zero_report,
    valence_check,
    zeros_in_fundamental_domain,
    zeros_in_region,
)

# Exponent of the multiplicative sign function, (31/2 - 4 sqrt 15) / 7.
G_DELTA = (31 / 2 - 4 * math.sqrt(15)) / 7
DETECTOR_THRESHOLD = 0.1
# Below this weight the one-term error can exceed the threshold; detectors are report-only.
DETECTOR_MIN_WEIGHT = 80
DIGITS = 30

COMMANDS = ("basis", "eigen", "zeros", "mass", "cusp", "exponents", "verify")


def _num(value: Any, digits: int = DIGITS) -> str:
    return mpmath.nstr(value, digits)


def _zero_row(label: str, record: ZeroRecord) -> Dict[str, Any]:
    return {
        "form": label,
        "x": _num(record.location.x),
        "y": _num(record.location.y),
        "multiplicity": record.multiplicity,
        "elliptic_weight": str(record.elliptic_weight),
        "box_radius": record.box_radius,
    }


class Lab:
    """
    Main orchestration class for mflab runs.

    Owns the numerical configuration and the eigenform cache, and turns each
    subcommand into a RunResult with a deterministic report payload.
    """

    def __init__(self, config: Optional[LabConfig] = None, use_cache: bool = True) -> None:
        self._config = config or LabConfig()
        self._use_cache = use_cache
        self._forms: Dict[Tuple[int, int], Tuple[List[QExpansion], List[HeckeEigenform]]] = {}
        logger.debug(
            "Lab initialized",
            prec_bits=self._config.prec_bits,
            threads=self._config.threads,
            cache_dir=str(self._config.cache_dir),
        )

    @property
    def config(self) -> LabConfig:
        return self._config

    def run(self, command: str, **params: Any) -> RunResult:
        """
        Execute one subcommand and wrap its outcome.

        Library errors become a failed result with exit code 1 (2 for
        validation errors); the error class name leads the message.
        """
        if command not in COMMANDS:
            raise ValidationError(f"Unknown command '{command}'")
        logger.info("Starting mflab run", command=command, **params)
        start_time = time.time()
        handler: Callable[..., RunResult] = getattr(self, command)

        try:
            result = handler(**params)
        except MflabError as e:
            duration_s = time.time() - start_time
            logger.error("Run failed", command=command, error=type(e).__name__, message=str(e))
            return RunResult(
                success=False,
                exit_code=2 if isinstance(e, ValidationError) else 1,
                command=command,
                report={"error": type(e).__name__, "message": str(e)},
                duration_s=duration_s,
                message=f"{type(e).__name__}: {e}",
            )

        duration_s = time.time() - start_time
        logger.info(
            "mflab run completed",
            command=command,
            success=result.success,
            duration_s=duration_s,
        )
        return result.model_copy(update={"duration_s": duration_s})

    # -------------------------------------------------------------------------
    # Eigenform store
    # -------------------------------------------------------------------------

    def basis_and_forms(self, k: int, N: int) -> Tuple[List[QExpansion], List[HeckeEigenform]]:
        """Miller basis and eigenbasis, from memory, the disk cache or a cold computation."""
        key = (k, N)
        if key in self._forms:
            return self._forms[key]

        path = cache_path(self._config.cache_dir, k, N, self._config.prec_bits)
        cache = load_cache(path) if self._use_cache else None
        if cache is not None:
            basis, forms = decode_cache(cache)
        else:
            forms = eigenbasis(k, N, self._config.prec_bits)
            basis = miller_basis(k, N)
            self._store(k, N, basis, forms)
        self._forms[key] = (basis, forms)
        return basis, forms

    def eigenforms(self, k: int, N: int) -> List[HeckeEigenform]:
        return self.basis_and_forms(k, N)[1]

    def family(self, k: int, N: int) -> List[HeckeEigenform]:
        """Eigenforms of weight k, empty when there are no cusp forms."""
        if k % 2 == 0 and k >= 12 and cusp_dimension(k) == 0:
            return []
        return self.eigenforms(k, N)

    def normalized_forms(self, k: int, N: int) -> List[HeckeEigenform]:
        """Petersson-normalized eigenforms; normalization constants are cached."""
        basis, forms = self.basis_and_forms(k, N)
        if all(f.normalized for f in forms):
            return forms
        forms = [f if f.normalized else normalize(f, self._config) for f in forms]
        self._forms[(k, N)] = (basis, forms)
        self._store(k, N, basis, forms)
        return forms

    def _store(
        self, k: int, N: int, basis: List[QExpansion], forms: List[HeckeEigenform]
    ) -> None:
        if not self._use_cache:
            return
        path = cache_path(self._config.cache_dir, k, N, self._config.prec_bits)
        store_cache(path, build_cache_file(k, N, self._config.prec_bits, basis, forms))

    def _cache_files(self, k: int, N: int) -> List[str]:
        if not self._use_cache:
            return []
        return [str(cache_path(self._config.cache_dir, k, N, self._config.prec_bits))]

    # -------------------------------------------------------------------------
    # Subcommands
    # -------------------------------------------------------------------------

    def basis(self, weight: int, terms: int) -> RunResult:
        """Exact Miller basis of S_k."""
        basis = miller_basis(weight, terms)
        rows = [
            {"n": n, **{f"g{i + 1}": str(g.numerators[n]) for i, g in enumerate(basis)}}
            for n in range(terms + 1)
        ]
        report = {
            "weight": weight,
            "terms": terms,
            "dimension": len(basis),
            "basis": [[str(c) for c in g.numerators] for g in basis],
        }
        return RunResult(
            success=True, exit_code=0, command="basis", report=report, tables={"basis": rows}
        )

    def eigen(self, weight: int, terms: int) -> RunResult:
        """Hecke eigenbasis with residual checks; refreshes the cache."""
        forms = self.eigenforms(weight, terms)
        shown = min(terms, 20)
        summaries = []
        rows = []
        for f in forms:
            residuals = hecke_residuals(f, min(terms, 200))
            summaries.append(
                {
                    "label": f.label,
                    "t2_eigenvalue": _num(f.t2_eigenvalue),
                    "a": [_num(f.a(n)) for n in range(shown + 1)],
                    "residuals": residuals.model_dump(mode="json"),
                }
            )
        for n in range(terms + 1):
            rows.append({"n": n, **{f.label: _num(f.a(n)) for f in forms}})
        report = {
            "weight": weight,
            "terms": terms,
            "precision_bits": self._config.prec_bits,
            "forms": summaries,
        }
        return RunResult(
            success=True,
            exit_code=0,
            command="eigen",
            report=report,
            tables={"coefficients": rows},
            written_files=self._cache_files(weight, terms),
        )

    def _zero_forms(self, weight: int, terms: int, eisenstein: bool) -> List[SeriesForm]:
        if eisenstein:
            return [eisenstein_form(weight, terms, self._config.prec_bits)]
        return list(self.eigenforms(weight, terms))

    def zeros(
        self, weight: int, terms: int, region: Region, eisenstein: bool = False
    ) -> RunResult:
        """Zeros of each form in a region; the fundamental domain adds the valence check."""
        config = self._config
        forms = self._zero_forms(weight, terms, eisenstein)
        if isinstance(region, HyperbolicBall):
            return self._ball_zeros(weight, terms, region, eisenstein, forms)

        summary: List[Dict[str, Any]] = []
        rows: List[Dict[str, Any]] = []
        success = True
        for form in forms:
            if isinstance(region, FundamentalDomain):
                valence = valence_check(form, config)
                success = success and valence.passed
                zeros = ZeroSet.build(valence.zeros, valence.cusp_order)
            elif isinstance(region, Rectangle):
                zeros = zeros_in_region(form, region, config)
            else:
                found = zeros_in_fundamental_domain(form, config)
                kept = [r for r in found.zeros if r.location.y > region.Y]
                zeros = ZeroSet.build(kept, found.cusp_order)

            rows.extend(_zero_row(form.label, r) for r in zeros.zeros)
            summary.append(
                {
                    "form": form.label,
                    "interior_total": str(zeros.interior_total),
                    "cusp_order": zeros.cusp_order,
                    "weighted_total": str(zeros.weighted_total),
                    "expected": str(Fraction(weight, 12)),
                }
            )

        report = {
            "weight": weight,
            "terms": terms,
            "region": region.model_dump(mode="json"),
            "eisenstein": eisenstein,
            "summary": summary,
            "zeros": rows,
        }
        return RunResult(
            success=success,
            exit_code=0 if success else 1,
            command="zeros",
            report=report,
            tables={"summary": summary, "zeros": rows},
            message=None if success else "Valence identity failed",
        )

    def _ball_zeros(
        self,
        weight: int,
        terms: int,
        ball: HyperbolicBall,
        eisenstein: bool,
        forms: List[SeriesForm],
    ) -> RunResult:
        """Per-form ball counts and the family mean against (k/12)(3/pi) Area(B)."""
        family = family_ball_zero_report(weight, ball, self._config, forms=forms)
        summary = [
            {
                "form": form.label,
                "count": str(s.count),
                "expected": s.expected,
                "ratio_error": s.ratio_error,
            }
            for form, s in zip(forms, family.stats)
        ]
        report = {
            "weight": weight,
            "terms": terms,
            "region": ball.model_dump(mode="json"),
            "eisenstein": eisenstein,
            "unfolded": family.unfolded,
            "expected": family.expected,
            "mean_count": family.mean_count,
            "mean_abs_ratio_error": family.mean_abs_ratio_error,
            "within_factor_three": family.within_factor_three,
            "summary": summary,
            "zeros": [],
        }
        return RunResult(
            success=True, exit_code=0, command="zeros", report=report, tables={"summary": summary}
        )

    def mass(
        self,
        weight: int,
        terms: int,
        region: Region,
        grid: Optional[int] = None,
        local: bool = False,
        family: bool = False,
    ) -> RunResult:
        """
        mu_f of a region for each normalized form.

        A grid adds the rectangle discrepancy; local adds cusp masses, the sup
        norm and the mass hypothesis; family adds the ball-family mean square.
        """
        config = self._config
        forms = self.normalized_forms(weight, terms)
        rows = []
        discrepancies = []
        cusp_rows: List[Dict[str, Any]] = []
        sup_rows: List[Dict[str, Any]] = []
        hypothesis_rows: List[Dict[str, Any]] = []
        for f in forms:
            estimate = mass_region(f, region, config)
            uniform = None
            if not isinstance(region, FundamentalDomain):
                uniform = UNIFORM_DENSITY * hyperbolic_area(region)
            rows.append(
                {
                    "form": f.label,
                    "mass": estimate.value,
                    "error": estimate.error,
                    "uniform": 1.0 if uniform is None else uniform,
                    "method": estimate.method,
                }
            )
            if grid:
                disc = que_discrepancy(f, config, grid=grid)
                discrepancies.append(
                    {
                        "form": f.label,
                        "grid": disc.grid,
                        "y_cap": disc.y_cap,
                        "sup_discrepancy": disc.sup_discrepancy,
                        "x1": disc.argmax.x1,
                        "x2": disc.argmax.x2,
                        "y1": disc.argmax.y1,
                        "y2": disc.argmax.y2,
                    }
                )
            if local:
                cusp_rows.extend({"form": f.label, **cusp_mass(f, Y).model_dump()} for Y in CUSP_HEIGHTS)
                sup = sup_norm_report(f, config)
                sup_rows.append(
                    {
                        "form": f.label,
                        "max_value": sup.max_value,
                        "x": sup.location[0],
                        "y": sup.location[1],
                        "ratio_quarter": sup.ratio_quarter,
                    }
                )
                hypothesis = mass_hypothesis(f, HYPOTHESIS_H, config)
                hypothesis_rows.append(
                    {
                        "form": f.label,
                        "h": hypothesis.h,
                        "precondition_ok": hypothesis.precondition_ok,
                        "holds": hypothesis.holds,
                        "log_min_local_max": hypothesis.log_min_local_max,
                        "log_threshold": hypothesis.log_threshold,
                    }
                )

        tables = {"mass": rows}
        report: Dict[str, Any] = {
            "weight": weight,
            "terms": terms,
            "region": region.model_dump(mode="json"),
            "mass": rows,
            "discrepancy": discrepancies,
        }
        if grid:
            tables["discrepancy"] = discrepancies
        if local:
            tables.update(cusp=cusp_rows, sup_norm=sup_rows, mass_hypothesis=hypothesis_rows)
            report.update(cusp=cusp_rows, sup_norm=sup_rows, mass_hypothesis=hypothesis_rows)
        if family:
            balls = family_ball_discrepancy(weight, config, forms=forms)
            tables["family_balls"] = [
                {
                    "weight": balls.weight,
                    "balls": balls.balls,
                    "forms": len(balls.per_form_sup),
                    "family_mean_square": balls.family_mean_square,
                    "reference": balls.reference,
                }
            ]
            report["family_balls"] = balls.model_dump()
        return RunResult(
            success=True,
            exit_code=0,
            command="mass",
            report=report,
            tables=tables,
            written_files=self._cache_files(weight, terms),
        )

    def cusp(
        self,
        weight: int,
        terms: int,
        region: Optional[Region] = None,
        threshold: float = DETECTOR_THRESHOLD,
    ) -> RunResult:
        """One-term approximations, sign-change detectors, zero counts and interval statistics."""
        config = self._config
        if region is not None and not isinstance(region, SiegelDomain):
            raise ValidationError("The cusp command takes a siegel:Y region")
        _, upper = lemma_window(weight, config)
        l_max = max(1, int(math.floor(upper)))
        Y = region.Y if region is not None else max(1.0, 0.99 * ordinate(weight, l_max))

        approximations = []
        detectors = []
        counts = []
        statistics = []
        for f in self.eigenforms(weight, terms):
            for l in range(1, min(l_max, terms) + 1):
                approx = cusp_approx_error(f, l, 0.0, config)
                approximations.append(
                    {"form": f.label, "l": l, "y_l": _num(approx.y_l, 15), "error": _num(approx.error, 15)}
                )
            for line in LINE_X:
                consistency = detector_consistency(f, line, threshold, config)
                detectors.append(
                    {
                        "form": f.label,
                        "line": line,
                        "pairs": len(consistency.pairs),
                        "verified": sum(consistency.verified),
                        "rate": consistency.rate,
                    }
                )
                geodesic = geodesic_zero_count(f, Y, line, config)
                counts.append(
                    {"form": f.label, "kind": line, "Y": Y, "count": geodesic.count}
                )
            region_count = cusp_region_count(f, Y, config)
            counts.append({"form": f.label, "kind": "region", "Y": Y, "count": region_count.count})
            statistics.extend(self._interval_rows(f))

        report = {
            "weight": weight,
            "terms": terms,
            "Y": Y,
            "threshold": threshold,
            "detectors_asserted": weight >= DETECTOR_MIN_WEIGHT,
            "window": [lemma_window(weight, config)[0], upper],
            "approximations": approximations,
            "detectors": detectors,
            "counts": counts,
            "statistics": statistics,
        }
        success = weight < DETECTOR_MIN_WEIGHT or all(row["rate"] == 1.0 for row in detectors)
        return RunResult(
            success=success,
            exit_code=0 if success else 1,
            command="cusp",
            report=report,
            tables={
                "approximations": approximations,
                "counts": counts,
                "detectors": detectors,
                "statistics": statistics,
            },
            message=None if success else "Unverified sign-change pair",
        )

    def _interval_rows(self, f: HeckeEigenform) -> List[Dict[str, Any]]:
        """Seeded interval statistics at scales the truncation supports."""
        config = self._config
        X = f.terms // 4
        if X < 8:
            return []
        if f.l1sym2 is None and f.terms >= MIN_L1_CUTOFF:
            f = with_l1sym2(f, l1_cutoff(f, config))
        rows = []
        pair = short_interval_stats(f, X, 4.0, config)
        for stat in (pair.linear, pair.square):
            rows.append(
                {"form": f.label, "statistic": stat.kind, "X": X, "mean": stat.mean, "mean_square": stat.mean_square}
            )
        dyadic = dyadic_mean_square(f, f.terms // 2, config)
        rows.append(
            {"form": f.label, "statistic": "dyadic", "X": dyadic.X, "mean": dyadic.value, "mean_square": dyadic.ratio}
        )
        g = g_interval_stats(f, G_DELTA, X, max(2, X // 16), config)
        rows.append(
            {"form": f.label, "statistic": "g", "X": X, "mean": g.long_mean_g, "mean_square": g.max_gap}
        )
        return rows

    def exponents(self) -> RunResult:
        """Minimax exponents, closed-form cross-check and the exact-objective report."""
        result = derived_exponents()
        unrestricted = minimax_alpha(lower=0.0)
        exact = exact_alpha_objective_report(result.alpha)
        deviation = closed_form_deviation()
        report = {
            **{name: float(getattr(result, name)) for name in type(result).model_fields},
            "printable": result.printable(),
            "exact": result.model_dump(mode="json"),
            "alpha_unrestricted": unrestricted.model_dump(mode="json"),
            "closed_form_deviation": _num(deviation, 5),
            "exact_objective": exact.model_dump(mode="json"),
        }
        rows = [{"name": name, "value": value} for name, value in result.printable().items()]
        return RunResult(
            success=True, exit_code=0, command="exponents", report=report, tables={"exponents": rows}
        )

    def verify(self, profile: str = "quick") -> RunResult:
        """Run the acceptance suite; any failed check fails the run."""
        suite = AcceptanceSuite(self._config, profile_plan(profile), self.family)
        acceptance = suite.run()
        rows = [
            {"check": c.name, "passed": c.passed, "report_only": c.report_only, "error": c.error or ""}
            for c in acceptance.checks
        ]
        return RunResult(
            success=acceptance.passed,
            exit_code=0 if acceptance.passed else 1,
            command="verify",
            report=acceptance.model_dump(mode="json"),
            tables={"checks": rows},
            message=None if acceptance.passed else "Acceptance checks failed",
        )
