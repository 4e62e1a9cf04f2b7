"""Acceptance checks run by `mflab verify`."""

from __future__ import annotations

import math
from typing import Any, Callable, Dict, List, Sequence, Tuple

import mpmath
from pydantic import BaseModel, ConfigDict

from mflab.config import LabConfig
from mflab.cuspzone import LINE_X, cusp_approx_error, detector_consistency, lemma_window
from mflab.eigenforms import eisenstein_form, hecke_residuals
from mflab.evaluate import normalize, petersson_norm
from mflab.exponents import closed_form_deviation, derived_exponents
from mflab.fs import render_json
from mflab.logging import logger
from mflab.massmap import (
    CUSP_HEIGHTS,
    cusp_mass,
    family_ball_discrepancy,
    mass_region,
    que_discrepancy,
    sup_norm_report,
)
from mflab.models import (
    AcceptanceReport,
    Bump,
    CheckResult,
    FundamentalDomain,
    HeckeEigenform,
    HPoint,
    HyperbolicBall,
    MflabError,
    ValidationError,
)
from mflab.qseries import cusp_dimension
from mflab.zerofind import (
    family_ball_zero_report,
    rsd_eisenstein_zeros,
    rudnick_check,
    valence_check,
)

FormProvider = Callable[[int, int], List[HeckeEigenform]]

EVEN_TO_60 = tuple(range(12, 61, 2))
TAU_TERMS = 20
HECKE_TOL = 1e-12
DELIGNE_TOL = 1e-9
ARC_TOL = 1e-8
MASS_TOL = 1e-6
EXPONENT_TOL = 1e-6
KAPPA_TOL = 1e-8
CLOSED_FORM_TOL = 1e-9
# Ball leaving F whose unfolded zero count is compared with (k/12)(3/pi) Area(B).
BALL_ZERO_BALL = HyperbolicBall(center=HPoint(x=0, y=2), radius=0.5)

# (x0, y0, wx, wy): supports inside the interior of F.
BUMPS = (
    (0.0, 1.6, 0.2, 0.2),
    (0.2, 1.3, 0.15, 0.15),
    (-0.2, 1.8, 0.2, 0.3),
    (0.0, 2.5, 0.3, 0.4),
    (0.1, 1.2, 0.1, 0.08),
)


class AcceptancePlan(BaseModel):
    """Weights, truncations and tolerances of one verify profile."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    algebra_weights: Tuple[int, ...] = EVEN_TO_60
    hecke_weights: Tuple[int, ...]
    hecke_terms: int
    valence_weights: Tuple[int, ...]
    eisenstein_weights: Tuple[int, ...]
    zero_terms_per_weight: int = 4
    zero_min_terms: int = 120
    rudnick_weights: Tuple[int, ...]
    rudnick_bumps: int
    norm_weights: Tuple[int, ...]
    norm_terms: int
    petersson_rel_tol: float
    cusp_weights: Tuple[int, ...]
    cusp_terms: int = 150
    discrepancy_weights: Tuple[int, ...]
    discrepancy_grid: int
    cusp_error_weights: Tuple[int, ...]
    sup_norm_weights: Tuple[int, ...]
    family_weights: Tuple[int, ...]
    ball_zero_weights: Tuple[int, ...]

    def zero_terms(self, k: int) -> int:
        return max(self.zero_min_terms, self.zero_terms_per_weight * k)


PROFILES: Dict[str, AcceptancePlan] = {
    "quick": AcceptancePlan(
        name="quick",
        hecke_weights=(12, 16, 24),
        hecke_terms=1000,
        valence_weights=(12, 16, 24),
        eisenstein_weights=(4, 6, 8, 10, 12, 16, 24),
        rudnick_weights=(12,),
        rudnick_bumps=2,
        norm_weights=(12, 24),
        norm_terms=2000,
        petersson_rel_tol=1e-2,
        cusp_weights=(80,),
        discrepancy_weights=(12, 24),
        discrepancy_grid=4,
        cusp_error_weights=(40, 80),
        sup_norm_weights=(12, 24),
        family_weights=(12,),
        ball_zero_weights=(24,),
    ),
    "full": AcceptancePlan(
        name="full",
        hecke_weights=EVEN_TO_60,
        hecke_terms=10000,
        valence_weights=EVEN_TO_60,
        eisenstein_weights=tuple(range(4, 61, 2)),
        rudnick_weights=(12, 16, 24, 36),
        rudnick_bumps=5,
        norm_weights=EVEN_TO_60,
        norm_terms=10000,
        petersson_rel_tol=1e-3,
        cusp_weights=(80, 100),
        discrepancy_weights=(12, 24, 36, 48, 60),
        discrepancy_grid=16,
        cusp_error_weights=(40, 80, 160),
        sup_norm_weights=(12, 24, 36, 48, 60),
        family_weights=EVEN_TO_60,
        ball_zero_weights=(24, 36, 48, 60),
    ),
}


def profile_plan(profile: str) -> AcceptancePlan:
    if profile not in PROFILES:
        raise ValidationError(f"Unknown verify profile '{profile}' (expected quick or full)")
    return PROFILES[profile]


def tau_oracle(count: int) -> List[int]:
    """tau(1..count) by expanding q prod (1 - q^n)^24 directly."""
    series = [1] + [0] * (count - 1)
    for n in range(1, count):
        for _ in range(24):
            for i in range(count - 1, n - 1, -1):
                series[i] -= series[i - n]
    return series


def dimension_oracle(k: int) -> int:
    """dim S_k as #{(a, b) : 4a + 6b = k} - 1."""
    modular = sum(1 for b in range(k // 6 + 1) if (k - 6 * b) % 4 == 0)
    return max(modular - 1, 0)


def nonincreasing_majority(values: Sequence[float]) -> bool:
    steps = list(zip(values, values[1:]))
    if not steps:
        return True
    return sum(b <= a for a, b in steps) * 2 > len(steps)


class AcceptanceSuite:
    """
    The acceptance checks of one verify profile.

    Forms come from a provider so a caller's cache is reused; weights without
    cusp forms are skipped by the cusp-form checks.
    """

    def __init__(self, config: LabConfig, plan: AcceptancePlan, forms: FormProvider) -> None:
        self._config = config
        self._plan = plan
        self._forms = forms

    def _cusp_weights(self, weights: Sequence[int]) -> List[int]:
        return [k for k in weights if cusp_dimension(k) > 0]

    def checks(self) -> List[Tuple[str, Callable[[], CheckResult]]]:
        return [
            ("exact_algebra", self.check_exact_algebra),
            ("hecke_structure", self.check_hecke_structure),
            ("valence", self.check_valence),
            ("eisenstein_arc", self.check_eisenstein_arc),
            ("zero_sum_identity", self.check_zero_sum_identity),
            ("exponents", self.check_exponents),
            ("normalization", self.check_normalization),
            ("cusp_detectors", self.check_cusp_detectors),
            ("trends", self.check_trends),
            ("determinism", self.check_determinism),
        ]

    def run(self) -> AcceptanceReport:
        results = []
        for name, check in self.checks():
            logger.info("Running acceptance check", check=name, profile=self._plan.name)
            try:
                result = check()
            except MflabError as e:
                logger.error("Acceptance check raised", check=name, error=str(e))
                result = CheckResult(name=name, passed=False, error=f"{type(e).__name__}: {e}")
            results.append(result)
        report = AcceptanceReport(
            profile=self._plan.name,
            seed=self._config.seed,
            precision_bits=self._config.prec_bits,
            checks=results,
        )
        logger.info("Acceptance suite finished", passed=report.passed, profile=self._plan.name)
        return report

    def check_exact_algebra(self) -> CheckResult:
        """tau(n) for n <= 20 and dim S_k against independent oracles."""
        f = self._forms(12, 120)[0]
        expected = tau_oracle(TAU_TERMS)
        computed = [f.a(n) for n in range(1, TAU_TERMS + 1)]
        tau_ok = all(mpmath.isint(a) and int(a) == t for a, t in zip(computed, expected))
        bad_dims = [
            k for k in self._plan.algebra_weights if cusp_dimension(k) != dimension_oracle(k)
        ]
        return CheckResult(
            name="exact_algebra",
            passed=tau_ok and not bad_dims,
            details={"tau": [str(t) for t in expected], "dimension_mismatches": bad_dims},
        )

    def check_hecke_structure(self) -> CheckResult:
        """Multiplicativity, recursion and Deligne bound."""
        worst: Dict[str, float] = {"multiplicativity": 0.0, "recursion": 0.0, "deligne_excess": -2.0}
        for k in self._cusp_weights(self._plan.hecke_weights):
            for f in self._forms(k, self._plan.hecke_terms):
                residuals = hecke_residuals(f, 200)
                for name in worst:
                    worst[name] = max(worst[name], float(getattr(residuals, name)))
        passed = (
            worst["multiplicativity"] < HECKE_TOL
            and worst["recursion"] < HECKE_TOL
            and worst["deligne_excess"] <= DELIGNE_TOL
        )
        return CheckResult(name="hecke_structure", passed=passed, details=worst)

    def check_valence(self) -> CheckResult:
        """Weighted zeros plus cusp order equal k/12 for eigenforms and E_k."""
        failures = []
        checked = 0
        for k in self._plan.valence_weights:
            forms: List[Any] = [eisenstein_form(k, self._plan.zero_terms(k), self._config.prec_bits)]
            if cusp_dimension(k) > 0:
                forms += self._forms(k, self._plan.zero_terms(k))
            for form in forms:
                report = valence_check(form, self._config)
                checked += 1
                if not report.passed:
                    failures.append({"form": form.label, "weighted_total": str(report.weighted_total)})
        return CheckResult(
            name="valence", passed=not failures, details={"checked": checked, "failures": failures}
        )

    def check_eisenstein_arc(self) -> CheckResult:
        """Every located zero of E_k in F lies on the unit arc."""
        deviations = {}
        for k in self._plan.eisenstein_weights:
            report = rsd_eisenstein_zeros(k, self._config, self._plan.zero_terms(k))
            deviations[str(k)] = report.max_deviation
        worst = max(deviations.values(), default=0.0)
        return CheckResult(
            name="eisenstein_arc", passed=worst < ARC_TOL, details={"max_deviation": deviations}
        )

    def check_zero_sum_identity(self) -> CheckResult:
        """Both sides of the bump identity agree to 1e-4 k."""
        config = self._config.model_copy(update={"quad_tol": 1e-8})
        bumps = [
            Bump(center=HPoint(x=x, y=y), half_widths=(wx, wy))
            for x, y, wx, wy in BUMPS[: self._plan.rudnick_bumps]
        ]
        defects = []
        passed = True
        for k in self._cusp_weights(self._plan.rudnick_weights):
            for f in self._forms(k, self._plan.zero_terms(k)):
                for bump in bumps:
                    check = rudnick_check(f, bump, config)
                    defects.append({"form": f.label, "defect": check.defect})
                    passed = passed and abs(check.defect) < 1e-4 * k
        return CheckResult(name="zero_sum_identity", passed=passed, details={"defects": defects})

    def check_exponents(self) -> CheckResult:
        """Numeric minimax against the closed forms."""
        result = derived_exponents()
        with mpmath.workdps(40):
            sqrt15 = mpmath.sqrt(15)
            targets = {
                "beta": (result.beta, 2 - mpmath.sqrt(2), EXPONENT_TOL),
                "alpha": (result.alpha, 3 - 8 / sqrt15, EXPONENT_TOL),
                "kappa": (result.kappa, mpmath.mpf(31) / 2 - 4 * sqrt15, KAPPA_TOL),
                "delta": (result.delta, (mpmath.mpf(31) / 2 - 4 * sqrt15) / 7, EXPONENT_TOL),
            }
            errors = {name: float(abs(v - t)) for name, (v, t, _) in targets.items()}
        deviation = float(closed_form_deviation())
        passed = all(errors[name] < tol for name, (_, _, tol) in targets.items())
        passed = passed and deviation < CLOSED_FORM_TOL
        return CheckResult(
            name="exponents",
            passed=passed,
            details={**result.printable(), "errors": errors, "closed_form_deviation": deviation},
        )

    def check_normalization(self) -> CheckResult:
        """mu_f(F) = 1 and the two Petersson norm routes agree."""
        masses = {}
        gaps = {}
        for k in self._cusp_weights(self._plan.norm_weights):
            for f in self._forms(k, self._plan.norm_terms):
                normalized = f if f.normalized else normalize(f, self._config)
                masses[f.label] = mass_region(normalized, FundamentalDomain(), self._config).value
                gaps[f.label] = float(petersson_norm(f, self._config).relative_gap)
        passed = all(abs(m - 1) < MASS_TOL for m in masses.values()) and all(
            g < self._plan.petersson_rel_tol for g in gaps.values()
        )
        return CheckResult(
            name="normalization", passed=passed, details={"mass": masses, "relative_gap": gaps}
        )

    def check_cusp_detectors(self) -> CheckResult:
        """Every strong sign-change pair brackets a verified geodesic zero."""
        rates = {}
        for k in self._cusp_weights(self._plan.cusp_weights):
            for f in self._forms(k, self._plan.cusp_terms):
                for line in LINE_X:
                    consistency = detector_consistency(f, line, 0.1, self._config)
                    rates[f"{f.label}:{line}"] = consistency.rate
        return CheckResult(
            name="cusp_detectors",
            passed=all(r == 1.0 for r in rates.values()),
            details={"rates": rates},
        )

    def check_trends(self) -> CheckResult:
        """Discrepancy, one-term error, sup-norm and ball trends in k; reported, never failed."""
        config = self._config
        discrepancy = []
        for k in self._cusp_weights(self._plan.discrepancy_weights):
            f = self._forms(k, self._plan.zero_terms(k))[0]
            f = f if f.normalized else normalize(f, config)
            discrepancy.append(que_discrepancy(f, config, grid=self._plan.discrepancy_grid).sup_discrepancy)
        cusp_error = []
        for k in self._cusp_weights(self._plan.cusp_error_weights):
            f = self._forms(k, self._plan.cusp_terms)[0]
            upper = max(1, int(math.floor(lemma_window(k, config)[1])))
            cusp_error.append(
                max(float(cusp_approx_error(f, l, 0.0, config).error) for l in range(1, upper + 1))
            )

        sup_norm = []
        cusp_masses: List[float] = []
        for k in self._cusp_weights(self._plan.sup_norm_weights):
            f = self._forms(k, self._plan.zero_terms(k))[0]
            f = f if f.normalized else normalize(f, config)
            sup = sup_norm_report(f, config)
            sup_norm.append({"weight": k, "max_value": sup.max_value, "ratio_quarter": sup.ratio_quarter})
            if not cusp_masses:
                cusp_masses = [cusp_mass(f, Y).mass for Y in CUSP_HEIGHTS]

        family_balls = []
        for k in self._plan.family_weights:
            forms = self._forms(k, self._plan.zero_terms(k)) if cusp_dimension(k) else []
            report = family_ball_discrepancy(k, config, forms=forms)
            family_balls.append(
                {"weight": k, "mean_square": report.family_mean_square, "reference": report.reference}
            )

        ball_zeros = []
        for k in self._cusp_weights(self._plan.ball_zero_weights):
            report = family_ball_zero_report(
                k, BALL_ZERO_BALL, config, forms=self._forms(k, self._plan.zero_terms(k))
            )
            ball_zeros.append(
                {
                    "weight": k,
                    "mean_count": report.mean_count,
                    "expected": report.expected,
                    "within_factor_three": report.within_factor_three,
                }
            )

        return CheckResult(
            name="trends",
            passed=True,
            report_only=True,
            details={
                "discrepancy": discrepancy,
                "discrepancy_nonincreasing_majority": nonincreasing_majority(discrepancy),
                "cusp_error": cusp_error,
                "cusp_error_nonincreasing_majority": nonincreasing_majority(cusp_error),
                "sup_norm": sup_norm,
                "cusp_mass": dict(zip((str(Y) for Y in CUSP_HEIGHTS), cusp_masses)),
                "cusp_mass_decreasing": all(b <= a for a, b in zip(cusp_masses, cusp_masses[1:])),
                "family_ball_discrepancy": family_balls,
                "family_ball_nonincreasing_majority": nonincreasing_majority(
                    [row["mean_square"] for row in family_balls if row["mean_square"] is not None]
                ),
                "ball_zeros": ball_zeros,
            },
        )

    def check_determinism(self) -> CheckResult:
        """Two evaluations of the same report render to identical bytes."""
        f = self._forms(12, self._plan.zero_terms(12))[0]
        first = render_json(valence_check(f, self._config).model_dump(mode="json"))
        second = render_json(valence_check(f, self._config).model_dump(mode="json"))
        return CheckResult(name="determinism", passed=first == second)
