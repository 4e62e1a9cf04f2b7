"""Minimax optimization of the Euler-product balance exponents."""

from __future__ import annotations

from typing import Callable, Dict, Optional

import mpmath

from mflab.logging import logger
from mflab.models import ExactAlphaReport, ExponentResult, MinimaxResult
from mflab.utils import golden_section_max

DPS = 40
INNER_TOL = 1e-12
OUTER_TOL = 1e-10
# Non-concave branches are bracketed on this grid before refinement.
BRACKET_GRID = 400
Objective = Callable[[mpmath.mpf, mpmath.mpf], mpmath.mpf]


def beta_objective(beta: mpmath.mpf, lam: mpmath.mpf) -> mpmath.mpf:
    """-beta/2 (lam - 1)^2 - (1 - beta) lam^2."""
    return -beta / 2 * (lam - 1) ** 2 - (1 - beta) * lam**2


def alpha_objective(alpha: mpmath.mpf, lam: mpmath.mpf) -> mpmath.mpf:
    """Simplified objective on lam in [0, 1]."""
    return -alpha / 2 * (lam - 1) ** 2 - (1 - alpha) * (
        lam**2 - 1 - (lam - 1) ** 2 / 4 + mpmath.mpf(1) / 4
    )


def alpha_exact_objective(alpha: mpmath.mpf, lam: mpmath.mpf) -> mpmath.mpf:
    """Unsimplified objective on lam in [0, 2]."""
    return -alpha / 2 * (lam - 1) ** 2 - (1 - alpha) * (
        lam**2 - 1 - (lam**2 - 1) ** 2 / 4 + mpmath.mpf(1) / 4
    )


def alpha_closed_form(alpha: mpmath.mpf) -> mpmath.mpf:
    """max over lam in [0, 1] of the simplified objective."""
    if alpha < mpmath.mpf(1) / 3:
        return 1 - 3 * alpha / 2
    return (1 - alpha) * (13 - 15 * alpha) / (4 * (3 - alpha))


def inner_max(
    fn: Callable[[mpmath.mpf], mpmath.mpf],
    lo: mpmath.mpf,
    hi: mpmath.mpf,
    tol: float = INNER_TOL,
    concave: bool = True,
) -> MinimaxResult:
    """
    Max of fn on [lo, hi] by golden section plus explicit endpoint checks.

    Without concavity the search is first bracketed around the best point of
    a uniform grid.
    """
    a, b = lo, hi
    if not concave:
        step = (hi - lo) / BRACKET_GRID
        points = [lo + j * step for j in range(BRACKET_GRID + 1)]
        best = max(range(len(points)), key=lambda j: fn(points[j]))
        a, b = max(lo, points[best] - step), min(hi, points[best] + step)
    x, value = golden_section_max(fn, a, b, tol)
    for end in (lo, hi):
        end_value = fn(end)
        if end_value > value:
            x, value = end, end_value
    return MinimaxResult(argopt=x, value=value)


def _outer_min(
    objective: Objective,
    lo: mpmath.mpf,
    hi: mpmath.mpf,
    lam_hi: mpmath.mpf,
    tol: float,
    inner_tol: float,
    concave: bool = True,
) -> MinimaxResult:
    def worst(t: mpmath.mpf) -> mpmath.mpf:
        return -inner_max(lambda lam: objective(t, lam), mpmath.mpf(0), lam_hi, inner_tol, concave).value

    t, value = golden_section_max(worst, lo, hi, tol)
    return MinimaxResult(argopt=t, value=-value)


def minimax_beta(tol: float = OUTER_TOL, inner_tol: float = INNER_TOL) -> MinimaxResult:
    """min over beta in [0, 1] of max over lam in [0, 2]: beta = 2 - sqrt 2."""
    with mpmath.workdps(DPS):
        result = _outer_min(beta_objective, mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf(2), tol, inner_tol)
    logger.debug("Beta minimax", beta=result.argopt, value=result.value)
    return result


def minimax_alpha(
    lower: float = 1 / 3, tol: float = OUTER_TOL, inner_tol: float = INNER_TOL
) -> MinimaxResult:
    """min over alpha in [lower, 1] of the simplified max over lam in [0, 1]."""
    with mpmath.workdps(DPS):
        lo = mpmath.mpf(1) / 3 if lower == 1 / 3 else mpmath.mpf(lower)
        result = _outer_min(alpha_objective, lo, mpmath.mpf(1), mpmath.mpf(1), tol, inner_tol)
    logger.debug("Alpha minimax", alpha=result.argopt, value=result.value, lower=lower)
    return result


def closed_form_deviation(points: int = 100) -> mpmath.mpf:
    """Max of |numeric inner max - closed form| / max(1, |closed form|) on an alpha grid."""
    with mpmath.workdps(DPS):
        worst = mpmath.mpf(0)
        for j in range(points):
            alpha = mpmath.mpf(1) / 3 + (1 - mpmath.mpf(1) / 3) * j / (points - 1)
            numeric = inner_max(lambda lam: alpha_objective(alpha, lam), mpmath.mpf(0), mpmath.mpf(1)).value
            closed = alpha_closed_form(alpha)
            worst = max(worst, abs(numeric - closed) / max(1, abs(closed)))
    return worst


def exact_alpha_objective_report(
    alpha: Optional[mpmath.mpf] = None, grid: int = 200
) -> ExactAlphaReport:
    """
    Compare the unsimplified alpha objective with the simplified one.

    The exact objective is not concave on [1, 2], so each branch is bracketed
    on a grid before refinement. The upper branch is reported as measured,
    both against -1/12 and against the lower branch.
    """
    with mpmath.workdps(DPS):
        alpha = alpha if alpha is not None else 3 - 8 / mpmath.sqrt(15)
        zero, one, two = mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf(2)

        gap = max(
            alpha_exact_objective(alpha, one * j / grid) - alpha_objective(alpha, one * j / grid)
            for j in range(grid + 1)
        )
        lower = inner_max(lambda lam: alpha_exact_objective(alpha, lam), zero, one, concave=False)
        upper = inner_max(lambda lam: alpha_exact_objective(alpha, lam), one, two, concave=False)
        exact = _outer_min(
            alpha_exact_objective, one / 3, one, two, OUTER_TOL, INNER_TOL, concave=False
        )
        twelfth = -one / 12

    report = ExactAlphaReport(
        alpha=alpha,
        exact_minimax=exact,
        simplified_dominates=gap <= 0,
        max_exact_minus_simplified=gap,
        upper_branch_max=upper.value,
        lower_branch_max=lower.value,
        upper_branch_below_twelfth=upper.value <= twelfth,
        upper_branch_dominated=upper.value <= lower.value + mpmath.mpf(10) ** (-30),
    )
    if not report.upper_branch_below_twelfth:
        logger.warning(
            "Upper branch of the exact objective exceeds -1/12",
            alpha=alpha,
            upper_branch_max=upper.value,
        )
    return report


def derived_exponents(
    beta: Optional[MinimaxResult] = None, alpha: Optional[MinimaxResult] = None
) -> ExponentResult:
    """kappa = -alpha minimax, delta = kappa/7, eta1 = 2 kappa/7, eta2 = eta1/2."""
    beta = beta or minimax_beta()
    alpha = alpha or minimax_alpha()
    with mpmath.workdps(DPS):
        kappa = -alpha.value
        eta1 = 2 * kappa / 7
        result = ExponentResult(
            beta=beta.argopt,
            beta_minimax=beta.value,
            alpha=alpha.argopt,
            alpha_minimax=alpha.value,
            kappa=kappa,
            delta=kappa / 7,
            eta1=eta1,
            eta2=eta1 / 2,
        )
    logger.info("Exponents derived", **result.printable())
    return result


def tolerance_stability(tol: float = OUTER_TOL) -> Dict[str, float]:
    """Change of each optimizer under tolerance halving, in units of tol."""
    with mpmath.workdps(DPS):
        changes = {
            "beta": abs(minimax_beta(tol).argopt - minimax_beta(tol / 2).argopt),
            "alpha": abs(minimax_alpha(tol=tol).argopt - minimax_alpha(tol=tol / 2).argopt),
        }
    return {name: float(change) / tol for name, change in changes.items()}
