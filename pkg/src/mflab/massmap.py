"""Mass distribution of y^k |f|^2: regions, rectangle discrepancy, cusp and sup norms."""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mflab.config import LabConfig
from mflab.eigenforms import eigenbasis, euler_products
from mflab.evaluate import (
    SQRT3_HALF,
    TWO_PI,
    DensityEvaluator,
    bulk_integral,
    normalize,
    strip_integral,
)
from mflab.logging import logger
from mflab.models import (
    BudgetError,
    CuspMassReport,
    DiscrepancyReport,
    FamilyBallReport,
    FundamentalDomain,
    HeckeEigenform,
    HPoint,
    HyperbolicBall,
    MassEstimate,
    MassHypothesisResult,
    QuadratureResult,
    Rectangle,
    RectangleDiscrepancy,
    Region,
    RegionError,
    SeriesForm,
    SiegelDomain,
    SupNormReport,
)
from mflab.qseries import cusp_dimension
from mflab.quadrature import integrate_2d
from mflab.utils import golden_section_max, ordered_map

UNIFORM_DENSITY = 3 / math.pi
# Max lattice rectangles tabulated by que_discrepancy.
RECTANGLE_BUDGET = 5_000_000
# Fixed polar lattice for the disks D_h(z0); radii step and angle count.
DISK_RADIUS_STEP = 1 / 128
DISK_ANGLES = 16
BALL_RADII = (0.2, 0.4, 0.8)
BALL_CENTER_X = (-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3)
BALL_CENTER_Y = (1.2, 1.6, 2.0, 3.0)
# Heights Y of the cusp regions F_Y tabulated by cusp_mass.
CUSP_HEIGHTS = (1.0, 1.5, 2.0, 3.0, 4.0)
HYPOTHESIS_H = 0.5


def hyperbolic_area(region: Region) -> float:
    """Integral of dx dy / y^2 over the region."""
    if isinstance(region, Rectangle):
        top = 0.0 if math.isinf(region.y2) else 1 / region.y2
        return (region.x2 - region.x1) * (1 / region.y1 - top)
    if isinstance(region, HyperbolicBall):
        return TWO_PI * (math.cosh(region.radius) - 1)
    if isinstance(region, SiegelDomain):
        return 1 / region.Y
    return math.pi / 3


def strip_mass(form: SeriesForm, y1: float, y2: float = math.inf) -> float:
    """mu_f of the full-width strip y1 <= y <= y2 (closed form, normalized)."""
    return float(strip_integral(form, y1, y2, normalized=True))


def _quad_options(config: LabConfig, threads: Optional[int] = None) -> dict:
    return dict(
        rel_tol=config.quad_tol,
        abs_tol=config.quad_tol,
        nodes=config.quad_nodes,
        max_depth=config.quad_max_depth,
        threads=config.threads if threads is None else threads,
    )


def _rectangle_quadrature(
    evaluator: DensityEvaluator,
    x_range: Tuple[float, float],
    y_range: Tuple[float, float],
    config: LabConfig,
    threads: Optional[int] = None,
) -> QuadratureResult:
    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(evaluator.log_density(x, y)) / (y * y)

    return integrate_2d(integrand, x_range, y_range, **_quad_options(config, threads))


def _ball_quadrature(
    evaluator: DensityEvaluator,
    ball: HyperbolicBall,
    config: LabConfig,
    threads: Optional[int] = None,
) -> QuadratureResult:
    cx, cy, rad = ball.euclidean()

    def integrand(rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
        x = cx + rho * np.cos(theta)
        y = cy + rho * np.sin(theta)
        return np.exp(evaluator.log_density(x, y)) * rho / (y * y)

    return integrate_2d(integrand, (0.0, rad), (0.0, TWO_PI), **_quad_options(config, threads))


def _cusp_cut(form: SeriesForm, y_start: float, tol: float) -> Tuple[float, float]:
    """Height above which the full-width strip mass is below tol, and that mass."""
    y = max(y_start, 1.0)
    tail = strip_mass(form, y)
    while tail > tol:
        y *= 2
        tail = strip_mass(form, y)
    return y, tail


def mass_region(form: SeriesForm, region: Region, config: LabConfig) -> MassEstimate:
    """
    mu_f(R) for a Petersson-normalized form.

    Full-width strips use the incomplete-gamma closed form; other regions use
    adaptive quadrature of y^k|f|^2 dx dy / y^2.

    Raises:
        NormalizationError: If the form carries no normalization constant
        QuadratureError: If the quadrature does not converge
    """
    form.scale(True)
    if isinstance(region, SiegelDomain):
        return MassEstimate(value=strip_mass(form, region.Y), error=0.0, method="strip")

    if isinstance(region, FundamentalDomain):
        strip = strip_mass(form, 1.0)
        bulk, error = bulk_integral(form, config, normalized=True)
        return MassEstimate(
            value=strip + float(bulk), error=float(error), method="strip+quadrature"
        )

    evaluator = DensityEvaluator(form, normalized=True)
    if isinstance(region, HyperbolicBall):
        result = _ball_quadrature(evaluator, region, config)
        return MassEstimate(value=result.value, error=result.error, method="quadrature")

    full_width = region.x2 - region.x1 == 1.0
    if full_width and region.y1 >= 1:
        return MassEstimate(
            value=strip_mass(form, region.y1, region.y2), error=0.0, method="strip"
        )

    y_top, cut_error = region.y2, 0.0
    if math.isinf(region.y2):
        y_top, cut_error = _cusp_cut(form, region.y1, 0.01 * config.quad_tol)
        y_top = max(y_top, region.y1)
    if y_top <= region.y1:
        return MassEstimate(value=0.0, error=cut_error, method="quadrature")
    result = _rectangle_quadrature(evaluator, (region.x1, region.x2), (region.y1, y_top), config)
    return MassEstimate(
        value=result.value, error=result.error + cut_error, method="quadrature"
    )


# =============================================================================
# Rectangle discrepancy
# =============================================================================


def lattice_edges(grid: int, y_cap: float) -> Tuple[np.ndarray, np.ndarray]:
    """x edges over [-1/2, 1/2] and y edges over [1, y_cap]."""
    return np.linspace(-0.5, 0.5, grid + 1), np.linspace(1.0, y_cap, grid + 1)


def lattice_cell_masses(
    form: SeriesForm, config: LabConfig, grid: int, y_cap: float
) -> np.ndarray:
    """grid x grid array of cell masses, indexed [x cell, y cell]."""
    evaluator = DensityEvaluator(form, normalized=True)
    xs, ys = lattice_edges(grid, y_cap)
    cells = [(i, j) for i in range(grid) for j in range(grid)]

    def cell_mass(cell: Tuple[int, int]) -> float:
        i, j = cell
        return _rectangle_quadrature(
            evaluator, (xs[i], xs[i + 1]), (ys[j], ys[j + 1]), config, threads=1
        ).value

    values = ordered_map(cell_mass, cells, config.threads)
    return np.array(values, dtype=np.float64).reshape(grid, grid)


def _prefix_sums(cells: np.ndarray) -> np.ndarray:
    prefix = np.zeros((cells.shape[0] + 1, cells.shape[1] + 1))
    prefix[1:, 1:] = cells.cumsum(axis=0).cumsum(axis=1)
    return prefix


def que_discrepancy(
    form: SeriesForm,
    config: LabConfig,
    grid: Optional[int] = None,
    y_cap: Optional[float] = None,
    budget: int = RECTANGLE_BUDGET,
) -> DiscrepancyReport:
    """
    Supremum over lattice rectangles of |mu_f(R) - (3/pi) vol(R)|.

    Rectangles have corners on a grid x grid lattice of [-1/2, 1/2] x [1, y_cap];
    their masses come from cell masses through 2D prefix sums, so they are
    exactly additive.

    Raises:
        BudgetError: If the lattice has more rectangles than the budget; the
            partial report covers the rectangles tabulated so far
    """
    grid = grid or config.rect_grid
    y_cap = y_cap or config.rect_y_cap
    logger.info("Computing rectangle discrepancy", form=form.label, grid=grid, y_cap=y_cap)

    prefix = _prefix_sums(lattice_cell_masses(form, config, grid, y_cap))
    xs, ys = lattice_edges(grid, y_cap)
    j1, j2 = np.triu_indices(grid + 1, k=1)
    inverse_y = 1 / ys

    table: List[RectangleDiscrepancy] = []
    exhausted = False
    for i1 in range(grid):
        for i2 in range(i1 + 1, grid + 1):
            mass = prefix[i2, j2] - prefix[i1, j2] - prefix[i2, j1] + prefix[i1, j1]
            uniform = UNIFORM_DENSITY * (xs[i2] - xs[i1]) * (inverse_y[j1] - inverse_y[j2])
            discrepancy = np.abs(mass - uniform)
            for a, b, m, u, d in zip(j1, j2, mass, uniform, discrepancy):
                table.append(
                    RectangleDiscrepancy(
                        rectangle=Rectangle(
                            x1=float(xs[i1]), x2=float(xs[i2]), y1=float(ys[a]), y2=float(ys[b])
                        ),
                        mass=float(m),
                        uniform=float(u),
                        discrepancy=float(d),
                    )
                )
            if len(table) >= budget:
                exhausted = True
                break
        if exhausted:
            break

    best = max(table, key=lambda r: r.discrepancy)
    predictors = None
    if isinstance(form, HeckeEigenform):
        predictors = euler_products(form, min(config.l1_prime_cutoff, form.terms))
    report = DiscrepancyReport(
        weight=form.weight,
        label=form.label,
        grid=grid,
        y_cap=y_cap,
        sup_discrepancy=best.discrepancy,
        argmax=best.rectangle,
        table=table,
        euler_products=predictors,
    )
    if exhausted:
        raise BudgetError(
            f"Rectangle lattice {grid}x{grid} exceeds the budget of {budget} rectangles",
            partial=report,
        )
    logger.info(
        "Rectangle discrepancy computed",
        form=form.label,
        sup_discrepancy=best.discrepancy,
        rectangles=len(table),
    )
    return report


# =============================================================================
# Local mass lower bound
# =============================================================================


def disk_offsets(h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fixed polar lattice inside the Euclidean disk of radius h (centre included)."""
    radii = DISK_RADIUS_STEP * np.arange(1, int(math.floor(h / DISK_RADIUS_STEP)) + 1)
    angles = TWO_PI * np.arange(DISK_ANGLES) / DISK_ANGLES
    R, A = np.meshgrid(radii, angles, indexing="ij")
    dx = np.concatenate([[0.0], (R * np.cos(A)).ravel()])
    dy = np.concatenate([[0.0], (R * np.sin(A)).ravel()])
    return dx, dy


def center_grid(spacing: float, y_max: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
    """Points of a square lattice with the given spacing inside F below y_max."""
    xs = np.arange(-0.5, 0.5 + 1e-12, spacing)
    ys = np.arange(SQRT3_HALF, y_max + 1e-12, spacing)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    keep = X * X + Y * Y >= 1
    return X[keep], Y[keep]


def mass_hypothesis(
    form: SeriesForm,
    h: float,
    config: LabConfig,
    spacing: Optional[float] = None,
    y_max: float = 2.0,
) -> MassHypothesisResult:
    """
    Check that every z0 of F below y_max has a z1 in D_h(z0) with y^k|f(z1)|^2 >= e^{-kh}.

    The implied constant is taken as 1. Requires h > log k / k; otherwise the
    result only reports the failed precondition.
    """
    k = form.weight
    threshold = -k * h
    if h <= math.log(k) / k:
        logger.warning("Mass hypothesis precondition fails", form=form.label, h=h)
        return MassHypothesisResult(
            h=h, precondition_ok=False, holds=False, log_threshold=threshold
        )

    evaluator = DensityEvaluator(form, normalized=True)
    cx, cy = center_grid(spacing or h / 2, y_max)
    dx, dy = disk_offsets(h)
    X = cx[:, None] + dx[None, :]
    Y = cy[:, None] + dy[None, :]
    values = np.full(X.shape, -np.inf)
    above = Y > 0
    values[above] = evaluator.log_density(X[above], Y[above])
    local_max = values.max(axis=1)
    worst = int(np.argmin(local_max))
    log_min = float(local_max[worst])

    result = MassHypothesisResult(
        h=h,
        precondition_ok=True,
        holds=log_min >= threshold,
        log_min_local_max=log_min,
        log_threshold=threshold,
        grid_points=int(cx.size),
        disk_samples=int(dx.size),
        worst_center=(float(cx[worst]), float(cy[worst])),
    )
    logger.info("Mass hypothesis checked", form=form.label, h=h, holds=result.holds)
    return result


# =============================================================================
# Cusp and sup norm
# =============================================================================


def cusp_mass(form: SeriesForm, Y: float) -> CuspMassReport:
    """mu_f(F_Y) against the uniform share 3/(pi Y) and the Y^{-1/2} decay."""
    if Y < 1:
        raise RegionError(f"Cusp mass needs Y >= 1, got {Y}")
    return CuspMassReport(
        Y=Y,
        mass=strip_mass(form, Y),
        area=1 / Y,
        uniform_mass=UNIFORM_DENSITY / Y,
        decay_reference=Y**-0.5,
    )


def sup_norm_report(
    form: SeriesForm, config: LabConfig, grid: int = 64, refine: bool = True
) -> SupNormReport:
    """Max of y^{k/2}|f| over F below max(k/2pi, 1), by grid scan and local refinement."""
    k = form.weight
    evaluator = DensityEvaluator(form, normalized=True)
    xs = np.linspace(-0.5, 0.5, grid)
    ys = np.linspace(SQRT3_HALF, max(k / TWO_PI, 1.0), grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    values = evaluator.log_abs_F(X.ravel(), Y.ravel())
    best = int(np.argmax(values))
    bx, by, top = float(X.ravel()[best]), float(Y.ravel()[best]), float(values[best])

    if refine:
        step_x = 1.0 / max(grid - 1, 1)
        step_y = (ys[-1] - ys[0]) / max(grid - 1, 1)
        for _ in range(3):
            x, fx = golden_section_max(
                lambda x: float(evaluator.log_abs_F(x, by)[0]), bx - step_x, bx + step_x, 1e-10
            )
            if fx > top:
                bx, top = x, fx
            y, fy = golden_section_max(
                lambda y: float(evaluator.log_abs_F(bx, y)[0]),
                max(by - step_y, 1e-3),
                by + step_y,
                1e-10,
            )
            if fy > top:
                by, top = y, fy

    max_value = math.exp(top)
    return SupNormReport(
        weight=k,
        label=form.label,
        max_value=max_value,
        location=(bx, by),
        k_quarter=k**0.25,
        k_half=k**0.5,
        ratio_quarter=max_value / k**0.25,
    )


# =============================================================================
# Family ball discrepancy
# =============================================================================


def ball_family(
    radii: Sequence[float] = BALL_RADII,
    xs: Sequence[float] = BALL_CENTER_X,
    ys: Sequence[float] = BALL_CENTER_Y,
) -> List[HyperbolicBall]:
    """Lattice of centres in F times radii (the density is invariant, so balls may leave F)."""
    return [
        HyperbolicBall(center=HPoint(x=x, y=y), radius=r)
        for r in radii
        for x in xs
        for y in ys
        if abs(x) <= 0.5 and x * x + y * y >= 1
    ]


def family_ball_discrepancy(
    k: int,
    config: LabConfig,
    forms: Optional[List[SeriesForm]] = None,
    terms: Optional[int] = None,
    balls: Optional[List[HyperbolicBall]] = None,
) -> FamilyBallReport:
    """Family average of sup over balls of |mu_f(B) - (3/pi) vol(B)|^2."""
    balls = ball_family() if balls is None else balls
    if forms is None:
        d = cusp_dimension(k)
        forms = eigenbasis(k, terms or max(60, 3 * (d + 1)), config.prec_bits) if d else []
    forms = [f if f.normalized else normalize(f, config) for f in forms]

    sups: List[float] = []
    for f in forms:
        evaluator = DensityEvaluator(f, normalized=True)

        def discrepancy(ball: HyperbolicBall) -> float:
            mass = _ball_quadrature(evaluator, ball, config, threads=1).value
            return abs(mass - UNIFORM_DENSITY * hyperbolic_area(ball))

        sups.append(max(ordered_map(discrepancy, balls, config.threads), default=0.0))

    mean_square = sum(s * s for s in sups) / len(sups) if sups else None
    return FamilyBallReport(
        weight=k,
        balls=len(balls),
        per_form_sup=sups,
        family_mean_square=mean_square,
        reference=k ** (-1 / 21),
    )
