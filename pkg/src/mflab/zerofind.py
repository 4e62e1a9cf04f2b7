"""Zero location by the argument principle, valence checks and zero statistics."""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Tuple

import mpmath
import numpy as np

from mflab.config import LabConfig
from mflab.eigenforms import eigenbasis, eisenstein_form
from mflab.evaluate import (
    SQRT3_HALF,
    TWO_PI,
    DensityEvaluator,
    eval_f,
    float_coefficients,
    log_tail_majorant,
)
from mflab.logging import logger
from mflab.models import (
    BallStatistic,
    Bump,
    ContourThroughZero,
    EisensteinZeroReport,
    FamilyZeroBallReport,
    HeckeEigenform,
    HPoint,
    HyperbolicBall,
    QuadratureError,
    Rectangle,
    RegionError,
    RudnickCheck,
    SamplingError,
    SeriesForm,
    SingularQuadError,
    UnresolvedCluster,
    ValenceReport,
    ZeroRecord,
    ZeroSet,
)
from mflab.qseries import cusp_dimension
from mflab.quadrature import integrate_2d
from mflab.utils import ordered_map

# Margin added around F for the fundamental-domain search box.
SEARCH_MARGIN = 0.01
# Largest phase step accepted between neighbouring samples.
MAX_PHASE_STEP = math.pi / 4
# Off-centre so split lines miss the symmetry lines Re z = 0 and Re z = -1/2.
SPLIT_RATIO = 0.4927
SPLIT_PERTURBATION = 0.0137
# Isolating boxes and duplicate detection scale with the zero tolerance.
ISOLATION_FACTOR = 64
MERGE_FACTOR = 100
# No-zero height: tail beyond the leading term must stay below this fraction.
DOMINANCE_RATIO = 0.5


class Box(NamedTuple):
    """Axis-parallel box [x1, x2] x [y1, y2] with mpf corners."""

    x1: mpmath.mpf
    x2: mpmath.mpf
    y1: mpmath.mpf
    y2: mpmath.mpf

    @classmethod
    def around(cls, z: mpmath.mpc, radius: mpmath.mpf) -> "Box":
        return cls(z.real - radius, z.real + radius, z.imag - radius, z.imag + radius)

    @property
    def diameter(self) -> mpmath.mpf:
        return mpmath.hypot(self.x2 - self.x1, self.y2 - self.y1)

    @property
    def center(self) -> mpmath.mpc:
        return mpmath.mpc((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)

    def corners(self) -> List[mpmath.mpc]:
        """Corners in counterclockwise order starting bottom-left."""
        return [
            mpmath.mpc(self.x1, self.y1),
            mpmath.mpc(self.x2, self.y1),
            mpmath.mpc(self.x2, self.y2),
            mpmath.mpc(self.x1, self.y2),
        ]

    def split(self, ratio: float) -> List["Box"]:
        xm = self.x1 + ratio * (self.x2 - self.x1)
        ym = self.y1 + ratio * (self.y2 - self.y1)
        return [
            Box(self.x1, xm, self.y1, ym),
            Box(xm, self.x2, self.y1, ym),
            Box(self.x1, xm, ym, self.y2),
            Box(xm, self.x2, ym, self.y2),
        ]

    def expanded(self, margin: mpmath.mpf) -> "Box":
        return Box(self.x1 - margin, self.x2 + margin, self.y1 - margin, self.y2 + margin)

    def contains(self, z: mpmath.mpc, slack: mpmath.mpf = 0) -> bool:
        return (
            self.x1 - slack <= z.real <= self.x2 + slack
            and self.y1 - slack <= z.imag <= self.y2 + slack
        )


class PhaseTracker:
    """
    Continuous arg f along box edges, sharing samples across boxes.

    Every sample must clear the truncation bound, so a computed phase is
    never an artefact of the cut-off series.
    """

    def __init__(self, form: SeriesForm, tol: float, budget: int):
        self.form = form
        self.tol = mpmath.mpf(tol)
        self.budget = budget
        self.samples = 0
        self._values: Dict[Tuple[mpmath.mpf, mpmath.mpf], mpmath.mpc] = {}
        self._edges: Dict[Tuple[mpmath.mpf, ...], mpmath.mpf] = {}
        self._lock = threading.Lock()
        # Initial pieces per unit length resolve the e(nx) oscillation.
        self._density = form.weight + 8

    def value(self, z: mpmath.mpc) -> mpmath.mpc:
        key = (z.real, z.imag)
        with self._lock:
            if key in self._values:
                return self._values[key]
        sample = eval_f(self.form, HPoint(x=z.real, y=z.imag))
        if abs(sample.value) <= sample.tail_bound:
            raise ContourThroughZero(
                f"|f| is below its truncation bound at {mpmath.nstr(z, 12)}"
            )
        with self._lock:
            self.samples += 1
            if self.samples > self.budget:
                raise SamplingError(
                    f"Phase tracking exceeded the budget of {self.budget} samples"
                )
            self._values[key] = sample.value
        return sample.value

    def _segment(self, a: mpmath.mpc, b: mpmath.mpc) -> mpmath.mpf:
        total = mpmath.mpf(0)
        stack = [(a, b, self.value(a), self.value(b))]
        while stack:
            za, zb, fa, fb = stack.pop()
            jump = mpmath.arg(fb / fa)
            if abs(jump) <= MAX_PHASE_STEP:
                total += jump
                continue
            if abs(zb - za) < self.tol / 64:
                raise ContourThroughZero(
                    f"Phase jumps by {float(jump):.3f} across {mpmath.nstr(za, 12)}"
                )
            zm = za + SPLIT_RATIO * (zb - za)
            fm = self.value(zm)
            stack.append((zm, zb, fm, fb))
            stack.append((za, zm, fa, fm))
        return total

    def edge_change(self, a: mpmath.mpc, b: mpmath.mpc) -> mpmath.mpf:
        """Change of arg f from a to b along the straight segment."""
        key = (a.real, a.imag, b.real, b.imag)
        reverse = (b.real, b.imag, a.real, a.imag)
        with self._lock:
            if key in self._edges:
                return self._edges[key]
            if reverse in self._edges:
                return -self._edges[reverse]
        pieces = max(2, int(math.ceil(float(abs(b - a)) * self._density)))
        points = [a + (b - a) * mpmath.mpf(j) / pieces for j in range(pieces)] + [b]
        change = mpmath.fsum(self._segment(p, q) for p, q in zip(points, points[1:]))
        with self._lock:
            self._edges[key] = change
        return change

    def winding(self, box: Box) -> int:
        """Number of zeros inside the box, counted with multiplicity."""
        corners = box.corners()
        total = mpmath.fsum(
            self.edge_change(corners[i], corners[(i + 1) % 4]) for i in range(4)
        )
        turns = total / (2 * mpmath.pi)
        count = int(mpmath.nint(turns))
        if abs(turns - count) > 0.05 or count < 0:
            raise SamplingError(
                f"Winding number {mpmath.nstr(turns, 8)} is not a non-negative integer"
            )
        return count


# =============================================================================
# Search in a box
# =============================================================================


def _newton(
    form: SeriesForm, box: Box, multiplicity: int, config: LabConfig
) -> Optional[mpmath.mpc]:
    """Modified Newton z -= m f/f' from the box centre; None on divergence."""
    z = box.center
    stop = mpmath.mpf(config.zero_tol) / 100
    for _ in range(config.newton_max_steps):
        sample = eval_f(form, HPoint(x=z.real, y=z.imag), with_derivative=True)
        if sample.derivative == 0:
            return None
        step = multiplicity * sample.value / sample.derivative
        z -= step
        if z.imag <= 0 or not box.contains(z, slack=box.diameter):
            return None
        if abs(step) < stop:
            inside = box.contains(z, slack=ISOLATION_FACTOR * mpmath.mpf(config.zero_tol))
            return z if inside else None
    return None


def _isolated(tracker: PhaseTracker, z: mpmath.mpc, multiplicity: int, radius) -> bool:
    try:
        return tracker.winding(Box.around(z, radius)) == multiplicity
    except ContourThroughZero:
        return False


def _record(
    form: SeriesForm, z: mpmath.mpc, multiplicity: int, radius: mpmath.mpf
) -> ZeroRecord:
    residual = abs(eval_f(form, HPoint(x=z.real, y=z.imag)).value)
    return ZeroRecord(
        location=HPoint(x=z.real, y=z.imag),
        multiplicity=multiplicity,
        box_radius=float(radius),
        residual=residual,
    )


def _split_windings(
    tracker: PhaseTracker, box: Box, config: LabConfig
) -> List[Tuple[Box, int]]:
    for attempt in range(config.perturb_retries + 1):
        children = box.split(SPLIT_RATIO + attempt * SPLIT_PERTURBATION)
        try:
            return [(child, tracker.winding(child)) for child in children]
        except ContourThroughZero as e:
            logger.debug("Split line meets a zero, perturbing", attempt=attempt, error=str(e))
    if box.diameter <= config.newton_radius:
        raise UnresolvedCluster(
            f"Zeros near {mpmath.nstr(box.center, 12)} could not be separated"
        )
    raise ContourThroughZero(
        f"Every split of the box around {mpmath.nstr(box.center, 12)} meets a zero"
    )


def _process(
    form: SeriesForm,
    tracker: PhaseTracker,
    box: Box,
    multiplicity: int,
    config: LabConfig,
) -> Tuple[List[ZeroRecord], List[Tuple[Box, int]]]:
    tol = mpmath.mpf(config.zero_tol)
    if box.diameter <= config.newton_radius:
        z = _newton(form, box, multiplicity, config)
        radius = ISOLATION_FACTOR * tol
        if z is not None and _isolated(tracker, z, multiplicity, radius):
            return [_record(form, z, multiplicity, radius)], []
        if box.diameter < tol:
            return [_record(form, box.center, multiplicity, box.diameter / 2)], []

    children = _split_windings(tracker, box, config)
    if sum(w for _, w in children) != multiplicity:
        raise SamplingError(
            f"Child windings {[w for _, w in children]} do not add up to {multiplicity}"
        )
    return [], [(child, w) for child, w in children if w > 0]


def _top_level(tracker: PhaseTracker, box: Box, config: LabConfig) -> Tuple[Box, int]:
    step = mpmath.mpf(config.zero_tol) / 7
    for attempt in range(config.perturb_retries + 1):
        candidate = box.expanded(attempt * step)
        try:
            return candidate, tracker.winding(candidate)
        except ContourThroughZero as e:
            logger.warning(
                "Search box boundary meets a zero, perturbing",
                attempt=attempt,
                error=str(e),
            )
    raise ContourThroughZero(
        f"Search box boundary still meets a zero after {config.perturb_retries} shifts"
    )


def elliptic_points() -> List[Tuple[mpmath.mpc, Fraction]]:
    """i, rho and rho + 1 with their elliptic weights."""
    rho = mpmath.mpc(-0.5, mpmath.sqrt(3) / 2)
    return [(mpmath.mpc(0, 1), Fraction(1, 2)), (rho, Fraction(1, 3)), (rho + 1, Fraction(1, 3))]


def _snap(record: ZeroRecord, config: LabConfig) -> ZeroRecord:
    z = record.location.z
    for point, weight in elliptic_points():
        if abs(z - point) <= config.snap_factor * config.zero_tol:
            return record.model_copy(
                update={"location": HPoint(x=point.real, y=point.imag), "elliptic_weight": weight}
            )
    return record


def zeros_in_region(
    form: SeriesForm,
    box: Rectangle,
    config: LabConfig,
) -> ZeroSet:
    """
    All zeros of f inside an axis-parallel box.

    Boxes of non-zero winding are subdivided level by level; below newton_radius
    a modified Newton step locates the zero, and a box of radius
    64 * zero_tol around it must wind exactly `multiplicity` times.

    Raises:
        ContourThroughZero: If the boundary cannot be moved off a zero
        SamplingError: If the sample budget runs out or windings disagree
        UnresolvedCluster: If zeros closer than the tolerance cannot be split
    """
    if math.isinf(box.y2):
        raise RegionError("Zero search needs a bounded box")
    logger.debug("Searching zeros", form=form.label, box=box.model_dump())

    records: List[ZeroRecord] = []
    with mpmath.workprec(form.precision_bits + 32):
        tracker = PhaseTracker(form, config.zero_tol, config.sample_budget)
        root, total = _top_level(
            tracker,
            Box(mpmath.mpf(box.x1), mpmath.mpf(box.x2), mpmath.mpf(box.y1), mpmath.mpf(box.y2)),
            config,
        )
        pending = [(root, total)] if total else []
        while pending:
            results = ordered_map(
                lambda item: _process(form, tracker, item[0], item[1], config),
                pending,
                config.threads,
                prec=form.precision_bits + 32,
            )
            pending = []
            for found, children in results:
                records.extend(found)
                pending.extend(children)
        records = [_snap(r, config) for r in records]

    logger.info(
        "Zero search finished",
        form=form.label,
        zeros=len(records),
        winding=total,
        samples=tracker.samples,
    )
    return ZeroSet.build(records)


# =============================================================================
# Fundamental domain and valence
# =============================================================================


def no_zero_height(form: SeriesForm) -> float:
    """
    Height above which the leading Fourier term dominates, so f has no zeros.

    Smallest y (found by bisection) at which the remaining coefficients plus
    the tail majorant sum to less than half the leading term.
    """
    log_abs, _, n0 = float_coefficients(form)
    log_const = float(mpmath.log(form.majorant_const))
    n = np.arange(form.terms + 1)
    rest = n > n0

    def ratio(y: float) -> float:
        head = np.exp(log_abs[rest] - log_abs[n0] - TWO_PI * (n[rest] - n0) * y).sum()
        tail = log_tail_majorant(log_const, form.majorant_exponent, 0, form.terms, y)
        return float(head) + math.exp(min(tail + TWO_PI * n0 * y - log_abs[n0], 700.0))

    lo = SQRT3_HALF
    if ratio(lo) < DOMINANCE_RATIO:
        return lo
    hi = 1.0
    while ratio(hi) >= DOMINANCE_RATIO:
        hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ratio(mid) < DOMINANCE_RATIO:
            hi = mid
        else:
            lo = mid
    return hi


def _merge_distance(z: mpmath.mpc, w: mpmath.mpc) -> mpmath.mpf:
    dx = abs(z.real - w.real)
    return mpmath.hypot(min(dx, abs(dx - 1)), z.imag - w.imag)


def _canonical(record: ZeroRecord, config: LabConfig) -> ZeroRecord:
    """Move a zero onto the half-open representative of F."""
    z = record.location.z
    near = MERGE_FACTOR * config.zero_tol
    while z.real >= 0.5 - near:
        z -= 1
    while z.real < -0.5 - near:
        z += 1
    if z.real * z.real + z.imag * z.imag < 1 - near:
        z = -1 / z
        while z.real >= 0.5 - near:
            z -= 1
        while z.real < -0.5 - near:
            z += 1
    if abs(abs(z) - 1) <= near and z.real > near:
        z = mpmath.mpc(-z.real, z.imag)
    return record.model_copy(update={"location": HPoint(x=z.real, y=z.imag)})


def _inside_closure(z: mpmath.mpc, slack: float) -> bool:
    return abs(z.real) <= 0.5 + slack and abs(z) >= 1 - slack


def zeros_in_fundamental_domain(form: SeriesForm, config: LabConfig) -> ZeroSet:
    """Zeros in F, each counted once, elliptic points weighted, cusp order declared."""
    y_top = max(no_zero_height(form), SQRT3_HALF + 2 * SEARCH_MARGIN)
    box = Rectangle(
        x1=-0.5 - SEARCH_MARGIN,
        x2=0.5 + SEARCH_MARGIN,
        y1=SQRT3_HALF - SEARCH_MARGIN,
        y2=y_top + SEARCH_MARGIN,
    )
    found = zeros_in_region(form, box, config)
    slack = MERGE_FACTOR * config.zero_tol

    kept: List[ZeroRecord] = []
    with mpmath.workprec(form.precision_bits + 32):
        for record in found.zeros:
            if record.elliptic_weight == 1:
                record = _canonical(record, config)
            elif record.location.x > 0:
                shifted = HPoint(x=record.location.x - 1, y=record.location.y)
                record = _snap(record.model_copy(update={"location": shifted}), config)
            z = record.location.z
            if not _inside_closure(z, slack):
                continue
            if any(_merge_distance(z, other.location.z) <= slack for other in kept):
                continue
            kept.append(record)

    logger.debug("Fundamental domain zeros", form=form.label, count=len(kept), y_top=y_top)
    return ZeroSet.build(kept, cusp_order=form.valuation())


def valence_check(form: SeriesForm, config: LabConfig) -> ValenceReport:
    """Check that weighted zeros in F plus the cusp order equal k/12 exactly."""
    zeros = zeros_in_fundamental_domain(form, config)
    expected = Fraction(form.weight, 12)
    passed = zeros.weighted_total == expected
    if not passed:
        logger.error(
            "Valence identity failed",
            form=form.label,
            weighted_total=zeros.weighted_total,
            expected=expected,
        )
    return ValenceReport(
        label=form.label,
        weight=form.weight,
        cusp_order=zeros.cusp_order,
        interior_total=zeros.interior_total,
        weighted_total=zeros.weighted_total,
        expected=expected,
        passed=passed,
        zeros=zeros.zeros,
    )


def rsd_eisenstein_zeros(
    k: int, config: LabConfig, terms: Optional[int] = None
) -> EisensteinZeroReport:
    """Zeros of E_k in F with their distance from the unit arc."""
    form = eisenstein_form(k, terms or max(64, 4 * k), config.prec_bits)
    zeros = zeros_in_fundamental_domain(form, config)
    deviations = [float(abs(abs(r.location.z) - 1)) for r in zeros.zeros]
    arguments = sorted(float(mpmath.arg(r.location.z)) for r in zeros.zeros)
    return EisensteinZeroReport(
        weight=k,
        zeros=zeros.zeros,
        max_deviation=max(deviations, default=0.0),
        arguments=arguments,
    )


# =============================================================================
# Hyperbolic balls
# =============================================================================


def hyperbolic_distance(z: HPoint, w: HPoint) -> mpmath.mpf:
    """d(z, w) = arccosh(1 + |z - w|^2 / (2 Im z Im w))."""
    return mpmath.acosh(1 + abs(z.z - w.z) ** 2 / (2 * z.y * w.y))


def ball_area(radius: float) -> float:
    """Hyperbolic area 2 pi (cosh r - 1)."""
    return TWO_PI * (math.cosh(radius) - 1)


def ball_area_quadrature(ball: HyperbolicBall, config: LabConfig) -> float:
    """Integral of dx dy / y^2 over the ball in polar coordinates about its Euclidean centre."""
    cx, cy, rad = ball.euclidean()

    def integrand(rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
        y = cy + rho * np.sin(theta)
        return rho / (y * y)

    result = integrate_2d(
        integrand,
        (0.0, rad),
        (0.0, TWO_PI),
        rel_tol=min(config.quad_tol, 1e-10),
        nodes=config.quad_nodes,
        max_depth=config.quad_max_depth,
    )
    return result.value


def _ball_zeros(form: SeriesForm, ball: HyperbolicBall, config: LabConfig) -> ZeroSet:
    cx, cy, rad = ball.euclidean()
    box = Rectangle(x1=cx - rad, x2=cx + rad, y1=cy - rad, y2=cy + rad)
    return zeros_in_region(form, box, config)


def ball_zero_statistic(
    form: SeriesForm,
    ball: HyperbolicBall,
    config: LabConfig,
    zeros: Optional[ZeroSet] = None,
    unfolded: bool = False,
) -> BallStatistic:
    """
    Weighted zero count in B(z0, r) against (k/12)(3/pi) Area(B).

    With unfolded=True the ball may leave F: zeros of f in the ball in H are
    counted with multiplicity only, since the zero set is Gamma-invariant and
    has the same density (k/12)(3/pi) per unit hyperbolic area.

    Raises:
        RegionError: If the ball leaves F and unfolded is False
    """
    if not unfolded and not ball.inside_fundamental_domain():
        raise RegionError(f"Ball {ball.model_dump()} is not contained in F")
    zeros = zeros if zeros is not None else _ball_zeros(form, ball, config)
    count = sum(
        (
            Fraction(r.multiplicity) if unfolded else r.weighted
            for r in zeros.zeros
            if hyperbolic_distance(r.location, ball.center) < ball.radius
        ),
        Fraction(0),
    )
    area = ball_area(ball.radius)
    share = form.weight / 12
    return BallStatistic(
        center=ball.center,
        radius=ball.radius,
        count=count,
        expected=share * 3 / math.pi * area,
        area=area,
        ratio_error=float(count) / share - 3 / math.pi * area,
    )


def family_ball_zero_report(
    k: int,
    ball: HyperbolicBall,
    config: LabConfig,
    forms: Optional[List[SeriesForm]] = None,
    terms: Optional[int] = None,
) -> FamilyZeroBallReport:
    """
    Ball statistics for every form of weight k, their mean count and mean |ratio_error|.

    A ball leaving F is counted unfolded; weights without cusp forms give an
    empty report.
    """
    if forms is None:
        d = cusp_dimension(k)
        forms = eigenbasis(k, terms or max(60, 3 * (d + 1)), config.prec_bits) if d else []
    unfolded = not ball.inside_fundamental_domain()
    stats = [ball_zero_statistic(f, ball, config, unfolded=unfolded) for f in forms]
    mean_count = sum(float(s.count) for s in stats) / len(stats) if stats else None
    mean = sum(abs(s.ratio_error) for s in stats) / len(stats) if stats else None
    report = FamilyZeroBallReport(
        weight=k,
        center=ball.center,
        radius=ball.radius,
        unfolded=unfolded,
        expected=k / 12 * 3 / math.pi * ball_area(ball.radius),
        stats=stats,
        mean_count=mean_count,
        mean_abs_ratio_error=mean,
    )
    logger.info(
        "Family ball zero count",
        weight=k,
        forms=len(stats),
        mean_count=mean_count,
        expected=report.expected,
    )
    return report



# =============================================================================
# Bumps and the zero-sum identity
# =============================================================================


def _psi(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """psi(t) = exp(-1/(1-t^2)) on |t| < 1 with its first two derivatives."""
    t = np.asarray(t, dtype=np.float64)
    inside = np.abs(t) < 1
    value = np.zeros_like(t)
    first = np.zeros_like(t)
    second = np.zeros_like(t)
    ti = t[inside]
    u = 1 - ti * ti
    v = np.exp(-1 / u)
    g1 = -2 * ti / (u * u)
    g2 = -2 * (1 + 3 * ti * ti) / (u * u * u)
    value[inside] = v
    first[inside] = v * g1
    second[inside] = v * (g1 * g1 + g2)
    return value, first, second


def bump_value(bump: Bump, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0, y0 = float(bump.center.x), float(bump.center.y)
    wx, wy = bump.half_widths
    return bump.scale * _psi((x - x0) / wx)[0] * _psi((y - y0) / wy)[0]


def bump_euclidean_laplacian(bump: Bump, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """phi_xx + phi_yy in closed form."""
    x0, y0 = float(bump.center.x), float(bump.center.y)
    wx, wy = bump.half_widths
    px, _, pxx = _psi((x - x0) / wx)
    py, _, pyy = _psi((y - y0) / wy)
    return bump.scale * (pxx * py / (wx * wx) + px * pyy / (wy * wy))


def bump_laplacian(bump: Bump, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Hyperbolic Laplacian y^2 (phi_xx + phi_yy)."""
    return y * y * bump_euclidean_laplacian(bump, x, y)


def rudnick_check(
    form: SeriesForm,
    bump: Bump,
    config: LabConfig,
    zeros: Optional[ZeroSet] = None,
) -> RudnickCheck:
    """
    Both sides of sum phi(rho) = (k/4pi) int phi dmu + (1/2pi) int log|F| Delta phi dmu.

    The log singularities at located zeros are removed analytically: the
    integrand uses log|F| - sum m log|z - rho|, and each removed term
    contributes 2 pi m phi(rho) after integration against the Laplacian.

    Raises:
        RegionError: If the bump support leaves the interior of F
        SingularQuadError: If the regularized integral does not converge
    """
    support = bump.support()
    if not support.inside_fundamental_domain() or support.x1 <= -0.5 or support.x2 >= 0.5:
        raise RegionError("Bump support must lie in the interior of F")

    if zeros is None:
        zeros = zeros_in_region(form, support, config)
    located = [
        (complex(r.location.z), r.multiplicity)
        for r in zeros.zeros
        if support.x1 < r.location.x < support.x2 and support.y1 < r.location.y < support.y2
    ]
    evaluator = DensityEvaluator(form)
    k = form.weight

    def regularized(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        value = evaluator.log_abs_F(x, y)
        for rho, m in located:
            value = value - m * np.log(np.abs((x - rho.real) + 1j * (y - rho.imag)))
        return value * bump_euclidean_laplacian(bump, x, y)

    quad = dict(
        rel_tol=config.quad_tol,
        abs_tol=1e-12,
        nodes=config.quad_nodes,
        max_depth=config.quad_max_depth,
        threads=config.threads,
    )
    x_range, y_range = (support.x1, support.x2), (support.y1, support.y2)
    main = integrate_2d(lambda x, y: bump_value(bump, x, y) / (y * y), x_range, y_range, **quad)
    try:
        log_part = integrate_2d(regularized, x_range, y_range, **quad)
    except QuadratureError as e:
        raise SingularQuadError(f"Regularized log integral did not converge: {e}") from e

    lhs = math.fsum(
        m * float(bump_value(bump, np.array([rho.real]), np.array([rho.imag]))[0])
        for rho, m in located
    )
    main_term = k / (4 * math.pi) * main.value
    log_integral = log_part.value / TWO_PI + lhs
    rhs = main_term + log_integral
    result = RudnickCheck(
        lhs=lhs,
        rhs=rhs,
        defect=abs(lhs - rhs),
        main_term=main_term,
        log_integral=log_integral,
        quadrature_error=k / (4 * math.pi) * main.error + log_part.error / TWO_PI,
        zeros_used=len(located),
    )
    logger.info("Zero-sum identity checked", form=form.label, defect=result.defect)
    return result
