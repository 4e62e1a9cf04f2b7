"""Zeros high in the cusp and the arithmetic statistics of lambda_f behind them."""

from __future__ import annotations

import math
from typing import Dict, List, Literal, Optional, Tuple

import mpmath
import numpy as np

from mflab.config import LabConfig
from mflab.eigenforms import MIN_L1_CUTOFF, l1_sym2, lambda_array
from mflab.evaluate import eval_f, eval_logF
from mflab.logging import logger
from mflab.models import (
    ContourThroughZero,
    CuspApproximation,
    CuspRegionCount,
    DetectorConsistency,
    DyadicMeanSquare,
    GeodesicCount,
    GIntervalStat,
    HeckeEigenform,
    HPoint,
    InsufficientTruncation,
    IntervalStat,
    IntervalStatPair,
    L1Sym2,
    RangeError,
    RegionError,
    SamplingError,
    SignChangePair,
    WindowError,
)
from mflab.utils import factor_with_sieve, ordered_map, smallest_prime_factors
from mflab.zerofind import PhaseTracker, no_zero_height

Line = Literal["re0", "rehalf"]
Parity = Literal["all", "odd"]

LINE_X = {"re0": 0.0, "rehalf": -0.5}
LINE_PARITY: Dict[str, Parity] = {"re0": "all", "rehalf": "odd"}
# Extra grid points inserted between consecutive ordinates y_l.
OVERSAMPLING = 4
BISECTION_STEPS = 200
RANK_SELBERG_CONSTANT = 6 / math.pi**2


def lemma_window(k: int, config: LabConfig) -> Tuple[float, float]:
    """(c2, c3 sqrt(k / log k)): the l-range where one Fourier term dominates at y_l."""
    return config.window_c2, config.window_c3 * math.sqrt(k / math.log(k))


def _in_window(l: int, window: Tuple[float, float]) -> bool:
    return window[0] < l <= window[1]


def ordinate(k: int, l: int) -> float:
    """y_l = (k - 1) / (4 pi l), where the l-th term peaks."""
    return (k - 1) / (4 * math.pi * l)


def cusp_approx_error(
    f: HeckeEigenform, l: int, x: float, config: LabConfig, strict: bool = False
) -> CuspApproximation:
    """
    Compare (e/l)^{(k-1)/2} f(x + i y_l) with lambda_f(l) e(xl).

    Indices outside the window are still computed and flagged with a warning,
    unless strict is set.

    Raises:
        WindowError: If strict and l lies outside the window
    """
    k = f.weight
    window = lemma_window(k, config)
    in_window = _in_window(l, window)
    if not in_window:
        if strict:
            raise WindowError(f"l={l} is outside the one-term window {window} for {f.label}")
        logger.warning("Index outside the one-term window", form=f.label, l=l, window=window)

    with mpmath.workprec(f.precision_bits):
        half = mpmath.mpf(k - 1) / 2
        y = half / (2 * mpmath.pi * l)
        value = eval_logF(f, HPoint(x=x, y=y))
        log_exact = half * (1 - mpmath.log(l)) + value.log_mag - mpmath.mpf(k) / 2 * mpmath.log(y)
        exact = mpmath.exp(log_exact) * mpmath.expj(value.phase)
        approx = f.lam(l) * mpmath.expj(2 * mpmath.pi * mpmath.mpf(x) * l)
        error = abs(exact - approx)
    return CuspApproximation(
        l=l, x=x, y_l=y, approx=approx, exact=exact, error=error, in_window=in_window
    )


def sign_changes(
    f: HeckeEigenform,
    window: Tuple[int, int],
    parity: Parity,
    threshold: float,
    config: LabConfig,
) -> List[SignChangePair]:
    """
    Disjoint pairs l1 < l2 in [l_min, l_max] with lambda(l1), lambda(l2) of
    opposite signs and both beyond the threshold.

    Scans left to right; the latest strong index of one sign pairs with the
    next strong index of the other sign.
    """
    l_min, l_max = window
    lemma = lemma_window(f.weight, config)
    pairs: List[SignChangePair] = []
    previous: Optional[Tuple[int, float]] = None
    for l in range(max(l_min, 1), min(l_max, f.terms) + 1):
        if parity == "odd" and l % 2 == 0:
            continue
        value = float(f.lam(l))
        if abs(value) <= threshold:
            continue
        if previous is None or (previous[1] > 0) == (value > 0):
            previous = (l, value)
            continue
        pairs.append(
            SignChangePair(
                l1=previous[0],
                l2=l,
                parity=parity,
                threshold=threshold,
                lambda_l1=previous[1],
                lambda_l2=value,
                in_lemma_window=_in_window(previous[0], lemma) and _in_window(l, lemma),
            )
        )
        previous = None
    return pairs


# =============================================================================
# Geodesic scans
# =============================================================================


def line_value(f: HeckeEigenform, line: Line, y: mpmath.mpf) -> Tuple[mpmath.mpf, mpmath.mpf]:
    """f restricted to the line (real there) and its truncation bound."""
    sample = eval_f(f, HPoint(x=LINE_X[line], y=y))
    return sample.value.real, sample.tail_bound


def scan_grid(k: int, Y: float, y_top: float) -> List[float]:
    """Ordinates y_l in (Y, y_top) with OVERSAMPLING points between neighbours."""
    ys = [Y, y_top]
    l = 1
    while True:
        y = ordinate(k, l)
        if y <= Y:
            break
        if y < y_top:
            ys.append(y)
        l += 1
    ys = sorted(set(ys))
    grid: List[float] = []
    for lo, hi in zip(ys, ys[1:]):
        step = (hi - lo) / OVERSAMPLING
        grid.extend(lo + j * step for j in range(OVERSAMPLING))
    grid.append(ys[-1])
    return grid


def _bisect(
    f: HeckeEigenform, line: Line, lo: float, hi: float, sign_lo: int, tol: float
) -> Tuple[float, float]:
    """Shrink a verified sign-change bracket; stops early at an indeterminate midpoint."""
    a, b = mpmath.mpf(lo), mpmath.mpf(hi)
    for _ in range(BISECTION_STEPS):
        if b - a < tol:
            break
        mid = (a + b) / 2
        value, tail = line_value(f, line, mid)
        if abs(value) <= tail:
            break
        if (value > 0) == (sign_lo > 0):
            a = mid
        else:
            b = mid
    return float(a), float(b)


def geodesic_zero_count(
    f: HeckeEigenform,
    Y: float,
    line: Line,
    config: LabConfig,
    y_top: Optional[float] = None,
) -> GeodesicCount:
    """
    Verified sign changes of f on Re z = 0 or Re z = -1/2 between Y and the no-zero height.

    Every counted zero has a bracket whose two ends have opposite signs with
    magnitudes above their truncation bounds. Indeterminate grid points are
    skipped and logged.
    """
    y_top = no_zero_height(f) if y_top is None else y_top
    if Y >= y_top:
        return GeodesicCount(line=line, Y=Y, y_top=y_top, count=0, ordinates=[], brackets=[], skipped=[])

    grid = scan_grid(f.weight, Y, y_top)
    prec = f.precision_bits + 32
    with mpmath.workprec(prec):
        samples = ordered_map(
            lambda y: line_value(f, line, mpmath.mpf(y)), grid, config.threads, prec=prec
        )
        verified: List[Tuple[float, int]] = []
        skipped: List[float] = []
        for y, (value, tail) in zip(grid, samples):
            if abs(value) <= tail:
                skipped.append(y)
                continue
            verified.append((y, 1 if value > 0 else -1))
        if skipped:
            logger.warning("Indeterminate geodesic samples skipped", form=f.label, line=line, count=len(skipped))

        changes = [
            (lo, hi, s_lo)
            for (lo, s_lo), (hi, s_hi) in zip(verified, verified[1:])
            if s_lo != s_hi
        ]
        brackets = ordered_map(
            lambda c: _bisect(f, line, c[0], c[1], c[2], config.zero_tol), changes, config.threads, prec=prec
        )

    ordinates = [(a + b) / 2 for a, b in brackets]
    logger.info("Geodesic scan finished", form=f.label, line=line, Y=Y, count=len(ordinates))
    return GeodesicCount(
        line=line,
        Y=Y,
        y_top=y_top,
        count=len(ordinates),
        ordinates=ordinates,
        brackets=brackets,
        skipped=skipped,
    )


def detector_consistency(
    f: HeckeEigenform, line: Line, threshold: float, config: LabConfig
) -> DetectorConsistency:
    """Check that each lambda sign-change pair in the window brackets a verified line zero."""
    k = f.weight
    c2, upper = lemma_window(k, config)
    parity = LINE_PARITY[line]
    pairs = sign_changes(f, (int(math.floor(c2)) + 1, int(math.floor(upper))), parity, threshold, config)
    if not pairs:
        return DetectorConsistency(line=line, threshold=threshold, pairs=[], verified=[])

    lowest = min(ordinate(k, p.l2) for p in pairs)
    count = geodesic_zero_count(f, 0.99 * lowest, line, config)
    verified = [
        any(ordinate(k, p.l2) < y < ordinate(k, p.l1) for y in count.ordinates) for p in pairs
    ]
    return DetectorConsistency(line=line, threshold=threshold, pairs=pairs, verified=verified)


def cusp_region_count(f: HeckeEigenform, Y: float, config: LabConfig) -> CuspRegionCount:
    """
    Zeros of f in F_Y by the argument principle on |x| <= 1/2, Y <= y <= y_top.

    The vertical sides cancel by periodicity, so only the two horizontal edges
    are tracked; zeros on the seam Re z = +-1/2 are counted once.

    Raises:
        RegionError: If Y < 1
    """
    if Y < 1:
        raise RegionError(f"Siegel domain needs Y >= 1, got {Y}")
    y_top = no_zero_height(f)
    if Y >= y_top:
        return CuspRegionCount(Y=Y, y_top=y_top, count=0)

    with mpmath.workprec(f.precision_bits + 32):
        tracker = PhaseTracker(f, config.zero_tol, config.sample_budget)
        top = tracker.edge_change(mpmath.mpc(-0.5, y_top), mpmath.mpc(0.5, y_top))
        step = mpmath.mpf(config.zero_tol) / 7
        for attempt in range(config.perturb_retries + 1):
            height = Y - attempt * step
            try:
                bottom = tracker.edge_change(mpmath.mpc(-0.5, height), mpmath.mpc(0.5, height))
                break
            except ContourThroughZero as e:
                logger.warning("Bottom edge meets a zero, perturbing", attempt=attempt, error=str(e))
        else:
            raise ContourThroughZero(f"Edge y={Y} still meets a zero after perturbation")
        turns = (bottom - top) / (2 * mpmath.pi)
        count = int(mpmath.nint(turns))
        if abs(turns - count) > 0.05:
            raise SamplingError(f"Siegel-domain winding {mpmath.nstr(turns, 8)} is not an integer")

    return CuspRegionCount(Y=Y, y_top=y_top, count=count)


# =============================================================================
# Short-interval statistics
# =============================================================================


def l1_cutoff(f: HeckeEigenform, config: LabConfig) -> int:
    """Prime cutoff used for L(1, sym^2 f) when none is attached to the form."""
    return max(MIN_L1_CUTOFF, min(config.l1_prime_cutoff, f.terms))


def _l1sym2(f: HeckeEigenform, config: LabConfig) -> L1Sym2:
    if f.l1sym2 is not None:
        return f.l1sym2
    return l1_sym2(f, l1_cutoff(f, config))


def _require_terms(f: HeckeEigenform, needed: int) -> None:
    if needed > f.terms:
        raise InsufficientTruncation(
            f"Statistic needs lambda(n) for n <= {needed}, form has {f.terms}",
            required=needed,
        )


def short_interval_stats(
    f: HeckeEigenform,
    X: int,
    L: float,
    config: LabConfig,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> IntervalStatPair:
    """
    Sampled sums of lambda(n) and lambda(n)^2 over n in (x, x + x/L], x uniform in [X, 2X].

    An interval holds floor(x/L) integers, so it is empty when x/L < 1. The
    square sums are centred by (6/pi^2) L(1, sym^2 f) x/L.

    Raises:
        RangeError: Unless 0 < L <= X
        InsufficientTruncation: Unless 2X + 2X/L <= N
    """
    if not (0 < L <= X):
        raise RangeError(f"Need 0 < L <= X, got L={L}, X={X}")
    _require_terms(f, int(2 * X + 2 * X / L))
    samples = samples or config.interval_samples
    rng = np.random.default_rng(config.seed if seed is None else seed)

    lam = lambda_array(f)
    linear = np.concatenate([[0.0], np.cumsum(lam[1:])])
    square = np.concatenate([[0.0], np.cumsum(lam[1:] ** 2)])
    L1 = _l1sym2(f, config)

    xs = rng.uniform(X, 2 * X, samples)
    starts = np.floor(xs).astype(np.int64)
    ends = starts + np.floor(xs / L).astype(np.int64)
    sums = linear[ends] - linear[starts]
    main = RANK_SELBERG_CONSTANT * float(L1.value) * xs / L
    centred = square[ends] - square[starts] - main

    def stat(kind: Literal["linear", "square"], values: np.ndarray, main_term: float) -> IntervalStat:
        return IntervalStat(
            kind=kind,
            X=X,
            L=L,
            samples=samples,
            mean=float(values.mean()),
            mean_square=float((values**2).mean()),
            main_term=main_term,
        )

    return IntervalStatPair(
        linear=stat("linear", sums, 0.0),
        square=stat("square", centred, float(main.mean())),
        l1sym2=L1.value,
    )


def dyadic_mean_square(f: HeckeEigenform, X: int, config: LabConfig) -> DyadicMeanSquare:
    """(1/X) sum_{X < n <= 2X} lambda(n)^2 against (6/pi^2) L(1, sym^2 f)."""
    _require_terms(f, 2 * X)
    lam = lambda_array(f)
    value = float(np.sum(lam[X + 1 : 2 * X + 1] ** 2)) / X
    main = RANK_SELBERG_CONSTANT * float(_l1sym2(f, config).value)
    return DyadicMeanSquare(X=X, value=value, main_term=main, ratio=value / main)


def g_function(f: HeckeEigenform, delta: float, limit: int) -> np.ndarray:
    """
    The multiplicative g(n) for n <= limit (g(0) = 0).

    g(p^v) = sgn lambda(p^v) when |lambda(p^v)| >= p^{-delta v} and p > 2, else 0.
    """
    spf = smallest_prime_factors(limit)
    cache: Dict[Tuple[int, int], float] = {}

    def local(p: int, v: int) -> float:
        if (p, v) not in cache:
            if p == 2:
                cache[(p, v)] = 0.0
            else:
                value = float(f.lambda_prime_power(p, v))
                cache[(p, v)] = math.copysign(1.0, value) if abs(value) >= p ** (-delta * v) else 0.0
        return cache[(p, v)]

    g = np.zeros(limit + 1)
    if limit >= 1:
        g[1] = 1.0
    for n in range(2, limit + 1):
        p, v = factor_with_sieve(n, spf)[0]
        g[n] = local(p, v) * g[n // p**v]
    return g


def g_interval_stats(
    f: HeckeEigenform,
    delta: float,
    X: int,
    h: int,
    config: LabConfig,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
) -> GIntervalStat:
    """Short averages of g and |g| over (x, x + h] against their long averages over (X, 2X]."""
    if h < 2 or X < 1:
        raise RangeError(f"Need h >= 2 and X >= 1, got h={h}, X={X}")
    _require_terms(f, 2 * X + h)
    samples = samples or config.interval_samples
    rng = np.random.default_rng(config.seed if seed is None else seed)

    g = g_function(f, delta, 2 * X + h)
    prefix = np.concatenate([[0.0], np.cumsum(g[1:])])
    prefix_abs = np.concatenate([[0.0], np.cumsum(np.abs(g[1:]))])
    long_g = (prefix[2 * X] - prefix[X]) / X
    long_abs = (prefix_abs[2 * X] - prefix_abs[X]) / X

    xs = rng.integers(X, 2 * X + 1, samples)
    short_g = (prefix[xs + h] - prefix[xs]) / h
    short_abs = (prefix_abs[xs + h] - prefix_abs[xs]) / h
    gaps = np.maximum(np.abs(short_g - long_g), np.abs(short_abs - long_abs))
    threshold = math.log(h) ** (-1 / 200)

    return GIntervalStat(
        delta=delta,
        X=X,
        h=h,
        samples=samples,
        long_mean_g=float(long_g),
        long_mean_abs_g=float(long_abs),
        short_means_g=[float(v) for v in short_g],
        short_means_abs_g=[float(v) for v in short_abs],
        max_gap=float(gaps.max()),
        violation_fraction=float(np.mean(gaps > threshold)),
        gap_threshold=threshold,
    )
