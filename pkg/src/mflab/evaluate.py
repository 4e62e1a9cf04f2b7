"""Evaluation of y^{k/2}|f(z)| anywhere in the upper half-plane, plus Petersson norms."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Tuple

import mpmath
import numpy as np

from mflab.config import LabConfig
from mflab.eigenforms import MIN_L1_CUTOFF, l1_sym2
from mflab.logging import logger
from mflab.models import (
    HeckeEigenform,
    HPoint,
    InsufficientTruncation,
    LogValue,
    Mobius,
    PeterssonNorm,
    ReductionError,
    RegionError,
    SeriesForm,
)
from mflab.quadrature import integrate_2d
from mflab.utils import round_mpf, working_precision

TWO_PI = 2 * math.pi
SQRT3_HALF = math.sqrt(3) / 2
MAX_REDUCTION_STEPS = 10_000
# Relative accuracy of the float64 density path.
DENSITY_LOG_TOL = 40.0

_S = Mobius(a=0, b=-1, c=1, d=0)


# =============================================================================
# Reduction to the fundamental domain
# =============================================================================


def reduce_to_F(z: HPoint) -> Tuple[HPoint, Mobius]:
    """
    Map z into the standard fundamental domain F.

    Returns (z', gamma) with gamma z = z'. Boundary ties land on the half-open
    representative: Re z' in [-1/2, 1/2) and points of the unit arc with
    Re z' <= 0.

    Raises:
        ReductionError: If the translate/invert loop does not terminate
    """
    w = z.z
    gamma = Mobius.identity()
    # Points this close to the unit arc count as on it.
    eps = mpmath.ldexp(1, 8 - mpmath.mp.prec)
    for _ in range(MAX_REDUCTION_STEPS):
        n = int(mpmath.floor(w.real + mpmath.mpf(0.5)))
        if n:
            w -= n
            gamma = Mobius(a=1, b=-n, c=0, d=1) @ gamma
        r2 = w.real * w.real + w.imag * w.imag
        if r2 < 1 - eps or (r2 <= 1 + eps and w.real > 0):
            w = -1 / w
            gamma = _S @ gamma
            continue
        return HPoint.from_complex(w), gamma
    raise ReductionError(f"Reduction of {mpmath.nstr(z.z, 15)} did not terminate")


def reduce_points(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized float64 reduction of arrays of points into F."""
    x = np.array(x, dtype=np.float64, copy=True)
    y = np.array(y, dtype=np.float64, copy=True)
    for _ in range(MAX_REDUCTION_STEPS):
        x -= np.floor(x + 0.5)
        r2 = x * x + y * y
        mask = r2 < 1
        if not mask.any():
            return x, y
        x[mask], y[mask] = -x[mask] / r2[mask], y[mask] / r2[mask]
    raise ReductionError("Vectorized reduction did not terminate")


def in_fundamental_domain(x: float, y: float, slack: float = 0.0) -> bool:
    return abs(x) <= 0.5 + slack and x * x + y * y >= 1 - slack


# =============================================================================
# Truncation bounds
# =============================================================================


def tail_majorant(
    const: mpmath.mpf, s: float, k: float, N: int, y: mpmath.mpf
) -> mpmath.mpf:
    """
    Bound y^{k/2} sum_{n>N} C n^s e^{-2 pi n y}, assuming |a(n)| <= C n^s.

    Finite only once the terms decrease from n = N+1 on and the bound is
    monotone in both N and y; infinity otherwise.
    """
    m = N + 1
    two_pi_y = 2 * mpmath.pi * y
    if two_pi_y * m <= max(s, k / 2):
        return mpmath.inf
    r = (1 + mpmath.mpf(1) / m) ** s * mpmath.exp(-two_pi_y)
    if r >= 1:
        return mpmath.inf
    return y ** (mpmath.mpf(k) / 2) * const * mpmath.mpf(m) ** s * mpmath.exp(-two_pi_y * m) / (1 - r)


def truncation_bound(k: int, N: int, y: mpmath.mpf) -> mpmath.mpf:
    """Tail bound of y^{k/2} f(z) for a cusp eigenform with a(1) = 1 cut at N."""
    return tail_majorant(mpmath.mpf(2), k / 2, k, N, mpmath.mpf(y))


def log_tail_majorant(log_const: float, s: float, k: float, N: int, y: float) -> float:
    """Float version of log(tail_majorant)."""
    m = N + 1
    two_pi_y = TWO_PI * y
    if two_pi_y * m <= max(s, k / 2):
        return math.inf
    log_r = s * math.log1p(1 / m) - two_pi_y
    if log_r >= 0:
        return math.inf
    return (
        0.5 * k * math.log(y)
        + log_const
        + s * math.log(m)
        - two_pi_y * m
        - math.log(-math.expm1(log_r))
    )


def float_coefficients(form: SeriesForm) -> Tuple[np.ndarray, np.ndarray, int]:
    """log|a(n)|, sign a(n) and the valuation as float arrays, cached per form."""
    cache = form._float_cache
    if "log_abs" not in cache:
        log_abs = np.full(form.terms + 1, -np.inf)
        sign = np.zeros(form.terms + 1)
        for n, value in enumerate(form.a_coeffs):
            if value != 0:
                log_abs[n] = float(mpmath.log(abs(value)))
                sign[n] = 1.0 if value > 0 else -1.0
        cache["log_abs"] = log_abs
        cache["sign"] = sign
        cache["valuation"] = min(form.valuation(), form.terms)
    return cache["log_abs"], cache["sign"], cache["valuation"]


def truncation_cutoff(
    form: SeriesForm,
    y: float,
    log_target: float,
    derivative: int = 0,
    with_weight: bool = True,
) -> int:
    """
    Smallest M whose tail majorant lies below exp(log_target).

    Raises:
        InsufficientTruncation: If M exceeds the stored truncation
    """
    k = form.weight if with_weight else 0
    s = form.majorant_exponent + derivative
    log_const = float(mpmath.log(form.majorant_const)) + derivative * math.log(TWO_PI)

    def ok(M: int) -> bool:
        return log_tail_majorant(log_const, s, k, M, y) < log_target

    lo = min(max(form.valuation(), 1), form.terms)
    if ok(lo):
        return lo
    hi = max(2 * lo, 2)
    while not ok(hi):
        hi *= 2
        if hi > 1 << 40:
            raise InsufficientTruncation(
                f"No finite truncation reaches the target at y={y:.6g}", required=hi
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    if hi > form.terms:
        raise InsufficientTruncation(
            f"Form {form.label} at y={y:.6g} needs {hi} terms, has {form.terms}",
            required=hi,
        )
    return hi


def _leading_log(form: SeriesForm, y: float, with_weight: bool = True) -> float:
    log_abs, _, n0 = float_coefficients(form)
    value = log_abs[n0] - TWO_PI * n0 * y
    if with_weight:
        value += 0.5 * form.weight * math.log(y)
    return float(value)


# =============================================================================
# High-precision evaluation
# =============================================================================


def _series(form: SeriesForm, q: mpmath.mpc, M: int) -> mpmath.mpc:
    """sum_{n <= M} a(n) q^n by Horner's rule."""
    return mpmath.polyval(list(reversed(form.a_coeffs[: M + 1])), q)


def eval_logF(form: SeriesForm, z: HPoint, normalized: bool = False) -> LogValue:
    """
    log|F(z)| and arg of y^{k/2} f(z) at any point of the upper half-plane.

    The point is first reduced into F, where the Fourier series converges
    fastest; the phase is then transported back through the automorphy factor.

    Raises:
        InsufficientTruncation: If the stored coefficients cannot reach the
            2^{-prec/2} relative tail target
        NormalizationError: If normalized=True on an unnormalized form
    """
    k = form.weight
    scale = form.scale(normalized)
    prec = form.precision_bits
    with working_precision(prec + 32):
        reduced, gamma = reduce_to_F(z)
        y_float = float(reduced.y)
        log_target = _leading_log(form, y_float) - 0.5 * prec * math.log(2)
        M = truncation_cutoff(form, y_float, log_target)
        q = mpmath.exp(2j * mpmath.pi * reduced.z)
        value = _series(form, q, M)
        tail = scale * tail_majorant(
            form.majorant_const, form.majorant_exponent, k, M, reduced.y
        )
        if value == 0:
            log_mag, phase = mpmath.ninf, mpmath.mpf(0)
        else:
            log_mag = (
                mpmath.mpf(k) / 2 * mpmath.log(reduced.y)
                + mpmath.log(abs(value))
                + mpmath.log(scale)
            )
            phase = mpmath.arg(value) - k * mpmath.arg(gamma.automorphy_factor(z))
            phase = phase % (2 * mpmath.pi)
    return LogValue(
        log_mag=round_mpf(log_mag, prec),
        phase=round_mpf(phase, prec),
        tail_bound=round_mpf(tail, prec),
        terms=M,
        normalization="petersson" if normalized else "a1",
    )


class SeriesValue(NamedTuple):
    """f(z), f'(z) and the truncation bound on f at one point."""

    value: mpmath.mpc
    derivative: Optional[mpmath.mpc]
    tail_bound: mpmath.mpf
    terms: int


def eval_f(
    form: SeriesForm,
    z: HPoint,
    normalized: bool = False,
    with_derivative: bool = False,
) -> SeriesValue:
    """Sum the Fourier series of f (and optionally f') at z without reduction."""
    prec = form.precision_bits
    scale = form.scale(normalized)
    y_float = float(z.y)
    log_target = _leading_log(form, y_float, with_weight=False) - 0.5 * prec * math.log(2)
    M = truncation_cutoff(
        form, y_float, log_target, derivative=int(with_derivative), with_weight=False
    )
    with working_precision(prec + 32):
        q = mpmath.exp(2j * mpmath.pi * z.z)
        value = scale * _series(form, q, M)
        derivative = None
        if with_derivative:
            weighted = [n * a for n, a in enumerate(form.a_coeffs[: M + 1])]
            derivative = scale * 2j * mpmath.pi * mpmath.polyval(list(reversed(weighted)), q)
        tail = scale * tail_majorant(
            form.majorant_const, form.majorant_exponent, 0, M, z.y
        )
    return SeriesValue(value=value, derivative=derivative, tail_bound=tail, terms=M)


# =============================================================================
# Float64 density path
# =============================================================================


class DensityEvaluator:
    """
    Vectorized float64 evaluation of log|F| for quadrature and grid scans.

    Points are reduced into F, so one truncation chosen at y = sqrt(3)/2
    serves everywhere. Everything is kept in log space, so large weights
    do not overflow.
    """

    CHUNK = 4096

    def __init__(self, form: SeriesForm, normalized: bool = False):
        log_abs, sign, n0 = float_coefficients(form)
        target = _leading_log(form, SQRT3_HALF) - DENSITY_LOG_TOL
        M = truncation_cutoff(form, SQRT3_HALF, target)
        self.form = form
        self.weight = form.weight
        self.n = np.arange(n0, M + 1, dtype=np.float64)
        self.log_abs = log_abs[n0 : M + 1]
        self.sign = sign[n0 : M + 1]
        self.log_scale = float(mpmath.log(form.scale(normalized)))
        logger.debug("Density evaluator ready", form=form.label, terms=M)

    def log_abs_F(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """log(y^{k/2}|f(x+iy)|), -inf at exact zeros."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        shape = np.broadcast(x, y).shape
        xr, yr = reduce_points(*np.broadcast_arrays(x, y))
        xr, yr = xr.ravel(), yr.ravel()
        out = np.empty(xr.size)
        n = self.n[:, None]
        for start in range(0, xr.size, self.CHUNK):
            xs = xr[start : start + self.CHUNK][None, :]
            ys = yr[start : start + self.CHUNK][None, :]
            exponents = self.log_abs[:, None] - TWO_PI * n * ys
            top = exponents.max(axis=0)
            terms = self.sign[:, None] * np.exp(exponents - top) * np.exp(1j * TWO_PI * n * xs)
            with np.errstate(divide="ignore"):
                out[start : start + xs.size] = (
                    0.5 * self.weight * np.log(ys[0])
                    + top
                    + np.log(np.abs(terms.sum(axis=0)))
                )
        return out.reshape(shape) + self.log_scale

    def log_density(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """log of y^k |f|^2."""
        return 2.0 * self.log_abs_F(x, y)

    def peak_log_density(self, samples: int = 64, y_top: float = 2.0) -> float:
        """Max of log y^k|f|^2 over a coarse grid of F below y_top."""
        xs = np.linspace(-0.5, 0.5, samples)
        ys = np.linspace(SQRT3_HALF, max(y_top, 1.0), samples)
        X, Y = np.meshgrid(xs, ys)
        values = self.log_density(X.ravel(), Y.ravel())
        return float(np.max(values[np.isfinite(values)]))


# =============================================================================
# Petersson norm
# =============================================================================


def strip_integral(
    form: SeriesForm,
    y1: float,
    y2: float = math.inf,
    normalized: bool = False,
) -> mpmath.mpf:
    """
    Exact mass of the strip |x| <= 1/2, y1 <= y <= y2 for a cusp form.

    Uses sum |a(n)|^2 (4 pi n)^{1-k} Gamma(k-1; 4 pi n y1, 4 pi n y2).

    Raises:
        RegionError: If the form does not vanish at the cusp
        InsufficientTruncation: If the series has not converged by a(N)
    """
    if form.a_coeffs[0] != 0:
        raise RegionError(f"Strip integral of {form.label} diverges (a(0) != 0)")
    k = form.weight
    prec = form.precision_bits
    peak = (k - 2) / (4 * math.pi * y1)
    with mpmath.workprec(prec + 32):
        scale = form.scale(normalized)
        total = mpmath.mpf(0)
        upper = mpmath.inf if math.isinf(y2) else mpmath.mpf(y2)
        for n in range(1, form.terms + 1):
            a = form.a_coeffs[n]
            if a == 0:
                continue
            x = 4 * mpmath.pi * n
            term = a * a * x ** (1 - k) * mpmath.gammainc(k - 1, x * y1, x * upper)
            total += term
            if n > peak and term < total * mpmath.ldexp(1, -prec):
                break
        else:
            raise InsufficientTruncation(
                f"Strip integral of {form.label} from y={y1} needs more than {form.terms} terms",
                required=2 * form.terms,
            )
        total *= scale * scale
    with mpmath.workprec(prec):
        return +total


def bulk_integral(
    form: SeriesForm, config: LabConfig, normalized: bool = False
) -> Tuple[mpmath.mpf, mpmath.mpf]:
    """Mass of F below y = 1 by quadrature: returns (value, error)."""
    evaluator = DensityEvaluator(form, normalized)
    offset = evaluator.peak_log_density(y_top=1.0)

    def integrand(x: np.ndarray, t: np.ndarray) -> np.ndarray:
        y0 = np.sqrt(1 - x * x)
        y = y0 + t * (1 - y0)
        return np.exp(evaluator.log_density(x, y) - offset) * (1 - y0) / (y * y)

    result = integrate_2d(
        integrand,
        (-0.5, 0.5),
        (0.0, 1.0),
        rel_tol=config.quad_tol,
        nodes=config.quad_nodes,
        max_depth=config.quad_max_depth,
        threads=config.threads,
    )
    factor = mpmath.exp(offset)
    return factor * result.value, factor * result.error


def quadrature_norm(
    form: SeriesForm, config: LabConfig
) -> Tuple[mpmath.mpf, mpmath.mpf, mpmath.mpf, mpmath.mpf]:
    """<F, F> as strip(1, inf) + bulk quadrature: (value, error, strip, bulk)."""
    strip = strip_integral(form, 1.0)
    bulk, error = bulk_integral(form, config)
    return strip + bulk, error, strip, bulk


def petersson_norm(
    f: HeckeEigenform, config: LabConfig, prime_cutoff: Optional[int] = None
) -> PeterssonNorm:
    """
    <y^{k/2}f, y^{k/2}f> over F by quadrature and through L(1, sym^2 f).

    The second route uses <f, f> = Gamma(k) L(1, sym^2 f) / (2 pi^2 (4 pi)^{k-1}).
    """
    logger.info("Computing Petersson norm", form=f.label)
    norm_q, error, strip, bulk = quadrature_norm(f, config)

    cutoff = prime_cutoff or min(config.l1_prime_cutoff, f.terms)
    cutoff = max(cutoff, MIN_L1_CUTOFF)
    L = f.l1sym2 if f.l1sym2 and f.l1sym2.prime_cutoff == cutoff else l1_sym2(f, cutoff)
    k = f.weight
    with mpmath.workprec(f.precision_bits):
        factor = mpmath.gamma(k) / (2 * mpmath.pi**2 * (4 * mpmath.pi) ** (k - 1))
        norm_l = factor * L.value
        norm_l_error = factor * L.error_estimate
        gap = abs(norm_q - norm_l) / norm_q

    logger.info(
        "Petersson norm computed",
        form=f.label,
        quadrature=norm_q,
        l1sym2=norm_l,
        relative_gap=gap,
    )
    return PeterssonNorm(
        norm_quadrature=norm_q,
        quadrature_error=error,
        strip_part=strip,
        bulk_part=bulk,
        norm_l1sym2=norm_l,
        l1sym2_error=norm_l_error,
        relative_gap=gap,
    )


def normalize(form: SeriesForm, config: LabConfig) -> SeriesForm:
    """Attach norm_const = <F, F>^{-1/2} so that normalized evaluation has unit mass."""
    value, _, _, _ = quadrature_norm(form, config)
    with mpmath.workprec(form.precision_bits):
        norm_const = 1 / mpmath.sqrt(value)
    logger.debug("Form normalized", form=form.label, norm_const=norm_const)
    return form.model_copy(update={"norm_const": norm_const})


def with_l1sym2(f: HeckeEigenform, prime_cutoff: int) -> HeckeEigenform:
    """Attach L(1, sym^2 f) computed to the given prime cutoff."""
    return f.model_copy(update={"l1sym2": l1_sym2(f, prime_cutoff)})
