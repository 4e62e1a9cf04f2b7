"""Hecke operators, normalized eigenforms and the Euler-product functionals."""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional, Tuple

import mpmath
import numpy as np
from sympy import Matrix, Rational, Symbol

from mflab.logging import logger
from mflab.models import (
    CutoffTooSmall,
    DegenerateSpectrum,
    EulerProducts,
    FamilyPrimeSums,
    HeckeEigenform,
    HeckeResiduals,
    InsufficientTruncation,
    L1Sym2,
    NoCuspForms,
    QExpansion,
    RangeError,
    SeriesForm,
)
from mflab.qseries import cusp_dimension, eisenstein_qexp, miller_basis
from mflab.utils import factor_with_sieve, primes_up_to, smallest_prime_factors

MIN_L1_CUTOFF = 100
GUARD_BITS = 64


# =============================================================================
# Hecke matrices and the eigenbasis
# =============================================================================


def hecke_matrix(k: int, p: int, basis: List[QExpansion]) -> Matrix:
    """
    Exact matrix of T_p on an echelon basis g_1..g_d.

    Column j holds b(1..d) for T_p g_j, b(n) = a(pn) + p^{k-1} a(n/p).
    """
    d = len(basis)
    if d == 0:
        return Matrix(0, 0, [])
    N = basis[0].terms
    if N < p * (d + 1):
        raise InsufficientTruncation(
            f"T_{p} on weight {k} needs truncation >= {p * (d + 1)}, got {N}",
            required=p * (d + 1),
        )
    pk = p ** (k - 1)

    def entry(i: int, j: int) -> Rational:
        n = i + 1
        g = basis[j]
        value = g.coeff(p * n)
        if n % p == 0:
            value += pk * g.coeff(n // p)
        return Rational(value.numerator, value.denominator)

    return Matrix(d, d, entry)


def _to_mp_matrix(matrix: Matrix) -> mpmath.matrix:
    rows, cols = matrix.shape
    out = mpmath.matrix(rows, cols)
    for i in range(rows):
        for j in range(cols):
            entry = matrix[i, j]
            out[i, j] = mpmath.mpf(int(entry.p)) / int(entry.q)
    return out


def _charpoly_roots(t2: Matrix, prec_bits: int) -> List[mpmath.mpf]:
    """Real roots of the exact characteristic polynomial, Newton-polished."""
    x = Symbol("x")
    coeffs = [mpmath.mpf(int(c.p)) / int(c.q) for c in t2.charpoly(x).all_coeffs()]
    roots = mpmath.polyroots(coeffs, maxsteps=500, extraprec=prec_bits)
    if not isinstance(roots, (list, tuple)):
        roots = [roots]
    polished = []
    for root in roots:
        r = mpmath.re(root)
        for _ in range(8):
            value, slope = mpmath.polyval(coeffs, r, derivative=True)
            if slope == 0:
                break
            r -= value / slope
        polished.append(r)
    return sorted(polished)


def _eigenvector(t2: mpmath.matrix, alpha: mpmath.mpf) -> List[mpmath.mpf]:
    """Coefficients c with (T2 - alpha) c = 0 and c_1 = 1 (least squares)."""
    d = t2.rows
    if d == 1:
        return [mpmath.mpf(1)]
    shifted = t2 - alpha * mpmath.eye(d)
    lhs = mpmath.matrix(d, d - 1)
    rhs = mpmath.matrix(d, 1)
    for i in range(d):
        rhs[i] = -shifted[i, 0]
        for j in range(1, d):
            lhs[i, j - 1] = shifted[i, j]
    solution, _ = mpmath.qr_solve(lhs, rhs)
    return [mpmath.mpf(1)] + [solution[i] for i in range(d - 1)]


def eigenbasis(k: int, N: int, prec_bits: int = 128) -> List[HeckeEigenform]:
    """
    Normalized Hecke eigenforms of weight k, ordered by ascending T_2 eigenvalue.

    Args:
        k: Even weight with dim S_k > 0
        N: Truncation order of the stored coefficients
        prec_bits: Mantissa bits of the stored coefficients

    Raises:
        NoCuspForms: If k is odd, too small, or dim S_k = 0
        InsufficientTruncation: If N cannot support T_2 and T_3
        DegenerateSpectrum: If T_2 eigenvalues are not separated
    """
    d = cusp_dimension(k)
    if k % 2 or k < 12 or d == 0:
        raise NoCuspForms(f"No cusp forms of weight {k} for SL2(Z)")
    required = 3 * (d + 1)
    if N < required:
        raise InsufficientTruncation(
            f"Eigenbasis of weight {k} needs truncation >= {required}, got {N}",
            required=required,
        )

    logger.info("Computing eigenbasis", weight=k, terms=N, prec_bits=prec_bits)
    basis = miller_basis(k, N)
    t2_exact = hecke_matrix(k, 2, basis)
    t3_exact = hecke_matrix(k, 3, basis)
    coeff_bits = max(abs(c).bit_length() for g in basis for c in g.numerators)
    wp = prec_bits + coeff_bits + GUARD_BITS

    with mpmath.workprec(wp):
        roots = _charpoly_roots(t2_exact, wp)
        scale = mpmath.mpf(2) ** (mpmath.mpf(k - 1) / 2)
        separation = mpmath.mpf(2) ** (-prec_bits / 2)
        normalized = [r / scale for r in roots]
        for lo, hi in zip(normalized, normalized[1:]):
            if hi - lo < separation:
                raise DegenerateSpectrum(
                    f"T_2 eigenvalues of weight {k} closer than 2^-{prec_bits // 2}: "
                    f"{mpmath.nstr(lo, 15)}, {mpmath.nstr(hi, 15)}"
                )

        t2 = _to_mp_matrix(t2_exact)
        t3 = _to_mp_matrix(t3_exact)
        forms = []
        for index, alpha in enumerate(roots):
            c = _eigenvector(t2, alpha)
            _verify_t3(t3, c, k, prec_bits)
            forms.append(_assemble_form(k, N, basis, c, alpha, index, prec_bits))

    logger.info("Eigenbasis computed", weight=k, forms=len(forms))
    return forms


def _verify_t3(t3: mpmath.matrix, c: List[mpmath.mpf], k: int, prec_bits: int) -> None:
    d = t3.rows
    vec = mpmath.matrix(c)
    image = t3 * vec
    # The eigenvalue of T_3 is the first coordinate since c_1 = 1.
    mu = image[0]
    residual = mpmath.norm(image - mu * vec)
    tolerance = mpmath.mpf(2) ** (-prec_bits / 2) * mpmath.mnorm(t3, 1) * mpmath.norm(vec)
    if residual > tolerance:
        raise DegenerateSpectrum(
            f"T_2 eigenvector of weight {k} is not a T_3 eigenvector "
            f"(residual {mpmath.nstr(residual, 5)}, dimension {d})"
        )


def _assemble_form(
    k: int,
    N: int,
    basis: List[QExpansion],
    c: List[mpmath.mpf],
    alpha: mpmath.mpf,
    index: int,
    prec_bits: int,
) -> HeckeEigenform:
    a = [mpmath.fsum(ci * g.numerators[n] for ci, g in zip(c, basis)) for n in range(N + 1)]
    half = mpmath.mpf(k - 1) / 2
    lam = [mpmath.mpf(0)] + [a[n] * mpmath.exp(-half * mpmath.log(n)) for n in range(1, N + 1)]
    with mpmath.workprec(prec_bits):
        a_rounded = tuple(+v for v in a)
        lam_rounded = tuple(+v for v in lam)
        alpha_rounded = +alpha
    return HeckeEigenform(
        label=f"{k}.{index + 1}",
        weight=k,
        terms=N,
        a_coeffs=a_rounded,
        precision_bits=prec_bits,
        majorant_const=mpmath.mpf(2),
        majorant_exponent=k / 2,
        lambdas=lam_rounded,
        t2_eigenvalue=alpha_rounded,
        index=index,
    )


def eisenstein_form(k: int, N: int, prec_bits: int = 128) -> SeriesForm:
    """E_k with a(0) = 1 as a SeriesForm, with |a(n)| <= |a(1)| zeta(k-1) n^{k-1}."""
    qexp = eisenstein_qexp(k, N)
    with mpmath.workprec(prec_bits):
        coeffs = tuple(mpmath.mpf(c.numerator) / c.denominator for c in qexp.coeffs)
        const = abs(coeffs[1]) * mpmath.zeta(k - 1) if N >= 1 else mpmath.mpf(1)
    return SeriesForm(
        label=f"E{k}",
        weight=k,
        terms=N,
        a_coeffs=coeffs,
        precision_bits=prec_bits,
        majorant_const=const,
        majorant_exponent=float(k - 1),
    )


def hecke_residuals(f: HeckeEigenform, n_max: int) -> HeckeResiduals:
    """Multiplicativity, Hecke recursion and Deligne residuals of an eigenform."""
    n_max = min(n_max, f.terms)
    lam = f.lambdas
    with mpmath.workprec(f.precision_bits):
        mult = mpmath.mpf(0)
        for m in range(2, n_max + 1):
            for n in range(m + 1, n_max // m + 1):
                if math.gcd(m, n) == 1:
                    mult = max(mult, abs(lam[m * n] - lam[m] * lam[n]))
        rec = mpmath.mpf(0)
        for p in primes_up_to(n_max):
            v = 1
            while p ** (v + 1) <= n_max:
                previous = lam[p ** (v - 1)] if v > 1 else mpmath.mpf(1)
                rec = max(rec, abs(lam[p] * lam[p**v] - lam[p ** (v + 1)] - previous))
                v += 1
        deligne = max(abs(lam[p]) for p in primes_up_to(f.terms)) - 2
    return HeckeResiduals(
        n_max=n_max, multiplicativity=mult, recursion=rec, deligne_excess=deligne
    )


# =============================================================================
# Symmetric square and Euler products
# =============================================================================


def l1_sym2_from_values(
    prime_cutoff: int, lam_p2: Callable[[int], mpmath.mpf]
) -> L1Sym2:
    """
    Truncated Euler product of L(1, sym^2 f) from lambda(p^2), p <= P.

    The local factor at s = 1 is [(1 - 1/p)(1 - (lambda(p^2) - 1)/p + 1/p^2)]^{-1}.
    """
    if prime_cutoff < MIN_L1_CUTOFF:
        raise CutoffTooSmall(
            f"L(1, sym^2 f) needs a prime cutoff >= {MIN_L1_CUTOFF}, got {prime_cutoff}"
        )
    value = mpmath.mpf(1)
    for p in primes_up_to(prime_cutoff):
        inv = mpmath.mpf(1) / p
        value /= (1 - inv) * (1 - (lam_p2(p) - 1) * inv + inv * inv)
    return L1Sym2(
        value=value,
        error_estimate=3 * value / prime_cutoff,
        prime_cutoff=prime_cutoff,
        heuristic=True,
    )


def l1_sym2(f: HeckeEigenform, prime_cutoff: int) -> L1Sym2:
    """L(1, sym^2 f) by its Euler product over p <= prime_cutoff."""
    if prime_cutoff > f.terms:
        raise InsufficientTruncation(
            f"L(1, sym^2 f) up to {prime_cutoff} needs lambda(p) for p <= {prime_cutoff}",
            required=prime_cutoff,
        )
    with mpmath.workprec(f.precision_bits):
        result = l1_sym2_from_values(prime_cutoff, lambda p: f.lambda_prime_power(p, 2))
    logger.debug(
        "L(1, sym^2 f) computed",
        form=f.label,
        prime_cutoff=prime_cutoff,
        value=result.value,
    )
    return result


def l1_sym2_smoothed(f: HeckeEigenform, X: int) -> float:
    """
    Independent estimate zeta(2) sum lambda(n^2)/n e^{-n/X} of L(1, sym^2 f).

    Converges like X^{-1/2}; terms are taken up to n = 40 X.
    """
    limit = 40 * X
    if limit > f.terms:
        raise InsufficientTruncation(
            f"Smoothed L(1, sym^2 f) with X={X} needs truncation >= {limit}",
            required=limit,
        )
    spf = smallest_prime_factors(limit)
    cache: Dict[Tuple[int, int], float] = {}

    def lam_even_power(p: int, v: int) -> float:
        key = (p, v)
        if key not in cache:
            cache[key] = float(f.lambda_prime_power(p, 2 * v))
        return cache[key]

    total = 0.0
    for n in range(1, limit + 1):
        value = 1.0
        for p, v in factor_with_sieve(n, spf):
            value *= lam_even_power(p, v)
        total += value / n * math.exp(-n / X)
    return total * math.pi**2 / 6


def euler_products_from_values(
    prime_cutoff: int,
    lam_p: Callable[[int], mpmath.mpf],
    lam_p2: Callable[[int], mpmath.mpf],
) -> EulerProducts:
    """The four Euler products over p <= P; degenerate factors are reported, never clamped."""
    names = ("prod_n", "prod_eis", "prod_hol", "prod_hol_half")
    products = {name: mpmath.mpf(1) for name in names}
    ranges: Dict[str, List[float]] = {name: [math.inf, -math.inf] for name in names}
    degenerate: Dict[str, List[int]] = {name: [] for name in names}

    for p in primes_up_to(prime_cutoff):
        l1 = lam_p(p)
        l2 = lam_p2(p)
        n_p = l2 + (1 - l2 * l2) / 4
        hol = (abs(l1) - 1) ** 2
        factors = {
            "prod_n": 1 - n_p / p,
            "prod_eis": 1 - (l2 + 1) / p,
            "prod_hol": 1 - hol / p,
            "prod_hol_half": 1 - hol / (2 * p),
        }
        for name, factor in factors.items():
            products[name] *= factor
            value = float(factor)
            ranges[name][0] = min(ranges[name][0], value)
            ranges[name][1] = max(ranges[name][1], value)
            if factor <= 0:
                degenerate[name].append(p)

    return EulerProducts(
        prime_cutoff=prime_cutoff,
        factor_ranges={name: (lo, hi) for name, (lo, hi) in ranges.items()},
        degenerate=degenerate,
        **products,
    )


def euler_products(f: HeckeEigenform, prime_cutoff: int) -> EulerProducts:
    """Euler products of an eigenform; lambda(p^2) comes from the Hecke recursion."""
    if prime_cutoff > f.terms:
        raise InsufficientTruncation(
            f"Euler products up to {prime_cutoff} need lambda(p) for p <= {prime_cutoff}",
            required=prime_cutoff,
        )
    with mpmath.workprec(f.precision_bits):
        return euler_products_from_values(
            prime_cutoff, f.lam, lambda p: f.lambda_prime_power(p, 2)
        )


def family_prime_sum_stats(
    k: int,
    P: int,
    Q: int,
    v: int,
    forms: Optional[List[HeckeEigenform]] = None,
    terms: Optional[int] = None,
    prec_bits: int = 128,
) -> FamilyPrimeSums:
    """
    Per-form |sum_{P<p<=Q} lambda_f(p^v)/p|^2 and their sum over the Hecke basis.

    Raises:
        RangeError: Unless 2 <= P < Q <= 2P
    """
    if not (2 <= P < Q <= 2 * P):
        raise RangeError(f"Prime range must satisfy 2 <= P < Q <= 2P, got P={P}, Q={Q}")
    if v < 1:
        raise RangeError(f"Prime power must be at least 1, got {v}")

    d = cusp_dimension(k)
    if d == 0:
        return FamilyPrimeSums(weight=k, P=P, Q=Q, v=v, per_form=[], family_sum=0)

    if forms is None:
        forms = eigenbasis(k, terms or max(Q, 3 * (d + 1)), prec_bits)

    primes = [p for p in primes_up_to(Q) if p > P]
    per_form = []
    for f in forms:
        with mpmath.workprec(f.precision_bits):
            s = mpmath.fsum(f.lambda_prime_power(p, v) / p for p in primes)
            per_form.append(s * s)
    return FamilyPrimeSums(
        weight=k, P=P, Q=Q, v=v, per_form=per_form, family_sum=mpmath.fsum(per_form)
    )


def lambda_array(f: HeckeEigenform) -> np.ndarray:
    """lambda_f(0..N) as float64 (lambda(0) = 0)."""
    return np.array([float(x) for x in f.lambdas], dtype=np.float64)
