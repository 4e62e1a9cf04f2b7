"""Exact q-expansions: Eisenstein series, the discriminant and Miller bases."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import List

from sympy import bernoulli as sympy_bernoulli

from mflab.logging import logger
from mflab.models import (
    InsufficientTruncation,
    InvalidTruncation,
    InvalidWeight,
    QExpansion,
)
from mflab.utils import divisor_sigma_table

# Remainder of k mod 12 -> exponents (a, b) of E4^a E6^b completing the weight.
_REMAINDER_FACTORS = {
    0: (0, 0),
    4: (1, 0),
    6: (0, 1),
    8: (2, 0),
    10: (1, 1),
    14: (2, 1),
}


def _check_weight(k: int) -> None:
    if k % 2 or k < 4:
        raise InvalidWeight(f"Weight must be even and >= 4, got {k}")


def cusp_dimension(k: int) -> int:
    """dim S_k(SL2(Z)) for even k >= 0 (0 for odd k)."""
    if k % 2 or k < 12:
        return 0
    return k // 12 - (1 if k % 12 == 2 else 0)


@lru_cache(maxsize=None)
def bernoulli(k: int) -> Fraction:
    """Exact Bernoulli number B_k."""
    value = sympy_bernoulli(k)
    return Fraction(int(value.p), int(value.q))


def eisenstein_qexp(k: int, N: int) -> QExpansion:
    """E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, exact to order N."""
    _check_weight(k)
    if N < 0:
        raise InvalidTruncation(f"Truncation must be non-negative, got {N}")
    factor = -Fraction(2 * k) / bernoulli(k)
    sigma = divisor_sigma_table(N, k - 1)
    numerators = [factor.denominator] + [
        factor.numerator * sigma[n] for n in range(1, N + 1)
    ]
    return QExpansion.build(k, numerators, factor.denominator)


def pentagonal_series(N: int) -> QExpansion:
    """prod (1 - q^n) to order N via Euler's pentagonal number theorem."""
    coeffs = [0] * (N + 1)
    coeffs[0] = 1
    m = 1
    while m * (3 * m - 1) // 2 <= N:
        sign = -1 if m % 2 else 1
        for index in (m * (3 * m - 1) // 2, m * (3 * m + 1) // 2):
            if index <= N:
                coeffs[index] = sign
        m += 1
    return QExpansion.build(0, coeffs)


def delta_qexp(N: int) -> QExpansion:
    """Delta = q prod (1 - q^n)^24 with integer coefficients tau(n)."""
    if N < 1:
        raise InvalidTruncation(f"Delta needs truncation >= 1, got {N}")
    eta24 = pentagonal_series(N - 1) ** 24
    return QExpansion.build(12, [0] + list(eta24.numerators))


def miller_basis(k: int, N: int) -> List[QExpansion]:
    """
    Echelonized integral basis g_1..g_d of S_k with g_i = q^i + O(q^{d+1}).

    Built from Delta^i E6^{2(d-i)} E4^a E6^b and reduced by back-substitution,
    which keeps every coefficient an integer.
    """
    _check_weight(k)
    d = cusp_dimension(k)
    if d == 0:
        return []
    if N < d + 1:
        raise InsufficientTruncation(
            f"Miller basis of weight {k} needs truncation >= {d + 1}, got {N}",
            required=d + 1,
        )

    logger.debug("Building Miller basis", weight=k, dimension=d, terms=N)

    a, b = _REMAINDER_FACTORS[k - 12 * d]
    e4 = eisenstein_qexp(4, N)
    e6 = eisenstein_qexp(6, N)
    delta = delta_qexp(N)
    e6_squared = e6 * e6
    tail = e4**a * e6**b

    raw: List[QExpansion] = []
    delta_power = delta
    for i in range(1, d + 1):
        raw.append(delta_power * e6_squared ** (d - i) * tail)
        if i < d:
            delta_power = delta_power * delta

    basis: List[QExpansion] = [None] * d  # type: ignore[list-item]
    for i in range(d, 0, -1):
        g = raw[i - 1]
        for j in range(i + 1, d + 1):
            c = g.numerators[j]
            if c:
                g = g - basis[j - 1] * c
        basis[i - 1] = g

    logger.info("Miller basis built", weight=k, dimension=d, terms=N)
    return basis
