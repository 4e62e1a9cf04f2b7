"""Shared helpers: exact series products, ordered parallel maps and sieves."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from functools import lru_cache
from typing import Callable, ContextManager, Iterable, List, Optional, Sequence, TypeVar

import gmpy2
import mpmath
import numpy as np
from mpmath.libmp import mpf_pos, round_nearest
from sympy import primerange

T = TypeVar("T")
R = TypeVar("R")


# =============================================================================
# Exact arithmetic
# =============================================================================


def _pack(values: Sequence[int], slot_bytes: int) -> gmpy2.mpz:
    """Kronecker substitution: non-negative coefficients into one big integer."""
    raw = b"".join(int(v).to_bytes(slot_bytes, "little") for v in values)
    return gmpy2.mpz(int.from_bytes(raw, "little"))


def _unpack(packed: gmpy2.mpz, slot_bytes: int, count: int) -> List[int]:
    raw = int(packed).to_bytes(slot_bytes * count, "little")
    return [
        int.from_bytes(raw[i * slot_bytes : (i + 1) * slot_bytes], "little")
        for i in range(count)
    ]


def _nonnegative_product(a: Sequence[int], b: Sequence[int], count: int) -> List[int]:
    if not any(a) or not any(b):
        return [0] * count
    bound = max(a).bit_length() + max(b).bit_length() + min(len(a), len(b)).bit_length()
    slot_bytes = bound // 8 + 1
    slots = len(a) + len(b) - 1
    product = gmpy2.mul(_pack(a, slot_bytes), _pack(b, slot_bytes))
    result = _unpack(product, slot_bytes, slots)
    return (result + [0] * count)[:count]


def integer_convolution(a: Sequence[int], b: Sequence[int], n: int) -> List[int]:
    """
    First n + 1 coefficients of the product of two integer series.

    Signed inputs are split into positive and negative parts so that every
    packed product works on non-negative slots.
    """
    a = list(a[: n + 1])
    b = list(b[: n + 1])
    a_pos = [max(v, 0) for v in a]
    a_neg = [max(-v, 0) for v in a]
    b_pos = [max(v, 0) for v in b]
    b_neg = [max(-v, 0) for v in b]
    count = n + 1
    pp = _nonnegative_product(a_pos, b_pos, count)
    pn = _nonnegative_product(a_pos, b_neg, count)
    np_ = _nonnegative_product(a_neg, b_pos, count)
    nn = _nonnegative_product(a_neg, b_neg, count)
    return [w - x - y + z for w, x, y, z in zip(pp, pn, np_, nn)]


# =============================================================================
# Primes and sieves
# =============================================================================


@lru_cache(maxsize=32)
def primes_up_to(limit: int) -> tuple[int, ...]:
    """All primes p <= limit in ascending order."""
    return tuple(int(p) for p in primerange(2, limit + 1))


def smallest_prime_factors(limit: int) -> np.ndarray:
    """spf[n] = smallest prime factor of n for 2 <= n <= limit (spf[0] = spf[1] = 0)."""
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in primes_up_to(int(limit**0.5) + 1):
        block = spf[p * p :: p]
        block[block == 0] = p
    rest = np.arange(limit + 1, dtype=np.int64)
    mask = spf == 0
    spf[mask] = rest[mask]
    spf[:2] = 0
    return spf


def factor_with_sieve(n: int, spf: np.ndarray) -> List[tuple[int, int]]:
    """Prime factorization [(p, v), ...] of n using a smallest-prime-factor table."""
    factors: List[tuple[int, int]] = []
    while n > 1:
        p = int(spf[n])
        v = 0
        while n % p == 0:
            n //= p
            v += 1
        factors.append((p, v))
    return factors


def divisor_sigma_table(limit: int, power: int) -> List[int]:
    """sigma_power(n) for 0 <= n <= limit (sigma(0) = 0)."""
    table = [0] * (limit + 1)
    for d in range(1, limit + 1):
        dp = d**power
        for m in range(d, limit + 1, d):
            table[m] += dp
    return table


# =============================================================================
# Concurrency
# =============================================================================


def default_threads() -> int:
    return os.cpu_count() or 1


def working_precision(bits: int) -> ContextManager:
    """workprec(bits), or a no-op when the process already runs at that precision."""
    if mpmath.mp.prec == bits:
        return nullcontext()
    return mpmath.workprec(bits)


def round_mpf(value: mpmath.mpf, bits: int) -> mpmath.mpf:
    """Round to `bits` without touching the global mpmath precision."""
    return mpmath.mp.make_mpf(mpf_pos(value._mpf_, bits, round_nearest))


def ordered_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: int = 1,
    prec: Optional[int] = None,
) -> List[R]:
    """
    Map fn over items with a thread pool, returning results in input order.

    mpmath precision is process-wide: with `prec` set it is pinned for the
    lifetime of the pool, and workers must only enter working_precision(prec).
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with working_precision(prec) if prec is not None else nullcontext():
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))


# =============================================================================
# Optimization
# =============================================================================

INV_GOLDEN = (5**0.5 - 1) / 2


def golden_section_max(
    fn: Callable[[T], R], lo: T, hi: T, tol: float, max_iter: int = 500
) -> tuple[T, R]:
    """
    Maximize a unimodal fn on [lo, hi] by golden-section search.

    Works on floats or mpf alike; returns (argmax, max) once the bracket is
    shorter than tol.
    """
    a, b = lo, hi
    c = b - INV_GOLDEN * (b - a)
    d = a + INV_GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_GOLDEN * (b - a)
            fd = fn(d)
    return (c, fc) if fc >= fd else (d, fd)
