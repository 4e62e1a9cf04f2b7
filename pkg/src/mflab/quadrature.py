"""Adaptive tensor Gauss-Legendre quadrature on rectangles."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np

from mflab.logging import logger
from mflab.models import QuadratureError, QuadratureResult
from mflab.utils import ordered_map

Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]
Cell = Tuple[float, float, float, float]


@lru_cache(maxsize=8)
def gauss_legendre(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(nodes)


def tensor_rule(fn: Integrand, cell: Cell, nodes: int) -> float:
    """Tensor Gauss-Legendre approximation of the integral of fn over one cell."""
    x1, x2, y1, y2 = cell
    t, w = gauss_legendre(nodes)
    xs = 0.5 * (x2 - x1) * t + 0.5 * (x1 + x2)
    ys = 0.5 * (y2 - y1) * t + 0.5 * (y1 + y2)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    values = np.asarray(fn(X.ravel(), Y.ravel()), dtype=np.float64).reshape(X.shape)
    return 0.25 * (x2 - x1) * (y2 - y1) * float(w @ values @ w)


def _children(cell: Cell) -> List[Cell]:
    x1, x2, y1, y2 = cell
    xm, ym = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
    return [(x1, xm, y1, ym), (xm, x2, y1, ym), (x1, xm, ym, y2), (xm, x2, ym, y2)]


def integrate_2d(
    fn: Integrand,
    x_range: Tuple[float, float],
    y_range: Tuple[float, float],
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    nodes: int = 16,
    max_depth: int = 12,
    threads: int = 1,
    strict: bool = True,
) -> QuadratureResult:
    """
    Integrate a vectorized fn(x, y) over a rectangle.

    Cells are refined level by level; a cell is accepted once its coarse and
    four-child estimates agree within its area share of the tolerance. The
    final sum runs in cell-creation order so results are bit-stable for any
    thread count.

    Raises:
        QuadratureError: If cells remain unresolved at max_depth (strict mode)
    """
    root: Cell = (x_range[0], x_range[1], y_range[0], y_range[1])
    area = (root[1] - root[0]) * (root[3] - root[2])
    if area <= 0:
        return QuadratureResult(value=0.0, error=0.0, cells=0)

    active: List[Tuple[Cell, float]] = [(root, tensor_rule(fn, root, nodes))]
    accepted_values: List[float] = []
    accepted_errors: List[float] = []

    def refine(item: Tuple[Cell, float]) -> Tuple[List[Tuple[Cell, float]], float, float]:
        cell, coarse = item
        kids = [(c, tensor_rule(fn, c, nodes)) for c in _children(cell)]
        fine = math.fsum(v for _, v in kids)
        return kids, fine, abs(fine - coarse)

    for depth in range(max_depth + 1):
        estimate = math.fsum(accepted_values) + math.fsum(v for _, v in active)
        budget = max(abs_tol, rel_tol * abs(estimate))
        results = ordered_map(refine, active, threads)
        next_active: List[Tuple[Cell, float]] = []
        for (cell, _), (kids, fine, err) in zip(active, results):
            share = (cell[1] - cell[0]) * (cell[3] - cell[2]) / area
            if err <= budget * share or depth == max_depth:
                accepted_values.append(fine)
                accepted_errors.append(err)
                if err > budget * share:
                    next_active.append((cell, fine))
            else:
                next_active.extend(kids)
        if depth == max_depth and next_active:
            unresolved = len(next_active)
            logger.warning(
                "Quadrature did not converge",
                depth=max_depth,
                unresolved_cells=unresolved,
                error=math.fsum(accepted_errors),
            )
            if strict:
                raise QuadratureError(
                    f"Quadrature left {unresolved} cells unresolved at depth {max_depth}"
                )
            return QuadratureResult(
                value=math.fsum(accepted_values),
                error=math.fsum(accepted_errors),
                cells=len(accepted_values),
                converged=False,
            )
        active = next_active
        if not active:
            break

    return QuadratureResult(
        value=math.fsum(accepted_values),
        error=math.fsum(accepted_errors),
        cells=len(accepted_values),
    )
