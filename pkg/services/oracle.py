"""
Brute-force ground truth.

Everything here is computed from the explicit 2x2x2 joint distribution
P(x1, x2, y) = q1(x1) q2(x2) W(y | x1, x2) and never from the closed forms in
services.objective, so the two paths check each other.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from django.conf import settings
from scipy.special import xlogy

from services.errors import DomainError
from services.info_theory import ArrayLike, Channel, InputDist, Weights, scalar_or_array

logger = logging.getLogger(__name__)

ORACLE_GRID: int = int(getattr(settings, 'ORACLE_GRID', 2000))
CHUNK_ROWS = 64
CORNERS = ('C1', 'C2', 'best')


class MiTable(NamedTuple):
    i_y_x1: ArrayLike
    i_y_x2: ArrayLike
    i_y_x2_given_x1: ArrayLike
    i_y_x1_given_x2: ArrayLike
    i_joint: ArrayLike


@dataclass(frozen=True)
class GridResult:
    best_input: InputDist
    best_value: float
    grid_n: int
    corner: str


def joint_table(ch: Channel, p1: ArrayLike, p2: ArrayLike) -> np.ndarray:
    """P(x1, x2, y) with trailing axes (x1, x2, y); symbol 1 sits at index 0."""
    p1 = np.asarray(p1, dtype=float)[..., None, None, None]
    p2 = np.asarray(p2, dtype=float)[..., None, None, None]
    q1 = np.concatenate([p1, 1.0 - p1], axis=-3)
    q2 = np.concatenate([p2, 1.0 - p2], axis=-2)
    y1 = np.array([[ch.a, ch.b], [ch.c, ch.d]])[..., None]
    w = np.concatenate([y1, 1.0 - y1], axis=-1)
    return q1 * q2 * w


def _entropy(table: np.ndarray, keep: tuple) -> np.ndarray:
    """Entropy of the marginal on the kept trailing axes (0=x1, 1=x2, 2=y)."""
    drop = tuple(ax - 3 for ax in range(3) if ax not in keep)
    marginal = table.sum(axis=drop) if drop else table
    flat = marginal.reshape(marginal.shape[:marginal.ndim - len(keep)] + (-1,))
    return -xlogy(flat, flat).sum(axis=-1)


def mi_table_values(ch: Channel, p1: ArrayLike, p2: ArrayLike) -> MiTable:
    table = joint_table(ch, p1, p2)
    h_x1, h_x2, h_y = _entropy(table, (0,)), _entropy(table, (1,)), _entropy(table, (2,))
    h_x1x2, h_x1y, h_x2y = _entropy(table, (0, 1)), _entropy(table, (0, 2)), _entropy(table, (1, 2))
    h_all = _entropy(table, (0, 1, 2))
    values = (
        h_x1 + h_y - h_x1y,
        h_x2 + h_y - h_x2y,
        h_x1y + h_x1x2 - h_x1 - h_all,
        h_x1x2 + h_x2y - h_x2 - h_all,
        h_x1x2 + h_y - h_all,
    )
    return MiTable(*(scalar_or_array(np.maximum(v, 0.0)) for v in values))


def mi_joint_table(ch: Channel, inp: InputDist) -> MiTable:
    """All five mutual informations of the input pair, from the joint table."""
    return mi_table_values(ch, inp.p1, inp.p2)


def grid_max(ch: Channel, w: Weights, grid_n: int = ORACLE_GRID, corner: str = 'best') -> GridResult:
    """Maximum of w.C over the (grid_n + 1)^2 uniform input grid.

    corner selects C1, C2 or the better of the two per point. Ties keep the
    first point in row-major order (smallest p1, then smallest p2).
    """
    if grid_n < 2:
        raise DomainError(f"grid_n must be at least 2, got {grid_n}")
    if corner not in CORNERS:
        raise DomainError(f"corner must be one of {CORNERS}, got {corner!r}")

    axis = np.linspace(0.0, 1.0, grid_n + 1)
    best_value, best_index, best_corner = -np.inf, (0, 0), 'C1'
    for start in range(0, axis.size, CHUNK_ROWS):
        rows = axis[start:start + CHUNK_ROWS, None]
        mi = mi_table_values(ch, rows, axis[None, :])
        c1 = w.w1 * mi.i_y_x1 + w.w2 * mi.i_y_x2_given_x1
        c2 = w.w1 * mi.i_y_x1_given_x2 + w.w2 * mi.i_y_x2
        if corner == 'C1':
            values = c1
        elif corner == 'C2':
            values = c2
        else:
            values = np.maximum(c1, c2)
        flat = int(np.argmax(values))
        i, j = divmod(flat, values.shape[1])
        if values[i, j] > best_value:
            best_value = float(values[i, j])
            best_index = (start + i, j)
            if corner == 'best':
                best_corner = 'C1' if c1[i, j] >= c2[i, j] else 'C2'
            else:
                best_corner = corner

    best_input = InputDist(axis[best_index[0]], axis[best_index[1]])
    logger.debug("grid_max", extra={'channel': str(ch), 'grid_n': grid_n, 'value': best_value})
    return GridResult(best_input=best_input, best_value=best_value, grid_n=grid_n, corner=best_corner)


def fd_derivative(fn: Callable[[float], float], x: float, step: float = 1e-5) -> float:
    """Central difference, Richardson-extrapolated once: (4 D(h/2) - D(h)) / 3."""
    def central(h: float) -> float:
        return (fn(x + h) - fn(x - h)) / (2.0 * h)

    return (4.0 * central(step / 2.0) - central(step)) / 3.0


def fit_grid_constant(ch: Channel, w: Weights, value: float, grid_sizes=(64, 128, 256)) -> float:
    """Smallest C with value - grid_max(n) <= C / n^2 for every n in grid_sizes.

    Negative gaps (grid above value) count as zero.
    """
    sizes = [int(n) for n in grid_sizes]
    if not sizes:
        raise DomainError("grid_sizes must not be empty")
    fitted = max(max(value - grid_max(ch, w, n).best_value, 0.0) * n * n for n in sizes)
    logger.debug("fit_grid_constant", extra={'channel': str(ch), 'sizes': sizes, 'constant': fitted})
    return fitted
