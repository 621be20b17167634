"""
KKT analysis of the weighted sum-rate problem and the image region G1.

The KKT conditions are written for the input simplexes q_u = (p_u, 1 - p_u)
with Psi extended homogeneously to unnormalised vectors:

    dPsi/dq_us = Psi - w_u   if q_us > 0
    dPsi/dq_us <= Psi - w_u  if q_us = 0

At interior points g_u1 = (1 - p_u) dPsi/dp_u and g_u2 = -p_u dPsi/dp_u, so the
residual r satisfies |grad Psi|_inf / 2 <= r <= |grad Psi|_inf
(EQUIVALENCE_CONSTANT = 2).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np
from django.conf import settings

from services.errors import DegenerateChannelError, DomainError
from services.info_theory import Channel, InputDist, RatePair, Weights, corner_c1_values
from services.objective import grad_psi_array, psi
from services.oracle import grid_max
from services.single_user import binary_capacity
from services.solver import degeneracy

logger = logging.getLogger(__name__)

KKT_TOL: float = float(getattr(settings, 'KKT_TOL', 1e-8))
KKT_SEED_GRID: int = int(getattr(settings, 'KKT_SEED_GRID', 64))
G1_GRID: int = int(getattr(settings, 'G1_GRID', 512))
G1_BINS: int = int(getattr(settings, 'G1_BINS', 1024))

EQUIVALENCE_CONSTANT = 2.0
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 40
POLISH_TOL = 1e-12
DEDUPE_TOL = 1e-8
HESSIAN_STEP = 1e-5
CURVATURE_TOL = 1e-8
GLOBAL_TOL = 1e-9
CERTIFY_GRID = 256


class PointKind(str, Enum):
    GLOBAL_MAX = 'GlobalMax'
    LOCAL_MAX = 'LocalMax'
    SADDLE = 'Saddle'
    LOCAL_MIN = 'LocalMin'
    DEGENERATE = 'Degenerate'


@dataclass(frozen=True)
class KktPoint:
    input: InputDist
    residual: float
    kind: PointKind
    on_boundary: bool
    value: float


def _require_differentiable(ch: Channel) -> None:
    if any(t in (0.0, 1.0) for t in ch.as_tuple()):
        raise DomainError(
            f"KKT analysis assumes a, b, c, d not in {{0, 1}} for differentiability, got {ch}")


def _transition(ch: Channel) -> np.ndarray:
    """W[x1, x2, y] with symbol 1 at index 0."""
    y1 = np.array([[ch.a, ch.b], [ch.c, ch.d]])
    return np.stack([y1, 1.0 - y1], axis=-1)


def q_gradient(ch: Channel, w: Weights, inp: InputDist) -> np.ndarray:
    """G[u, s] = dPsi/dq_us for the homogeneous extension of Psi."""
    _require_differentiable(ch)
    trans = _transition(ch)
    q1 = np.array([inp.p1, 1.0 - inp.p1])
    q2 = np.array([inp.p2, 1.0 - inp.p2])
    y_given_x1 = np.einsum('j,ijy->iy', q2, trans)
    y = q1 @ y_given_x1

    info_x1 = np.log(y_given_x1 / y)                       # ln P(y|x1)/P(y)
    info_x2 = np.log(trans / y_given_x1[:, None, :])       # ln W(y|x1,x2)/P(y|x1)

    grad = np.empty((2, 2))
    grad[0] = (w.w1 * ((y_given_x1 * info_x1).sum(axis=1) - 1.0)
               + w.w2 * np.einsum('j,sjy,sjy->s', q2, trans, info_x2))
    grad[1] = (w.w1 * np.einsum('i,isy,iy->s', q1, trans, info_x1)
               + w.w2 * (np.einsum('i,isy,isy->s', q1, trans, info_x2) - 1.0))
    return grad


def kkt_residual(ch: Channel, w: Weights, inp: InputDist) -> float:
    """Largest violation of the KKT conditions at inp."""
    grad = q_gradient(ch, w, inp)
    value = psi(ch, w, inp)
    gap = grad - (value - np.array([[w.w1], [w.w2]]))
    q = np.array([[inp.p1, 1.0 - inp.p1], [inp.p2, 1.0 - inp.p2]])
    violation = np.where(q > 0.0, np.abs(gap), np.maximum(gap, 0.0))
    return float(violation.max())


def _gradients(ch: Channel, w: Weights, x: np.ndarray) -> np.ndarray:
    return grad_psi_array(ch, w, x[0], x[1])


def _hessians(ch: Channel, w: Weights, x: np.ndarray, step: float) -> np.ndarray:
    """Differences of the analytic gradient; shape (2, 2, N), symmetrised.

    The stencil is clipped to the unit square, becoming one-sided at edges.
    """
    columns = []
    for axis in range(2):
        shift = np.zeros((2, 1))
        shift[axis] = step
        upper = np.minimum(x + shift, 1.0)
        lower = np.maximum(x - shift, 0.0)
        width = upper[axis] - lower[axis]
        columns.append((_gradients(ch, w, upper) - _gradients(ch, w, lower)) / width)
    hess = np.stack(columns, axis=1)
    return 0.5 * (hess + np.swapaxes(hess, 0, 1))


def _newton_steps(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    (h11, h12), (h21, h22) = hess
    det = h11 * h22 - h12 * h21
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.stack([-(h22 * grad[0] - h12 * grad[1]) / det,
                         -(h11 * grad[1] - h21 * grad[0]) / det])


def newton_polish(ch: Channel, w: Weights, p1: np.ndarray, p2: np.ndarray):
    """Damped Newton on grad Psi from every seed (p1[i], p2[i]).

    A step is halved until the gradient max-norm decreases and the iterate
    stays inside the open square; seeds that cannot decrease it stop where
    they are. Returns (points of shape (2, N), gradient max-norms).
    """
    x = np.stack([np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)])
    grad = _gradients(ch, w, x)
    norm = np.max(np.abs(grad), axis=0)
    moving = np.isfinite(norm)

    for _ in range(NEWTON_MAX_ITER):
        todo = np.flatnonzero(moving & (norm > POLISH_TOL))
        if todo.size == 0:
            break
        xt, gt, nt = x[:, todo], grad[:, todo], norm[todo]
        steps = _newton_steps(_hessians(ch, w, xt, 1e-6), gt)
        scale = np.ones(todo.size)
        accepted = np.zeros(todo.size, dtype=bool)
        new_x, new_grad, new_norm = xt.copy(), gt.copy(), nt.copy()
        for _ in range(NEWTON_MAX_HALVINGS):
            trial = xt + scale * steps
            inside = np.all((trial > 0.0) & (trial < 1.0), axis=0)
            trial_grad = _gradients(ch, w, np.where(inside, trial, 0.5))
            trial_norm = np.where(inside, np.max(np.abs(trial_grad), axis=0), np.inf)
            better = ~accepted & (trial_norm < nt)
            new_x[:, better] = trial[:, better]
            new_grad[:, better] = trial_grad[:, better]
            new_norm[better] = trial_norm[better]
            accepted |= better
            if accepted.all():
                break
            scale = np.where(accepted, scale, 0.5 * scale)
        x[:, todo], grad[:, todo], norm[todo] = new_x, new_grad, new_norm
        moving[todo[~accepted]] = False
    return x, norm


def _dedupe(points: Sequence[InputDist]) -> List[InputDist]:
    kept: List[InputDist] = []
    for point in points:
        if not any(abs(point.p1 - k.p1) <= DEDUPE_TOL and abs(point.p2 - k.p2) <= DEDUPE_TOL
                   for k in kept):
            kept.append(point)
    return kept


def _edge_candidates(ch: Channel) -> List[InputDist]:
    """Tangential maximisers on the four edges plus the four corners."""
    candidates = [
        InputDist(binary_capacity(ch.b, ch.d).p_opt, 0.0),
        InputDist(binary_capacity(ch.a, ch.c).p_opt, 1.0),
        InputDist(0.0, binary_capacity(ch.c, ch.d).p_opt),
        InputDist(1.0, binary_capacity(ch.a, ch.b).p_opt),
    ]
    candidates += [InputDist(p1, p2) for p1 in (0.0, 1.0) for p2 in (0.0, 1.0)]
    return candidates


def _curvature_sign(value: float) -> int:
    if value > CURVATURE_TOL:
        return 1
    if value < -CURVATURE_TOL:
        return -1
    return 0


def _classify(ch: Channel, w: Weights, inp: InputDist) -> PointKind:
    x = np.array([[inp.p1], [inp.p2]])
    fixed = [p in (0.0, 1.0) for p in (inp.p1, inp.p2)]

    if not any(fixed):
        eigen = np.linalg.eigvalsh(_hessians(ch, w, x, HESSIAN_STEP)[:, :, 0])
        signs = {_curvature_sign(float(v)) for v in eigen}
        if 0 in signs:
            return PointKind.DEGENERATE
        if signs == {-1}:
            return PointKind.LOCAL_MAX
        if signs == {1}:
            return PointKind.LOCAL_MIN
        return PointKind.SADDLE

    grad = _gradients(ch, w, x)[:, 0]
    # Slope of Psi when moving into the square along each fixed coordinate.
    inward = [grad[u] if p == 0.0 else -grad[u]
              for u, p in enumerate((inp.p1, inp.p2)) if fixed[u]]
    if any(_curvature_sign(float(s)) >= 0 for s in inward):
        return PointKind.DEGENERATE
    if all(fixed):
        return PointKind.LOCAL_MAX

    free = 0 if not fixed[0] else 1
    sign = _curvature_sign(float(_hessians(ch, w, x, HESSIAN_STEP)[free, free, 0]))
    if sign < 0:
        return PointKind.LOCAL_MAX
    if sign > 0:
        return PointKind.SADDLE
    return PointKind.DEGENERATE


def find_kkt_points(ch: Channel, w: Weights, grid_n: int = KKT_SEED_GRID,
                    kkt_tol: float = KKT_TOL) -> List[KktPoint]:
    """All KKT points of Psi, classified and sorted by (p1, p2)."""
    _require_differentiable(ch)
    reason = degeneracy(ch)
    if reason is not None:
        raise DegenerateChannelError(f"degenerate channel {ch}: {reason}")
    if grid_n < 2:
        raise DomainError(f"grid_n must be at least 2, got {grid_n}")

    axis = (np.arange(grid_n) + 0.5) / grid_n
    seeds_p1, seeds_p2 = np.meshgrid(axis, axis, indexing='ij')
    x, norm = newton_polish(ch, w, seeds_p1.ravel(), seeds_p2.ravel())
    converged = np.flatnonzero(np.isfinite(norm) & (norm <= kkt_tol))
    interior = _dedupe([InputDist(x[0, i], x[1, i]) for i in converged])

    points: List[KktPoint] = []
    for inp in _dedupe(interior + _edge_candidates(ch)):
        residual = kkt_residual(ch, w, inp)
        if residual > kkt_tol:
            continue
        on_boundary = inp.p1 in (0.0, 1.0) or inp.p2 in (0.0, 1.0)
        points.append(KktPoint(input=inp, residual=residual, kind=_classify(ch, w, inp),
                               on_boundary=on_boundary, value=psi(ch, w, inp)))

    if points:
        best = max(p.value for p in points)
        reference = grid_max(ch, w, CERTIFY_GRID, corner='C1').best_value
        if reference > best + GLOBAL_TOL:
            logger.warning("kkt_global_max_missed",
                           extra={'channel': str(ch), 'kkt_best': best, 'grid_best': reference})
        else:
            points = [
                KktPoint(p.input, p.residual, PointKind.GLOBAL_MAX, p.on_boundary, p.value)
                if p.kind is PointKind.LOCAL_MAX and p.value >= best - GLOBAL_TOL else p
                for p in points
            ]

    points.sort(key=lambda p: (p.input.p1, p.input.p2))
    logger.info("find_kkt_points_done", extra={'channel': str(ch), 'seeds': grid_n * grid_n,
                                                'points': len(points)})
    return points


# ------------------------------------------------------------------------ G1

def trace_g1(ch: Channel, grid_n: int = G1_GRID, bins: int = G1_BINS) -> List[RatePair]:
    """Outline of G1 = {C1(q1, q2)}, ordered by angle around the cloud centroid.

    Keeps the farthest point of every angular bin plus the Pareto frontier.
    """
    if grid_n < 2 or bins < 4:
        raise DomainError(f"grid_n >= 2 and bins >= 4 required, got {grid_n}, {bins}")
    axis = np.linspace(0.0, 1.0, grid_n)
    p1, p2 = np.meshgrid(axis, axis, indexing='ij')
    r1, r2 = (np.ravel(v) for v in corner_c1_values(ch, p1, p2))

    if np.ptp(r1) <= 1e-15 and np.ptp(r2) <= 1e-15:
        return [RatePair(float(r1[0]), float(r2[0]))]

    cx, cy = r1.mean(), r2.mean()
    angle = np.arctan2(r2 - cy, r1 - cx)
    radius = np.hypot(r1 - cx, r2 - cy)
    slot = np.clip(((angle + np.pi) / (2.0 * np.pi) * bins).astype(int), 0, bins - 1)
    order = np.lexsort((-radius, slot))
    _, first = np.unique(slot[order], return_index=True)
    extremal = order[first]

    by_r1 = np.lexsort((-r2, -r1))
    running = np.maximum.accumulate(np.concatenate([[-np.inf], r2[by_r1][:-1]]))
    pareto = by_r1[r2[by_r1] > running]

    keep = np.unique(np.concatenate([extremal, pareto]))
    keep = keep[np.argsort(angle[keep], kind='stable')]
    outline: List[RatePair] = []
    for i in keep:
        pair = RatePair(float(r1[i]), float(r2[i]))
        if not outline or (pair.r1, pair.r2) != (outline[-1].r1, outline[-1].r2):
            outline.append(pair)
    logger.debug("trace_g1_done", extra={'channel': str(ch), 'vertices': len(outline)})
    return outline


def concavity_depths(outline: Sequence[RatePair], k: int = 1) -> np.ndarray:
    """Signed distance of each vertex to the chord joining its k-th neighbours.

    The outline is a closed counter-clockwise loop; positive values are dents
    (the vertex lies inside the chord).
    """
    pts = np.array([[p.r1, p.r2] for p in outline], dtype=float)
    if len(pts) < 3:
        return np.zeros(len(pts))
    prev_pts = np.roll(pts, k, axis=0)
    next_pts = np.roll(pts, -k, axis=0)
    chord = next_pts - prev_pts
    offset = pts - prev_pts
    length = np.hypot(chord[:, 0], chord[:, 1])
    cross = chord[:, 0] * offset[:, 1] - chord[:, 1] * offset[:, 0]
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(length > 0.0, cross / length, 0.0)


def tangent_slope(outline: Sequence[RatePair], point: RatePair, radius: float) -> float:
    """Least-squares slope dr2/dr1 of the outline vertices within radius of point."""
    pts = np.array([[p.r1, p.r2] for p in outline], dtype=float)
    near = pts[np.hypot(pts[:, 0] - point.r1, pts[:, 1] - point.r2) <= radius]
    if len(near) < 2 or np.ptp(near[:, 0]) == 0.0:
        raise DomainError(f"need two outline vertices with distinct r1 within {radius} of {point}")
    return float(np.polyfit(near[:, 0], near[:, 1], 1)[0])
