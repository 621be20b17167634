"""
Weighted sum-rate maximisation for the two-user binary MAC.

The optimum of Psi over the unit square is the best of three candidates:
the reduced one-dimensional problem phi(p) = Psi(f(p), p) over P2-bar and the
two axis values w1 e1, w2 e2. Weights with w1 > w2 are solved on the user-swapped
channel with swapped weights, i.e. over C2 points.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from django.conf import settings
from joblib import Parallel, delayed

from services.errors import DegenerateChannelError, DomainError, ExcludedPointError, NotThreeParamError
from services.info_theory import (
    Channel,
    InputDist,
    RatePair,
    Weights,
    corner_c1,
    swap_users,
)
from services.objective import delta_fn, f_map, f_value, h2, h_prime, phi_hat_array
from services.single_user import e1, e2

logger = logging.getLogger(__name__)

CAPACITY_EPS: float = float(getattr(settings, 'CAPACITY_EPS', 1e-9))
CAPACITY_GRID: int = int(getattr(settings, 'CAPACITY_GRID', 4096))
REGION_SWEEP: int = int(getattr(settings, 'REGION_SWEEP', 201))
REGION_N_JOBS: int = int(getattr(settings, 'REGION_N_JOBS', 1))

# An interior candidate must beat the axis candidates by more than this.
TIE_TOL = 1e-12
MERGE_TOL = 1e-10
HULL_TOL = 1e-11
# A grid peak is refined only if it comes within PEAK_MARGIN of the axis
# candidates; at most MAX_REFINED_PEAKS of them, best first.
PEAK_MARGIN = 1e-5
MAX_REFINED_PEAKS = 8


class Location(str, Enum):
    INTERIOR = 'Interior'
    AXIS_USER1 = 'BoundaryAxisUser1'
    AXIS_USER2 = 'BoundaryAxisUser2'

    def swapped(self) -> 'Location':
        return {Location.AXIS_USER1: Location.AXIS_USER2,
                Location.AXIS_USER2: Location.AXIS_USER1}.get(self, self)


class Method(str, Enum):
    CASE_A_BOUNDARY = 'CaseABoundary'
    CASE_B_BISECTION = 'CaseBBisection'
    CLOSED_FORM = 'ClosedForm'
    GENERAL_SCAN = 'GeneralScan'


class CaseTag(str, Enum):
    NOT_THREE_PARAM = 'NotThreeParam'
    CASE_A = 'CaseA'
    CASE_B = 'CaseB'


@dataclass(frozen=True)
class Solution:
    input: InputDist
    rates: RatePair
    value: float
    location: Location
    corner: str
    method: Method
    p2_tolerance: Optional[float] = None

    def swapped(self) -> 'Solution':
        """The same solution read with the users exchanged."""
        return Solution(
            input=self.input.swapped(),
            rates=self.rates.swapped(),
            value=self.value,
            location=self.location.swapped(),
            corner='C2' if self.corner == 'C1' else 'C1',
            method=self.method,
            p2_tolerance=self.p2_tolerance,
        )


@dataclass(frozen=True)
class RegionVertex:
    rates: RatePair
    w1: float
    w2: float
    input: InputDist


@dataclass(frozen=True)
class RegionBoundary:
    """Vertices ordered by decreasing r1, from (e1, 0) to (0, e2)."""
    channel: Channel
    vertices: List[RegionVertex] = field(default_factory=list)

    @property
    def rates(self) -> List[RatePair]:
        return [v.rates for v in self.vertices]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {'r1': v.rates.r1, 'r2': v.rates.r2, 'w1': v.w1, 'w2': v.w2,
             'p1': v.input.p1, 'p2': v.input.p2}
            for v in self.vertices
        ]
        return pd.DataFrame(rows, columns=['r1', 'r2', 'w1', 'w2', 'p1', 'p2'])


def degeneracy(ch: Channel) -> Optional[str]:
    """Name of the degeneracy excluding ch from the problem, or None."""
    silent_x2 = ch.a == ch.b and ch.c == ch.d
    silent_x1 = ch.a == ch.c and ch.b == ch.d
    if silent_x1 and silent_x2:
        return "output independent of both inputs (a=b=c=d)"
    if silent_x2:
        return "output independent of X2 (a=b and c=d)"
    if silent_x1:
        return "output independent of X1 (a=c and b=d)"
    return None


def _require_nondegenerate(ch: Channel) -> None:
    reason = degeneracy(ch)
    if reason is not None:
        raise DegenerateChannelError(f"degenerate channel {ch}: {reason}")


def boundary_solution(ch: Channel, w: Weights, method: Method) -> Solution:
    """max{w1 e1, w2 e2} with the achieving axis input."""
    first, second = e1(ch), e2(ch)
    if w.w1 * first.capacity >= w.w2 * second.capacity:
        inp = InputDist(first.p_opt, first.fixed_other)
        rates = RatePair(first.capacity, 0.0)
        location = Location.AXIS_USER1
    else:
        inp = InputDist(second.fixed_other, second.p_opt)
        rates = RatePair(0.0, second.capacity)
        location = Location.AXIS_USER2
    return Solution(input=inp, rates=rates, value=rates.weighted(w),
                    location=location, corner='C1', method=method)


def _interior_solution(ch: Channel, w: Weights, inp: InputDist, method: Method,
                       tolerance: Optional[float]) -> Solution:
    rates = corner_c1(ch, inp)
    return Solution(input=inp, rates=rates, value=rates.weighted(w),
                    location=Location.INTERIOR, corner='C1', method=method,
                    p2_tolerance=tolerance)


def _best(interior: Optional[Solution], boundary: Solution) -> Solution:
    if interior is not None and interior.value > boundary.value + TIE_TOL:
        return interior
    return boundary


# ---------------------------------------------------------------- 3-parameter

def canonicalize_3param(ch: Channel) -> Tuple[Channel, bool]:
    """Exchange c and d so that c > d; returns (channel, swapped_cd)."""
    if ch.a != ch.b:
        raise NotThreeParamError(f"channel {ch} has a != b")
    swapped = ch.c < ch.d
    canonical = Channel(ch.a, ch.b, ch.d, ch.c) if swapped else ch
    if canonical.c == canonical.d:
        raise DegenerateChannelError(f"degenerate channel {ch}: c = d")
    if canonical.a in (canonical.c, canonical.d):
        raise DegenerateChannelError(f"degenerate 3-parameter channel {ch}: a equals c or d")
    return canonical, swapped


def classify_3param(ch: Channel) -> CaseTag:
    if ch.a != ch.b:
        return CaseTag.NOT_THREE_PARAM
    low, high = min(ch.c, ch.d), max(ch.c, ch.d)
    return CaseTag.CASE_A if low < ch.a < high else CaseTag.CASE_B


def bisect_h_prime(ch: Channel, w: Weights, eps: float = CAPACITY_EPS) -> Optional[float]:
    """Stationary point of the pseudoconcave phi_hat for a case-B channel.

    Probes the sign of phi_hat' (that of h2 h') at eps, 1/2 and 1 - eps; when
    all three agree the optimum is taken to be on the boundary and None is
    returned. Otherwise the bracketing half is bisected to width eps.
    """
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 0.5), got {eps!r}")
    if w.w1 > w.w2:
        raise DomainError("bisection needs w1 <= w2")
    if classify_3param(ch) is not CaseTag.CASE_B:
        raise DomainError(f"bisection needs a case-B 3-parameter channel, got {ch}")

    def rising(p: float) -> bool:
        return float(h2(ch, p)) * float(h_prime(ch, w, p)) > 0.0

    lo, mid, hi = eps, 0.5, 1.0 - eps
    at_lo, at_mid, at_hi = rising(lo), rising(mid), rising(hi)
    if at_lo == at_mid == at_hi:
        return None
    if at_lo != at_mid:
        hi, at_hi = mid, at_mid
    else:
        lo, at_lo = mid, at_mid

    while hi - lo >= eps:
        mid = 0.5 * (lo + hi)
        if rising(mid) == at_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def closed_form_a0(ch: Channel, w: Weights) -> Optional[float]:
    """Explicit stationary p2 for a = b = 0, 0 < d < c, w1 < w2.

    p* = (1 - d - exp(-w2 delta(0,c,d) / (D2 (w2 - w1)))) / D2, or None when
    p* falls outside (0, 1).
    """
    if not (ch.a == 0.0 and ch.b == 0.0 and 0.0 < ch.d < ch.c):
        raise DomainError(f"closed form needs a = b = 0 and 0 < d < c, got {ch}")
    if not w.w1 < w.w2:
        raise DomainError("closed form needs w1 < w2 strictly")
    exponent = -w.w2 * delta_fn(0.0, ch.c, ch.d) / (ch.delta2 * (w.w2 - w.w1))
    p_star = (1.0 - ch.d - math.exp(exponent)) / ch.delta2
    return p_star if 0.0 < p_star < 1.0 else None


def solve_3param(ch: Channel, w: Weights, eps: float = CAPACITY_EPS) -> Solution:
    if ch.a != ch.b:
        raise NotThreeParamError(f"channel {ch} has a != b")
    if w.w1 > w.w2:
        raise DomainError("solve_3param needs w1 <= w2; use solve_general for w1 > w2")
    canonical, swapped_cd = canonicalize_3param(ch)
    tag = classify_3param(canonical)

    if tag is CaseTag.CASE_A:
        solution = boundary_solution(ch, w, Method.CASE_A_BOUNDARY)
        logger.info("solve_3param_done", extra={'channel': str(ch), 'case': tag.value,
                                                 'location': solution.location.value})
        return solution

    if canonical.a == 0.0 and w.w1 < w.w2:
        method, tolerance = Method.CLOSED_FORM, 0.0
        p = closed_form_a0(canonical, w)
    else:
        method, tolerance = Method.CASE_B_BISECTION, eps
        p = bisect_h_prime(canonical, w, eps)

    interior = None
    if p is not None:
        reduced = f_map(canonical, w, p)
        if reduced.in_p2bar:
            p2 = 1.0 - p if swapped_cd else p
            interior = _interior_solution(ch, w, InputDist(reduced.p1_star, p2), method, tolerance)
        else:
            logger.debug("stationary_point_outside_p2bar",
                         extra={'channel': str(ch), 'p2': p, 'p1_star': reduced.p1_star})

    solution = _best(interior, boundary_solution(ch, w, method))
    logger.info("solve_3param_done", extra={'channel': str(ch), 'case': tag.value,
                                             'method': method.value,
                                             'location': solution.location.value})
    return solution


# -------------------------------------------------------------------- general

def golden_section_max(fn: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Maximiser of a unimodal fn on [lo, hi]; NaN values count as -inf."""
    ratio = (1.0 + math.sqrt(5.0)) / 2.0

    def value(x: float) -> float:
        y = fn(x)
        return -math.inf if math.isnan(y) else y

    c = hi - (hi - lo) / ratio
    d = lo + (hi - lo) / ratio
    fc, fd = value(c), value(d)
    while abs(hi - lo) > tol:
        if fc < fd:
            lo, c, fc = c, d, fd
            d = lo + (hi - lo) / ratio
            fd = value(d)
        else:
            hi, d, fd = d, c, fc
            c = hi - (hi - lo) / ratio
            fc = value(c)
    return 0.5 * (lo + hi)


def _scan_peaks(values: np.ndarray) -> np.ndarray:
    """Indices of local maxima of a NaN-masked sequence, one per plateau."""
    finite = np.isfinite(values)
    padded = np.where(finite, values, -np.inf)
    left = np.concatenate([[-np.inf], padded[:-1]])
    right = np.concatenate([padded[1:], [-np.inf]])
    peaks = np.flatnonzero(finite & (padded >= left) & (padded >= right))
    if peaks.size:
        peaks = peaks[np.concatenate([[True], np.diff(peaks) > 1])]
    return peaks


def solve_general(ch: Channel, w: Weights, grid_n: int = CAPACITY_GRID,
                  eps: float = CAPACITY_EPS) -> Solution:
    """Global maximiser of Psi (w1 <= w2) or of the C2 objective (w1 > w2).

    Scans phi_hat on a uniform grid restricted to P2bar (f(p) in (0, 1)),
    refines the best local maxima that come close to the axis candidates by
    golden-section search to width eps and keeps those whose f(p) stays in
    (0, 1). Unimodality is never assumed.
    """
    _require_nondegenerate(ch)
    if grid_n < 3:
        raise DomainError(f"grid_n must be at least 3, got {grid_n}")
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 0.5), got {eps!r}")
    if w.w1 > w.w2:
        return solve_general(swap_users(ch), w.swapped(), grid_n, eps).swapped()

    grid = (np.arange(grid_n) + 0.5) / grid_n
    step = 1.0 / grid_n
    phi = np.asarray(phi_hat_array(ch, w, grid), dtype=float)
    f_grid = np.asarray(f_value(ch, w, grid), dtype=float)
    with np.errstate(invalid='ignore'):
        phi = np.where((f_grid > 0.0) & (f_grid < 1.0), phi, np.nan)

    def phi_at(p: float) -> float:
        return float(phi_hat_array(ch, w, p))

    boundary = boundary_solution(ch, w, Method.GENERAL_SCAN)
    peaks = _scan_peaks(phi)
    promising = peaks[phi[peaks] > boundary.value - PEAK_MARGIN]
    promising = promising[np.argsort(-phi[promising], kind='stable')][:MAX_REFINED_PEAKS]

    interior = None
    for index in promising:
        lo = max(grid[index] - step, 0.0)
        hi = min(grid[index] + step, 1.0)
        p = golden_section_max(phi_at, lo, hi, eps)
        p1_star = float(f_value(ch, w, p))
        if not 0.0 < p1_star < 1.0:
            continue
        candidate = _interior_solution(ch, w, InputDist(p1_star, p), Method.GENERAL_SCAN, eps)
        if interior is None or candidate.value > interior.value:
            interior = candidate

    solution = _best(interior, boundary)
    logger.info("solve_general_done", extra={'channel': str(ch), 'peaks': int(peaks.size),
                                              'refined': int(promising.size),
                                              'location': solution.location.value,
                                              'value': solution.value})
    return solution


def solve(ch: Channel, w: Weights, grid_n: int = CAPACITY_GRID, eps: float = CAPACITY_EPS) -> Solution:
    """3-parameter fast path when it applies, the general scan otherwise."""
    if ch.a == ch.b and w.w1 <= w.w2:
        try:
            return solve_3param(ch, w, eps)
        except (DegenerateChannelError, ExcludedPointError) as exc:
            # h2 vanishing at a bisection end point also lands here
            logger.debug("fast_path_skipped", extra={'channel': str(ch), 'reason': str(exc)})
    return solve_general(ch, w, grid_n, eps)


def sum_capacity(ch: Channel, grid_n: int = CAPACITY_GRID, eps: float = CAPACITY_EPS) -> Solution:
    return solve_general(ch, Weights(1.0, 1.0), grid_n, eps)


# --------------------------------------------------------------------- region

def sweep_weights(num_weights: int) -> List[Weights]:
    """Chebyshev-spaced weights with w1 + w2 = 2, denser near the axes."""
    weights = []
    for k in range(num_weights):
        w1 = 1.0 + math.cos((2 * k + 1) * math.pi / (2 * num_weights))
        weights.append(Weights(w1, 2.0 - w1))
    return weights


def _cross(o: RatePair, a: RatePair, b: RatePair) -> float:
    return (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)


def upper_chain(vertices: List[RegionVertex]) -> List[RegionVertex]:
    """Upper concave chain of the vertices, ordered by decreasing r1.

    Near-duplicates (within MERGE_TOL) keep their first occurrence and
    collinear vertices are dropped.
    """
    kept: List[RegionVertex] = []
    for vertex in vertices:
        if not any(abs(vertex.rates.r1 - k.rates.r1) <= MERGE_TOL
                   and abs(vertex.rates.r2 - k.rates.r2) <= MERGE_TOL for k in kept):
            kept.append(vertex)

    ordered = sorted(kept, key=lambda v: (v.rates.r1, -v.rates.r2))
    hull: List[RegionVertex] = []
    for vertex in ordered:
        while len(hull) >= 2 and _cross(hull[-2].rates, hull[-1].rates, vertex.rates) >= -HULL_TOL:
            hull.pop()
        hull.append(vertex)
    return hull[::-1]


def region_boundary(ch: Channel, num_weights: int = REGION_SWEEP, eps: float = CAPACITY_EPS,
                    grid_n: int = CAPACITY_GRID, n_jobs: int = REGION_N_JOBS) -> RegionBoundary:
    """Boundary of the capacity region from a weighted sum-rate sweep."""
    if num_weights < 3:
        raise DomainError(f"num_weights must be at least 3, got {num_weights}")
    reason = degeneracy(ch)
    if reason is not None and ch.a == ch.b == ch.c == ch.d:
        raise DegenerateChannelError(f"degenerate channel {ch}: {reason}")

    first, second = e1(ch), e2(ch)
    axis1 = RegionVertex(RatePair(first.capacity, 0.0), 2.0, 0.0,
                         InputDist(first.p_opt, first.fixed_other))
    axis2 = RegionVertex(RatePair(0.0, second.capacity), 0.0, 2.0,
                         InputDist(second.fixed_other, second.p_opt))
    if reason is not None:
        # One user is useless: the region is an axis segment.
        logger.info("region_axis_segment", extra={'channel': str(ch), 'reason': reason})
        return RegionBoundary(channel=ch, vertices=[axis1, axis2])

    weights = sweep_weights(num_weights)
    solutions = Parallel(n_jobs=n_jobs)(
        delayed(solve_general)(ch, w, grid_n, eps) for w in weights
    )
    # e1 and e2 bound the rates; clip rounding so the chain ends on the axes.
    swept = [
        RegionVertex(RatePair(min(s.rates.r1, first.capacity), min(s.rates.r2, second.capacity)),
                     w.w1, w.w2, s.input)
        for w, s in zip(weights, solutions)
    ]
    vertices = upper_chain([axis1] + swept + [axis2])
    logger.info("region_boundary_done", extra={'channel': str(ch), 'weights': num_weights,
                                                'vertices': len(vertices)})
    return RegionBoundary(channel=ch, vertices=vertices)
