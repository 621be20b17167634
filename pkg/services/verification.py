"""
Acceptance suite behind ``manage.py verify``.

Each check returns a CheckResult with the measured quantity and the tolerance
it was held to. ``quick`` shrinks sample counts and grids for a smoke run.
"""
from __future__ import annotations

import json
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from joblib import Parallel, delayed

from services import objective
from services.errors import CapacityError, FixtureError, ParseError
from services.info_theory import (
    Channel,
    InputDist,
    Weights,
    corner_c1,
    kl_divergence,
    output_probability,
    parse_channel,
    parse_weights,
)
from services.kkt import PointKind, concavity_depths, find_kkt_points, tangent_slope, trace_g1
from services.oracle import fd_derivative, fit_grid_constant, grid_max
from services.single_user import e1, e2
from services.solver import (
    Location,
    bisect_h_prime,
    closed_form_a0,
    golden_section_max,
    region_boundary,
    solve,
    solve_3param,
    solve_general,
)

logger = logging.getLogger(__name__)

VERIFY_FIXTURES = getattr(settings, 'VERIFY_FIXTURES', Path(__file__).resolve().parent.parent / 'fixtures' / 'channels.json')
REQUIRED_FIXTURES = ('counterexample', 'interior_optimum', 'closed_form', 'isosceles')
ORACLE_TOL = 5e-6
VERIFY_N_JOBS: int = int(getattr(settings, 'VERIFY_N_JOBS', 1))
SEED = 20240607


@dataclass(frozen=True)
class Fixture:
    name: str
    channel: Channel
    weights: Weights


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ''


@dataclass(frozen=True)
class SuiteSize:
    gradient_samples: int
    case_a_samples: int
    case_b_samples: int
    closed_form_samples: int
    agreement_samples: int
    oracle_samples: Optional[int]   # None compares every sample with the grid oracle
    oracle_grid: int
    gradient_grid: int
    sign_grid: int
    sweep: int
    census_samples: int


FULL = SuiteSize(1000, 100, 100, 50, 200, None, int(getattr(settings, 'ORACLE_GRID', 2000)),
                 201, 10_000, 201, 50)
QUICK = SuiteSize(100, 10, 10, 10, 10, 3, 1000, 51, 1000, 21, 5)


def load_fixtures(path=None) -> Dict[str, Fixture]:
    path = Path(path or VERIFY_FIXTURES)
    if not path.is_file():
        raise FixtureError(f"fixture file {path} not found")
    try:
        entries = json.loads(path.read_text())['fixtures']
        fixtures = {
            e['name']: Fixture(e['name'], parse_channel(e['channel']), parse_weights(e['weights']))
            for e in entries
        }
    except (ValueError, KeyError, TypeError, ParseError) as exc:
        raise FixtureError(f"malformed fixture file {path}: {exc}") from exc
    missing = [name for name in REQUIRED_FIXTURES if name not in fixtures]
    if missing:
        raise FixtureError(f"fixture file {path} lacks {', '.join(missing)}")
    return fixtures


def _oracle_gap(ch: Channel, w: Weights, value: float, grid_n: int) -> float:
    return abs(value - grid_max(ch, w, grid_n).best_value)


def worst_oracle_gap(cases: Sequence[Tuple[Channel, Weights, float]], size: SuiteSize) -> Tuple[float, int]:
    """Largest |value - grid_max| over the cases, with the number compared.

    The grid evaluations run through joblib with VERIFY_N_JOBS workers.
    """
    cases = list(cases)[:size.oracle_samples]
    gaps = Parallel(n_jobs=VERIFY_N_JOBS)(
        delayed(_oracle_gap)(ch, w, value, size.oracle_grid) for ch, w, value in cases
    )
    return max(gaps, default=0.0), len(cases)


def _random_weights(rng: np.random.Generator, ordered: bool = False) -> Weights:
    w = rng.uniform(0.1, 2.0, size=2)
    if ordered:
        w = np.sort(w)
    return Weights(*w)


def _case_a_channel(rng: np.random.Generator) -> Channel:
    d, a, c = np.sort(rng.uniform(0.01, 0.99, size=3))
    return Channel(a, a, c, d)


def _case_b_channel(rng: np.random.Generator) -> Channel:
    d, c = np.sort(rng.uniform(0.01, 0.99, size=2))
    a = rng.uniform(0.0, d) if rng.random() < 0.5 else rng.uniform(c, 1.0)
    return Channel(a, a, c, d)


# --------------------------------------------------------------------- checks

def check_gradient(size: SuiteSize, rng: np.random.Generator) -> Tuple[float, float, str]:
    """Worst ratio of FD disagreement to its tolerance (relative 1e-6, absolute 1e-9 below 1e-3)."""
    worst = 0.0
    for _ in range(size.gradient_samples):
        ch = Channel(*rng.uniform(0.01, 0.99, size=4))
        w = _random_weights(rng)
        p1, p2 = rng.uniform(0.05, 0.95, size=2)
        analytic = objective.grad_psi(ch, w, InputDist(p1, p2))
        numeric = (
            fd_derivative(lambda x: objective.psi_value(ch, w, x, p2), p1),
            fd_derivative(lambda x: objective.psi_value(ch, w, p1, x), p2),
        )
        for exact, approx in zip(analytic, numeric):
            tol = 1e-9 if abs(exact) < 1e-3 else 1e-6 * abs(exact)
            worst = max(worst, abs(exact - approx) / tol)
    return worst, 1.0, f"{size.gradient_samples} samples"


def check_counterexample(fixtures: Dict[str, Fixture], size: SuiteSize) -> Tuple[float, float, str]:
    fx = fixtures['counterexample']
    points = find_kkt_points(fx.channel, fx.weights)
    kinds = sorted((p.kind.value, p.on_boundary) for p in points)
    expected = sorted([(PointKind.GLOBAL_MAX.value, True), (PointKind.LOCAL_MAX.value, True),
                       (PointKind.SADDLE.value, False)])
    worst = max((p.residual for p in points), default=math.inf)
    if kinds != expected:
        return math.inf, 1e-8, f"found {kinds}"
    return worst, 1e-8, "3 KKT points: boundary global max, boundary local max, interior saddle"


def check_interior_optimum(fixtures: Dict[str, Fixture], size: SuiteSize) -> Tuple[float, float, str]:
    fx = fixtures['interior_optimum']
    sol = solve_general(fx.channel, fx.weights)
    if sol.location is not Location.INTERIOR:
        return math.inf, ORACLE_TOL, f"location {sol.location.value}"
    gap = _oracle_gap(fx.channel, fx.weights, sol.value, size.oracle_grid)
    fitted = fit_grid_constant(fx.channel, fx.weights, sol.value)
    return gap, ORACLE_TOL, (f"interior at ({sol.input.p1:.6f}, {sol.input.p2:.6f}), "
                             f"gap <= C / n^2 with fitted C = {fitted:.3g}")


def check_case_a(size: SuiteSize, rng: np.random.Generator) -> Tuple[float, float, str]:
    axis = np.linspace(0.0, 1.0, size.gradient_grid + 2)[1:-1]
    p1, p2 = np.meshgrid(axis, axis, indexing='ij')
    min_norm, worst_value = math.inf, 0.0
    cases = []
    for _ in range(size.case_a_samples):
        ch, w = _case_a_channel(rng), _random_weights(rng, ordered=True)
        grad = objective.grad_psi_array(ch, w, p1, p2)
        min_norm = min(min_norm, float(np.nanmin(np.hypot(grad[0], grad[1]))))
        sol = solve(ch, w)
        boundary = max(w.w1 * e1(ch).capacity, w.w2 * e2(ch).capacity)
        worst_value = max(worst_value, abs(sol.value - boundary))
        cases.append((ch, w, sol.value))
    worst_oracle, compared = worst_oracle_gap(cases, size)
    passed_grad = min_norm > 1e-6 and worst_value <= 1e-9
    measured = worst_oracle if passed_grad else math.inf
    return measured, ORACLE_TOL, (f"min |grad| {min_norm:.3g}, boundary gap {worst_value:.3g}, "
                                  f"oracle gap {worst_oracle:.3g} over {compared}")


def sign_changes(values: np.ndarray) -> Tuple[int, bool]:
    """Number of sign changes and whether they all go from + to -."""
    signs = np.sign(values[np.isfinite(values) & (values != 0.0)])
    changes = np.flatnonzero(signs[1:] != signs[:-1])
    return int(changes.size), bool(np.all(signs[changes] > 0))


def check_case_b(size: SuiteSize, rng: np.random.Generator) -> Tuple[float, float, str]:
    grid = (np.arange(size.sign_grid) + 0.5) / size.sign_grid
    worst_p, bad_signs = 0.0, 0
    cases = []
    for _ in range(size.case_b_samples):
        ch, w = _case_b_channel(rng), _random_weights(rng, ordered=True)
        count, downward = sign_changes(np.asarray(objective.phi_hat_prime(ch, w, grid)))
        if count > 1 or (count == 1 and not downward):
            bad_signs += 1
        p = bisect_h_prime(ch, w, 1e-9)
        if p is not None and objective.f_map(ch, w, p).in_p2bar:
            peak = golden_section_max(lambda x: float(objective.phi_hat(ch, w, x)), 1e-9, 1 - 1e-9, 1e-12)
            worst_p = max(worst_p, abs(p - peak))
        cases.append((ch, w, solve_3param(ch, w).value))
    worst_oracle, compared = worst_oracle_gap(cases, size)
    measured = worst_oracle if bad_signs == 0 and worst_p <= 1e-5 else math.inf
    return measured, ORACLE_TOL, (f"sign violations {bad_signs}, |p_bisect - p_golden| {worst_p:.3g}, "
                                  f"oracle gap {worst_oracle:.3g} over {compared}")


def check_closed_form(fixtures: Dict[str, Fixture], size: SuiteSize,
                      rng: np.random.Generator) -> Tuple[float, float, str]:
    fx = fixtures['closed_form']
    worked = closed_form_a0(fx.channel, fx.weights)
    if worked is None or abs(worked - 0.47256) > 1e-4:
        return math.inf, 1e-9, f"worked instance p* = {worked}"
    eps, worst_p = 1e-9, 0.0
    cases = []
    for _ in range(size.closed_form_samples):
        d, c = np.sort(rng.uniform(0.01, 0.99, size=2))
        ch = Channel(0.0, 0.0, c, d)
        w1, w2 = np.sort(rng.uniform(0.1, 2.0, size=2))
        w = Weights(w1, w2)
        p_star, p_eps = closed_form_a0(ch, w), bisect_h_prime(ch, w, eps)
        if p_star is not None and p_eps is not None:
            worst_p = max(worst_p, abs(p_star - p_eps) - eps)
        cases.append((ch, w, solve_3param(ch, w, eps).value))
    worst_oracle, compared = worst_oracle_gap(cases, size)
    measured = max(worst_p, 0.0) if worst_oracle <= ORACLE_TOL else math.inf
    return measured, 1e-9, f"worked p* = {worked:.6f}, oracle gap {worst_oracle:.3g} over {compared}"


def check_identities(size: SuiteSize, rng: np.random.Generator) -> Tuple[float, float, str]:
    worst = 0.0
    failures: List[str] = []
    grid = np.linspace(0.01, 0.99, 99)
    for _ in range(20):
        d, c = np.sort(rng.uniform(0.01, 0.99, size=2))
        a = rng.uniform(0.01, 0.99)
        if a in (c, d):
            continue
        ch = Channel(a, a, c, d)
        worst = max(worst, abs(objective.delta_fn(c, c, d)), abs(objective.delta_fn(d, c, d)))
        worst = max(worst, abs(objective.h4(ch, 0.0)), abs(objective.h4(ch, 1.0)))
        worst = max(worst, abs(objective.v_fn(ch, 0.0) + kl_divergence(d, a)),
                    abs(objective.v_fn(ch, 1.0) + kl_divergence(c, a)))
        if np.any(np.diff(np.asarray(objective.delta_fn(grid, c, d)), 2) <= 0.0):
            failures.append('delta not convex in a')
        if np.any(np.asarray(objective.h4(ch, grid)) >= 0.0):
            failures.append('h4 not negative on (0,1)')
        f = np.asarray(objective.f_value(ch, Weights(*np.sort(rng.uniform(0.1, 2.0, size=2))), grid))
        if np.any(f[np.isfinite(f)] >= 1.0):
            failures.append('f(p) >= 1')
        p1 = rng.uniform(0.0, 1.0)
        lhs = np.asarray(objective.h3(ch, grid)) + p1 * np.asarray(objective.h2(ch, grid))
        worst = max(worst, float(np.max(np.abs(lhs - (1.0 - output_probability(ch, p1, grid))))))
    if failures:
        return math.inf, 1e-12, '; '.join(sorted(set(failures)))
    return worst, 1e-12, "delta, h4, v, f and h3 + p1 h2 identities"


def check_oracle_agreement(size: SuiteSize, rng: np.random.Generator) -> Tuple[float, float, str]:
    cases = []
    for _ in range(size.agreement_samples):
        ch = Channel(*rng.uniform(0.01, 0.99, size=4))
        w = _random_weights(rng)
        sol = solve_general(ch, w)
        lower = max(w.w1 * e1(ch).capacity, w.w2 * e2(ch).capacity)
        if sol.value < lower - 1e-12:
            return math.inf, ORACLE_TOL, f"value below axis candidates for {ch}"
        cases.append((ch, w, sol.value))
    worst, compared = worst_oracle_gap(cases, size)
    return worst, ORACLE_TOL, f"{size.agreement_samples} channels, {compared} against the grid oracle"


def check_stationary_census(size: SuiteSize, rng: np.random.Generator) -> Tuple[float, float, str]:
    """Histogram of interior KKT points on random general channels.

    Reported only; no count is asserted.
    """
    census: Counter = Counter()
    for _ in range(size.census_samples):
        ch = Channel(*rng.uniform(0.01, 0.99, size=4))
        w = _random_weights(rng)
        points = find_kkt_points(ch, w)
        census[sum(1 for p in points if not p.on_boundary)] += 1
    histogram = ', '.join(f"{k}: {census[k]}" for k in sorted(census))
    logger.info("stationary_census", extra={'channels': size.census_samples, 'histogram': dict(census)})
    return 0.0, math.inf, f"interior KKT points per channel: {{{histogram}}}"


def check_g1(fixtures: Dict[str, Fixture], size: SuiteSize) -> Tuple[float, float, str]:
    fx = fixtures['counterexample']
    outline = trace_g1(fx.channel)
    depth = max(float(np.max(concavity_depths(outline, k))) for k in (1, 2, 4, 8, 16, 32))
    if depth < 1e-4:
        return math.inf, 0.05, f"outline convex (max dent {depth:.3g})"
    saddles = [p for p in find_kkt_points(fx.channel, fx.weights) if p.kind is PointKind.SADDLE]
    if not saddles:
        return math.inf, 0.05, "no interior saddle found"
    image = corner_c1(fx.channel, saddles[0].input)
    slope = tangent_slope(outline, image, 0.02)
    target = -fx.weights.w1 / fx.weights.w2
    return abs(slope - target), 0.05, f"max dent {depth:.3g}, tangent slope {slope:.4f}"


def check_isosceles(fixtures: Dict[str, Fixture], size: SuiteSize) -> Tuple[float, float, str]:
    fx = fixtures['isosceles']
    boundary = region_boundary(fx.channel, num_weights=size.sweep)
    rates = boundary.rates
    if len(rates) != 2:
        return math.inf, 1e-9, f"{len(rates)} vertices"
    return abs(rates[0].r1 - rates[-1].r2), 1e-9, f"e1 = {rates[0].r1:.9f}, e2 = {rates[-1].r2:.9f}"


def run_suite(fixtures: Dict[str, Fixture], quick: bool = False) -> List[CheckResult]:
    size = QUICK if quick else FULL
    rng = np.random.default_rng(SEED)
    checks: Sequence[Tuple[str, Callable[[], Tuple[float, float, str]]]] = (
        ('gradient', lambda: check_gradient(size, rng)),
        ('counterexample_kkt', lambda: check_counterexample(fixtures, size)),
        ('interior_optimum', lambda: check_interior_optimum(fixtures, size)),
        ('case_a_boundary', lambda: check_case_a(size, rng)),
        ('case_b_pseudoconcave', lambda: check_case_b(size, rng)),
        ('closed_form', lambda: check_closed_form(fixtures, size, rng)),
        ('identities', lambda: check_identities(size, rng)),
        ('oracle_agreement', lambda: check_oracle_agreement(size, rng)),
        ('interior_stationary_census', lambda: check_stationary_census(size, rng)),
        ('g1_nonconvex', lambda: check_g1(fixtures, size)),
        ('isosceles_region', lambda: check_isosceles(fixtures, size)),
    )
    results = []
    for name, check in checks:
        started = time.perf_counter()
        try:
            measured, tolerance, detail = check()
            passed = measured <= tolerance
        except CapacityError as exc:
            measured, tolerance, detail, passed = math.inf, 0.0, f"{type(exc).__name__}: {exc}", False
        elapsed = time.perf_counter() - started
        results.append(CheckResult(name, passed, measured, tolerance, f"{detail} [{elapsed:.2f}s]"))
        logger.info("verify_check", extra={'check': name, 'passed': passed, 'seconds': elapsed})
    return results
