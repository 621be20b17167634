import numpy as np
from django.test import SimpleTestCase, tag

from services import objective
from services.errors import DegenerateChannelError, DomainError
from services.info_theory import Channel, InputDist, RatePair, Weights, corner_c1
from services.kkt import (
    EQUIVALENCE_CONSTANT,
    PointKind,
    concavity_depths,
    find_kkt_points,
    kkt_residual,
    newton_polish,
    q_gradient,
    tangent_slope,
    trace_g1,
)
from services.solver import Location, solve_general

COUNTEREXAMPLE = Channel(2 / 3, 1 / 4, 1e-3, 5 / 8)
INTERIOR = Channel(1 / 5, 2 / 5, 1 / 2, 3 / 10)


class ResidualTests(SimpleTestCase):
    def test_euler_identity(self):
        rng = np.random.default_rng(41)
        for _ in range(25):
            ch = Channel(*rng.uniform(0.01, 0.99, size=4))
            w = Weights(*rng.uniform(0.1, 2.0, size=2))
            inp = InputDist(*rng.uniform(0.0, 1.0, size=2))
            grad = q_gradient(ch, w, inp)
            value = objective.psi(ch, w, inp)
            self.assertAlmostEqual(inp.p1 * grad[0, 0] + (1 - inp.p1) * grad[0, 1], value - w.w1, places=12)
            self.assertAlmostEqual(inp.p2 * grad[1, 0] + (1 - inp.p2) * grad[1, 1], value - w.w2, places=12)

    def test_residual_brackets_gradient_norm(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            ch = Channel(*rng.uniform(0.01, 0.99, size=4))
            w = Weights(*rng.uniform(0.1, 2.0, size=2))
            inp = InputDist(*rng.uniform(0.02, 0.98, size=2))
            norm = max(abs(g) for g in objective.grad_psi(ch, w, inp))
            residual = kkt_residual(ch, w, inp)
            self.assertLessEqual(norm / EQUIVALENCE_CONSTANT, residual + 1e-12)
            self.assertLessEqual(residual, norm + 1e-12)

    def test_rejects_edge_parameters(self):
        for ch in (Channel(0, 0.2, 0.3, 0.4), Channel(0.1, 1, 0.3, 0.4)):
            with self.assertRaises(DomainError):
                kkt_residual(ch, Weights(1, 1), InputDist(0.5, 0.5))
            with self.assertRaises(DomainError):
                find_kkt_points(ch, Weights(1, 1))

    def test_constant_channel_satisfies_kkt_everywhere(self):
        ch = Channel(0.4, 0.4, 0.4, 0.4)
        for inp in (InputDist(0.5, 0.5), InputDist(0.0, 0.3), InputDist(1.0, 1.0)):
            self.assertAlmostEqual(kkt_residual(ch, Weights(1, 2), inp), 0.0, places=12)
        with self.assertRaises(DegenerateChannelError):
            find_kkt_points(ch, Weights(1, 2))


class KktPointTests(SimpleTestCase):
    def test_counterexample_has_three_points(self):
        points = find_kkt_points(COUNTEREXAMPLE, Weights(1, 1))
        kinds = sorted((p.kind.value, p.on_boundary) for p in points)
        self.assertEqual(kinds, [('GlobalMax', True), ('LocalMax', True), ('Saddle', False)])
        for point in points:
            self.assertLessEqual(point.residual, 1e-8)
        self.assertEqual(points, sorted(points, key=lambda p: (p.input.p1, p.input.p2)))

    def test_interior_global_max_matches_solver(self):
        w = Weights(1 / 5, 4 / 5)
        best = [p for p in find_kkt_points(INTERIOR, w) if p.kind is PointKind.GLOBAL_MAX]
        self.assertEqual(len(best), 1)
        self.assertFalse(best[0].on_boundary)
        sol = solve_general(INTERIOR, w)
        self.assertIs(sol.location, Location.INTERIOR)
        self.assertAlmostEqual(best[0].input.p1, sol.input.p1, delta=1e-6)
        self.assertAlmostEqual(best[0].input.p2, sol.input.p2, delta=1e-6)
        self.assertAlmostEqual(best[0].value, sol.value, delta=1e-9)

    def test_case_a_has_no_interior_points(self):
        points = find_kkt_points(Channel(0.3, 0.3, 0.5, 0.2), Weights(1, 1))
        self.assertTrue(points)
        self.assertTrue(all(p.on_boundary for p in points))
        self.assertTrue(any(p.kind is PointKind.GLOBAL_MAX for p in points))

    def test_newton_stays_inside_the_square(self):
        axis = np.linspace(0.05, 0.95, 7)
        p1, p2 = np.meshgrid(axis, axis, indexing='ij')
        x, norm = newton_polish(COUNTEREXAMPLE, Weights(1, 1), p1.ravel(), p2.ravel())
        self.assertTrue(np.all((x > 0.0) & (x < 1.0)))
        self.assertEqual(norm.shape, (49,))

    def test_rejects_tiny_seed_grid(self):
        with self.assertRaises(DomainError):
            find_kkt_points(INTERIOR, Weights(1, 1), grid_n=1)


class ImageRegionTests(SimpleTestCase):
    def test_constant_channel_image_is_a_point(self):
        self.assertEqual(trace_g1(Channel(0.5, 0.5, 0.5, 0.5), grid_n=16, bins=16), [RatePair(0.0, 0.0)])

    def test_outline_stays_in_the_rate_box(self):
        outline = trace_g1(INTERIOR, grid_n=64, bins=128)
        self.assertGreater(len(outline), 3)
        for pair in outline:
            self.assertGreaterEqual(pair.r1, 0.0)
            self.assertGreaterEqual(pair.r2, 0.0)

    def test_counterexample_image_is_not_convex(self):
        outline = trace_g1(COUNTEREXAMPLE, grid_n=256, bins=512)
        depth = max(float(np.max(concavity_depths(outline, k))) for k in (1, 2, 4, 8, 16, 32))
        self.assertGreater(depth, 1e-4)

    def test_grid_and_bins_checked(self):
        with self.assertRaises(DomainError):
            trace_g1(INTERIOR, grid_n=1)
        with self.assertRaises(DomainError):
            trace_g1(INTERIOR, bins=2)

    @tag('slow')
    def test_saddle_image_has_weight_slope(self):
        w = Weights(1, 1)
        saddle = next(p for p in find_kkt_points(COUNTEREXAMPLE, w) if p.kind is PointKind.SADDLE)
        outline = trace_g1(COUNTEREXAMPLE)
        slope = tangent_slope(outline, corner_c1(COUNTEREXAMPLE, saddle.input), 0.02)
        self.assertAlmostEqual(slope, -w.w1 / w.w2, delta=0.05)


class OutlineGeometryTests(SimpleTestCase):
    def test_square_has_no_dents(self):
        square = [RatePair(0, 0), RatePair(0.5, 0), RatePair(0.5, 0.5), RatePair(0, 0.5)]
        self.assertTrue(np.all(concavity_depths(square) < 0.0))

    def test_dent_is_positive(self):
        dented = [RatePair(0, 0), RatePair(0.5, 0), RatePair(0.5, 0.5),
                  RatePair(0.25, 0.1), RatePair(0, 0.5)]
        depths = concavity_depths(dented)
        self.assertGreater(depths[3], 0.0)
        self.assertEqual(int(np.argmax(depths)), 3)

    def test_short_outline(self):
        self.assertEqual(list(concavity_depths([RatePair(0, 0), RatePair(0.1, 0)])), [0.0, 0.0])

    def test_tangent_slope_of_a_line(self):
        line = [RatePair(0.1 * i, 0.5 - 0.05 * i) for i in range(6)]
        self.assertAlmostEqual(tangent_slope(line, RatePair(0.25, 0.375), 0.2), -0.5, places=12)
        with self.assertRaises(DomainError):
            tangent_slope(line, RatePair(0.25, 0.375), 1e-4)
