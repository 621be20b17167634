import numpy as np
from django.test import SimpleTestCase

from services import objective
from services.errors import DomainError, ExcludedPointError, NotThreeParamError
from services.info_theory import Channel, InputDist, Weights, kl_divergence, mi_y_x2_given_x1, prob_y1
from services.oracle import fd_derivative

CASE_B = Channel(0.1, 0.1, 0.9, 0.2)
CLOSED_FORM = Channel(0.0, 0.0, 0.9, 0.1)
INTERIOR = Channel(1 / 5, 2 / 5, 1 / 2, 3 / 10)


def assert_derivative(test, exact, approx, rel=1e-6, floor=1e-9):
    test.assertLessEqual(abs(exact - approx), max(rel * abs(exact), floor),
                         msg=f"analytic {exact!r} vs finite difference {approx!r}")


class PsiTests(SimpleTestCase):
    def test_psi_value(self):
        w = Weights(1 / 5, 4 / 5)
        self.assertAlmostEqual(objective.psi(INTERIOR, w, InputDist(0.5, 0.5)), 0.019167, delta=1e-5)

    def test_closed_form_matches_corner_definition(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            ch = Channel(*rng.uniform(0, 1, size=4))
            w = Weights(*rng.uniform(0.1, 2, size=2))
            inp = InputDist(*rng.uniform(0, 1, size=2))
            self.assertAlmostEqual(objective.psi_value(ch, w, inp.p1, inp.p2),
                                   objective.psi(ch, w, inp), places=12)

    def test_output_distribution_identity(self):
        grid = np.linspace(0, 1, 21)
        for p1 in grid:
            lhs = np.asarray(objective.h3(INTERIOR, grid)) + p1 * np.asarray(objective.h2(INTERIOR, grid))
            rhs = [1.0 - prob_y1(INTERIOR, InputDist(p1, p2)) for p2 in grid]
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class GradientTests(SimpleTestCase):
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            ch = Channel(*rng.uniform(0.01, 0.99, size=4))
            w = Weights(*rng.uniform(0.1, 2, size=2))
            p1, p2 = rng.uniform(0.05, 0.95, size=2)
            d1, d2 = objective.grad_psi(ch, w, InputDist(p1, p2))
            assert_derivative(self, d1, fd_derivative(lambda x: objective.psi_value(ch, w, x, p2), p1))
            assert_derivative(self, d2, fd_derivative(lambda x: objective.psi_value(ch, w, p1, x), p2))

    def test_h4_is_the_p1_slope_of_the_second_rate(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            ch = Channel(*rng.uniform(0.01, 0.99, size=4))
            p1, p2 = rng.uniform(0.05, 0.95, size=2)
            slope = fd_derivative(lambda x: mi_y_x2_given_x1(ch, InputDist(x, p2)), p1)
            assert_derivative(self, objective.h4(ch, p2), slope)

    def test_gradient_array_matches_scalar(self):
        p1 = np.array([0.2, 0.7])
        p2 = np.array([0.4, 0.9])
        grads = objective.grad_psi_array(INTERIOR, Weights(1, 2), p1, p2)
        for i in range(2):
            d1, d2 = objective.grad_psi(INTERIOR, Weights(1, 2), InputDist(p1[i], p2[i]))
            self.assertAlmostEqual(grads[0, i], d1, places=13)
            self.assertAlmostEqual(grads[1, i], d2, places=13)


class ReductionTests(SimpleTestCase):
    def test_f_map_is_stationary_in_p1(self):
        rng = np.random.default_rng(13)
        checked = 0
        for _ in range(30):
            ch = Channel(*rng.uniform(0.01, 0.99, size=4))
            w = Weights(*rng.uniform(0.1, 2, size=2))
            for p in np.linspace(0.05, 0.95, 19):
                if abs(objective.h2(ch, p)) < 1e-3:
                    continue
                point = objective.f_map(ch, w, p)
                if not point.in_p2bar:
                    continue
                checked += 1
                self.assertLessEqual(abs(objective.dpsi_dp1(ch, w, InputDist(point.p1_star, p))), 1e-9)
                below = objective.dpsi_dp1(ch, w, InputDist(max(point.p1_star - 1e-3, 0.0), p))
                above = objective.dpsi_dp1(ch, w, InputDist(min(point.p1_star + 1e-3, 1.0), p))
                self.assertGreater(below, 0.0)
                self.assertLess(above, 0.0)
        self.assertGreater(checked, 0)

    def test_f_below_one_for_three_parameter_channels(self):
        grid = np.linspace(0.001, 0.999, 999)
        for w in (Weights(1, 1), Weights(1, 3), Weights(0.5, 0.6)):
            self.assertTrue(np.all(np.asarray(objective.f_value(CASE_B, w, grid)) < 1.0))

    def test_closed_form_stationary_point_falls_outside_p2bar(self):
        point = objective.f_map(CLOSED_FORM, Weights(1, 2), 0.47255105)
        self.assertFalse(point.in_p2bar)
        self.assertLess(point.p1_star, 0.0)

    def test_phi_hat_equals_psi_at_f(self):
        w = Weights(1 / 5, 4 / 5)
        p = 0.6
        p1 = objective.f_value(INTERIOR, w, p)
        self.assertGreater(p1, 0.0)
        self.assertAlmostEqual(objective.phi_hat(INTERIOR, w, p),
                               objective.psi(INTERIOR, w, InputDist(p1, p)), places=12)

    def test_excluded_points(self):
        ch = Channel(0.2, 0.4, 0.5, 0.3)   # h2 vanishes at p = 1/4
        with self.assertRaises(ExcludedPointError):
            objective.phi_hat(ch, Weights(1, 1), 0.25)
        with self.assertRaises(ExcludedPointError):
            objective.f_map(CASE_B, Weights(1, 1), 0.0)
        self.assertTrue(np.isnan(objective.phi_hat_array(ch, Weights(1, 1), 0.25)))


class ThreeParameterIdentityTests(SimpleTestCase):
    def test_delta_vanishes_at_c_and_d(self):
        self.assertLessEqual(abs(objective.delta_fn(0.9, 0.9, 0.2)), 1e-12)
        self.assertLessEqual(abs(objective.delta_fn(0.2, 0.9, 0.2)), 1e-12)

    def test_delta_sign(self):
        self.assertLess(objective.delta_fn(0.3, 0.5, 0.2), 0.0)
        self.assertGreater(objective.delta_fn(0.0, 0.5, 0.2), 0.0)

    def test_delta_convex_in_a(self):
        grid = np.linspace(0.01, 0.99, 99)
        second = np.diff(np.asarray(objective.delta_fn(grid, 0.7, 0.2)), 2)
        self.assertTrue(np.all(second > 0.0))
        for a in (0.1, 0.5, 0.8):
            numeric = fd_derivative(lambda x: fd_derivative(lambda y: objective.delta_fn(y, 0.7, 0.2), x, 1e-4),
                                    a, 1e-3)
            assert_derivative(self, objective.delta_second_a(a, 0.7, 0.2), numeric, rel=1e-5, floor=1e-7)

    def test_h4_vanishes_at_ends_and_is_negative_inside(self):
        self.assertLessEqual(abs(objective.h4(CASE_B, 0.0)), 1e-12)
        self.assertLessEqual(abs(objective.h4(CASE_B, 1.0)), 1e-12)
        self.assertTrue(np.all(np.asarray(objective.h4(CASE_B, np.linspace(0.01, 0.99, 99))) < 0.0))

    def test_h4_second_derivative(self):
        for ch in (CASE_B, INTERIOR):
            for p in (0.2, 0.5, 0.8):
                numeric = fd_derivative(lambda x: fd_derivative(lambda y: objective.h4(ch, y), x, 1e-4), p, 1e-3)
                assert_derivative(self, objective.h4_double_prime(ch, p), numeric, rel=1e-5, floor=1e-7)

    def test_h_prime_matches_finite_differences(self):
        for w in (Weights(1, 2), Weights(1, 1), Weights(2, 3)):
            for p in np.linspace(0.1, 0.9, 9):
                numeric = fd_derivative(lambda x: objective.h_fun(CASE_B, w, x), p)
                assert_derivative(self, objective.h_prime(CASE_B, w, p), numeric)

    def test_h_prime_sign(self):
        case_a = Channel(0.3, 0.3, 0.5, 0.2)
        grid = np.linspace(0.01, 0.99, 99)
        self.assertTrue(np.all(np.asarray(objective.h_prime(case_a, Weights(1, 2), grid)) < 0.0))
        self.assertTrue(np.all(np.asarray(objective.h_prime(CASE_B, Weights(1, 1), grid)) > 0.0))

    def test_h_double_prime(self):
        w = Weights(1, 2)
        for p in (0.2, 0.5, 0.8):
            numeric = fd_derivative(lambda x: objective.h_prime(CASE_B, w, x), p)
            assert_derivative(self, objective.h_double_prime(CASE_B, w, p), numeric)

    def test_phi_hat_prime_factorisation(self):
        w = Weights(1, 2)
        for p in np.linspace(0.1, 0.9, 9):
            numeric = fd_derivative(lambda x: objective.phi_hat(CASE_B, w, x), p)
            assert_derivative(self, objective.phi_hat_prime(CASE_B, w, p), numeric)

    def test_v_endpoints(self):
        ch = Channel(0.4, 0.4, 0.9, 0.2)
        self.assertLessEqual(abs(objective.v_fn(ch, 0.0) + kl_divergence(0.2, 0.4)), 1e-12)
        self.assertLessEqual(abs(objective.v_fn(ch, 1.0) + kl_divergence(0.9, 0.4)), 1e-12)
        self.assertTrue(np.all(np.asarray(objective.v_fn(ch, np.linspace(0, 1, 101))) < 0.0))

    def test_v_prime(self):
        ch = Channel(0.4, 0.4, 0.9, 0.2)
        for p in (0.1, 0.5, 0.9):
            assert_derivative(self, objective.v_prime(ch, p), fd_derivative(lambda x: objective.v_fn(ch, x), p))

    def test_three_parameter_guards(self):
        with self.assertRaises(NotThreeParamError):
            objective.h_prime(INTERIOR, Weights(1, 1), 0.5)
        with self.assertRaises(DomainError):
            objective.v_fn(CLOSED_FORM, 0.5)
