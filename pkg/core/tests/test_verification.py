import dataclasses
import json
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag

from services import objective, verification
from services.errors import FixtureError
from services.info_theory import Channel, Weights
from services.oracle import grid_max
from services.verification import (
    QUICK,
    check_gradient,
    check_stationary_census,
    load_fixtures,
    run_suite,
    sign_changes,
    worst_oracle_gap,
)


def write_fixtures(directory, entries):
    path = Path(directory) / 'fixtures.json'
    path.write_text(json.dumps({'fixtures': entries}))
    return path


class FixtureLoadingTests(SimpleTestCase):
    def test_default_fixtures(self):
        fixtures = load_fixtures()
        self.assertEqual(set(verification.REQUIRED_FIXTURES), set(fixtures))
        self.assertAlmostEqual(fixtures['counterexample'].channel.a, 2 / 3, places=15)

    def test_missing_file(self):
        with self.assertRaises(FixtureError):
            load_fixtures('/nonexistent/fixtures.json')

    def test_malformed_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'fixtures.json'
            path.write_text('{"fixtures": [')
            with self.assertRaises(FixtureError):
                load_fixtures(path)

    def test_bad_channel_text(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_fixtures(tmp, [{'name': 'counterexample', 'channel': '2,0,0,0', 'weights': '1,1'}])
            with self.assertRaises(FixtureError):
                load_fixtures(path)

    def test_missing_required_entry(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_fixtures(tmp, [{'name': 'counterexample', 'channel': '0.1,0.2,0.3,0.4',
                                         'weights': '1,1'}])
            with self.assertRaisesMessage(FixtureError, 'interior_optimum'):
                load_fixtures(path)


class SignChangeTests(SimpleTestCase):
    def test_counts(self):
        self.assertEqual(sign_changes(np.array([1.0, 0.5, -0.2, -1.0])), (1, True))
        self.assertEqual(sign_changes(np.array([-1.0, 1.0])), (1, False))
        self.assertEqual(sign_changes(np.array([1.0, -1.0, 1.0])), (2, False))
        self.assertEqual(sign_changes(np.array([1.0, np.nan, 0.0, 2.0])), (0, True))


class MutationTests(SimpleTestCase):
    def test_gradient_check_passes(self):
        worst, tolerance, _ = check_gradient(QUICK, np.random.default_rng(1))
        self.assertLessEqual(worst, tolerance)

    def test_flipped_h4_breaks_gradient_check(self):
        original = objective.h4
        with mock.patch.object(objective, 'h4', lambda ch, p2: -original(ch, p2)):
            worst, tolerance, _ = check_gradient(QUICK, np.random.default_rng(1))
        self.assertGreater(worst, tolerance)


class OracleComparisonTests(SimpleTestCase):
    def test_every_case_compared_without_a_cap(self):
        size = dataclasses.replace(QUICK, oracle_samples=None, oracle_grid=20)
        ch = Channel(0.2, 0.7, 0.4, 0.9)
        cases = [(ch, Weights(1, w2), grid_max(ch, Weights(1, w2), 20).best_value) for w2 in (0.5, 1, 2)]
        cases[1] = (cases[1][0], cases[1][1], cases[1][2] - 0.01)
        worst, compared = worst_oracle_gap(cases, size)
        self.assertEqual(compared, 3)
        self.assertAlmostEqual(worst, 0.01, places=12)

    def test_cap_limits_the_comparisons(self):
        size = dataclasses.replace(QUICK, oracle_samples=2, oracle_grid=10)
        ch = Channel(0.2, 0.7, 0.4, 0.9)
        cases = [(ch, Weights(1, 1), 0.0)] * 5
        self.assertEqual(worst_oracle_gap(cases, size)[1], 2)
        self.assertEqual(worst_oracle_gap([], size), (0.0, 0))

    def test_full_suite_compares_every_sample(self):
        self.assertIsNone(verification.FULL.oracle_samples)


class StationaryCensusTests(SimpleTestCase):
    def test_reports_a_histogram_and_passes(self):
        size = dataclasses.replace(QUICK, census_samples=3)
        measured, tolerance, detail = check_stationary_census(size, np.random.default_rng(5))
        self.assertLessEqual(measured, tolerance)
        self.assertTrue(detail.startswith('interior KKT points per channel: {'))
        counts = [int(part.split(': ')[1]) for part in detail.split('{')[1].rstrip('}').split(', ')]
        self.assertEqual(sum(counts), 3)


@tag('slow')
class QuickSuiteTests(SimpleTestCase):
    def test_quick_suite_passes(self):
        results = run_suite(load_fixtures(), quick=True)
        self.assertEqual(len(results), 11)
        failed = [(r.name, r.detail) for r in results if not r.passed]
        self.assertEqual(failed, [])
