import json

from django.test import SimpleTestCase

from services.errors import ParseError
from services.info_theory import LN2, Channel, RatePair, Weights
from services.serializers import (
    FLOAT_FORMAT,
    SOLUTION_FIELDS,
    check_unit,
    dumps_record,
    frame_to_csv,
    json_float,
    loads_record,
    outline_frame,
    record_to_dict,
    solution_record,
)
from services.solver import Location, solve


class SolutionRecordTests(SimpleTestCase):
    def setUp(self):
        self.solution = solve(Channel(0.8, 0.8, 0.8, 0.1), Weights(1, 2))

    def test_field_order(self):
        self.assertEqual(list(record_to_dict(solution_record(self.solution))), list(SOLUTION_FIELDS))

    def test_json_text_survives_reload(self):
        text = dumps_record(solution_record(self.solution))
        self.assertEqual(dumps_record(loads_record(text)), text)
        self.assertTrue(text.endswith('}\n'))

    def test_json_floats_carry_twelve_significant_digits(self):
        record = solution_record(self.solution)
        text = dumps_record(record)
        data = json.loads(text)
        for name in ('p1', 'p2', 'rate1', 'rate2', 'value'):
            self.assertEqual(data[name], float(FLOAT_FORMAT % getattr(record, name)))
        self.assertEqual(dumps_record(loads_record(text)), text)

    def test_json_float_passes_other_values(self):
        self.assertEqual(json_float(1 / 3), 0.333333333333)
        self.assertIsNone(json_float(None))
        self.assertEqual(json_float('C1'), 'C1')

    def test_bits(self):
        nats = solution_record(self.solution)
        bits = solution_record(self.solution, 'bits')
        self.assertAlmostEqual(bits.value * LN2, nats.value, places=12)
        self.assertEqual(bits.p1, nats.p1)
        self.assertEqual(bits.unit, 'bits')

    def test_enum_values_are_plain_strings(self):
        data = json.loads(dumps_record(solution_record(self.solution)))
        self.assertIn(data['location'], {loc.value for loc in Location})
        self.assertIn(data['corner'], ('C1', 'C2'))

    def test_loads_rejects_bad_documents(self):
        with self.assertRaises(ParseError):
            loads_record('{not json')
        with self.assertRaises(ParseError):
            loads_record(json.dumps({'p1': 0.5}))
        data = record_to_dict(solution_record(self.solution))
        data['unit'] = 'hartleys'
        with self.assertRaises(ParseError):
            loads_record(json.dumps(data))

    def test_unknown_unit(self):
        with self.assertRaises(ParseError):
            check_unit('bans')
        with self.assertRaises(ParseError):
            solution_record(self.solution, 'bans')


class FrameTests(SimpleTestCase):
    def test_outline_csv(self):
        frame = outline_frame([RatePair(LN2, 0.0), RatePair(0.0, LN2)], 'bits')
        self.assertEqual(frame_to_csv(frame), 'r1,r2\n1,0\n0,1\n')
