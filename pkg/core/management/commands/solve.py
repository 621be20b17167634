import pandas as pd

from services.serializers import SOLUTION_FIELDS, dumps_record, record_to_dict, solution_record
from services.solver import solve

from ._capacity import CapacityCommand


class Command(CapacityCommand):
    help = 'Weighted sum-rate optimal input distribution of a binary two-user MAC.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_eps_argument(parser)

    def run(self, options):
        channel, weights = self.parse_inputs(options)
        solution = solve(channel, weights, self.grid(options), options['eps'])
        record = solution_record(solution, options['unit'])
        if options['format'] == 'csv':
            frame = pd.DataFrame([record_to_dict(record)], columns=list(SOLUTION_FIELDS))
            self.emit_frame(frame, options)
        else:
            self.emit(dumps_record(record), options)
