import json

import pandas as pd

from services.serializers import kkt_points_to_list
from services.kkt import find_kkt_points

from ._capacity import CapacityCommand


class Command(CapacityCommand):
    help = 'KKT points of the weighted sum-rate objective with their classification.'
    grid_setting = 'KKT_SEED_GRID'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--tol', type=float, default=None, help='KKT residual tolerance')

    def run(self, options):
        channel, weights = self.parse_inputs(options)
        kwargs = {} if options['tol'] is None else {'kkt_tol': options['tol']}
        points = find_kkt_points(channel, weights, self.grid(options), **kwargs)
        rows = kkt_points_to_list(points, options['unit'])
        if options['format'] == 'csv':
            self.emit_frame(pd.DataFrame(rows), options)
        else:
            self.emit(json.dumps(rows, indent=2) + '\n', options)
