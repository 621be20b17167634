import json

from django.conf import settings

from services.serializers import frame_to_records, region_frame
from services.solver import region_boundary

from ._capacity import CapacityCommand


class Command(CapacityCommand):
    help = 'Boundary of the capacity region as a polyline from (e1, 0) to (0, e2).'
    needs_weights = False
    default_format = 'csv'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_eps_argument(parser)
        parser.add_argument('--sweep', type=int, default=settings.REGION_SWEEP,
                            help='number of weight vectors (at least 3)')
        parser.add_argument('--jobs', type=int, default=settings.REGION_N_JOBS,
                            help='parallel workers for the weight sweep')

    def run(self, options):
        channel, _ = self.parse_inputs(options)
        boundary = region_boundary(channel, num_weights=options['sweep'], eps=options['eps'],
                                   grid_n=self.grid(options), n_jobs=options['jobs'])
        frame = region_frame(boundary, options['unit'])
        if options['format'] == 'json':
            self.emit(json.dumps({'rows': frame_to_records(frame)}, indent=2) + '\n', options)
        else:
            self.emit_frame(frame, options)
