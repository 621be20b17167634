import json

from django.conf import settings

from services.kkt import trace_g1
from services.serializers import outline_frame

from ._capacity import CapacityCommand


class Command(CapacityCommand):
    help = 'Outline of the C1 image region G1, ordered by sweep angle.'
    grid_setting = 'G1_GRID'
    needs_weights = False
    default_format = 'csv'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--bins', type=int, default=settings.G1_BINS)

    def run(self, options):
        channel, _ = self.parse_inputs(options)
        outline = trace_g1(channel, self.grid(options), options['bins'])
        frame = outline_frame(outline, options['unit'])
        if options['format'] == 'json':
            self.emit(json.dumps({'rows': frame.to_dict(orient='records')}, indent=2) + '\n', options)
        else:
            self.emit_frame(frame, options)
