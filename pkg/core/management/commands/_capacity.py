"""
Shared plumbing of the capacity management commands.

Exit codes: 0 success, 1 usage, parse or fixture problems, 2 every other
capacity error (domain, degenerate channel, numerical evaluation).
"""
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser

from services.errors import CapacityError, FixtureError, ParseError
from services.info_theory import parse_channel, parse_weights
from services.serializers import UNITS, frame_to_csv

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DOMAIN = 2


class CapacityCommand(BaseCommand):
    grid_setting = 'CAPACITY_GRID'
    formats = ('json', 'csv')
    default_format = 'json'
    needs_weights = True

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        exit_parser = parser.exit

        def exit_with_usage_code(status=0, message=None):
            # argparse reports usage errors with status 2
            exit_parser(EXIT_USAGE if status == 2 else status, message)

        parser.exit = exit_with_usage_code
        return parser

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument('--channel', required=True,
                            help='a,b,c,d = Pr[Y=1|x1,x2]; decimals or n/m')
        if self.needs_weights:
            parser.add_argument('--weights', required=True, help='w1,w2 > 0')
        parser.add_argument('--grid', type=int, default=None,
                            help=f'grid size (default settings.{self.grid_setting})')
        parser.add_argument('--unit', choices=UNITS, default='nats')
        parser.add_argument('--format', choices=self.formats, default=self.default_format)
        parser.add_argument('-o', '--output', default=None, help='write to PATH instead of stdout')

    def add_eps_argument(self, parser: CommandParser) -> None:
        parser.add_argument('--eps', type=float, default=settings.CAPACITY_EPS,
                            help='p2 tolerance of the 1-D solvers, in (0, 0.5)')

    def grid(self, options) -> int:
        value = options['grid']
        return getattr(settings, self.grid_setting) if value is None else value

    def parse_inputs(self, options):
        channel = parse_channel(options['channel'])
        weights = parse_weights(options['weights']) if self.needs_weights else None
        eps = options.get('eps')
        if eps is not None and not 0.0 < eps < 0.5:
            raise ParseError(f"--eps must lie in (0, 0.5), got {eps}")
        return channel, weights

    def emit(self, text: str, options) -> None:
        path = options.get('output')
        if path:
            Path(path).write_text(text)
            logger.info("output_written", extra={'path': path, 'bytes': len(text)})
        else:
            self.stdout.write(text, ending='' if text.endswith('\n') else '\n')

    def emit_frame(self, frame, options) -> None:
        self.emit(frame_to_csv(frame), options)

    def handle(self, *args, **options):
        try:
            self.run(options)
        except (ParseError, FixtureError) as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
        except CapacityError as exc:
            raise CommandError(str(exc), returncode=EXIT_DOMAIN) from exc

    def run(self, options) -> None:
        raise NotImplementedError
