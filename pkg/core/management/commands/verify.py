from contextlib import nullcontext
from unittest import mock

from django.conf import settings
from django.core.management.base import CommandError

from services import objective
from services.verification import load_fixtures, run_suite

from ._capacity import EXIT_USAGE, CapacityCommand


def _flipped_h4(original):
    def h4(ch, p2):
        return -original(ch, p2)
    return h4


class Command(CapacityCommand):
    help = 'Run the acceptance suite on the fixture channels; exit 0 iff every check passes.'

    def add_arguments(self, parser):
        parser.add_argument('--quick', action='store_true', help='smaller samples and grids')
        parser.add_argument('--fixtures', default=None,
                            help='fixture JSON (default settings.VERIFY_FIXTURES)')
        parser.add_argument('--mutate-h4', action='store_true',
                            help='flip the sign of h4 for this run (DEBUG only)')

    def run(self, options):
        if options['mutate_h4'] and not settings.DEBUG:
            raise CommandError('--mutate-h4 is only available with DEBUG on', returncode=EXIT_USAGE)
        fixtures = load_fixtures(options['fixtures'])

        patch = (mock.patch.object(objective, 'h4', _flipped_h4(objective.h4))
                 if options['mutate_h4'] else nullcontext())
        with patch:
            results = run_suite(fixtures, quick=options['quick'])

        for result in results:
            status = self.style.SUCCESS('PASS') if result.passed else self.style.ERROR('FAIL')
            self.stdout.write(f"{status} {result.name}: measured={result.measured:.3g} "
                              f"tolerance={result.tolerance:.3g} {result.detail}")
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise CommandError(f"{len(failed)} check(s) failed: {', '.join(failed)}",
                               returncode=EXIT_USAGE)
        self.stdout.write(self.style.SUCCESS(f"All {len(results)} checks passed."))
