from django.core.management.base import BaseCommand, CommandError

from harness.exceptions import HarnessError
from harness.reports import FORMAT_CHOICES, emit_report, summary_row
from harness.sequence import replay_sequence
from tracker.exceptions import TrackerError


class Command(BaseCommand):
    help = 'Re-run the tracker on a recorded sequence file and report its errors'

    def add_arguments(self, parser):
        parser.add_argument('path', help='Sequence file to replay')
        parser.add_argument('--out', help='Report file')
        parser.add_argument('--series', help='Per-frame error series CSV (needs --out)')
        parser.add_argument('--format', choices=[fmt for fmt, _ in FORMAT_CHOICES], default='csv')

    def handle(self, *args, **options):
        try:
            report = replay_sequence(options['path'])
        except OSError as exc:
            raise CommandError(f'Cannot read {options["path"]}: {exc}')
        except (HarnessError, TrackerError) as exc:
            raise CommandError(f'{options["path"]}: {exc}')

        if options['series'] and not options['out']:
            raise CommandError('--series needs --out')
        if options['out']:
            try:
                emit_report(report, options['format'], options['out'], options['series'])
            except OSError as exc:
                raise CommandError(f'Cannot write report: {exc}')
        self.stdout.write(self.style.SUCCESS(','.join(summary_row(report))))
