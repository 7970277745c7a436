from django.core.management.base import BaseCommand, CommandError

from harness.reports import summary_row
from harness.sequence import record_sequence
from motion.exceptions import MotionError
from netlink.exceptions import TransportError
from tracker.exceptions import TrackerError

from ._options import add_experiment_arguments, config_from_options


class Command(BaseCommand):
    help = 'Run an experiment and record its tracker inputs as a replayable sequence file'

    def add_arguments(self, parser):
        parser.add_argument('path', help='Sequence file to write')
        add_experiment_arguments(parser)

    def handle(self, *args, **options):
        cfg = config_from_options(options)
        try:
            report = record_sequence(cfg, options['path'])
        except OSError as exc:
            raise CommandError(f'Cannot write {options["path"]}: {exc}')
        except (TransportError, TrackerError, MotionError) as exc:
            raise CommandError(f'Experiment failed: {exc}')
        self.stdout.write(self.style.SUCCESS(f'Recorded {options["path"]}: {",".join(summary_row(report))}'))
