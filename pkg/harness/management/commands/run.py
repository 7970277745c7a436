from django.core.management.base import BaseCommand, CommandError

from harness.models import ExperimentRun
from harness.reports import FORMAT_CHOICES, emit_report, summary_row, write_series
from harness.runner import run_experiment
from motion.exceptions import MotionError
from netlink.exceptions import TransportError
from tracker.exceptions import TrackerError

from ._options import add_experiment_arguments, config_from_options


class Command(BaseCommand):
    help = 'Run one tracking experiment on the virtual clock and report its errors'

    def add_arguments(self, parser):
        add_experiment_arguments(parser)
        parser.add_argument('--out', help='Report file')
        parser.add_argument('--series', help='Per-frame error series CSV')
        parser.add_argument('--format', choices=[fmt for fmt, _ in FORMAT_CHOICES], default='csv')
        parser.add_argument('--save', action='store_true', help='Store the run in the database')

    def handle(self, *args, **options):
        cfg = config_from_options(options)
        try:
            report = run_experiment(cfg)
        except (TransportError, TrackerError, MotionError) as exc:
            raise CommandError(f'Experiment failed: {exc}')

        try:
            if options['out']:
                emit_report(report, options['format'], options['out'], options['series'])
            elif options['series']:
                with open(options['series'], 'w', encoding='utf-8', newline='') as stream:
                    write_series(report, stream)
        except OSError as exc:
            raise CommandError(f'Cannot write report: {exc}')

        if options['save']:
            run = ExperimentRun.from_report(report, cfg)
            self.stdout.write(f'Saved run #{run.pk}')

        self.stdout.write(
            self.style.SUCCESS(
                f'{",".join(summary_row(report))} '
                f'({report.refinement_cycles} refinement cycles, {report.tracking_lost} lost frames)'
            )
        )
