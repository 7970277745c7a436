import itertools
import time

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from backend.oracle import MODE_CHOICES
from harness.config import FRAME_RATES, ExperimentConfig
from harness.models import ExperimentRun
from harness.reports import FORMAT_CHOICES, emit_report
from harness.runner import run_experiment
from motion.exceptions import MotionError
from motion.scripts import SCRIPT_NAMES
from tracker.exceptions import TrackerError


class Command(BaseCommand):
    help = 'Sweep backend modes, frame rates and motion scripts and write one summary row per run'

    def add_arguments(self, parser):
        parser.add_argument('--out', required=True, help='Summary report file')
        parser.add_argument('--format', choices=[fmt for fmt, _ in FORMAT_CHOICES], default='csv')
        parser.add_argument('--backends', nargs='+', choices=[mode for mode, _ in MODE_CHOICES],
                            default=[mode for mode, _ in MODE_CHOICES])
        parser.add_argument('--frame-rates', nargs='+', type=float, default=list(FRAME_RATES))
        parser.add_argument('--scripts', nargs='+', choices=SCRIPT_NAMES, default=SCRIPT_NAMES)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--duration', type=float)
        parser.add_argument('--no-save', action='store_true', help='Do not store the runs in the database')

    def handle(self, *args, **options):
        cells = list(itertools.product(options['backends'], options['frame_rates'], options['scripts']))
        self.stdout.write(f'Running {len(cells)} experiments...')
        started = time.perf_counter()

        reports = []
        for backend, frame_rate, script in cells:
            try:
                cfg = ExperimentConfig.from_settings(
                    script=script, frame_rate=frame_rate, backend=backend, seed=options['seed'],
                    duration=options['duration'],
                )
                report = run_experiment(cfg)
            except (ValidationError, MotionError, TrackerError) as exc:
                raise CommandError(f'{script} at {frame_rate:g} FPS ({backend}): {exc}')
            reports.append(report)
            if not options['no_save']:
                ExperimentRun.from_report(report, cfg)
            self.stdout.write(f'{backend} {frame_rate:g} FPS {script}: {report.mean_proj_px:.3f} px')

        try:
            emit_report(reports, options['format'], options['out'])
        except OSError as exc:
            raise CommandError(f'Cannot write report: {exc}')
        elapsed = time.perf_counter() - started
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(reports)} rows to {options["out"]} in {elapsed:.1f} s'))
