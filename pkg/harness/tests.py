import io
import math
import os
import shutil
import statistics
import tempfile
import threading

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from backend.oracle import NOISY
from backend.server import PoseServer
from geom.camera import CameraIntrinsics, cuboid_corners
from geom.exceptions import NotProjectableError
from geom.transforms import Pose, rot_z, world_gravity
from motion.frames import FrameEvent
from motion.imu import ImuNoiseModel
from motion.scripts import SCRIPT_NAMES
from netlink.latency import LatencyModel

from .clock import BACKEND, FRAME, IMU, NETWORK, EventQueue
from .config import FRAME_RATES, TCP, ExperimentConfig
from .exceptions import SequenceFormatError, SequenceVersionError
from .forms import ExperimentForm
from .metrics import CycleRecord, FrameMetric, MetricsReport, pose_error, projection_error
from .models import ExperimentRun
from .reports import SUMMARY_HEADER, write_series, write_summary
from .runner import FrameTruth, run_experiment, static_biases
from .sequence import parse_sequence, record_sequence, replay_record, replay_sequence

K = CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)
BBOX = cuboid_corners((0.1, 0.1, 0.1))
AHEAD = Pose(np.eye(3), (0.0, 0.0, 1.2))


def scored(t, pos_mm, orient_deg, proj_px, frame_id=0):
    return FrameMetric(t, frame_id, 'finePose', valid=True, pos_mm=pos_mm, orient_deg=orient_deg, proj_px=proj_px)


class WorkspaceMixin:
    """Temporary directory for files written by a test."""

    def setUp(self):
        super().setUp()
        self.workdir = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.workdir, ignore_errors=True)

    def path(self, name):
        return os.path.join(self.workdir, name)


class ClockTests(SimpleTestCase):

    def test_time_then_priority_then_order(self):
        queue = EventQueue()
        queue.schedule(0.01, NETWORK, 'downlink')
        queue.schedule(0.01, IMU, 'imu')
        queue.schedule(0.005, BACKEND, 'reply')
        queue.schedule(0.01, FRAME, 'frame', 'first')
        queue.schedule(0.01, FRAME, 'frame', 'second')
        order = [(event.kind, event.payload) for event in queue]
        self.assertEqual(
            order,
            [('reply', None), ('imu', None), ('frame', 'first'), ('frame', 'second'), ('downlink', None)],
        )
        self.assertEqual(queue.now, 0.01)
        self.assertFalse(queue)

    def test_cannot_schedule_in_the_past(self):
        queue = EventQueue()
        queue.schedule(1.0, IMU, 'imu')
        queue.pop()
        with self.assertRaises(ValueError):
            queue.schedule(0.5, IMU, 'imu')
        self.assertIsNone(queue.peek_time())


class PoseErrorTests(SimpleTestCase):

    def test_identical_poses(self):
        self.assertEqual(pose_error(AHEAD, AHEAD), (0.0, 0.0))
        self.assertEqual(projection_error(AHEAD, AHEAD, BBOX, K), 0.0)

    def test_one_millimetre(self):
        pos_mm, orient_deg = pose_error(Pose(np.eye(3), (0.001, 0.0, 1.2)), AHEAD)
        self.assertAlmostEqual(pos_mm, 1.0, places=9)
        self.assertEqual(orient_deg, 0.0)

    def test_quarter_turn(self):
        _, orient_deg = pose_error(Pose(rot_z(math.pi / 2), (0.0, 0.0, 1.2)), AHEAD)
        self.assertAlmostEqual(orient_deg, 90.0, places=9)

    def test_lateral_offset_in_pixels(self):
        est = Pose(np.eye(3), (0.0024, 0.0, 1.2))
        self.assertAlmostEqual(projection_error(est, AHEAD, BBOX, K), 1.2, delta=0.02)

    def test_rotation_about_the_optical_axis(self):
        est = Pose(rot_z(math.radians(0.5)), (0.0, 0.0, 1.2))
        distances = []
        for vertex in BBOX:
            pixels = []
            for pose in (est, AHEAD):
                x, y, z = pose.rotation @ vertex + pose.translation
                pixels.append(np.array([600.0 * x / z + 320.0, 600.0 * y / z + 240.0]))
            distances.append(np.linalg.norm(pixels[0] - pixels[1]))
        self.assertAlmostEqual(projection_error(est, AHEAD, BBOX, K), float(np.mean(distances)), places=9)

    def test_object_behind_the_camera(self):
        with self.assertRaises(NotProjectableError):
            projection_error(Pose(np.eye(3), (0.0, 0.0, -1.2)), AHEAD, BBOX, K)


class ReportTests(SimpleTestCase):

    def report(self, frames=(), duration=2.0):
        return MetricsReport('trans-easy', 60.0, 'gt', 0, duration, frames=list(frames))

    def test_summary_csv(self):
        report = self.report([scored(0.0, 1.0, 0.1, 0.5), scored(1.0 / 60, 3.0, 0.3, 1.5, frame_id=1)])
        stream = io.StringIO()
        write_summary([report], stream)
        self.assertEqual(
            stream.getvalue(),
            'script,frame_rate,backend,pos_mm,orient_deg,proj_px\n'
            'trans-easy,60,gt,2.000000,0.200000,1.000000\n',
        )

    def test_empty_run_is_header_only(self):
        stream = io.StringIO()
        write_summary([self.report()], stream)
        self.assertEqual(stream.getvalue(), ','.join(SUMMARY_HEADER) + '\n')
        self.assertEqual(self.report().final_second_proj_px, math.inf)

    def test_series_leaves_unscored_frames_empty(self):
        lost = FrameMetric(0.5, 1, 'trackingLost', valid=False)
        stream = io.StringIO()
        write_series(self.report([scored(0.25, 1.0, 0.5, 2.0), lost]), stream)
        self.assertEqual(stream.getvalue(), 't,pos_mm,orient_deg,proj_px\n0.25,1.000000,0.500000,2.000000\n0.5,,,\n')

    def test_aggregates(self):
        hidden = FrameMetric(1.5, 2, 'finePose', valid=True, projectable=False, pos_mm=9.0, orient_deg=9.0)
        lost = FrameMetric(1.6, 3, 'trackingLost', valid=False)
        report = self.report([scored(0.5, 1.0, 0.5, 2.0), scored(1.2, 2.0, 0.5, 4.0, frame_id=1), hidden, lost])
        report.cycles = [CycleRecord(0, 0.1, 0.15, 3.0, 1.0), CycleRecord(1, 0.2, 0.25, 1.0, 2.0)]
        self.assertEqual(report.tracking_lost, 1)
        self.assertEqual(report.excluded_frames, 1)
        self.assertEqual(report.max_proj_px, 4.0)
        self.assertEqual(report.final_second_proj_px, 4.0)
        self.assertEqual(report.cycle_reduction, 0.5)
        data = report.as_dict()
        self.assertIsNone(data['series'][3]['proj_px'])
        self.assertEqual(set(data['timings']), {'ppm', 'pim', 'prm'})


class FrameTruthTests(SimpleTestCase):

    def test_interpolates_between_frames(self):
        a = Pose.from_camera(np.eye(3), (0.0, 0.0, -1.2))
        b = Pose.from_camera(rot_z(0.2).T, (0.1, 0.0, -1.2))
        truth = FrameTruth([FrameEvent(0.0, 0, a), FrameEvent(0.1, 1, b)])
        self.assertIs(truth.at(0.1), b)
        middle = truth.at(0.05)
        np.testing.assert_allclose(middle.center, [0.05, 0.0, -1.2], atol=1e-12)
        np.testing.assert_allclose(middle.rotation, rot_z(0.1), atol=1e-12)
        self.assertIsNone(truth.at(0.2))
        self.assertIsNone(truth.at(-0.01))


class ExperimentTests(SimpleTestCase):

    def test_ground_truth_backend(self):
        report = run_experiment(ExperimentConfig.from_settings('trans-easy', duration=3.0))
        self.assertEqual(report.frame_count, 180)
        self.assertLess(report.mean_proj_px, 2.0)
        self.assertLess(report.mean_pos_mm, 7.0)
        self.assertGreater(report.refinement_cycles, 10)
        self.assertLessEqual(report.refinement_cycles, report.responses)

    def test_every_error_source_removed(self):
        cfg = ExperimentConfig.from_settings(
            'trans-easy', duration=2.0, latency=LatencyModel.instant(), noise=ImuNoiseModel.noiseless(),
        )
        report = run_experiment(cfg)
        self.assertLess(report.mean_proj_px, 0.05)

    def test_without_backend_the_error_diverges(self):
        for script in SCRIPT_NAMES:
            with self.subTest(script=script):
                report = run_experiment(ExperimentConfig.from_settings(script, duration=10.0, disable_backend=True))
                self.assertEqual(report.responses, 0)
                self.assertEqual(report.refinement_cycles, 0)
                self.assertTrue(math.isfinite(report.max_proj_px))
                self.assertGreater(report.max_proj_px, 50.0)

    def test_without_backend_the_last_second_is_scored_and_far_off(self):
        cfg = ExperimentConfig.from_settings('trans-easy', duration=4.0, disable_backend=True, disable_pia=True)
        report = run_experiment(cfg)
        self.assertEqual(report.tracking_lost, 0)
        self.assertEqual(report.excluded_frames, 0)
        self.assertTrue(math.isfinite(report.final_second_proj_px))
        self.assertGreater(report.final_second_proj_px, 50.0)

    def test_runs_are_deterministic(self):
        cfg = ExperimentConfig.from_settings('circ-medium', backend=NOISY, duration=2.0, seed=4)
        first = run_experiment(cfg)
        self.assertTrue(first.same_as(run_experiment(cfg)))
        self.assertFalse(first.same_as(run_experiment(cfg.replace(seed=5))))

    def test_tcp_backend_matches_the_simulated_one(self):
        cfg = ExperimentConfig.from_settings('trans-medium', backend=NOISY, duration=2.0, seed=1)
        server = PoseServer(('127.0.0.1', 0), cfg.backend)
        thread = threading.Thread(target=server.serve_forever)
        thread.start()
        try:
            host, port = server.server_address[:2]
            over_tcp = run_experiment(cfg.replace(transport=TCP, addr=f'{host}:{port}'))
        finally:
            server.shutdown()
            server.server_close()
            thread.join(timeout=5)
        self.assertTrue(over_tcp.same_as(run_experiment(cfg)))

    def test_static_initialization_estimates_the_gyro_bias(self):
        cfg = ExperimentConfig.from_settings('trans-easy', duration=1.0, static_init=2.0)
        gyro_bias, _ = static_biases(cfg)
        np.testing.assert_allclose(gyro_bias, settings.VIOTRACK['GYRO_BIAS'], atol=2.5e-4)

    def test_invalid_config(self):
        cfg = ExperimentConfig.from_settings('trans-easy', duration=1.0)
        with self.assertRaises(ValidationError):
            cfg.replace(frame_rate=0.0)
        with self.assertRaises(ValidationError):
            ExperimentConfig.from_settings('trans-easy', duration=-1.0)

    def test_config_round_trip(self):
        cfg = ExperimentConfig.from_settings('circ-hard', backend=NOISY, frame_rate=90, duration=1.0, seed=7)
        again = ExperimentConfig.from_dict(cfg.as_dict())
        self.assertEqual(again.as_dict(), cfg.as_dict())


def median_proj_px(script, seeds=range(5), **options):
    """Median over ``seeds`` of the run-mean projection error."""
    return statistics.median(
        run_experiment(ExperimentConfig.from_settings(script, seed=seed, **options)).mean_proj_px for seed in seeds
    )


class AccuracyTests(SimpleTestCase):
    """Error bounds and trends of whole runs, on shortened scripts."""

    def test_ground_truth_bound_on_every_script(self):
        for script in SCRIPT_NAMES:
            with self.subTest(script=script):
                report = run_experiment(ExperimentConfig.from_settings(script, frame_rate=60, duration=5.0))
                self.assertLess(report.mean_proj_px, 2.0)
                self.assertLess(report.mean_pos_mm, 7.0)

    def test_noisy_backend_bound(self):
        for frame_rate in FRAME_RATES:
            for script in SCRIPT_NAMES:
                with self.subTest(script=script, frame_rate=frame_rate):
                    cfg = ExperimentConfig.from_settings(script, frame_rate=frame_rate, backend=NOISY, duration=6.0)
                    self.assertLess(run_experiment(cfg).mean_proj_px, 5.0)

    def test_harder_scripts_have_larger_errors(self):
        for kind in ('trans', 'circ'):
            with self.subTest(kind=kind):
                easy = median_proj_px(f'{kind}-easy', frame_rate=60, duration=20.0)
                hard = median_proj_px(f'{kind}-hard', frame_rate=60, duration=20.0)
                self.assertLess(easy, hard)

    def test_bias_correction_at_least_halves_the_error(self):
        for script in ('trans-medium', 'circ-medium'):
            with self.subTest(script=script):
                full = median_proj_px(script, duration=8.0)
                without = median_proj_px(script, duration=8.0, disable_bscm=True)
                self.assertGreaterEqual(without, 2.0 * full)

    def test_corrections_lower_the_error_on_average(self):
        for script in SCRIPT_NAMES:
            with self.subTest(script=script):
                report = run_experiment(ExperimentConfig.from_settings(script, duration=10.0))
                self.assertGreater(len(report.cycles), 100)
                before = statistics.mean(c.proj_before for c in report.cycles)
                after = statistics.mean(c.proj_after for c in report.cycles)
                self.assertLess(after, 0.8 * before)
                self.assertGreater(report.cycle_reduction, 0.5)
                for cycle in report.cycles:
                    self.assertGreaterEqual(cycle.t1 - cycle.t0, 0.035625 - 1e-9)
                    self.assertLessEqual(cycle.t1 - cycle.t0, 0.065625 + 1e-9)


def constant_velocity_sequence(velocity=0.1, frames=60, frame_rate=30.0, imu_rate=200.0):
    """
    Sequence text of a camera gliding along x at ``velocity`` m/s with the
    object 1.2 m ahead; requests go out at frames 0, 4, 8, ... and are
    answered three frames later.
    """
    g = world_gravity()

    def pose_at(t):
        return Pose.from_camera(np.eye(3), (velocity * t, 0.0, -1.2))

    def floats(values):
        return ' '.join(repr(float(v)) for v in values)

    rows = []
    for k in range(1, int(round(frames / frame_rate * imu_rate)) + 1):
        t = k / imu_rate
        rows.append((t, IMU, f'I {t!r} 0.0 0.0 0.0 {floats(g)}'))
    for n in range(frames):
        t = n / frame_rate
        rows.append((t, FRAME, f'F {t!r} {n} {floats(pose_at(t).to_row())}'))
        if n % 4 == 3:
            t0 = (n - 3) / frame_rate
            rows.append((t, NETWORK, f'B {t!r} {n // 4} ok {floats(pose_at(t0).to_row())}'))
    rows.sort(key=lambda row: row[:2])
    header = ['# viotrack-sequence 1', '# start 0.0', f'# imu_rate {imu_rate!r}', f'# frame_rate {frame_rate!r}']
    return header + [text for _, _, text in rows]


class SequenceTests(WorkspaceMixin, SimpleTestCase):

    def test_replay_matches_the_recorded_run(self):
        cfg = ExperimentConfig.from_settings('circ-easy', backend=NOISY, duration=2.0, seed=3)
        recorded = record_sequence(cfg, self.path('run.seq'))
        replayed = replay_sequence(self.path('run.seq'))
        self.assertTrue(recorded.same_as(replayed))
        self.assertGreater(replayed.refinement_cycles, 0)

    def test_external_constant_velocity_sequence(self):
        record = parse_sequence(constant_velocity_sequence())
        self.assertEqual(record.config.frame_rate, 30.0)
        self.assertEqual(len(record.frames), 60)
        report = replay_record(record)
        self.assertEqual(report.responses, 15)
        self.assertEqual(report.refinement_cycles, 15)
        self.assertGreater(report.frame_count - report.tracking_lost, 40)
        self.assertLess(report.mean_pos_mm, 1e-3)
        self.assertLess(report.mean_proj_px, 1e-3)

    def test_row_before_start(self):
        lines = ['# viotrack-sequence 1', '# start 1.0', 'I 0.5 0.0 0.0 0.0 0.0 0.0 9.80665']
        with self.assertRaises(SequenceFormatError) as ctx:
            parse_sequence(lines)
        self.assertEqual(ctx.exception.line_number, 3)

    def test_malformed_rows(self):
        header = ['# viotrack-sequence 1', '# start 0.0']
        cases = [
            ['I 0.1 0.0 0.0 0.0 0.0 0.0'],
            ['X 0.1'],
            ['I 0.2 0 0 0 0 0 9.8', 'I 0.1 0 0 0 0 0 9.8'],
            ['I 0.1 0 0 0 0 0 9.8', 'I 0.1 0 0 0 0 0 9.8'],
            ['B 0.1 0 maybe 1 0 0 0 1 0 0 0 1 0 0 1'],
            ['I nan 0 0 0 0 0 9.8'],
        ]
        for rows in cases:
            with self.subTest(rows=rows), self.assertRaises(SequenceFormatError) as ctx:
                parse_sequence(header + rows)
            self.assertEqual(ctx.exception.line_number, len(header) + len(rows))

    def test_version(self):
        with self.assertRaises(SequenceVersionError):
            parse_sequence(['# viotrack-sequence 2', '# start 0.0'])
        with self.assertRaises(SequenceVersionError):
            parse_sequence(['I 0.1 0 0 0 0 0 9.8'])
        with self.assertRaises(SequenceVersionError):
            parse_sequence([])


class ExperimentFormTests(SimpleTestCase):

    def test_defaults(self):
        form = ExperimentForm({'script': 'trans-easy', 'backend': 'gt', 'transport': 'sim', 'duration': 1.0})
        self.assertTrue(form.is_valid(), form.errors)
        cfg = form.to_config()
        self.assertEqual(cfg.frame_rate, settings.VIOTRACK['FRAME_RATE'])
        self.assertEqual(cfg.addr, settings.VIOTRACK['ADDR'])
        self.assertEqual(cfg.duration, 1.0)

    def test_invalid_values(self):
        form = ExperimentForm({
            'script': 'spin-easy', 'backend': 'gt', 'transport': 'sim', 'frame_rate': -30, 'addr': 'nowhere:port',
        })
        self.assertFalse(form.is_valid())
        self.assertIn('script', form.errors)
        self.assertIn('frame_rate', form.errors)
        self.assertIn('addr', form.errors)

    def test_tcp_needs_the_backend(self):
        form = ExperimentForm({'script': 'trans-easy', 'backend': 'gt', 'transport': 'tcp', 'disable_backend': True})
        self.assertFalse(form.is_valid())
        self.assertIn('__all__', form.errors)


class CommandTests(WorkspaceMixin, TestCase):

    def test_run(self):
        call_command(
            'run', '--duration', '1', '--out', self.path('summary.csv'), '--series', self.path('series.csv'),
            '--save', stdout=io.StringIO(),
        )
        with open(self.path('summary.csv'), encoding='utf-8') as stream:
            lines = stream.read().splitlines()
        self.assertEqual(lines[0], ','.join(SUMMARY_HEADER))
        self.assertTrue(lines[1].startswith('trans-easy,60,gt,'))
        with open(self.path('series.csv'), encoding='utf-8') as stream:
            self.assertEqual(len(stream.read().splitlines()), 61)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.duration, 1.0)
        self.assertEqual(run.config['script'], 'trans-easy')

    def test_run_rejects_bad_options(self):
        with self.assertRaises(CommandError):
            call_command('run', '--frame-rate', '0', stdout=io.StringIO())
        with self.assertRaises(CommandError):
            call_command('run', '--transport', 'tcp', '--disable-backend', stdout=io.StringIO())

    def test_grid(self):
        call_command(
            'grid', '--out', self.path('grid.csv'), '--backends', 'gt', 'noisy', '--frame-rates', '30',
            '--scripts', 'trans-easy', '--duration', '1', stdout=io.StringIO(),
        )
        with open(self.path('grid.csv'), encoding='utf-8') as stream:
            lines = stream.read().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(ExperimentRun.objects.count(), 2)

    def test_grid_is_byte_identical_for_a_fixed_seed(self):
        for name in ('first.csv', 'second.csv'):
            call_command(
                'grid', '--out', self.path(name), '--frame-rates', '30', '60', '--scripts', 'trans-easy', 'circ-hard',
                '--seed', '3', '--duration', '1', '--no-save', stdout=io.StringIO(),
            )
        with open(self.path('first.csv'), 'rb') as first, open(self.path('second.csv'), 'rb') as second:
            content = first.read()
            self.assertEqual(content, second.read())
        self.assertEqual(len(content.splitlines()), 9)
        self.assertEqual(ExperimentRun.objects.count(), 0)

    def test_record_and_replay(self):
        call_command('record', self.path('run.seq'), '--duration', '1', '--backend', 'noisy', stdout=io.StringIO())
        out = io.StringIO()
        call_command('replay', self.path('run.seq'), '--format', 'json', '--out', self.path('run.json'), stdout=out)
        self.assertIn('trans-easy,60,noisy,', out.getvalue())
        self.assertTrue(os.path.exists(self.path('run.json')))

    def test_replay_missing_file(self):
        with self.assertRaises(CommandError):
            call_command('replay', self.path('missing.seq'), stdout=io.StringIO())
