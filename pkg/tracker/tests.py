import heapq
import itertools
import math
import time
from collections import namedtuple

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, override_settings

from geom.camera import CameraIntrinsics, cuboid_corners
from geom.transforms import Pose, compose, from_euler_xyz, rot_y, rot_z, rotation_angle, world_gravity
from motion.frames import schedule_frames
from motion.imu import ImuNoiseModel, ImuSample, synthesize_imu
from motion.scripts import SCRIPT_NAMES, MotionScript
from motion.trajectories import StaticTrajectory, TrajectorySample, sample_trajectory

from .bscm import average_velocity, bscm_accel_bias, bscm_gyro_bias, interpolate_velocity
from .exceptions import (
    DegenerateIntervalError,
    ImuGapError,
    InsufficientSamplesError,
    NonMonotonicTimestampError,
    TrackerError,
)
from .frontend import SEEDING, TRACKING, Tracker
from .inspection import inspect_pose, pia_inspect
from .propagation import extrapolate, init_static, ppm_step
from .refinement import prm_on_response
from .state import (
    Correction,
    ImuBuffer,
    PendingRequest,
    PiaConfig,
    RefinementRecord,
    StateVector,
    TrackerConfig,
    TrackerStatus,
)

G = np.array(world_gravity())
K = CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)
GYRO_BIAS = np.array([0.005, -0.004, 0.003])
ACCEL_BIAS = np.array([0.05, -0.04, 0.03])

Response = namedtuple('Response', 'request_id t0 pose status')


def true_state(script, t=0.0):
    sample = sample_trajectory(script, t)
    return StateVector(sample.cam_from_world, sample.velocity_world, t=t)


def facing(depth):
    """Camera-from-object pose with the object ``depth`` metres straight ahead."""
    return Pose(np.eye(3), (0.0, 0.0, depth))


def propagate(trajectory, count, state):
    """Noise-free propagation of ``count`` samples, buffered as the tracker would."""
    buffer = ImuBuffer.for_duration(1.0, 200)
    for sample in itertools.islice(synthesize_imu(trajectory, ImuNoiseModel.noiseless(), rng_seed=0), count):
        state = ppm_step(state, sample)
        buffer.append(sample, state)
    return state, buffer


def drive(tracker, script, noise, frame_rate=30.0, latency=0.05):
    """Feed ``tracker`` a synthesized run with a ground-truth backend answering after ``latency`` s."""
    queue = []
    seq = itertools.count()
    for sample in synthesize_imu(script, noise, rng_seed=3):
        heapq.heappush(queue, (sample.t, 0, next(seq), 'imu', sample))
    for frame in schedule_frames(script, frame_rate):
        heapq.heappush(queue, (frame.t, 1, next(seq), 'frame', frame))
    statuses = []
    while queue:
        t, _, _, kind, item = heapq.heappop(queue)
        if kind == 'imu':
            tracker.on_imu(item)
        elif kind == 'frame':
            decision = tracker.on_frame(item)
            statuses.append(decision.status)
            if decision.request is not None:
                response = Response(decision.request.request_id, t, item.true_cam_from_world, 'ok')
                heapq.heappush(queue, (t + latency, 2, next(seq), 'response', response))
        else:
            tracker.on_response(item)
    return statuses


class PanAway:
    """Camera yawing at a constant rate from ``start`` without moving."""

    def __init__(self, start, rate, duration):
        self.start = start
        self.rate = rate
        self.duration = duration

    def sample(self, t):
        R_wc = self.start.rotation.T @ rot_y(self.rate * t)
        return TrajectorySample(
            t, Pose.from_camera(R_wc, self.start.center), np.zeros(3), np.zeros(3), np.array([0.0, self.rate, 0.0])
        )


class PropagationTests(SimpleTestCase):

    def test_static_stream_leaves_pose_unchanged(self):
        state = StateVector(Pose.identity())
        sample_accel = G.copy()
        for k in range(1, 6001):
            state = ppm_step(state, ImuSample(k / 200.0, np.zeros(3), sample_accel))
        self.assertTrue(state.cam_from_world.isclose(Pose.identity(), atol=1e-9))
        np.testing.assert_allclose(state.velocity_world, np.zeros(3), atol=1e-9)
        self.assertEqual(state.t, 30.0)

    def test_noise_free_stream_tracks_truth(self):
        for name in SCRIPT_NAMES:
            script = MotionScript.from_name(name, duration=1.0)
            with self.subTest(script=name):
                state = true_state(script)
                for sample in synthesize_imu(script, ImuNoiseModel.noiseless(), rng_seed=0):
                    state = ppm_step(state, sample)
                truth = sample_trajectory(script, state.t)
                self.assertLess(np.linalg.norm(state.position - truth.position), 1e-3)
                rotation_error = rotation_angle(state.cam_from_world.rotation @ truth.cam_from_world.rotation.T)
                self.assertLess(math.degrees(rotation_error), 0.01)

    def test_gyro_bias_cancels(self):
        script = MotionScript.from_name('circ-hard', duration=1.0)
        biased = synthesize_imu(script, ImuNoiseModel.noiseless(gyro_bias=GYRO_BIAS), rng_seed=0)
        clean = synthesize_imu(script, ImuNoiseModel.noiseless(), rng_seed=0)
        a = true_state(script).replace(gyro_bias=GYRO_BIAS)
        b = true_state(script)
        for sample_a, sample_b in zip(biased, clean):
            a = ppm_step(a, sample_a)
            b = ppm_step(b, sample_b)
        # equal up to the rounding of adding and removing the bias
        self.assertTrue(a.cam_from_world.isclose(b.cam_from_world, atol=1e-12))
        np.testing.assert_allclose(a.velocity_world, b.velocity_world, atol=1e-12)

    def test_accel_bias_is_removed_in_world_frame(self):
        bias_world = np.array([0.1, -0.2, 0.05])
        state = StateVector(Pose.identity(), accel_bias_world=bias_world)
        state = ppm_step(state, ImuSample(0.005, np.zeros(3), G + bias_world))
        np.testing.assert_allclose(state.velocity_world, np.zeros(3), atol=1e-15)

    def test_gravity_comes_from_settings(self):
        lunar = [0.0, 0.0, 1.62]
        with override_settings(VIOTRACK={**settings.VIOTRACK, 'GRAVITY': lunar}):
            self.assertEqual(TrackerConfig().gravity, tuple(lunar))
            state = ppm_step(StateVector(Pose.identity()), ImuSample(0.005, np.zeros(3), lunar))
        np.testing.assert_allclose(state.velocity_world, np.zeros(3), atol=1e-15)
        self.assertEqual(TrackerConfig().gravity, tuple(G))

    def test_rejects_non_monotonic_sample(self):
        state = StateVector(Pose.identity(), t=1.0)
        with self.assertRaises(NonMonotonicTimestampError):
            ppm_step(state, ImuSample(1.0, np.zeros(3), G))
        with self.assertRaises(NonMonotonicTimestampError):
            ppm_step(state, ImuSample(0.9, np.zeros(3), G))

    def test_rejects_gap(self):
        state = StateVector(Pose.identity(), t=1.0)
        with self.assertRaises(ImuGapError):
            ppm_step(state, ImuSample(1.02, np.zeros(3), G), max_gap=0.01)

    def test_extrapolation_leaves_state_alone(self):
        state = StateVector(Pose.identity(), velocity_world=(1.0, 0.0, 0.0), t=1.0)
        sample = ImuSample(1.0, np.zeros(3), G)
        ahead = extrapolate(state, sample, 1.5)
        np.testing.assert_allclose(ahead.position, [0.5, 0.0, 0.0], atol=1e-12)
        self.assertEqual(ahead.t, 1.5)
        self.assertIs(extrapolate(state, sample, 1.0), state)
        self.assertIs(extrapolate(state, None, 2.0), state)
        self.assertEqual(state.t, 1.0)


class StaticInitTests(SimpleTestCase):

    def test_constant_rate_is_the_gyro_bias(self):
        samples = [ImuSample(k / 200.0, (0.001, 0.0, 0.0), G) for k in range(1, 101)]
        gyro_bias, accel_bias = init_static(samples)
        np.testing.assert_allclose(gyro_bias, [0.001, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(accel_bias, np.zeros(3), atol=1e-12)

    def test_gravity_reaction_in_a_tilted_body(self):
        R_wc = from_euler_xyz((0.3, -0.2, 1.1))
        samples = [ImuSample(k / 200.0, np.zeros(3), R_wc.T @ G) for k in range(1, 51)]
        _, accel_bias = init_static(samples, world_from_cam_rotation=R_wc)
        np.testing.assert_allclose(accel_bias, np.zeros(3), atol=1e-12)

    def test_statistical_estimate(self):
        noise = ImuNoiseModel(gyro_bias=GYRO_BIAS, accel_bias=ACCEL_BIAS)
        samples = list(synthesize_imu(StaticTrajectory(Pose.identity(), 2.0), noise, rng_seed=11))
        self.assertEqual(len(samples), 400)
        gyro_bias, accel_bias = init_static(samples)
        # a few standard errors of the mean
        np.testing.assert_array_less(np.abs(gyro_bias - GYRO_BIAS), 4 * noise.gyro_sigma / 20)
        np.testing.assert_array_less(np.abs(accel_bias - ACCEL_BIAS), 4 * noise.accel_sigma / 20)

    def test_too_few_samples(self):
        with self.assertRaises(InsufficientSamplesError):
            init_static([ImuSample(k / 200.0, np.zeros(3), G) for k in range(1, 50)])


class InspectionTests(SimpleTestCase):

    def setUp(self):
        self.cfg = PiaConfig()
        self.square = cuboid_corners((0.1, 0.1, 0.0))

    def test_offset_threshold(self):
        self.assertEqual(self.cfg.offset_threshold(30), 20.0)
        self.assertEqual(self.cfg.offset_threshold(120), 12.5)
        rates = [15, 30, 60, 90, 120, 240]
        thresholds = [self.cfg.offset_threshold(rate) for rate in rates]
        self.assertTrue(all(a > b for a, b in zip(thresholds, thresholds[1:])))

    def test_area_threshold(self):
        self.assertEqual(self.cfg.area_threshold(K), 3072.0)

    def test_small_area_is_tracking_lost(self):
        half = math.sqrt(2000.0) / 500.0 / 2
        bbox = cuboid_corners((half, half, 0.0))
        result = inspect_pose(facing(1.2), facing(1.2), bbox, K, 30, self.cfg)
        self.assertAlmostEqual(result.area, 2000.0, places=6)
        self.assertEqual(result.status, TrackerStatus.TRACKING_LOST)

    def test_same_pose_is_fine(self):
        box = cuboid_corners((0.1, 0.1, 0.1))
        self.assertEqual(pia_inspect(facing(1.2), facing(1.2), box, K, 60, self.cfg), TrackerStatus.FINE_POSE)

    def test_offset_against_frame_rate(self):
        # at 1.2 m a lateral shift of d metres moves every vertex 500 d pixels
        last = facing(1.2)
        shifted = Pose(np.eye(3), (0.05, 0.0, 1.2))
        result = inspect_pose(shifted, last, self.square, K, 30, self.cfg)
        self.assertAlmostEqual(result.offset, 25.0, places=9)
        self.assertEqual(result.status, TrackerStatus.WRONG_POSE)

        slight = Pose(np.eye(3), (0.03, 0.0, 1.2))
        self.assertEqual(pia_inspect(slight, last, self.square, K, 30, self.cfg), TrackerStatus.FINE_POSE)
        self.assertEqual(pia_inspect(slight, last, self.square, K, 120, self.cfg), TrackerStatus.WRONG_POSE)

    def test_area_is_checked_before_offset(self):
        tiny = cuboid_corners((0.01, 0.01, 0.0))
        far = Pose(np.eye(3), (0.5, 0.0, 1.2))
        self.assertEqual(pia_inspect(facing(1.2), far, tiny, K, 30, self.cfg), TrackerStatus.TRACKING_LOST)

    def test_offset_monotonicity(self):
        last = facing(1.2)
        statuses = [
            pia_inspect(Pose(np.eye(3), (shift, 0.0, 1.2)), last, self.square, K, 60, self.cfg)
            for shift in np.linspace(0.0, 0.1, 41)
        ]
        first_wrong = statuses.index(TrackerStatus.WRONG_POSE)
        self.assertTrue(all(s == TrackerStatus.WRONG_POSE for s in statuses[first_wrong:]))

    def test_behind_camera_is_tracking_lost(self):
        self.assertEqual(
            pia_inspect(facing(-1.2), None, self.square, K, 30, self.cfg), TrackerStatus.TRACKING_LOST
        )

    def test_area_outside_the_image_does_not_count(self):
        # 100 px square centred on the left border: half of it is visible
        pose = Pose(np.eye(3), (-320 / 500, 0.0, 1.2))
        result = inspect_pose(pose, None, self.square, K, 30, self.cfg)
        self.assertAlmostEqual(result.area, 5000.0, places=6)

    def test_invalid_config(self):
        with self.assertRaises(TrackerError):
            PiaConfig(px_e=0)
        with self.assertRaises(TrackerError):
            self.cfg.offset_threshold(0)


class BscmTests(SimpleTestCase):

    def test_equal_rotations_give_no_bias(self):
        R = from_euler_xyz((0.2, 0.1, -0.4))
        np.testing.assert_allclose(bscm_gyro_bias(R, R, 0.1), np.zeros(3), atol=1e-12)

    def test_pure_axis_rotation(self):
        np.testing.assert_allclose(bscm_gyro_bias(rot_z(0.05), np.eye(3), 0.5), [0.0, 0.0, 0.1], atol=1e-12)

    def test_recovers_injected_gyro_bias(self):
        bias = np.array([0.03, -0.05, 0.02])
        state = StateVector(Pose.identity())
        stream = synthesize_imu(
            StaticTrajectory(Pose.identity(), 0.2), ImuNoiseModel.noiseless(gyro_bias=bias), rng_seed=0
        )
        for sample in stream:
            state = ppm_step(state, sample)
        estimate = bscm_gyro_bias(state.world_from_cam_rotation, np.eye(3), 0.2)
        np.testing.assert_allclose(estimate, bias, rtol=0.05)

    def test_degenerate_window(self):
        with self.assertRaises(DegenerateIntervalError):
            bscm_gyro_bias(np.eye(3), np.eye(3), 0.0)

    def test_average_velocity(self):
        start = Pose.from_camera(np.eye(3), (0.0, 0.0, 0.0))
        end = Pose.from_camera(np.eye(3), (0.1, 0.0, 0.0))
        rec = RefinementRecord(0.0, 1.0, start, end)
        np.testing.assert_allclose(average_velocity(rec), [0.1, 0.0, 0.0], atol=1e-15)
        V_bias, a_bias = bscm_accel_bias(rec, (0.1, 0.0, 0.0))
        np.testing.assert_allclose(V_bias, np.zeros(3), atol=1e-15)
        np.testing.assert_allclose(a_bias, np.zeros(3), atol=1e-15)

    def test_accel_bias_from_velocity_bias(self):
        rec = RefinementRecord(1.0, 1.2, Pose.identity(), Pose.identity())
        V_bias, a_bias = bscm_accel_bias(rec, (0.02, 0.0, 0.0))
        np.testing.assert_allclose(V_bias, [0.02, 0.0, 0.0])
        np.testing.assert_allclose(a_bias, [0.1, 0.0, 0.0], atol=1e-12)

    def test_accel_window_too_short(self):
        rec = RefinementRecord(1.0, 1.0 + 1e-7, Pose.identity(), Pose.identity())
        with self.assertRaises(DegenerateIntervalError):
            bscm_accel_bias(rec, np.zeros(3))
        with self.assertRaises(DegenerateIntervalError):
            RefinementRecord(1.0, 1.0, Pose.identity(), Pose.identity())

    def test_interpolated_velocity(self):
        velocity = interpolate_velocity([0.0, 1.0], [(0.0, 0.0, 0.0), (2.0, -2.0, 4.0)], 0.25)
        np.testing.assert_allclose(velocity, [0.5, -0.5, 1.0])


class ImuBufferTests(SimpleTestCase):

    def sample(self, k):
        return ImuSample(k / 200.0, np.zeros(3), G)

    def test_capacity(self):
        buffer = ImuBuffer.for_duration(1.0, 200)
        self.assertEqual(buffer.capacity, 200)
        state = StateVector(Pose.identity())
        for k in range(1, 251):
            buffer.append(self.sample(k), state)
        self.assertEqual(len(buffer), 200)
        self.assertEqual(buffer.released_until, 50 / 200.0)
        self.assertTrue(buffer.covers(0.25))
        self.assertFalse(buffer.covers(0.2))

    def test_drop_before(self):
        buffer = ImuBuffer(100)
        state = StateVector(Pose.identity())
        for k in range(1, 21):
            buffer.append(self.sample(k), state)
        buffer.drop_before(0.05)
        self.assertEqual([entry.t for entry in buffer][0], 0.05)
        self.assertEqual(len(buffer.after(0.05)), 10)
        self.assertEqual(len(buffer.between(0.05, 0.075)), 4)

    def test_time_order(self):
        buffer = ImuBuffer(10)
        buffer.append(self.sample(2), StateVector(Pose.identity()))
        with self.assertRaises(NonMonotonicTimestampError):
            buffer.append(self.sample(1), StateVector(Pose.identity()))


class RefinementTests(SimpleTestCase):

    def test_own_pose_leaves_state_unchanged(self):
        script = MotionScript.from_name('trans-medium', duration=1.0)
        state, buffer = propagate(script, 40, true_state(script))
        at_t0 = list(buffer)[19].state
        pending = PendingRequest(7, at_t0.t, at_t0)
        response = Response(7, at_t0.t, at_t0.cam_from_world, 'ok')
        outcome = prm_on_response(state, pending, response, buffer, TrackerConfig())
        self.assertTrue(outcome.applied)
        self.assertEqual(outcome.state.t, state.t)
        self.assertTrue(outcome.state.cam_from_world.isclose(state.cam_from_world, atol=1e-9))
        np.testing.assert_allclose(outcome.state.velocity_world, state.velocity_world, atol=1e-9)
        self.assertEqual(list(buffer)[0].t, at_t0.t)

    def test_consistent_window_leaves_state_unchanged(self):
        pose = sample_trajectory(MotionScript.from_name('circ-easy'), 0.0).cam_from_world
        state, buffer = propagate(StaticTrajectory(pose, 1.0), 60, StateVector(pose))
        entries = list(buffer)
        previous = Correction(entries[9].t, entries[9].state.cam_from_world, entries[9].state.velocity_world)
        at_t0 = entries[39].state
        pending = PendingRequest(3, at_t0.t, at_t0)
        outcome = prm_on_response(
            state, pending, Response(3, at_t0.t, at_t0.cam_from_world, 'ok'), buffer, TrackerConfig(),
            previous=previous,
        )
        self.assertTrue(outcome.applied)
        np.testing.assert_allclose(outcome.gyro_residual, np.zeros(3), atol=1e-9)
        np.testing.assert_allclose(outcome.accel_residual, np.zeros(3), atol=1e-9)
        self.assertTrue(outcome.state.cam_from_world.isclose(state.cam_from_world, atol=1e-9))
        np.testing.assert_allclose(outcome.state.velocity_world, state.velocity_world, atol=1e-9)

    def test_discarded_responses(self):
        script = MotionScript.from_name('trans-easy', duration=1.0)
        state, buffer = propagate(script, 40, true_state(script))
        at_t0 = list(buffer)[19].state
        pending = PendingRequest(5, at_t0.t, at_t0)
        config = TrackerConfig()
        cases = {
            'mismatched id': (Response(6, at_t0.t, at_t0.cam_from_world, 'ok'), None),
            'failed': (Response(5, at_t0.t, at_t0.cam_from_world, 'failed'), None),
            'stale': (
                Response(5, at_t0.t, at_t0.cam_from_world, 'ok'),
                Correction(at_t0.t + 0.01, at_t0.cam_from_world, np.zeros(3)),
            ),
        }
        for label, (response, previous) in cases.items():
            with self.subTest(label), self.assertLogs('tracker.refinement', level='WARNING'):
                outcome = prm_on_response(state, pending, response, buffer, config, previous=previous)
                self.assertFalse(outcome.applied)
                self.assertIs(outcome.state, state)
        self.assertEqual(len(buffer), 40)

    def test_response_beyond_the_buffer_is_discarded(self):
        script = MotionScript.from_name('trans-easy', duration=2.0)
        start = true_state(script)
        state, buffer = propagate(script, 300, start)
        pending = PendingRequest(1, 0.1, start)
        with self.assertLogs('tracker.refinement', level='WARNING'):
            response = Response(1, 0.1, start.cam_from_world, 'ok')
            outcome = prm_on_response(state, pending, response, buffer, TrackerConfig())
        self.assertFalse(outcome.applied)


class TrackerTests(SimpleTestCase):

    def test_life_cycle(self):
        script = MotionScript.from_name('trans-easy', duration=1.0)
        tracker = Tracker(TrackerConfig(frame_rate=30))
        frames = list(schedule_frames(script, 30))
        decision = tracker.on_frame(frames[0])
        self.assertEqual(decision.status, TrackerStatus.TRACKING_LOST)
        self.assertEqual(decision.request.request_id, 0)
        self.assertIsNone(tracker.estimate_at(0.0))

        samples = synthesize_imu(script, ImuNoiseModel.noiseless(), rng_seed=0)
        for sample in itertools.islice(samples, 10):
            tracker.on_imu(sample)
        tracker.on_response(Response(0, 0.0, frames[0].true_cam_from_world, 'ok'))
        self.assertEqual(tracker.mode, SEEDING)
        self.assertIsNone(tracker.pending)

        decision = tracker.on_frame(frames[2])
        self.assertEqual(decision.request.request_id, 1)
        for sample in itertools.islice(samples, 10):
            tracker.on_imu(sample)
        tracker.on_response(Response(1, frames[2].t, frames[2].true_cam_from_world, 'ok'))
        self.assertEqual(tracker.mode, TRACKING)
        self.assertEqual(tracker.refinement_cycles, 2)
        self.assertIsNotNone(tracker.estimate_at(0.1))

        decision = tracker.on_frame(frames[3])
        self.assertEqual(decision.status, TrackerStatus.FINE_POSE)
        self.assertIsNotNone(decision.request)
        self.assertIsNone(tracker.on_frame(frames[4]).request)

    def test_failed_response_frees_the_slot(self):
        tracker = Tracker(TrackerConfig(), initial_state=StateVector(facing(1.2)))
        frame = next(schedule_frames(StaticTrajectory(facing(1.2), 1.0), 60))
        request = tracker.on_frame(frame).request
        with self.assertLogs('tracker.refinement', level='WARNING'):
            tracker.on_response(Response(request.request_id, 0.0, Pose.identity(), 'failed'))
        self.assertIsNone(tracker.pending)
        self.assertEqual(tracker.refinement_cycles, 0)

    def test_abandoned_request_frees_the_slot(self):
        tracker = Tracker(TrackerConfig(), initial_state=StateVector(facing(1.2)))
        frames = schedule_frames(StaticTrajectory(facing(1.2), 1.0), 60)
        request = tracker.on_frame(next(frames)).request
        self.assertIsNone(tracker.on_frame(next(frames)).request)
        self.assertFalse(tracker.abandon(request.request_id + 1))
        with self.assertLogs('tracker.frontend', level='WARNING'):
            self.assertTrue(tracker.abandon(request.request_id))
        self.assertEqual(tracker.on_frame(next(frames)).request.request_id, request.request_id + 1)

    def test_no_requests_without_backend(self):
        tracker = Tracker(TrackerConfig(requests_enabled=False), initial_state=StateVector(facing(1.2)))
        for frame in schedule_frames(StaticTrajectory(facing(1.2), 0.5), 60):
            self.assertIsNone(tracker.on_frame(frame).request)

    def test_wrong_pose_reissues_request(self):
        pose = sample_trajectory(MotionScript.from_name('trans-easy'), 0.0).cam_from_world
        still = StaticTrajectory(pose, 1.0)
        tracker = Tracker(TrackerConfig(frame_rate=30), initial_state=StateVector(pose, gyro_bias=(-2.0, 0.0, 0.0)))
        samples = synthesize_imu(still, ImuNoiseModel.noiseless(), rng_seed=0)
        frames = schedule_frames(still, 30)

        first = tracker.on_frame(next(frames))
        self.assertEqual(first.status, TrackerStatus.FINE_POSE)
        self.assertEqual(first.request.request_id, 0)
        for sample in itertools.islice(samples, 6):
            tracker.on_imu(sample)
        second = tracker.on_frame(next(frames))
        self.assertEqual(second.status, TrackerStatus.WRONG_POSE)
        self.assertEqual(second.cancelled, 0)
        self.assertEqual(second.request.request_id, 1)

    def test_tracking_lost_when_object_leaves_view(self):
        start = sample_trajectory(MotionScript.from_name('trans-easy'), 0.0).cam_from_world
        pan = PanAway(start, 1.0, 2.0)
        config = TrackerConfig(frame_rate=60, requests_enabled=False)
        tracker = Tracker(config, initial_state=StateVector(start))
        samples = iter(synthesize_imu(pan, ImuNoiseModel.noiseless(), rng_seed=0))
        truth_lost = tracker_lost = None
        pending_sample = next(samples, None)
        for frame in schedule_frames(pan, 60):
            while pending_sample is not None and pending_sample.t <= frame.t:
                tracker.on_imu(pending_sample)
                pending_sample = next(samples, None)
            truth = inspect_pose(frame.true_cam_from_world, None, config.bbox3d, K, 60, config.pia)
            if truth_lost is None and truth.status == TrackerStatus.TRACKING_LOST:
                truth_lost = frame.frame_id
            if tracker.on_frame(frame).status == TrackerStatus.TRACKING_LOST and tracker_lost is None:
                tracker_lost = frame.frame_id
        self.assertIsNotNone(truth_lost)
        self.assertIsNotNone(tracker_lost)
        self.assertLessEqual(abs(tracker_lost - truth_lost), 2)

    def test_closed_loop_recovers_gyro_bias(self):
        script = MotionScript.from_name('trans-easy', duration=2.0)
        noise = ImuNoiseModel.noiseless(gyro_bias=GYRO_BIAS, accel_bias=ACCEL_BIAS)
        tracker = Tracker(TrackerConfig(frame_rate=30))
        statuses = drive(tracker, script, noise)
        self.assertGreaterEqual(tracker.refinement_cycles, 6)
        self.assertEqual(tracker.mode, TRACKING)
        self.assertNotIn(TrackerStatus.WRONG_POSE, statuses)
        self.assertLess(np.linalg.norm(tracker.state.gyro_bias - GYRO_BIAS), 0.1 * np.linalg.norm(GYRO_BIAS))

    def test_closed_loop_tracks_ground_truth(self):
        script = MotionScript.from_name('circ-medium', duration=2.0)
        tracker = Tracker(TrackerConfig(frame_rate=60))
        drive(tracker, script, ImuNoiseModel(gyro_bias=GYRO_BIAS, accel_bias=ACCEL_BIAS), frame_rate=60)
        estimate = tracker.estimate_at(tracker.state.t)
        truth = sample_trajectory(script, tracker.state.t).cam_from_world
        self.assertLess(np.linalg.norm(estimate.center - truth.center), 0.01)

    def test_per_call_latency(self):
        script = MotionScript.from_name('circ-hard', duration=1.0)
        state, buffer = propagate(script, 120, true_state(script))
        config = TrackerConfig()
        pose = compose(state.cam_from_world, config.world_from_obj)

        started = time.perf_counter()
        for _ in range(200):
            pia_inspect(pose, pose, config.bbox3d, config.K, 120, config.pia)
        inspect_ms = (time.perf_counter() - started) / 200 * 1e3

        entries = list(buffer)
        timings = []
        for k in range(20):
            at_t0 = entries[100 + k].state
            pending = PendingRequest(k, at_t0.t, at_t0)
            started = time.perf_counter()
            prm_on_response(state, pending, Response(k, at_t0.t, at_t0.cam_from_world, 'ok'), buffer, config)
            timings.append(time.perf_counter() - started)
        self.assertLess(inspect_ms, 1.0)
        self.assertLess(np.mean(timings) * 1e3, 2.0)
