import itertools
import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, override_settings

from geom.transforms import (
    Pose,
    integrate_rotation,
    integrate_translation,
    integrate_velocity,
    log_so3,
    rotation_angle,
    world_gravity,
)

from .exceptions import InvalidRateError, MotionError, TimeOutOfRangeError
from .frames import schedule_frames
from .imu import ImuNoiseModel, synthesize_imu
from .scripts import PROFILES, SCRIPT_NAMES, MotionScript
from .trajectories import StaticTrajectory, sample_trajectory, trajectory_for

G = np.array(world_gravity())
ALL_SCRIPTS = [MotionScript.from_name(name) for name in SCRIPT_NAMES]


def dead_reckon(script, seconds, noise):
    """Integrate a synthesized stream from the true initial state; return the worst errors (m, rad)."""
    start = sample_trajectory(script, 0.0)
    R = start.world_from_cam_rotation
    V = start.velocity_world
    c = start.position
    t_prev = 0.0
    worst_pos = worst_rot = 0.0
    stream = synthesize_imu(script, noise, rng_seed=1)
    for sample in itertools.islice(stream, int(round(seconds * noise.sample_rate))):
        dt = sample.t - t_prev
        R = integrate_rotation(R, sample.omega, dt)
        V = integrate_velocity(V, R, sample.accel, G, dt)
        c = integrate_translation(c, V, dt)
        t_prev = sample.t
        truth = sample_trajectory(script, sample.t)
        worst_pos = max(worst_pos, float(np.linalg.norm(c - truth.position)))
        worst_rot = max(worst_rot, rotation_angle(R.T @ truth.world_from_cam_rotation))
    return worst_pos, worst_rot


class MotionScriptTests(SimpleTestCase):

    def test_names_round_trip(self):
        for name in SCRIPT_NAMES:
            self.assertEqual(MotionScript.from_name(name).name, name)

    def test_unknown_name(self):
        with self.assertRaises(MotionError):
            MotionScript.from_name('spiral-easy')
        with self.assertRaises(MotionError):
            MotionScript.from_name('trans-extreme')

    def test_duration_must_be_positive(self):
        with self.assertRaises(MotionError):
            MotionScript('translational', 'easy', duration=0)


class TrajectoryTests(SimpleTestCase):

    def mean_over_run(self, script, quantity):
        times = np.arange(0.0, script.duration, 0.01)
        return float(np.mean([quantity(sample_trajectory(script, t)) for t in times]))

    def test_mean_speed_matches_profile(self):
        for script in ALL_SCRIPTS:
            with self.subTest(script=script.name):
                mean = self.mean_over_run(script, lambda s: np.linalg.norm(s.velocity_world))
                self.assertAlmostEqual(mean, script.profile.avg_speed, delta=0.1 * script.profile.avg_speed)

    def test_mean_angular_rate_matches_profile(self):
        for script in ALL_SCRIPTS:
            with self.subTest(script=script.name):
                mean = self.mean_over_run(script, lambda s: np.linalg.norm(s.omega_body))
                self.assertAlmostEqual(mean, script.profile.avg_rate, delta=0.1 * script.profile.avg_rate)

    def test_translational_easy_mean_speed(self):
        script = MotionScript.from_name('trans-easy')
        mean = self.mean_over_run(script, lambda s: np.linalg.norm(s.velocity_world))
        self.assertAlmostEqual(mean, 0.062, delta=0.0062)

    def test_circular_hard_mean_rate(self):
        script = MotionScript.from_name('circ-hard')
        mean = self.mean_over_run(script, lambda s: np.linalg.norm(s.omega_body))
        self.assertAlmostEqual(mean, 0.402, delta=0.0402)

    def test_acceleration_stays_inside_band(self):
        for script in ALL_SCRIPTS:
            lo, hi = script.profile.accel_range
            with self.subTest(script=script.name):
                for t in np.arange(0.0, script.duration, 0.01):
                    accel = np.linalg.norm(sample_trajectory(script, t).accel_world)
                    self.assertGreaterEqual(accel, lo)
                    self.assertLess(accel, hi)

    def test_initial_distance(self):
        for script in ALL_SCRIPTS:
            with self.subTest(script=script.name):
                start = sample_trajectory(script, 0.0)
                self.assertAlmostEqual(float(np.linalg.norm(start.position)), 1.2, delta=0.05)
                # the object sits on the optical axis at the start
                np.testing.assert_allclose(start.cam_from_world.apply(np.zeros(3))[:2], [0.0, 0.0], atol=1e-9)

    def test_kinematic_consistency(self):
        h = 1e-4
        for script in ALL_SCRIPTS:
            with self.subTest(script=script.name):
                for t in (0.5, 7.3, 18.0, 29.0):
                    before, here, after = (sample_trajectory(script, t + d) for d in (-h, 0.0, h))
                    velocity = (after.position - before.position) / (2 * h)
                    omega = log_so3(before.world_from_cam_rotation.T @ after.world_from_cam_rotation) / (2 * h)
                    np.testing.assert_allclose(velocity, here.velocity_world, atol=1e-3)
                    np.testing.assert_allclose(omega, here.omega_body, atol=1e-3)
                    accel = (after.velocity_world - before.velocity_world) / (2 * h)
                    np.testing.assert_allclose(accel, here.accel_world, atol=1e-3)

    def test_time_outside_span(self):
        script = MotionScript.from_name('trans-easy', duration=5.0)
        with self.assertRaises(TimeOutOfRangeError):
            sample_trajectory(script, -0.1)
        with self.assertRaises(TimeOutOfRangeError):
            sample_trajectory(script, 5.1)

    def test_seed_changes_perturbation_only(self):
        a = trajectory_for(MotionScript.from_name('trans-medium', perturbation_seed=1)).sample(3.0)
        b = trajectory_for(MotionScript.from_name('trans-medium', perturbation_seed=2)).sample(3.0)
        gap = np.linalg.norm(a.position - b.position)
        self.assertGreater(gap, 0.0)
        self.assertLess(gap, 0.01)

    def test_profiles_cover_both_kinds(self):
        self.assertEqual(len(PROFILES), 6)


class ImuSynthesisTests(SimpleTestCase):

    def test_static_stream_reads_gravity_reaction(self):
        pose = sample_trajectory(MotionScript.from_name('circ-easy'), 0.0).cam_from_world
        stream = synthesize_imu(StaticTrajectory(pose, 1.0), ImuNoiseModel.noiseless(), rng_seed=0)
        expected = pose.rotation @ G
        for sample in stream:
            np.testing.assert_allclose(sample.omega, np.zeros(3), atol=1e-15)
            np.testing.assert_allclose(sample.accel, expected, atol=1e-12)

    def test_noise_free_stream_integrates_back_to_truth(self):
        for script in ALL_SCRIPTS:
            with self.subTest(script=script.name):
                position_error, rotation_error = dead_reckon(script, 1.0, ImuNoiseModel.noiseless())
                self.assertLess(position_error, 1e-3)
                self.assertLess(math.degrees(rotation_error), 0.01)

    def test_per_sample_noise_level(self):
        noise = ImuNoiseModel()
        self.assertAlmostEqual(noise.gyro_sigma, 9.376e-4, delta=1e-6)
        stream = synthesize_imu(StaticTrajectory(Pose.identity(), 500.0), noise, rng_seed=4)
        omegas = np.array([s.omega for s in stream])
        self.assertEqual(len(omegas), 100_000)
        for axis in range(3):
            self.assertAlmostEqual(omegas[:, axis].std(), noise.gyro_sigma, delta=0.05 * noise.gyro_sigma)

    def test_stream_is_deterministic(self):
        script = MotionScript.from_name('circ-medium', duration=1.0)
        first = list(synthesize_imu(script, ImuNoiseModel(), rng_seed=9))
        second = list(synthesize_imu(script, ImuNoiseModel(), rng_seed=9))
        self.assertEqual(len(first), 200)
        self.assertTrue(all(a.same_as(b) for a, b in zip(first, second)))

    def test_sample_spacing(self):
        script = MotionScript.from_name('trans-hard', duration=2.0)
        times = np.array([s.t for s in synthesize_imu(script, ImuNoiseModel(), rng_seed=0)])
        self.assertEqual(times[0], 0.005)
        np.testing.assert_allclose(np.diff(times), 0.005, atol=1e-9)

    def test_bias_is_added(self):
        noise = ImuNoiseModel.noiseless(gyro_bias=(0.01, 0.0, 0.0), accel_bias=(0.0, 0.2, 0.0))
        sample = next(synthesize_imu(StaticTrajectory(Pose.identity(), 1.0), noise, rng_seed=0))
        np.testing.assert_allclose(sample.omega, [0.01, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(sample.accel, [0.0, 0.2, 9.80665], atol=1e-12)

    def test_gravity_comes_from_settings(self):
        with override_settings(VIOTRACK={**settings.VIOTRACK, 'GRAVITY': [0.0, 0.0, 9.81]}):
            sample = next(synthesize_imu(StaticTrajectory(Pose.identity(), 1.0), ImuNoiseModel.noiseless(), rng_seed=0))
        np.testing.assert_allclose(sample.accel, [0.0, 0.0, 9.81], atol=1e-12)

    def test_invalid_noise_model(self):
        with self.assertRaises(InvalidRateError):
            ImuNoiseModel(sample_rate=0)
        with self.assertRaises(MotionError):
            ImuNoiseModel(gyro_density=-1.0)


class FrameScheduleTests(SimpleTestCase):

    def test_frame_counts(self):
        script = MotionScript.from_name('trans-easy')
        self.assertEqual(sum(1 for _ in schedule_frames(script, 30)), 900)
        self.assertEqual(sum(1 for _ in schedule_frames(script, 120)), 3600)

    def test_frames_carry_ground_truth(self):
        script = MotionScript.from_name('circ-hard', duration=2.0)
        frames = list(schedule_frames(script, 60))
        self.assertEqual([f.frame_id for f in frames], list(range(120)))
        np.testing.assert_allclose(np.diff([f.t for f in frames]), 1 / 60, atol=1e-9)
        for frame in frames[::17]:
            self.assertTrue(frame.true_cam_from_world.same_as(sample_trajectory(script, frame.t).cam_from_world))

    def test_rejects_non_positive_rate(self):
        with self.assertRaises(InvalidRateError):
            list(schedule_frames(MotionScript.from_name('trans-easy'), 0))
