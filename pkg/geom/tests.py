import math

import numpy as np
from django.test import SimpleTestCase
from scipy.spatial.transform import Rotation

from .camera import (
    CameraIntrinsics,
    clip_polygon,
    cuboid_corners,
    polygon_hull_area,
    project,
    project_points,
    visible_hull_area,
)
from .exceptions import GeometryError, NotProjectableError
from .transforms import (
    Pose,
    compose,
    euler_xyz,
    exp_so3,
    from_euler_xyz,
    integrate_rotation,
    integrate_translation,
    integrate_velocity,
    inverse,
    is_rotation,
    log_so3,
    rot_z,
    rotation_angle,
)

G = np.array([0.0, 0.0, 9.80665])
K = CameraIntrinsics(600, 600, 320, 240, 640, 480)


def random_pose(rng):
    return Pose(Rotation.random(random_state=rng.integers(1 << 31)).as_matrix(), rng.normal(size=3))


class IntegrateRotationTests(SimpleTestCase):

    def test_zero_rate_is_identity(self):
        np.testing.assert_allclose(integrate_rotation(np.eye(3), np.zeros(3), 0.005), np.eye(3), atol=1e-15)

    def test_quarter_turn_about_z(self):
        R = integrate_rotation(np.eye(3), [0.0, 0.0, math.pi], 0.5)
        np.testing.assert_allclose(R, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)

    def test_small_step_matches_exponential_map(self):
        omega = np.array([0.3, -0.2, 0.1])
        expected = Rotation.from_rotvec(omega * 0.005).as_matrix()
        np.testing.assert_allclose(integrate_rotation(np.eye(3), omega, 0.005), expected, atol=1e-12)

    def test_random_steps_match_quaternion_oracle(self):
        rng = np.random.default_rng(7)
        count = 100_000
        start = Rotation.random(count, random_state=11)
        axes = rng.normal(size=(count, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        steps = axes * rng.uniform(0.0, math.pi / 2, size=(count, 1))
        dts = rng.uniform(0.001, 0.5, size=count)
        expected = (start * Rotation.from_rotvec(steps)).as_matrix()
        starts = start.as_matrix()
        worst = 0.0
        for i in range(count):
            got = integrate_rotation(starts[i], steps[i] / dts[i], dts[i])
            worst = max(worst, float(np.abs(got - expected[i]).max()))
        self.assertLessEqual(worst, 1e-9)

    def test_output_is_a_rotation_for_large_steps(self):
        rng = np.random.default_rng(3)
        R = np.eye(3)
        for _ in range(10_000):
            omega = rng.normal(size=3)
            omega *= rng.uniform(0, math.pi) / np.linalg.norm(omega)
            R = integrate_rotation(R, omega, 1.0)
            self.assertTrue(is_rotation(R))

    def test_rotation_angle_of_single_step(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            omega = rng.normal(size=3)
            dt = rng.uniform(0.001, 1.0)
            if np.linalg.norm(omega) * dt > math.pi:
                continue
            R = integrate_rotation(np.eye(3), omega, dt)
            self.assertAlmostEqual(rotation_angle(R), np.linalg.norm(omega) * dt, delta=1e-9)

    def test_tiny_angle_uses_series(self):
        omega = np.array([1e-9, -2e-9, 3e-9])
        expected = Rotation.from_rotvec(omega).as_matrix()
        np.testing.assert_allclose(integrate_rotation(np.eye(3), omega, 1.0), expected, atol=1e-15)

    def test_rejects_non_positive_dt(self):
        with self.assertRaises(GeometryError):
            integrate_rotation(np.eye(3), np.zeros(3), 0.0)


class IntegrateVelocityTranslationTests(SimpleTestCase):

    def test_stationary_device_measures_gravity_reaction(self):
        np.testing.assert_allclose(integrate_velocity(np.zeros(3), np.eye(3), G, G, 0.005), np.zeros(3))

    def test_constant_velocity(self):
        np.testing.assert_allclose(integrate_velocity([1, 0, 0], np.eye(3), G, G, 0.005), [1, 0, 0])

    def test_direct_substitution(self):
        got = integrate_velocity(np.zeros(3), np.eye(3), [1.0, 0.0, 9.80665], G, 0.5)
        np.testing.assert_allclose(got, [0.5, 0.0, 0.0], atol=1e-15)

    def test_translation_examples(self):
        np.testing.assert_allclose(integrate_translation(np.zeros(3), np.zeros(3), 0.3), np.zeros(3))
        np.testing.assert_allclose(integrate_translation([1, 2, 3], [0.2, 0, 0], 0.5), [1.1, 2, 3])

    def test_chained_translation_over_one_second(self):
        T = np.zeros(3)
        for _ in range(200):
            T = integrate_translation(T, [0.062, 0.0, 0.0], 0.005)
        np.testing.assert_allclose(T, [0.062, 0.0, 0.0], atol=1e-12)


class PoseTests(SimpleTestCase):

    def test_compose_with_identity(self):
        pose = random_pose(np.random.default_rng(1))
        self.assertTrue(compose(Pose.identity(), pose).isclose(pose, atol=0.0))

    def test_compose_with_inverse_is_identity(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            pose = random_pose(rng)
            self.assertTrue(compose(pose, inverse(pose)).isclose(Pose.identity(), atol=1e-12))
            self.assertTrue(compose(inverse(pose), pose).isclose(Pose.identity(), atol=1e-12))

    def test_compose_matches_homogeneous_product(self):
        rng = np.random.default_rng(3)
        a, b = random_pose(rng), random_pose(rng)
        np.testing.assert_allclose(compose(a, b).as_matrix(), a.as_matrix() @ b.as_matrix(), atol=1e-12)

    def test_associativity(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            a, b, c = random_pose(rng), random_pose(rng), random_pose(rng)
            self.assertTrue(compose(compose(a, b), c).isclose(compose(a, compose(b, c)), atol=1e-12))

    def test_inverse_examples(self):
        self.assertTrue(inverse(Pose.identity()).isclose(Pose.identity(), atol=0.0))
        inv = inverse(Pose(np.eye(3), [1, 2, 3]))
        np.testing.assert_allclose(inv.translation, [-1, -2, -3])
        np.testing.assert_allclose(inv.rotation, np.eye(3))

    def test_camera_center_round_trip(self):
        R_wc = Rotation.from_rotvec([0.1, -0.3, 0.2]).as_matrix()
        center = np.array([0.3, -1.2, 0.4])
        pose = Pose.from_camera(R_wc, center)
        np.testing.assert_allclose(pose.center, center, atol=1e-15)
        np.testing.assert_allclose(pose.apply(center), np.zeros(3), atol=1e-15)

    def test_row_round_trip_is_exact(self):
        pose = random_pose(np.random.default_rng(9))
        self.assertTrue(Pose.from_row(pose.to_row()).same_as(pose))

    def test_arrays_are_read_only(self):
        pose = Pose.identity()
        with self.assertRaises(ValueError):
            pose.translation[0] = 1.0

    def test_rejects_bad_shapes(self):
        with self.assertRaises(GeometryError):
            Pose(np.eye(3), [1.0, 2.0])
        with self.assertRaises(GeometryError):
            Pose(np.eye(2), [0.0, 0.0, 0.0])


class EulerTests(SimpleTestCase):

    def test_identity(self):
        np.testing.assert_allclose(euler_xyz(np.eye(3)), np.zeros(3))

    def test_pure_z_rotation(self):
        np.testing.assert_allclose(euler_xyz(rot_z(0.05)), [0.0, 0.0, 0.05], atol=1e-15)

    def test_round_trip_of_small_rotations(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            angles = rng.uniform(-0.1, 0.1, size=3)
            R = from_euler_xyz(angles)
            np.testing.assert_allclose(from_euler_xyz(euler_xyz(R)), R, atol=1e-9)
            np.testing.assert_allclose(euler_xyz(R), angles, atol=1e-9)

    def test_round_trip_away_from_gimbal_lock(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            angles = np.array([
                rng.uniform(-math.pi, math.pi),
                rng.uniform(-math.pi / 2 + 0.01, math.pi / 2 - 0.01),
                rng.uniform(-math.pi, math.pi),
            ])
            np.testing.assert_allclose(euler_xyz(from_euler_xyz(angles)), angles, atol=1e-9)

    def test_matches_intrinsic_xyz_convention(self):
        R = Rotation.from_rotvec([0.02, -0.05, 0.03]).as_matrix()
        np.testing.assert_allclose(euler_xyz(R), Rotation.from_matrix(R).as_euler('XYZ'), atol=1e-12)

    def test_gimbal_lock_sets_x_to_zero(self):
        R = from_euler_xyz([0.4, math.pi / 2, 0.3])
        angles = euler_xyz(R)
        self.assertEqual(angles[0], 0.0)
        np.testing.assert_allclose(from_euler_xyz(angles), R, atol=1e-9)


class RotationAngleTests(SimpleTestCase):

    def test_identity(self):
        self.assertEqual(rotation_angle(np.eye(3)), 0.0)

    def test_quarter_turns(self):
        for axis in np.eye(3):
            self.assertAlmostEqual(rotation_angle(exp_so3(axis * math.pi / 2)), math.pi / 2, places=12)

    def test_random_axis_angle(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            theta = rng.uniform(0, math.pi)
            R = Rotation.from_rotvec(axis * theta).as_matrix()
            self.assertAlmostEqual(rotation_angle(R), theta, delta=1e-9)

    def test_log_inverts_exp(self):
        rng = np.random.default_rng(12)
        for _ in range(500):
            phi = rng.normal(size=3)
            phi *= rng.uniform(0, 3.1) / np.linalg.norm(phi)
            np.testing.assert_allclose(log_so3(exp_so3(phi)), phi, atol=1e-9)


class ProjectionTests(SimpleTestCase):

    def test_optical_axis_hits_principal_point(self):
        self.assertEqual(project(K, Pose.identity(), [0.0, 0.0, 1.2]), (320.0, 240.0))

    def test_lateral_offset(self):
        u, v = project(K, Pose.identity(), [0.12, 0.0, 1.2])
        self.assertAlmostEqual(u, 380.0, places=9)
        self.assertAlmostEqual(v, 240.0, places=9)

    def test_point_behind_camera(self):
        with self.assertRaises(NotProjectableError):
            project(K, Pose.identity(), [0.0, 0.0, -1.0])
        with self.assertRaises(NotProjectableError):
            project_points(K, Pose.identity(), [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])

    def test_depth_scale_invariance(self):
        p = np.array([0.1, -0.05, 1.3])
        for scale in (0.5, 2.0, 10.0):
            np.testing.assert_allclose(project(K, Pose.identity(), scale * p), project(K, Pose.identity(), p))

    def test_vectorised_projection_agrees(self):
        pose = Pose(rot_z(0.2), [0.01, 0.02, 1.2])
        corners = cuboid_corners((0.1, 0.1, 0.1))
        expected = [project(K, pose, c) for c in corners]
        np.testing.assert_allclose(project_points(K, pose, corners), expected, atol=1e-12)

    def test_intrinsics_validation(self):
        with self.assertRaises(GeometryError):
            CameraIntrinsics(0, 600, 320, 240, 640, 480)
        with self.assertRaises(GeometryError):
            CameraIntrinsics(600, 600, 320, 240, 640, 0)


def brute_force_hull_area(points):
    pts = np.unique(np.asarray(points), axis=0)
    n = len(pts)
    on_hull = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = pts[j] - pts[i]
            cross = d[0] * (pts[:, 1] - pts[i, 1]) - d[1] * (pts[:, 0] - pts[i, 0])
            if np.all(cross >= -1e-12):
                on_hull.update((i, j))
    hull = pts[sorted(on_hull)]
    centre = hull.mean(axis=0)
    hull = hull[np.argsort(np.arctan2(hull[:, 1] - centre[1], hull[:, 0] - centre[0]))]
    x, y = hull.T
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


class HullAreaTests(SimpleTestCase):

    def test_unit_square(self):
        self.assertAlmostEqual(polygon_hull_area([(0, 0), (1, 0), (1, 1), (0, 1)]), 1.0)

    def test_duplicated_corners(self):
        square = [(0, 0), (10, 0), (10, 10), (0, 10)]
        self.assertAlmostEqual(polygon_hull_area(square * 2), 100.0)

    def test_degenerate_inputs(self):
        self.assertEqual(polygon_hull_area([(1, 1), (1, 1), (2, 2)]), 0.0)
        self.assertEqual(polygon_hull_area([(0, 0), (1, 1), (2, 2), (3, 3)]), 0.0)

    def test_random_clouds_match_brute_force(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            points = rng.uniform(0, 100, size=(rng.integers(3, 15), 2))
            self.assertAlmostEqual(polygon_hull_area(points), brute_force_hull_area(points), delta=1e-6)

    def test_clip_keeps_inside_polygon(self):
        square = [(10, 10), (20, 10), (20, 20), (10, 20)]
        self.assertAlmostEqual(visible_hull_area(square, K), 100.0)

    def test_clip_cuts_polygon_at_image_border(self):
        square = np.array([(-10, 10), (10, 10), (10, 30), (-10, 30)], dtype=float)
        clipped = clip_polygon(square, 640, 480)
        self.assertTrue(np.all(clipped[:, 0] >= 0))
        self.assertAlmostEqual(visible_hull_area(square, K), 200.0)

    def test_polygon_fully_outside_has_no_visible_area(self):
        square = [(700, 10), (720, 10), (720, 30), (700, 30)]
        self.assertEqual(visible_hull_area(square, K), 0.0)
