import threading

import numpy as np
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from geom.camera import CameraIntrinsics, cuboid_corners, project_points
from geom.transforms import Pose, exp_so3, rotation_angle
from netlink.exceptions import MalformedMessageError
from netlink.sockets import LockstepClient, memory_pair, socket_transport
from netlink.wire import WireMessage

from .exceptions import InvalidPayloadError
from .messages import POSE_HINT, PoseRequest, PoseResponse, ResponseStatus, frame_payload, read_pose_hint
from .oracle import GT, NOISY, BackendConfig, estimate
from .server import BackendServer, PoseServer, serve

K = CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)
BBOX = cuboid_corners((0.1, 0.1, 0.1))


def facing_pose(depth=1.2, tilt=(0.0, 0.0, 0.0)):
    return Pose(exp_so3(tilt), (0.0, 0.0, depth))


def mean_pixel_error(est, truth):
    return float(np.mean(np.linalg.norm(project_points(K, est, BBOX) - project_points(K, truth, BBOX), axis=1)))


def exchange(client, request):
    return PoseResponse.from_wire(WireMessage.decode(client(request.to_wire().encode())))


class PayloadTests(SimpleTestCase):

    def test_payload_size_and_hint(self):
        pose = facing_pose(tilt=(0.1, -0.2, 0.3))
        payload = frame_payload(pose, 102400)
        self.assertEqual(len(payload), 102400)
        self.assertTrue(read_pose_hint(payload).same_as(pose))
        self.assertEqual(payload[POSE_HINT.size:], bytes(102400 - POSE_HINT.size))

    def test_payload_too_small(self):
        with self.assertRaises(InvalidPayloadError):
            frame_payload(Pose.identity(), 50)

    def test_unusable_hints(self):
        bad = [
            b'short',
            POSE_HINT.pack(*([float('nan')] * 12)),
            POSE_HINT.pack(*([2.0] * 12)),
        ]
        for payload in bad:
            with self.subTest(payload=payload[:8]), self.assertRaises(InvalidPayloadError):
                read_pose_hint(payload)

    def test_request_from_wire_without_hint(self):
        request = PoseRequest.from_wire(WireMessage.request(4, 0, b'garbage'))
        self.assertIsNone(request.true_pose_hint)


class EstimateTests(SimpleTestCase):

    def test_gt_is_exact(self):
        pose = facing_pose(tilt=(0.3, 0.1, -0.2))
        response = estimate(PoseRequest.synthesize(1, 0.25, pose), BackendConfig(mode=GT))
        self.assertTrue(response.pose.same_as(pose))
        self.assertEqual(response.request_id, 1)
        self.assertEqual(response.t0, 0.25)
        self.assertEqual(response.status, ResponseStatus.OK)

    def test_zero_noise_matches_gt(self):
        pose = facing_pose(tilt=(0.3, 0.1, -0.2))
        request = PoseRequest.synthesize(9, 1.0, pose)
        quiet = BackendConfig(mode=NOISY, trans_noise_sigma=0.0, rot_noise_sigma=0.0)
        self.assertTrue(estimate(request, quiet).pose.same_as(estimate(request, BackendConfig()).pose))

    def test_noise_is_deterministic_per_request(self):
        cfg = BackendConfig(mode=NOISY, rng_seed=3)
        request = PoseRequest.synthesize(5, 0.5, facing_pose())
        self.assertTrue(estimate(request, cfg).pose.same_as(estimate(request, cfg).pose))
        self.assertFalse(estimate(request, cfg).pose.same_as(estimate(request, cfg, connection=1).pose))

    def test_translation_noise_statistics(self):
        cfg = BackendConfig(mode=NOISY, rng_seed=11)
        truth = facing_pose()
        shifts = np.array([
            estimate(PoseRequest.synthesize(k, 0.0, truth, size=POSE_HINT.size), cfg).pose.translation
            - truth.translation
            for k in range(10_000)
        ])
        for axis in range(3):
            with self.subTest(axis=axis):
                self.assertAlmostEqual(np.std(shifts[:, axis]) / cfg.trans_noise_sigma, 1.0, delta=0.05)
                self.assertLess(abs(np.mean(shifts[:, axis])), 3e-4)

    def test_rotation_noise_magnitude(self):
        cfg = BackendConfig(mode=NOISY, rng_seed=12)
        truth = facing_pose()
        angles = [
            rotation_angle(estimate(PoseRequest.synthesize(k, 0.0, truth, size=POSE_HINT.size), cfg).pose.rotation
                           @ truth.rotation.T)
            for k in range(5000)
        ]
        # mean of |N(0, s^2)| is s * sqrt(2 / pi)
        self.assertAlmostEqual(np.mean(angles), cfg.rot_noise_sigma * np.sqrt(2 / np.pi), delta=2e-4)

    def test_default_noise_costs_about_two_pixels(self):
        cfg = BackendConfig(mode=NOISY, rng_seed=7)
        truth = facing_pose()
        errors = [
            mean_pixel_error(estimate(PoseRequest.synthesize(k, 0.0, truth, size=POSE_HINT.size), cfg).pose, truth)
            for k in range(4000)
        ]
        self.assertGreater(np.mean(errors), 1.5)
        self.assertLess(np.mean(errors), 2.5)

    def test_missing_hint_fails(self):
        request = PoseRequest(3, 0.1, b'\x00' * 8)
        with self.assertLogs('backend.oracle', level='WARNING'):
            response = estimate(request, BackendConfig())
        self.assertEqual(response.status, ResponseStatus.FAILED)
        self.assertFalse(response.ok)
        self.assertEqual(response.request_id, 3)

    def test_config_validation(self):
        for kwargs in ({'mode': 'vision'}, {'trans_noise_sigma': -1.0}, {'rot_noise_sigma': -0.1},
                       {'compute_delay': -1.0}):
            with self.subTest(**kwargs), self.assertRaises(ValidationError):
                BackendConfig(**kwargs)


class ServeTests(SimpleTestCase):

    def start(self, config=None):
        client, server_side = memory_pair()
        result = {}

        def run():
            result['handled'] = serve(server_side, config or BackendConfig(), realtime=False)

        worker = threading.Thread(target=run)
        worker.start()
        return LockstepClient(client), worker, result

    def test_hundred_requests(self):
        client, worker, result = self.start()
        ids = []
        for k in range(100):
            pose = facing_pose(tilt=(0.001 * k, 0.0, 0.0))
            response = exchange(client, PoseRequest.synthesize(k, k / 60, pose, size=1024))
            self.assertTrue(response.pose.same_as(pose))
            ids.append(response.request_id)
        client.close()
        worker.join(timeout=5)
        self.assertEqual(ids, list(range(100)))
        self.assertEqual(result['handled'], 100)

    def test_duplicate_id_is_rejected(self):
        client, worker, _ = self.start()
        request = PoseRequest.synthesize(42, 0.5, facing_pose(), size=256)
        self.assertTrue(exchange(client, request).ok)
        with self.assertLogs('backend.server', level='WARNING'):
            second = exchange(client, request)
        client.close()
        worker.join(timeout=5)
        self.assertEqual(second.status, ResponseStatus.FAILED)
        self.assertEqual(second.request_id, 42)

    def test_malformed_payload_fails_without_closing(self):
        client, worker, result = self.start()
        with self.assertLogs('backend.oracle', level='WARNING'):
            failed = exchange(client, PoseRequest(1, 0.0, b'not a frame'))
        ok = exchange(client, PoseRequest.synthesize(2, 0.1, facing_pose(), size=128))
        client.close()
        worker.join(timeout=5)
        self.assertFalse(failed.ok)
        self.assertTrue(ok.ok)
        self.assertEqual(result['handled'], 2)

    def test_handler_rejects_responses(self):
        data = WireMessage.response(1, 0, 0, Pose.identity().to_row()).encode()
        with self.assertRaises(MalformedMessageError):
            BackendServer(BackendConfig()).handle(data)

    def test_tcp_server(self):
        server = PoseServer(('127.0.0.1', 0), BackendConfig(mode=NOISY, rng_seed=2))
        thread = threading.Thread(target=server.serve_forever)
        thread.start()
        try:
            host, port = server.server_address[:2]
            request = PoseRequest.synthesize(0, 0.0, facing_pose(), size=2048)
            client = LockstepClient(socket_transport(f'{host}:{port}'))
            response = exchange(client, request)
            client.close()
        finally:
            server.shutdown()
            server.server_close()
            thread.join(timeout=5)
        # first connection shares the in-process random stream
        self.assertTrue(response.pose.same_as(estimate(request, BackendConfig(mode=NOISY, rng_seed=2)).pose))


class ServeCommandTests(SimpleTestCase):

    def test_rejects_bad_address(self):
        with self.assertRaises(CommandError):
            call_command('serve', addr='localhost:notaport')

    def test_rejects_negative_delay(self):
        with self.assertRaises(CommandError):
            call_command('serve', compute_delay=-1.0)
