"""
Experiment runner.

One experiment is a single-threaded loop over virtual time. IMU samples and
camera frames come from the motion script; requests travel to the backend
over the simulated channel (or, with the TCP transport, are answered by a
remote server while delivery times still come from the latency model);
responses come back the same way. The tracker is scored at every frame.
"""

import bisect
import logging
import time
from contextlib import ExitStack, closing

import numpy as np

from backend.messages import PoseRequest, PoseResponse
from backend.server import BackendServer
from geom.exceptions import NotProjectableError
from geom.transforms import Pose, compose, exp_so3, log_so3
from motion.frames import schedule_frames
from motion.imu import synthesize_imu
from motion.trajectories import StaticTrajectory, sample_trajectory
from netlink.channel import simulated_channel
from netlink.sockets import LockstepClient, socket_transport
from netlink.wire import WireMessage
from tracker.frontend import Tracker
from tracker.propagation import init_static
from tracker.state import StateVector

from .clock import BACKEND, FRAME, IMU, NETWORK, EventQueue
from .config import TCP
from .metrics import (
    PIM,
    PPM,
    PRM,
    STAGES,
    CycleRecord,
    FrameMetric,
    MetricsReport,
    StageTimer,
    pose_error,
    projection_error,
)

logger = logging.getLogger(__name__)

# Second random stream of a run, used for the static initialization phase.
STATIC_STREAM = 1
# Virtual seconds after which a request lost on the link is given up.
REQUEST_TIMEOUT = 1.0


class FrameTruth:
    """Ground-truth camera poses at the frame instants, interpolated in between."""

    def __init__(self, frames):
        self.times = [frame.t for frame in frames]
        self.poses = [frame.true_cam_from_world for frame in frames]

    def at(self, t):
        """Camera-from-world pose at ``t``, or ``None`` outside the recorded frames."""
        if not self.times or t < self.times[0] or t > self.times[-1]:
            return None
        k = bisect.bisect_right(self.times, t) - 1
        if self.times[k] == t:
            return self.poses[k]
        s = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        a, b = self.poses[k], self.poses[k + 1]
        R_cw = exp_so3(s * log_so3(b.rotation @ a.rotation.T)) @ a.rotation
        return Pose.from_camera(R_cw.T, a.center + s * (b.center - a.center))


class TrackingSession:
    """A tracker fed in timestamp order, timed per stage and scored against ground truth."""

    def __init__(self, tracker, truth, recorder=None):
        self.tracker = tracker
        self.truth = truth
        self.recorder = recorder
        config = tracker.config
        self.world_from_obj = config.world_from_obj
        self.bbox3d = config.bbox3d
        self.K = config.K
        self.frames = []
        self.cycles = []
        self.responses = 0
        self.issued = {}
        self.timers = {stage: StageTimer() for stage in STAGES}

    def _timed(self, stage, call, *args):
        start = time.perf_counter_ns()
        result = call(*args)
        self.timers[stage].add(time.perf_counter_ns() - start)
        return result

    def _object_poses(self, est_cam_from_world, true_cam_from_world):
        return compose(est_cam_from_world, self.world_from_obj), compose(true_cam_from_world, self.world_from_obj)

    def _projection_error_at(self, t):
        truth = self.truth.at(t)
        est = self.tracker.estimate_at(t)
        if truth is None or est is None:
            return None
        try:
            return projection_error(*self._object_poses(est, truth), self.bbox3d, self.K)
        except NotProjectableError:
            return None

    def on_imu(self, sample):
        if self.recorder is not None:
            self.recorder.imu(sample)
        self._timed(PPM, self.tracker.on_imu, sample)

    def on_frame(self, frame):
        if self.recorder is not None:
            self.recorder.frame(frame)
        decision = self._timed(PIM, self.tracker.on_frame, frame)
        if decision.request is not None:
            self.issued[decision.request.request_id] = decision.request.t0

        est = self.tracker.estimate_at(frame.t)
        if est is None:
            metric = FrameMetric(frame.t, frame.frame_id, decision.status, valid=False)
        else:
            est_obj, true_obj = self._object_poses(est, frame.true_cam_from_world)
            pos_mm, orient_deg = pose_error(est_obj, true_obj)
            try:
                proj_px = projection_error(est_obj, true_obj, self.bbox3d, self.K)
            except NotProjectableError:
                logger.info('Frame %d at t=%.4f is not projectable', frame.frame_id, frame.t)
                metric = FrameMetric(
                    frame.t, frame.frame_id, decision.status, valid=True, projectable=False,
                    pos_mm=pos_mm, orient_deg=orient_deg,
                )
            else:
                metric = FrameMetric(
                    frame.t, frame.frame_id, decision.status, valid=True,
                    pos_mm=pos_mm, orient_deg=orient_deg, proj_px=proj_px,
                )
        self.frames.append(metric)
        return decision

    def on_response(self, t, response):
        if self.recorder is not None:
            self.recorder.response(t, response)
        self.responses += 1
        before = self._projection_error_at(t)
        outcome = self._timed(PRM, self.tracker.on_response, response)
        if outcome.applied:
            after = self._projection_error_at(t)
            if before is not None and after is not None:
                t0 = self.issued.get(response.request_id, response.t0)
                self.cycles.append(CycleRecord(response.request_id, t0, t, before, after))
        return outcome

    def report(self, cfg):
        return MetricsReport(
            script=cfg.script.name,
            frame_rate=cfg.frame_rate,
            backend=cfg.backend.mode,
            seed=cfg.seed,
            duration=cfg.duration,
            frames=self.frames,
            cycles=self.cycles,
            refinement_cycles=self.tracker.refinement_cycles,
            responses=self.responses,
            timings={stage: timer.stats() for stage, timer in self.timers.items()},
        )


def static_biases(cfg):
    """Bias estimates from ``cfg.static_init`` seconds of a still camera at the script's start pose."""
    start = sample_trajectory(cfg.script, 0.0).cam_from_world
    samples = synthesize_imu(
        StaticTrajectory(start, cfg.static_init), cfg.noise, rng_seed=[cfg.seed, STATIC_STREAM], gravity=cfg.gravity,
    )
    return init_static(samples, cfg.gravity, start.rotation.T)


def build_tracker(cfg):
    tracker_config = cfg.tracker_config()
    if cfg.disable_backend:
        start = sample_trajectory(cfg.script, 0.0)
        state = StateVector(start.cam_from_world, start.velocity_world, np.zeros(3), np.zeros(3), 0.0)
        return Tracker(tracker_config, initial_state=state)
    biases = static_biases(cfg) if cfg.static_init > 0 else None
    return Tracker(tracker_config, initial_biases=biases)


class ExperimentRunner:

    def __init__(self, cfg, recorder=None):
        self.cfg = cfg
        self.recorder = recorder

    def _open_backend(self, stack):
        if self.cfg.transport == TCP:
            return stack.enter_context(closing(LockstepClient(socket_transport(self.cfg.addr))))
        return BackendServer(self.cfg.backend).handle

    def run(self):
        cfg = self.cfg
        logger.info('Running %s at %.0f FPS, %s backend, seed %d', cfg.script, cfg.frame_rate, cfg.backend.mode,
                    cfg.seed)
        frames = list(schedule_frames(cfg.script, cfg.frame_rate))
        session = TrackingSession(build_tracker(cfg), FrameTruth(frames), self.recorder)
        if self.recorder is not None:
            self.recorder.header(cfg)

        queue = EventQueue()
        imu = synthesize_imu(cfg.script, cfg.noise, rng_seed=cfg.seed, gravity=cfg.gravity)
        self._next_imu(queue, imu)
        for frame in frames:
            queue.schedule(frame.t, FRAME, 'frame', frame)
        client, server = simulated_channel(cfg.latency)

        with ExitStack() as stack:
            backend = self._open_backend(stack)
            for event in queue:
                if event.kind == 'imu':
                    session.on_imu(event.payload)
                    self._next_imu(queue, imu)
                elif event.kind == 'frame':
                    decision = session.on_frame(event.payload)
                    if decision.request is not None:
                        self._send_request(queue, client, decision.request, event.payload)
                elif event.kind == 'uplink':
                    for data in server.receive(event.t):
                        queue.schedule(event.t + cfg.backend.compute_delay, BACKEND, 'reply', backend(data))
                elif event.kind == 'reply':
                    delivery = server.send(event.payload, event.t)
                    if delivery is None:
                        request_id = WireMessage.decode(event.payload).request_id
                        queue.schedule(event.t + REQUEST_TIMEOUT, NETWORK, 'timeout', request_id)
                    else:
                        queue.schedule(delivery.deliver_at, NETWORK, 'downlink')
                elif event.kind == 'downlink':
                    for data in client.receive(event.t):
                        session.on_response(event.t, PoseResponse.from_wire(WireMessage.decode(data)))
                elif event.kind == 'timeout':
                    session.tracker.abandon(event.payload)

        report = session.report(cfg)
        logger.info(
            'Finished %s: %.3f mm, %.3f deg, %.3f px over %d frames, %d refinement cycles',
            cfg.script, report.mean_pos_mm, report.mean_orient_deg, report.mean_proj_px, report.frame_count,
            report.refinement_cycles,
        )
        return report

    @staticmethod
    def _next_imu(queue, stream):
        sample = next(stream, None)
        if sample is not None:
            queue.schedule(sample.t, IMU, 'imu', sample)

    def _send_request(self, queue, client, pending, frame):
        request = PoseRequest.synthesize(
            pending.request_id, pending.t0, frame.true_cam_from_world, size=self.cfg.latency.request_size,
        )
        delivery = client.send(request.to_wire().encode(), queue.now)
        if delivery is None:
            queue.schedule(queue.now + REQUEST_TIMEOUT, NETWORK, 'timeout', pending.request_id)
        else:
            queue.schedule(delivery.deliver_at, NETWORK, 'uplink')


def run_experiment(cfg, recorder=None):
    """Run one experiment and return its :class:`MetricsReport`."""
    return ExperimentRunner(cfg, recorder).run()
