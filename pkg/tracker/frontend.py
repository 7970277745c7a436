"""
The frontend tracker: a single-writer state machine fed with IMU samples,
camera frames and backend responses in timestamp order.

Life cycle::

    initializing --response--> seeding --response--> tracking
         ^                                               |
         +------------------ trackingLost ---------------+

While initializing or seeding the propagated pose is not reported as valid.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from geom.transforms import Pose, compose

from .inspection import inspect_pose
from .propagation import extrapolate, ppm_step
from .refinement import prm_on_response
from .state import ImuBuffer, PendingRequest, StateVector, TrackerStatus

logger = logging.getLogger(__name__)

INITIALIZING = 'initializing'
SEEDING = 'seeding'
TRACKING = 'tracking'


@dataclass(frozen=True)
class FrameDecision:
    status: str
    request: Optional[PendingRequest] = None
    cancelled: Optional[int] = None


class Tracker:

    def __init__(self, config, initial_state=None, initial_biases=None):
        self.config = config
        self.buffer = ImuBuffer.for_duration(config.buffer_seconds, config.imu_rate)
        self.pending = None
        self.last_correction = None
        self.last_inspected = None
        self.last_sample = None
        self.next_request_id = 0
        self.refinement_cycles = 0
        self.lost_frames = 0
        self._g = config.gravity_vector

        if initial_state is not None:
            self.state = initial_state
            self.mode = TRACKING
            self.has_velocity = True
        else:
            gyro_bias, accel_bias = initial_biases if initial_biases is not None else (np.zeros(3), np.zeros(3))
            # placeholder pose until the first backend response
            self.state = StateVector(Pose.identity(), np.zeros(3), gyro_bias, accel_bias, 0.0)
            self.mode = INITIALIZING
            self.has_velocity = False
        self.fresh_responses = 0

    @property
    def pose_valid(self):
        return self.mode == TRACKING

    def _set_mode(self, mode):
        if mode != self.mode:
            logger.debug('Tracker mode %s -> %s', self.mode, mode)
            self.mode = mode

    def on_imu(self, sample):
        self.state = ppm_step(self.state, sample, self._g, max_gap=self.config.max_imu_gap)
        self.buffer.append(sample, self.state)
        self.last_sample = sample

    def predict(self, t):
        """State extrapolated to ``t`` (not stored)."""
        return extrapolate(self.state, self.last_sample, t, self._g)

    def object_pose(self, state):
        """Camera-from-object pose for a state."""
        return compose(state.cam_from_world, self.config.world_from_obj)

    def estimate_at(self, t):
        """Estimated camera-from-world pose at ``t``, or ``None`` while the pose is invalid."""
        if not self.pose_valid:
            return None
        return self.predict(t).cam_from_world

    def _issue(self, t, state):
        request = PendingRequest(request_id=self.next_request_id, t0=t, state_at_t0=state)
        self.next_request_id += 1
        self.pending = request
        return request

    def _enter_lost(self):
        logger.warning('Tracking lost at t=%.4f', self.state.t)
        self._set_mode(INITIALIZING)
        self.fresh_responses = 0
        self.last_correction = None
        self.last_inspected = None

    def on_frame(self, frame):
        state = self.predict(frame.t)
        cancelled = None

        if self.mode != TRACKING:
            status = TrackerStatus.TRACKING_LOST
        elif self.config.disable_pia:
            status = TrackerStatus.FINE_POSE
        else:
            pose_now = self.object_pose(state)
            result = inspect_pose(
                pose_now, self.last_inspected, self.config.bbox3d, self.config.K, self.config.frame_rate,
                self.config.pia,
            )
            status = result.status
            self.last_inspected = pose_now
            if status == TrackerStatus.TRACKING_LOST:
                self._enter_lost()
            elif status == TrackerStatus.WRONG_POSE:
                logger.info('Wrong pose at t=%.4f (offset %.1f px)', frame.t, result.offset)
                if self.pending is not None:
                    cancelled = self.pending.request_id
                    self.pending = None

        if status == TrackerStatus.TRACKING_LOST:
            self.lost_frames += 1

        request = None
        if self.config.requests_enabled and self.pending is None:
            request = self._issue(frame.t, state)
        return FrameDecision(status=status, request=request, cancelled=cancelled)

    def abandon(self, request_id):
        """Give up on an unanswered request so the next frame can issue a new one."""
        if self.pending is not None and self.pending.request_id == request_id:
            logger.warning('Request %s abandoned without a response', request_id)
            self.pending = None
            return True
        return False

    def on_response(self, response):
        """Apply a backend response and return the :class:`RefinementOutcome`."""
        if self.pending is not None and response.request_id == self.pending.request_id:
            pending = self.pending
        else:
            pending = None
        seed_velocity = self.fresh_responses == 1
        outcome = prm_on_response(
            self.state, pending, response, self.buffer, self.config,
            previous=self.last_correction,
            seed_velocity=seed_velocity,
            update_accel_bias=self.fresh_responses >= 2,
            reset_velocity=not self.has_velocity and self.fresh_responses == 0,
        )
        if pending is not None:
            self.pending = None
        if not outcome.applied:
            return outcome

        self.state = outcome.state
        self.last_correction = outcome.correction
        self.refinement_cycles += 1
        self.fresh_responses += 1
        if seed_velocity:
            self.has_velocity = True
        if self.mode == INITIALIZING:
            self._set_mode(SEEDING)
        elif self.mode == SEEDING and self.has_velocity:
            self._set_mode(TRACKING)
            self.last_inspected = None
        return outcome

