import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from django.db import models

from geom.camera import CameraIntrinsics, cuboid_corners
from geom.transforms import Pose, as_vec3, world_gravity

from .exceptions import DegenerateIntervalError, NonMonotonicTimestampError, TrackerError


class TrackerStatus(models.TextChoices):
    FINE_POSE = 'finePose', 'Fine pose'
    WRONG_POSE = 'wrongPose', 'Wrong pose'
    TRACKING_LOST = 'trackingLost', 'Tracking lost'


@dataclass(frozen=True, eq=False)
class StateVector:
    cam_from_world: Pose
    velocity_world: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias_world: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: float = 0.0

    def __post_init__(self):
        for name in ('velocity_world', 'gyro_bias', 'accel_bias_world'):
            value = as_vec3(getattr(self, name), name)
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, 't', float(self.t))

    @property
    def world_from_cam_rotation(self):
        return self.cam_from_world.rotation.T

    @property
    def position(self):
        return self.cam_from_world.center

    def replace(self, **changes):
        return replace(self, **changes)

    def same_as(self, other):
        return (
            self.t == other.t
            and self.cam_from_world.same_as(other.cam_from_world)
            and np.array_equal(self.velocity_world, other.velocity_world)
            and np.array_equal(self.gyro_bias, other.gyro_bias)
            and np.array_equal(self.accel_bias_world, other.accel_bias_world)
        )


@dataclass(frozen=True)
class PiaConfig:
    px_e: float = 10.0
    px_m: float = 10.0
    base_rate: float = 30.0
    area_divisor: float = 100.0

    def __post_init__(self):
        for name in ('px_e', 'px_m', 'base_rate', 'area_divisor'):
            if not getattr(self, name) > 0:
                raise TrackerError(f'PIA {name} must be positive, got {getattr(self, name)}')

    def offset_threshold(self, frame_rate):
        """Pixel offset above which a frame's pose is rejected; shrinks as the frame rate grows."""
        if not frame_rate > 0:
            raise TrackerError(f'Frame rate must be positive, got {frame_rate}')
        return self.px_e + self.px_m * self.base_rate / frame_rate

    def area_threshold(self, K):
        return K.frame_area / self.area_divisor


@dataclass(frozen=True, eq=False)
class TrackerConfig:
    K: CameraIntrinsics = field(default_factory=lambda: CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480))
    bbox3d: np.ndarray = field(default_factory=lambda: cuboid_corners((0.1, 0.1, 0.1)))
    world_from_obj: Pose = field(default_factory=Pose.identity)
    frame_rate: float = 60.0
    imu_rate: float = 200.0
    gravity: tuple = field(default_factory=world_gravity)
    pia: PiaConfig = field(default_factory=PiaConfig)
    bias_smoothing: float = 1.0
    buffer_seconds: float = 1.0
    disable_bscm: bool = False
    disable_pia: bool = False
    requests_enabled: bool = True

    def __post_init__(self):
        bbox = np.array(self.bbox3d, dtype=float)
        if bbox.shape != (8, 3):
            raise TrackerError(f'bbox3d must hold 8 vertices, got shape {bbox.shape}')
        bbox.setflags(write=False)
        object.__setattr__(self, 'bbox3d', bbox)
        if not (self.frame_rate > 0 and self.imu_rate > 0):
            raise TrackerError('Frame and IMU rates must be positive')
        if not 0 < self.bias_smoothing <= 1:
            raise TrackerError(f'bias_smoothing must lie in (0, 1], got {self.bias_smoothing}')
        if self.buffer_seconds * self.imu_rate < 1:
            raise TrackerError('The IMU buffer must hold at least one sample')

    @property
    def gravity_vector(self):
        return np.asarray(self.gravity, dtype=float)

    @property
    def max_imu_gap(self):
        return 2.0 / self.imu_rate


@dataclass
class BufferEntry:
    sample: object
    state: StateVector

    @property
    def t(self):
        return self.sample.t


class ImuBuffer:
    """
    Time-ordered ring of IMU samples, each stored with the state propagated
    through it, kept for re-propagation after a backend correction.
    """

    def __init__(self, capacity):
        if capacity < 1:
            raise TrackerError(f'Buffer capacity must be at least 1, got {capacity}')
        self.capacity = int(capacity)
        self._entries = deque()
        # timestamp of the newest sample no longer held
        self.released_until = -math.inf

    @classmethod
    def for_duration(cls, seconds, imu_rate):
        return cls(math.ceil(seconds * imu_rate))

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def latest(self):
        return self._entries[-1] if self._entries else None

    def append(self, sample, state):
        if self._entries and sample.t <= self._entries[-1].t:
            raise NonMonotonicTimestampError(self._entries[-1].t, sample.t)
        if len(self._entries) == self.capacity:
            self.released_until = self._entries.popleft().t
        self._entries.append(BufferEntry(sample, state))

    def covers(self, t):
        """True while every sample stamped after ``t`` is still held."""
        return self.released_until <= t

    def after(self, t):
        return [entry for entry in self._entries if entry.t > t]

    def between(self, t_lo, t_hi):
        return [entry for entry in self._entries if t_lo < entry.t < t_hi]

    def drop_before(self, t):
        while self._entries and self._entries[0].t < t:
            self.released_until = self._entries.popleft().t


@dataclass(frozen=True)
class PendingRequest:
    request_id: int
    t0: float
    state_at_t0: StateVector


@dataclass(frozen=True)
class Correction:
    """The last applied backend fix: pose and rebased velocity at its capture time."""

    t0: float
    pose: Pose
    velocity_world: np.ndarray


@dataclass(frozen=True)
class RefinementRecord:
    t_prev: float
    t_curr: float
    backend_pose_prev: Pose
    backend_pose_curr: Pose

    def __post_init__(self):
        if not self.t_curr > self.t_prev:
            raise DegenerateIntervalError(f'Refinement window [{self.t_prev}, {self.t_curr}] is empty')

    @property
    def span(self):
        return self.t_curr - self.t_prev

    @property
    def midpoint(self):
        return 0.5 * (self.t_prev + self.t_curr)


@dataclass
class RefinementOutcome:
    applied: bool
    state: StateVector
    correction: Optional[Correction] = None
    gyro_residual: Optional[np.ndarray] = None
    velocity_residual: Optional[np.ndarray] = None
    accel_residual: Optional[np.ndarray] = None
    reason: str = ''
