"""
Inertial sensor synthesis.

Samples are the interval means of the true signals: the gyroscope reports
the constant rate that carries the orientation from one sample instant to the
next, and the accelerometer the mean specific force over the same interval
(velocity increment over dt, plus the gravity reaction, rotated into the body
frame at the sample instant). Constant bias, optional bias random walk and
white noise are added on top.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from geom.transforms import as_vec3, log_so3, world_gravity

from .exceptions import InvalidRateError, MotionError
from .trajectories import as_trajectory

logger = logging.getLogger(__name__)

# Consumer-grade MEMS IMU noise densities.
GYRO_DENSITY = 6.63e-5
ACCEL_DENSITY = 7.35e-4


@dataclass(frozen=True)
class ImuNoiseModel:
    gyro_density: float = GYRO_DENSITY
    accel_density: float = ACCEL_DENSITY
    gyro_bias: tuple = (0.0, 0.0, 0.0)
    accel_bias: tuple = (0.0, 0.0, 0.0)
    sample_rate: float = 200.0
    gyro_bias_walk: float = 0.0
    accel_bias_walk: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise InvalidRateError(f'IMU sample rate must be positive, got {self.sample_rate}')
        for name in ('gyro_density', 'accel_density', 'gyro_bias_walk', 'accel_bias_walk'):
            if getattr(self, name) < 0:
                raise MotionError(f'{name} must be non-negative, got {getattr(self, name)}')
        object.__setattr__(self, 'gyro_bias', tuple(float(v) for v in as_vec3(self.gyro_bias, 'gyro_bias')))
        object.__setattr__(self, 'accel_bias', tuple(float(v) for v in as_vec3(self.accel_bias, 'accel_bias')))

    @classmethod
    def noiseless(cls, sample_rate=200.0, **kwargs):
        return cls(gyro_density=0.0, accel_density=0.0, sample_rate=sample_rate, **kwargs)

    @property
    def period(self):
        return 1.0 / self.sample_rate

    @property
    def gyro_sigma(self):
        """Per-sample white-noise standard deviation, rad/s."""
        return self.gyro_density * math.sqrt(self.sample_rate)

    @property
    def accel_sigma(self):
        return self.accel_density * math.sqrt(self.sample_rate)


@dataclass(frozen=True, eq=False)
class ImuSample:
    t: float
    omega: np.ndarray
    accel: np.ndarray

    def __post_init__(self):
        omega = as_vec3(self.omega, 'omega')
        accel = as_vec3(self.accel, 'accel')
        omega.setflags(write=False)
        accel.setflags(write=False)
        object.__setattr__(self, 't', float(self.t))
        object.__setattr__(self, 'omega', omega)
        object.__setattr__(self, 'accel', accel)

    def same_as(self, other):
        return self.t == other.t and np.array_equal(self.omega, other.omega) and np.array_equal(self.accel, other.accel)


def synthesize_imu(script, noise, rng_seed, gravity=None):
    """
    Yield the IMU stream of ``script`` (a MotionScript or any trajectory).

    Samples are stamped ``k / sample_rate`` for ``k = 1 .. round(duration * rate)``;
    the state at ``t = 0`` is the integration starting point.
    ``gravity`` defaults to the configured world gravity.
    """
    trajectory = as_trajectory(script)
    rng = np.random.default_rng(rng_seed)
    g = np.asarray(world_gravity() if gravity is None else gravity, dtype=float)
    rate = noise.sample_rate
    dt = 1.0 / rate
    count = int(round(trajectory.duration * rate))
    gyro_bias = np.array(noise.gyro_bias)
    accel_bias = np.array(noise.accel_bias)
    gyro_walk = noise.gyro_bias_walk * math.sqrt(dt)
    accel_walk = noise.accel_bias_walk * math.sqrt(dt)
    logger.debug('Synthesizing %d IMU samples at %.1f Hz (seed %s)', count, rate, rng_seed)

    previous = trajectory.sample(0.0)
    for k in range(1, count + 1):
        t = k / rate
        current = trajectory.sample(min(t, trajectory.duration))
        R_prev = previous.cam_from_world.rotation.T
        R_curr = current.cam_from_world.rotation.T
        omega = log_so3(R_prev.T @ R_curr) / dt
        specific_force = R_curr.T @ ((current.velocity_world - previous.velocity_world) / dt + g)

        draws = rng.standard_normal(6)
        if gyro_walk or accel_walk:
            gyro_bias = gyro_bias + gyro_walk * rng.standard_normal(3)
            accel_bias = accel_bias + accel_walk * rng.standard_normal(3)
        yield ImuSample(
            t=t,
            omega=omega + gyro_bias + noise.gyro_sigma * draws[:3],
            accel=specific_force + accel_bias + noise.accel_sigma * draws[3:],
        )
        previous = current
