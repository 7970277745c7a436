"""
Pose propagation (PPM) and static bias initialization.

The state advances once per IMU sample: the bias-corrected body rate rotates
the camera, the specific force rotated into the world frame (minus gravity and
the world-frame accelerometer bias) updates the velocity, and the new velocity
moves the camera centre.
"""

import logging

import numpy as np

from geom.transforms import Pose, integrate_rotation, integrate_translation, integrate_velocity, world_gravity

from .exceptions import ImuGapError, InsufficientSamplesError, NonMonotonicTimestampError
from .state import StateVector

logger = logging.getLogger(__name__)

MIN_STATIC_SAMPLES = 50


def _gravity(gravity):
    return np.asarray(world_gravity() if gravity is None else gravity, dtype=float)


def _advance(state, omega, accel, dt, g):
    R_next = integrate_rotation(state.world_from_cam_rotation, omega - state.gyro_bias, dt)
    V_next = integrate_velocity(state.velocity_world, R_next, accel, g + state.accel_bias_world, dt)
    center = integrate_translation(state.position, V_next, dt)
    return Pose.from_camera(R_next, center), V_next


def ppm_step(state, sample, gravity=None, max_gap=None):
    """Propagate ``state`` through one IMU sample."""
    dt = sample.t - state.t
    if not dt > 0:
        raise NonMonotonicTimestampError(state.t, sample.t)
    if max_gap is not None and dt > max_gap + 1e-12:
        raise ImuGapError(f'IMU gap of {dt:.6f} s exceeds {max_gap:.6f} s at t={sample.t}')
    g = _gravity(gravity)
    pose, velocity = _advance(state, sample.omega, sample.accel, dt, g)
    return StateVector(pose, velocity, state.gyro_bias, state.accel_bias_world, sample.t)


def extrapolate(state, sample, t, gravity=None):
    """
    State at ``t`` assuming ``sample``'s measurement holds past ``state.t``.

    Used to read the pose at frame times that fall between IMU samples; the
    input state is left as is.
    """
    dt = t - state.t
    if sample is None or not dt > 0:
        return state
    g = _gravity(gravity)
    pose, velocity = _advance(state, sample.omega, sample.accel, dt, g)
    return StateVector(pose, velocity, state.gyro_bias, state.accel_bias_world, t)


def init_static(samples, gravity=None, world_from_cam_rotation=None):
    """
    Gyro and world-frame accelerometer bias of a device held still.

    ``world_from_cam_rotation`` is the device orientation while static (the
    initial backend rotation); without it the body frame is taken as world.
    """
    samples = list(samples)
    if len(samples) < MIN_STATIC_SAMPLES:
        raise InsufficientSamplesError(
            f'Static initialization needs at least {MIN_STATIC_SAMPLES} samples, got {len(samples)}'
        )
    R = np.eye(3) if world_from_cam_rotation is None else np.asarray(world_from_cam_rotation, dtype=float)
    gyro_bias = np.mean([s.omega for s in samples], axis=0)
    accel_bias = R @ np.mean([s.accel for s in samples], axis=0) - _gravity(gravity)
    logger.debug('Static init over %d samples: gyro bias %s, accel bias %s', len(samples), gyro_bias, accel_bias)
    return gyro_bias, accel_bias
