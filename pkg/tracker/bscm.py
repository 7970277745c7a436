"""
Bias self-correction (BSCM).

Between two consecutive backend poses the propagated motion is compared with
the motion the backend observed. The rotation mismatch per second is the
residual gyroscope bias; the gap between the propagated mid-window velocity
and the backend's average velocity, per second, is the residual accelerometer
bias.
"""

import numpy as np

from geom.transforms import euler_xyz

from .exceptions import DegenerateIntervalError

MIN_INTERVAL = 1e-6


def bscm_gyro_bias(R_imu, R_real, dt):
    """Body rate that explains the rotation ``R_imu`` has in excess of ``R_real`` over ``dt``."""
    if not dt > 0:
        raise DegenerateIntervalError(f'Gyro bias window must be positive, got {dt}')
    R_bias = np.asarray(R_imu, dtype=float) @ np.asarray(R_real, dtype=float).T
    return euler_xyz(R_bias) / dt


def average_velocity(rec):
    """World-frame velocity implied by the two backend camera positions of ``rec``."""
    return (rec.backend_pose_curr.center - rec.backend_pose_prev.center) / rec.span


def bscm_accel_bias(rec, V_imu_mid):
    """Returns ``(V_bias, a_bias)`` for the window of ``rec``."""
    span = rec.t_curr - rec.t_prev
    if span < MIN_INTERVAL:
        raise DegenerateIntervalError(f'Refinement window of {span} s is too short')
    V_bias = np.asarray(V_imu_mid, dtype=float) - average_velocity(rec)
    return V_bias, V_bias / span


def interpolate_velocity(times, velocities, t):
    """Piecewise-linear velocity at ``t`` from a time-ordered history."""
    velocities = np.asarray(velocities, dtype=float)
    return np.array([np.interp(t, times, velocities[:, axis]) for axis in range(3)])
