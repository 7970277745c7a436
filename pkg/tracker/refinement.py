"""
Pose refinement (PRM).

A backend response carries the pose of the frame captured at ``t0``. The
tracker updates its bias estimates from the window since the previous
response, rebases the state at ``t0`` onto the backend pose and replays the
buffered IMU samples stamped after ``t0`` to catch up with the present.
"""

import logging

import numpy as np

from .bscm import bscm_accel_bias, bscm_gyro_bias, interpolate_velocity
from .propagation import ppm_step
from .state import Correction, RefinementOutcome, RefinementRecord, StateVector

logger = logging.getLogger(__name__)

RESPONSE_OK = 'ok'


def _discard(state, reason):
    logger.warning('Backend response discarded: %s', reason)
    return RefinementOutcome(applied=False, state=state, reason=reason)


def _mid_window_velocity(previous, pending, buffer, midpoint):
    entries = buffer.between(previous.t0, pending.t0)
    times = [previous.t0] + [entry.t for entry in entries] + [pending.t0]
    velocities = (
        [previous.velocity_world]
        + [entry.state.velocity_world for entry in entries]
        + [pending.state_at_t0.velocity_world]
    )
    return interpolate_velocity(times, velocities, midpoint)


def replay(buffer, base, gravity):
    """Re-propagate every buffered sample after ``base.t`` from ``base``, rewriting the stored states."""
    state = base
    for entry in buffer.after(base.t):
        state = ppm_step(state, entry.sample, gravity)
        entry.state = state
    return state


def prm_on_response(state, pending, response, buffer, config, previous=None, seed_velocity=False,
                    update_accel_bias=True, reset_velocity=False):
    """
    Apply ``response`` to ``state``.

    ``previous`` is the last applied :class:`Correction` (``None`` right after
    (re)initialization). With ``seed_velocity`` the velocity at ``t0`` is set
    from the backend's average velocity without smoothing; biases are only
    updated when a previous correction exists, the accelerometer bias only
    when ``update_accel_bias`` is set. ``reset_velocity`` zeroes the velocity
    at ``t0`` when no estimate of it exists yet.
    """
    if pending is None or response.request_id != pending.request_id:
        return _discard(state, f'no pending request with id {response.request_id}')
    if previous is not None and pending.t0 <= previous.t0:
        return _discard(state, f'response for t0={pending.t0} is older than the last fix at {previous.t0}')
    if response.status != RESPONSE_OK:
        return _discard(state, f'backend failed request {response.request_id}')
    if not buffer.covers(pending.t0):
        return _discard(state, f'IMU buffer no longer reaches back to t0={pending.t0}')

    t0 = pending.t0
    imu_at_t0 = pending.state_at_t0
    alpha = config.bias_smoothing
    gyro_bias = state.gyro_bias
    accel_bias = state.accel_bias_world
    velocity = np.zeros(3) if reset_velocity else imu_at_t0.velocity_world
    outcome = RefinementOutcome(applied=True, state=state)

    if previous is not None:
        record = RefinementRecord(previous.t0, t0, previous.pose, response.pose)
        if not config.disable_bscm:
            # both deltas are previous-fix body frame to t0 body frame
            D_imu = previous.pose.rotation @ imu_at_t0.cam_from_world.rotation.T
            D_real = previous.pose.rotation @ response.pose.rotation.T
            outcome.gyro_residual = bscm_gyro_bias(D_imu, D_real, record.span)
            gyro_bias = gyro_bias + alpha * outcome.gyro_residual

        V_mid = _mid_window_velocity(previous, pending, buffer, record.midpoint)
        V_bias, a_residual = bscm_accel_bias(record, V_mid)
        outcome.velocity_residual = V_bias
        if seed_velocity:
            velocity = imu_at_t0.velocity_world - V_bias
        else:
            step = np.zeros(3)
            if update_accel_bias and not config.disable_bscm:
                outcome.accel_residual = a_residual
                step = alpha * a_residual
                accel_bias = accel_bias + step
            # the estimate at t0 carries the bias change over the second half of the window
            velocity = imu_at_t0.velocity_world - alpha * V_bias - step * (t0 - record.midpoint)

    base = StateVector(response.pose, velocity, gyro_bias, accel_bias, t0)
    outcome.state = replay(buffer, base, config.gravity_vector)
    buffer.drop_before(t0)
    outcome.correction = Correction(t0=t0, pose=response.pose, velocity_world=np.array(velocity))
    logger.debug(
        'Refinement %s at t0=%.4f: gyro bias %s, accel bias %s',
        response.request_id, t0, gyro_bias, accel_bias,
    )
    return outcome
