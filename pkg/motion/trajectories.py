"""
Closed-form camera trajectories.

Every trajectory exposes ``duration`` and ``sample(t)``. Positions, velocities,
accelerations and body rates are evaluated analytically, so ground truth is
exact at any time.

Scripted motion is a base curve plus a seeded perturbation:

* translational: the camera centre runs on a small tilted circle (mixing
  truck, dolly and pedestal) at the profile speed, with centripetal
  acceleration placed inside the profile's acceleration band; the
  orientation cones slowly at the profile rate.
* circular: the camera rigidly orbits an axis through the object, so it keeps
  looking at it, with an extra roll about the optical axis chosen so the body
  rate matches the profile rate.

The perturbation is a sum of random-phase sinusoids on position and
orientation whose acceleration amplitudes are bounded well inside the band.
"""

import functools
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from geom.transforms import (
    Pose,
    exp_so3,
    look_at,
    right_jacobian,
    rot_y,
    rot_z,
)

from .exceptions import TimeOutOfRangeError
from .scripts import CIRCULAR, MotionScript

# Position of the base acceleration inside the profile band, as a fraction of its width.
BASE_FRACTION = 0.35
# Bound of the perturbation acceleration, as a fraction of the band width.
PERTURBATION_FRACTION = 0.3
PERTURBATION_TERMS = (3, 5)
PERTURBATION_FREQUENCIES = (3.0, 6.0)
TIME_SLACK = 1e-9

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class TrajectorySample:
    t: float
    cam_from_world: Pose
    velocity_world: np.ndarray
    accel_world: np.ndarray
    omega_body: np.ndarray

    @property
    def world_from_cam_rotation(self):
        return self.cam_from_world.rotation.T

    @property
    def position(self):
        return self.cam_from_world.center


class Trajectory(Protocol):
    duration: float

    def sample(self, t: float) -> TrajectorySample:
        ...


def _check_time(t, duration):
    if t < -TIME_SLACK or t > duration + TIME_SLACK:
        raise TimeOutOfRangeError(t, duration)
    return min(max(t, 0.0), duration)


class SinusoidSum:
    """``x(t) = sum_k a_k * (sin(w_k t + p_k) - sin(p_k))`` per axis, so ``x(0) = 0``."""

    def __init__(self, rng, accel_bound):
        count = int(rng.integers(PERTURBATION_TERMS[0], PERTURBATION_TERMS[1] + 1))
        self.freqs = rng.uniform(*PERTURBATION_FREQUENCIES, size=count)
        self.phases = rng.uniform(0.0, 2.0 * math.pi, size=(count, 3))
        # |x''| <= sum_k |accel_k| <= sum_k sqrt(3) * bound / (sqrt(3) * count) = bound
        accel_amplitude = rng.uniform(0.5, 1.0, size=(count, 3)) * accel_bound / (math.sqrt(3.0) * count)
        self.amplitudes = accel_amplitude / self.freqs[:, None] ** 2

    def evaluate(self, t):
        """Value, first and second derivative at ``t``."""
        arg = self.freqs[:, None] * t + self.phases
        w = self.freqs[:, None]
        value = (self.amplitudes * (np.sin(arg) - np.sin(self.phases))).sum(axis=0)
        rate = (self.amplitudes * w * np.cos(arg)).sum(axis=0)
        accel = -(self.amplitudes * w * w * np.sin(arg)).sum(axis=0)
        return value, rate, accel


class ScriptedTrajectory:
    """The analytic trajectory of a :class:`MotionScript`."""

    def __init__(self, script: MotionScript):
        self.script = script
        self.duration = float(script.duration)
        profile = script.profile
        self.target = np.asarray(script.target, dtype=float)
        rng = np.random.default_rng(script.perturbation_seed)

        lo, hi = profile.accel_range
        self.base_accel = lo + BASE_FRACTION * (hi - lo)
        self.position_noise = SinusoidSum(rng, PERTURBATION_FRACTION * (hi - lo))
        ang_lo, ang_hi = profile.angular_accel_range
        self.rotation_noise = SinusoidSum(rng, PERTURBATION_FRACTION * (ang_hi - ang_lo)) if ang_hi > 0 else None

        speed = profile.avg_speed
        if script.kind == CIRCULAR:
            self._init_orbit(speed, profile.avg_rate, script.distance)
        else:
            self._init_sweep(speed, profile.avg_rate, ang_lo + BASE_FRACTION * (ang_hi - ang_lo), script.distance)

    def _init_sweep(self, speed, rate, angular_accel, distance):
        self.circular = False
        self.freq = self.base_accel / speed
        self.radius = speed / self.freq
        self.start = self.target - distance * np.array([0.0, 1.0, 0.0])
        # truck mixed with dolly on one axis, pedestal on the other
        u1 = np.array([1.0, 0.4, 0.0])
        self.u1 = u1 / np.linalg.norm(u1)
        self.u2 = np.array([0.0, 0.0, 1.0])
        self.R0 = look_at(self.start, self.target, WORLD_UP)
        self.cone_rate = np.array([rate, 0.0, 0.0])
        self.cone_freq = angular_accel / rate if rate > 0 else 0.0

    def _init_orbit(self, speed, rate, distance):
        self.circular = True
        self.freq = self.base_accel / speed
        self.radius = speed / self.freq
        axial = math.sqrt(distance ** 2 - self.radius ** 2)
        self.start = self.target + np.array([0.0, -axial, self.radius])
        self.R0 = look_at(self.start, self.target, WORLD_UP)
        cos_tilt = axial / distance
        min_rate = self.freq * self.radius / distance
        if rate <= min_rate:
            self.roll_rate = -self.freq * cos_tilt
        else:
            extra = math.sqrt(rate * rate - min_rate * min_rate)
            self.roll_rate = min(-self.freq * cos_tilt + extra, -self.freq * cos_tilt - extra, key=abs)
        self.orbit_axis_body = self.R0.T @ np.array([0.0, self.freq, 0.0])

    def _base(self, t):
        """Base rotation (world from camera), position, velocity, acceleration and body rate."""
        if self.circular:
            orbit = rot_y(self.freq * t)
            offset = self.start - self.target
            position = self.target + orbit @ offset
            velocity = orbit @ np.cross([0.0, self.freq, 0.0], offset)
            accel = orbit @ np.cross([0.0, self.freq, 0.0], np.cross([0.0, self.freq, 0.0], offset))
            roll = rot_z(self.roll_rate * t)
            R = orbit @ self.R0 @ roll
            omega = roll.T @ self.orbit_axis_body + np.array([0.0, 0.0, self.roll_rate])
            return R, position, velocity, accel, omega

        wt = self.freq * t
        c, s = math.cos(wt), math.sin(wt)
        r, w = self.radius, self.freq
        position = self.start + r * (self.u1 * (c - 1.0) + self.u2 * s)
        velocity = r * w * (-self.u1 * s + self.u2 * c)
        accel = -r * w * w * (self.u1 * c + self.u2 * s)
        nu = self.cone_freq
        spin = exp_so3(t * (self.cone_rate + np.array([0.0, 0.0, nu])))
        R = self.R0 @ spin @ rot_z(-nu * t)
        omega = rot_z(nu * t) @ self.cone_rate
        return R, position, velocity, accel, omega

    def sample(self, t):
        t = _check_time(t, self.duration)
        R, position, velocity, accel, omega = self._base(t)
        dp, dv, da = self.position_noise.evaluate(t)
        position, velocity, accel = position + dp, velocity + dv, accel + da
        if self.rotation_noise is not None:
            e, e_rate, _ = self.rotation_noise.evaluate(t)
            E = exp_so3(e)
            R = R @ E
            omega = E.T @ omega + right_jacobian(e) @ e_rate
        return TrajectorySample(
            t=t,
            cam_from_world=Pose.from_camera(R, position),
            velocity_world=velocity,
            accel_world=accel,
            omega_body=omega,
        )


class StaticTrajectory:
    """A camera that never moves."""

    def __init__(self, cam_from_world, duration):
        self.cam_from_world = cam_from_world
        self.duration = float(duration)

    def sample(self, t):
        t = _check_time(t, self.duration)
        return TrajectorySample(t, self.cam_from_world, np.zeros(3), np.zeros(3), np.zeros(3))


@functools.lru_cache(maxsize=64)
def trajectory_for(script):
    return ScriptedTrajectory(script)


def as_trajectory(source):
    """Accept either a :class:`MotionScript` or anything that already behaves as a trajectory."""
    if isinstance(source, MotionScript):
        return trajectory_for(source)
    return source


def sample_trajectory(script, t):
    return as_trajectory(script).sample(t)
