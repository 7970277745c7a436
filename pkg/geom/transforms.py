"""
Rotations, rigid poses and the strapdown integration formulas.

Vectors are ``float64`` arrays of shape ``(3,)`` and rotations are ``(3, 3)``
arrays. A :class:`Pose` maps points from a source frame into a target frame,
``p_target = R @ p_source + t``; the tracker stores camera-from-world poses.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from .exceptions import GeometryError

# Below this angle the Rodrigues coefficients switch to their Taylor series.
SMALL_ANGLE = 1e-6
ORTHONORMAL_TOL = 1e-9

IDENTITY = np.eye(3)
IDENTITY.setflags(write=False)


def as_vec3(value, name='vector'):
    """Return ``value`` as a finite float vector of shape (3,)."""
    vec = np.array(value, dtype=float)
    if vec.shape != (3,):
        try:
            vec = vec.reshape(3)
        except ValueError:
            raise GeometryError(f'{name} must have exactly 3 components, got shape {vec.shape}') from None
    if not np.all(np.isfinite(vec)):
        raise GeometryError(f'{name} has non-finite components: {vec}')
    return vec


def world_gravity():
    """Gravity in the world frame, m/s^2 along +z, as set in ``VIOTRACK['GRAVITY']``."""
    return tuple(float(v) for v in as_vec3(settings.VIOTRACK['GRAVITY'], 'gravity'))


def as_rotation(value):
    mat = np.array(value, dtype=float)
    if mat.size != 9:
        raise GeometryError(f'rotation must have 9 entries, got {mat.size}')
    mat = mat.reshape(3, 3)
    if not np.all(np.isfinite(mat)):
        raise GeometryError('rotation has non-finite entries')
    return mat


def skew(v):
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = v
    return np.array([
        [0.0, -z, y],
        [z, 0.0, -x],
        [-y, x, 0.0],
    ])


def vee(m):
    """Inverse of :func:`skew` for the antisymmetric part of ``m``."""
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) / 2.0


def is_rotation(R, tol=ORTHONORMAL_TOL):
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and np.max(np.abs(R.T @ R - IDENTITY)) <= tol
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def orthonormalize(R):
    """Nearest rotation matrix in the Frobenius sense (polar decomposition)."""
    u, _, vt = np.linalg.svd(R)
    if np.linalg.det(u @ vt) < 0:
        u[:, -1] = -u[:, -1]
    return u @ vt


def exp_so3(phi):
    """Rodrigues' formula for the rotation vector ``phi``."""
    phi = np.asarray(phi, dtype=float)
    sigma = math.sqrt(float(phi @ phi))
    if sigma < SMALL_ANGLE:
        s2 = sigma * sigma
        a = 1.0 - s2 / 6.0
        b = 0.5 - s2 / 24.0
    else:
        a = math.sin(sigma) / sigma
        b = (1.0 - math.cos(sigma)) / (sigma * sigma)
    B = skew(phi)
    return IDENTITY + a * B + b * (B @ B)


def rotation_angle(R):
    """
    Angle of the rotation ``R`` in ``[0, pi]``.

    Evaluated as ``atan2(sin, cos)`` from the antisymmetric part and the trace;
    this equals the clamped ``arccos((trace - 1) / 2)`` but keeps full precision
    near 0 and pi.
    """
    R = np.asarray(R, dtype=float)
    cos_theta = (np.trace(R) - 1.0) / 2.0
    sin_theta = float(np.linalg.norm(vee(R)))
    return math.atan2(sin_theta, cos_theta)


def log_so3(R):
    """Rotation vector of ``R`` (inverse of :func:`exp_so3`)."""
    R = np.asarray(R, dtype=float)
    theta = rotation_angle(R)
    w = vee(R)
    if theta < SMALL_ANGLE:
        return w
    if math.pi - theta < 1e-6:
        # sin(theta) ~ 0: read the axis from the symmetric part instead.
        sym = (R + IDENTITY) / 2.0
        col = int(np.argmax(np.diag(sym)))
        axis = sym[:, col] / math.sqrt(max(sym[col, col], 1e-300))
        if axis @ w < 0:
            axis = -axis
        return theta * axis / np.linalg.norm(axis)
    return theta / math.sin(theta) * w


def right_jacobian(phi):
    """SO(3) right Jacobian: body rate of ``exp_so3(phi(t))`` is ``right_jacobian(phi) @ dphi/dt``."""
    phi = np.asarray(phi, dtype=float)
    theta = math.sqrt(float(phi @ phi))
    K = skew(phi)
    if theta < 1e-4:
        return IDENTITY - 0.5 * K + (K @ K) / 6.0
    t2 = theta * theta
    return IDENTITY - (1.0 - math.cos(theta)) / t2 * K + (theta - math.sin(theta)) / (t2 * theta) * (K @ K)


def rot_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def from_euler_xyz(angles):
    """Rotation ``Rx(x) @ Ry(y) @ Rz(z)`` for ``angles = (x, y, z)``."""
    ax, ay, az = angles
    return rot_x(ax) @ rot_y(ay) @ rot_z(az)


def euler_xyz(R):
    """
    Decompose ``R = Rx(x) @ Ry(y) @ Rz(z)`` into ``(x, y, z)``, each in (-pi, pi].

    At gimbal lock (``|y| = pi/2``) ``x`` is fixed to 0 and the remaining
    freedom is assigned to ``z``.
    """
    R = np.asarray(R, dtype=float)
    ay = math.asin(min(1.0, max(-1.0, R[0, 2])))
    if math.hypot(R[0, 0], R[0, 1]) < 1e-9:
        ax = 0.0
        az = math.atan2(R[1, 0], R[1, 1])
    else:
        ax = math.atan2(-R[1, 2], R[2, 2])
        az = math.atan2(-R[0, 1], R[0, 0])
    return np.array([_half_open(ax), ay, _half_open(az)])


def _half_open(angle):
    return math.pi if angle <= -math.pi else angle


def integrate_rotation(R_t, omega, dt):
    """
    Advance ``R_t`` by a constant body rate ``omega`` held for ``dt`` seconds.

    ``R_t @ (I + sin(s)/s B + (1 - cos(s))/s^2 B^2)`` with ``B = skew(omega * dt)``
    and ``s = |omega * dt|``, projected back onto SO(3).
    """
    if not dt > 0:
        raise GeometryError(f'dt must be positive, got {dt}')
    omega = np.asarray(omega, dtype=float)
    return orthonormalize(np.asarray(R_t, dtype=float) @ exp_so3(omega * dt))


def integrate_velocity(V_t, R_next, a, g, dt):
    """``V + dt (R_next a - g)``: specific force rotated to world, gravity removed."""
    if not dt > 0:
        raise GeometryError(f'dt must be positive, got {dt}')
    return np.asarray(V_t, dtype=float) + dt * (np.asarray(R_next) @ np.asarray(a, dtype=float) - g)


def integrate_translation(T_t, V_next, dt):
    if not dt > 0:
        raise GeometryError(f'dt must be positive, got {dt}')
    return np.asarray(T_t, dtype=float) + dt * np.asarray(V_next, dtype=float)


def look_at(eye, target, up=(0.0, 0.0, 1.0)):
    """
    World-from-camera rotation of a camera at ``eye`` looking at ``target``.

    Camera axes follow the pinhole convention: x right, y down, z forward.
    """
    forward = np.asarray(target, dtype=float) - np.asarray(eye, dtype=float)
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, up)
    norm = np.linalg.norm(right)
    if norm < 1e-9:
        raise GeometryError('viewing direction is parallel to the up vector')
    right /= norm
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform ``target_from_source``: ``p_target = rotation @ p_source + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = as_rotation(self.rotation)
        translation = as_vec3(self.translation, 'translation')
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, 'rotation', rotation)
        object.__setattr__(self, 'translation', translation)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_camera(cls, world_from_cam_rotation, center):
        """Camera-from-world pose of a camera with orientation ``R_wc`` placed at ``center``."""
        R_cw = np.asarray(world_from_cam_rotation, dtype=float).T
        return cls(R_cw, -R_cw @ np.asarray(center, dtype=float))

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (4, 4):
            raise GeometryError(f'expected a 4x4 matrix, got shape {matrix.shape}')
        return cls(matrix[:3, :3], matrix[:3, 3])

    @classmethod
    def from_row(cls, values):
        """Inverse of :meth:`to_row`."""
        values = [float(v) for v in values]
        if len(values) != 12:
            raise GeometryError(f'a pose row has 12 values, got {len(values)}')
        return cls(np.reshape(values[:9], (3, 3)), values[9:])

    def to_row(self):
        """Row-major rotation followed by translation, 12 floats."""
        return tuple(float(v) for v in self.rotation.ravel()) + tuple(float(v) for v in self.translation)

    def as_matrix(self):
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix

    def apply(self, points):
        """Transform one point ``(3,)`` or an array of points ``(n, 3)``."""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    @property
    def center(self):
        """Origin of the target frame expressed in the source frame (the camera centre of a camera-from-world pose)."""
        return -self.rotation.T @ self.translation

    def is_valid(self, tol=ORTHONORMAL_TOL):
        return is_rotation(self.rotation, tol)

    def same_as(self, other):
        """Exact (bitwise) equality of both components."""
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(self.translation, other.translation)

    def isclose(self, other, atol=1e-9):
        return (
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )

    def __repr__(self):
        angle = math.degrees(rotation_angle(self.rotation))
        return f'Pose(angle={angle:.4f}deg, translation={np.array2string(self.translation, precision=5)})'


def compose(outer, inner):
    """``outer @ inner`` as 4x4 transforms."""
    return Pose(outer.rotation @ inner.rotation, outer.rotation @ inner.translation + outer.translation)


def inverse(pose):
    R_t = pose.rotation.T
    return Pose(R_t, -R_t @ pose.translation)
