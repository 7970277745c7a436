"""Pinhole projection and image-plane areas."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .exceptions import GeometryError, NotProjectableError

MIN_DEPTH = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise GeometryError(f'focal lengths must be positive, got fx={self.fx}, fy={self.fy}')
        if not (self.width > 0 and self.height > 0):
            raise GeometryError(f'image size must be positive, got {self.width}x{self.height}')

    @classmethod
    def from_dict(cls, data):
        return cls(
            fx=float(data['fx']),
            fy=float(data['fy']),
            cx=float(data['cx']),
            cy=float(data['cy']),
            width=int(data['width']),
            height=int(data['height']),
        )

    def as_dict(self):
        return {
            'fx': self.fx, 'fy': self.fy, 'cx': self.cx, 'cy': self.cy,
            'width': self.width, 'height': self.height,
        }

    @property
    def frame_area(self):
        return float(self.width * self.height)

    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


def project(K, cam_from_obj, point_obj):
    """Pixel coordinates ``(u, v)`` of an object-frame point."""
    x, y, z = cam_from_obj.apply(point_obj)
    if z <= MIN_DEPTH:
        raise NotProjectableError(z)
    return K.fx * x / z + K.cx, K.fy * y / z + K.cy


def project_points(K, cam_from_obj, points_obj):
    """Vectorised :func:`project` for an ``(n, 3)`` array; returns ``(n, 2)``."""
    cam = cam_from_obj.apply(points_obj)
    depth = cam[:, 2]
    if np.any(depth <= MIN_DEPTH):
        raise NotProjectableError(float(depth.min()))
    return np.column_stack([K.fx * cam[:, 0] / depth + K.cx, K.fy * cam[:, 1] / depth + K.cy])


def hull_polygon(points):
    """Convex hull vertices in counter-clockwise order, or an empty array when degenerate."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return np.empty((0, 2))
    try:
        hull = ConvexHull(pts)
    except QhullError:
        # all points collinear
        return np.empty((0, 2))
    return pts[hull.vertices]


def polygon_hull_area(points):
    """Area of the convex hull of 2-D points; 0 for fewer than 3 distinct or collinear points."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        return 0.0
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def shoelace_area(polygon):
    if len(polygon) < 3:
        return 0.0
    x, y = np.asarray(polygon, dtype=float).T
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_polygon(polygon, width, height):
    """Sutherland-Hodgman clip of a convex polygon to ``[0, width] x [0, height]``."""
    edges = (
        (0, 0.0, 1.0),
        (0, float(width), -1.0),
        (1, 0.0, 1.0),
        (1, float(height), -1.0),
    )
    output = [tuple(p) for p in polygon]
    for axis, bound, sign in edges:
        if not output:
            break
        source, output = output, []
        previous = source[-1]
        for current in source:
            cur_in = sign * (current[axis] - bound) >= 0
            prev_in = sign * (previous[axis] - bound) >= 0
            if cur_in != prev_in:
                t = (bound - previous[axis]) / (current[axis] - previous[axis])
                output.append((
                    previous[0] + t * (current[0] - previous[0]),
                    previous[1] + t * (current[1] - previous[1]),
                ))
            if cur_in:
                output.append(current)
            previous = current
    return np.array(output, dtype=float).reshape(-1, 2)


def visible_hull_area(points, K):
    """Area of the part of the points' convex hull that falls inside the image."""
    polygon = hull_polygon(points)
    if len(polygon) == 0:
        return 0.0
    return shoelace_area(clip_polygon(polygon, K.width, K.height))


def cuboid_corners(half_extents, center=(0.0, 0.0, 0.0)):
    """The 8 corners of an axis-aligned box, shape ``(8, 3)``."""
    hx, hy, hz = half_extents
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
    return np.asarray(center, dtype=float) + signs * np.array([hx, hy, hz], dtype=float)
