"""Per-frame pose inspection (PIA): projected-area check first, then the vertex offset check."""

from dataclasses import dataclass

import numpy as np

from geom.camera import project_points, visible_hull_area
from geom.exceptions import NotProjectableError

from .state import TrackerStatus


@dataclass(frozen=True)
class Inspection:
    status: str
    area: float
    offset: float


def inspect_pose(pose_now, pose_last, bbox3d, K, frame_rate, cfg):
    """Classify ``pose_now`` (camera from object) and report the measured area and mean offset in pixels."""
    area_threshold = cfg.area_threshold(K)
    offset_threshold = cfg.offset_threshold(frame_rate)
    try:
        now = project_points(K, pose_now, bbox3d)
    except NotProjectableError:
        return Inspection(TrackerStatus.TRACKING_LOST, 0.0, float('nan'))

    area = visible_hull_area(now, K)
    if area < area_threshold:
        return Inspection(TrackerStatus.TRACKING_LOST, area, float('nan'))
    if pose_last is None:
        return Inspection(TrackerStatus.FINE_POSE, area, 0.0)

    try:
        last = project_points(K, pose_last, bbox3d)
    except NotProjectableError:
        # the previous pose had the object behind the camera: no offset to trust
        return Inspection(TrackerStatus.WRONG_POSE, area, float('inf'))

    offset = float(np.mean(np.linalg.norm(now - last, axis=1)))
    if offset >= offset_threshold:
        return Inspection(TrackerStatus.WRONG_POSE, area, offset)
    return Inspection(TrackerStatus.FINE_POSE, area, offset)


def pia_inspect(pose_now, pose_last, bbox3d, K, frame_rate, cfg):
    return inspect_pose(pose_now, pose_last, bbox3d, K, frame_rate, cfg).status
