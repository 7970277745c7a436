from dataclasses import dataclass

from geom.transforms import Pose

from .exceptions import InvalidRateError
from .trajectories import as_trajectory


@dataclass(frozen=True)
class FrameEvent:
    t: float
    frame_id: int
    # Ground truth, read only by the oracle backend and the metrics.
    true_cam_from_world: Pose


def schedule_frames(script, frame_rate):
    """Evenly spaced camera frames from ``t = 0``, ``round(duration * frame_rate)`` of them."""
    if not frame_rate > 0:
        raise InvalidRateError(f'Frame rate must be positive, got {frame_rate}')
    trajectory = as_trajectory(script)
    count = int(round(trajectory.duration * frame_rate))
    for frame_id in range(count):
        t = frame_id / frame_rate
        yield FrameEvent(t=t, frame_id=frame_id, true_cam_from_world=trajectory.sample(t).cam_from_world)
