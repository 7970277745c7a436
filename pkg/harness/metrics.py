"""
Tracking error metrics and the per-run report.

Errors are measured on the camera-from-object pose: position in millimetres,
orientation in degrees, and the mean pixel distance between the object's
bounding-box vertices projected under the estimated and the true pose.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from geom.camera import project_points
from geom.transforms import rotation_angle

# Mid-range phone CPU time relative to the desktop reference machine.
PIXEL2_FACTOR = 2.46

PPM = 'ppm'
PIM = 'pim'
PRM = 'prm'
STAGES = (PPM, PIM, PRM)


def projection_error(est, truth, bbox3d, K):
    """Mean pixel distance over the bbox vertices; raises NotProjectableError if either pose cannot be projected."""
    return float(np.mean(np.linalg.norm(project_points(K, est, bbox3d) - project_points(K, truth, bbox3d), axis=1)))


def pose_error(est, truth):
    """``(position error in mm, orientation error in degrees)``."""
    position = float(np.linalg.norm(est.translation - truth.translation)) * 1000.0
    orientation = math.degrees(rotation_angle(est.rotation @ truth.rotation.T))
    return position, orientation


@dataclass(frozen=True)
class FrameMetric:
    t: float
    frame_id: int
    status: str
    # False while the tracker has no valid pose to report
    valid: bool
    projectable: bool = True
    pos_mm: float = math.nan
    orient_deg: float = math.nan
    proj_px: float = math.nan

    @property
    def scored(self):
        return self.valid and self.projectable


@dataclass(frozen=True)
class CycleRecord:
    """Error just before and just after one applied backend correction."""

    request_id: int
    t0: float
    t1: float
    proj_before: float
    proj_after: float

    @property
    def reduced(self):
        return self.proj_after < self.proj_before


class StageTimer:
    """Accumulates call durations of one processing stage, in nanoseconds."""

    def __init__(self):
        self.count = 0
        self.total_ns = 0
        self.max_ns = 0

    def add(self, elapsed_ns):
        self.count += 1
        self.total_ns += elapsed_ns
        self.max_ns = max(self.max_ns, elapsed_ns)

    def stats(self):
        return TimingStats(
            count=self.count,
            mean_us=self.total_ns / self.count / 1e3 if self.count else 0.0,
            max_us=self.max_ns / 1e3,
        )


@dataclass(frozen=True)
class TimingStats:
    count: int
    mean_us: float
    max_us: float

    @property
    def pixel2_equiv_us(self):
        """Mean scaled to the phone-class CPU; a derived estimate, not a measurement."""
        return self.mean_us * PIXEL2_FACTOR

    def as_dict(self):
        return {
            'count': self.count,
            'mean_us': self.mean_us,
            'max_us': self.max_us,
            'pixel2_equiv_us': self.pixel2_equiv_us,
        }


def _mean(values):
    return float(np.mean(values)) if values else math.nan


def _max(values):
    return float(np.max(values)) if values else math.nan


def _json_float(value):
    if value is None or math.isnan(value):
        return None
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return value


@dataclass
class MetricsReport:
    script: str
    frame_rate: float
    backend: str
    seed: int
    duration: float
    frames: list = field(default_factory=list)
    cycles: list = field(default_factory=list)
    refinement_cycles: int = 0
    responses: int = 0
    timings: dict = field(default_factory=dict)

    def _scored(self, name):
        return [getattr(f, name) for f in self.frames if f.scored]

    @property
    def frame_count(self):
        return len(self.frames)

    @property
    def tracking_lost(self):
        """Frames without a valid tracker pose."""
        return sum(not f.valid for f in self.frames)

    @property
    def excluded_frames(self):
        """Frames with a valid pose that could not be projected."""
        return sum(f.valid and not f.projectable for f in self.frames)

    @property
    def mean_pos_mm(self):
        return _mean(self._scored('pos_mm'))

    @property
    def max_pos_mm(self):
        return _max(self._scored('pos_mm'))

    @property
    def mean_orient_deg(self):
        return _mean(self._scored('orient_deg'))

    @property
    def max_orient_deg(self):
        return _max(self._scored('orient_deg'))

    @property
    def mean_proj_px(self):
        return _mean(self._scored('proj_px'))

    @property
    def max_proj_px(self):
        return _max(self._scored('proj_px'))

    @property
    def final_second_proj_px(self):
        """Mean projection error over the last simulated second; ``inf`` when none of it could be scored."""
        start = self.duration - 1.0
        values = [f.proj_px for f in self.frames if f.t >= start and f.scored]
        return _mean(values) if values else math.inf

    @property
    def cycle_reduction(self):
        """Fraction of logged refinement cycles whose correction lowered the projection error."""
        if not self.cycles:
            return math.nan
        return sum(c.reduced for c in self.cycles) / len(self.cycles)

    def timing(self, stage):
        return self.timings.get(stage, TimingStats(0, 0.0, 0.0))

    def summary(self):
        return {
            'script': self.script,
            'frame_rate': self.frame_rate,
            'backend': self.backend,
            'seed': self.seed,
            'duration': self.duration,
            'frames': self.frame_count,
            'mean_pos_mm': self.mean_pos_mm,
            'max_pos_mm': self.max_pos_mm,
            'mean_orient_deg': self.mean_orient_deg,
            'max_orient_deg': self.max_orient_deg,
            'mean_proj_px': self.mean_proj_px,
            'max_proj_px': self.max_proj_px,
            'final_second_proj_px': self.final_second_proj_px,
            'refinement_cycles': self.refinement_cycles,
            'responses': self.responses,
            'tracking_lost': self.tracking_lost,
            'excluded_frames': self.excluded_frames,
            'cycle_reduction': self.cycle_reduction,
        }

    def as_dict(self, timings=True):
        """JSON-friendly form; NaN becomes ``None`` and infinities become strings."""
        data = {key: _json_float(value) if isinstance(value, float) else value
                for key, value in self.summary().items()}
        data['series'] = [
            {
                't': f.t, 'frame_id': f.frame_id, 'status': str(f.status), 'valid': f.valid,
                'projectable': f.projectable, 'pos_mm': _json_float(f.pos_mm),
                'orient_deg': _json_float(f.orient_deg), 'proj_px': _json_float(f.proj_px),
            }
            for f in self.frames
        ]
        data['cycles'] = [
            {'request_id': c.request_id, 't0': c.t0, 't1': c.t1, 'proj_before': c.proj_before,
             'proj_after': c.proj_after}
            for c in self.cycles
        ]
        if timings:
            data['timings'] = {stage: self.timing(stage).as_dict() for stage in STAGES}
        return data

    def same_as(self, other):
        """Equality of everything except wall-clock timings."""
        return self.as_dict(timings=False) == other.as_dict(timings=False)

