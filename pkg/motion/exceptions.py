class MotionError(ValueError):
    """Base class for trajectory and sensor-synthesis errors"""


class TimeOutOfRangeError(MotionError):

    def __init__(self, t, duration):
        self.t = t
        self.duration = duration
        super().__init__(f'Time {t!r} s is outside the trajectory span [0, {duration!r}] s')


class InvalidRateError(MotionError):
    """A sample or frame rate is not strictly positive"""
