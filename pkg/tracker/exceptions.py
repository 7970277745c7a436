class TrackerError(Exception):
    """Base class for frontend tracking errors"""


class NonMonotonicTimestampError(TrackerError):

    def __init__(self, previous, current):
        self.previous = previous
        self.current = current
        super().__init__(f'Timestamp {current!r} s does not advance past {previous!r} s')


class ImuGapError(TrackerError):
    """Two consecutive IMU samples are further apart than the propagator accepts"""


class InsufficientSamplesError(TrackerError):
    """Too few samples to estimate a quantity"""


class DegenerateIntervalError(TrackerError):
    """A time interval is too short to divide by"""
