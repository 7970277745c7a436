"""Virtual clock for deterministic experiments."""

import heapq
import itertools
from dataclasses import dataclass, field

# Tie-break between events sharing a timestamp; lower runs first.
IMU = 0
FRAME = 1
NETWORK = 2
BACKEND = 3


@dataclass(order=True)
class ScheduledEvent:
    """Heap item ordered by time, then priority, then scheduling order."""

    t: float
    priority: int
    seq: int
    kind: str = field(compare=False)
    payload: object = field(compare=False, default=None)


class EventQueue:
    """Binary event heap driving the virtual time of one experiment."""

    def __init__(self, start=0.0):
        self.now = float(start)
        self._heap = []
        self._seq = itertools.count()

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def schedule(self, t, priority, kind, payload=None):
        if t < self.now:
            raise ValueError(f'Cannot schedule {kind} at t={t} before the current time {self.now}')
        event = ScheduledEvent(float(t), priority, next(self._seq), kind, payload)
        heapq.heappush(self._heap, event)
        return event

    def peek_time(self):
        return self._heap[0].t if self._heap else None

    def pop(self):
        """Remove the next event and advance the clock to it."""
        event = heapq.heappop(self._heap)
        self.now = event.t
        return event

    def __iter__(self):
        while self._heap:
            yield self.pop()
