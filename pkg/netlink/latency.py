"""
Network delay model.

The one-way delay of a message is its transmission time over the link
bandwidth, plus propagation, plus a uniformly distributed extra delay. Sizes
go through the kB -> kb -> Mb ladder (1 kB = 1024 bytes, 1 Mb = 1024 kb).
"""

import math
from dataclasses import dataclass

from django.core.exceptions import ValidationError

AGGREGATE = 'aggregate'
SPLIT = 'split'
MODE_CHOICES = [
    (AGGREGATE, 'Whole round trip charged on the request'),
    (SPLIT, 'Request and response charged separately'),
]


@dataclass(frozen=True)
class LatencyModel:
    bandwidth_mbps: float = 50.0
    propagation_delay_ms: float = 10.0
    extra_delay_ms: tuple = (0.0, 30.0)
    request_size: int = 102400
    response_size: int = 10240
    rng_seed: int = 0
    mode: str = AGGREGATE
    drop_probability: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'extra_delay_ms', tuple(float(v) for v in self.extra_delay_ms))
        self.validate()

    def validate(self):
        lo, hi = self.extra_delay_ms
        errors = {}
        if not self.bandwidth_mbps > 0:
            errors['bandwidth_mbps'] = 'Bandwidth must be positive.'
        if self.propagation_delay_ms < 0:
            errors['propagation_delay_ms'] = 'Propagation delay cannot be negative.'
        if lo < 0 or hi < lo:
            errors['extra_delay_ms'] = f'Extra delay range must satisfy 0 <= lo <= hi, got [{lo}, {hi}].'
        if self.request_size <= 0 or self.response_size <= 0:
            errors['request_size'] = 'Message sizes must be positive.'
        if self.mode not in dict(MODE_CHOICES):
            errors['mode'] = f'Unknown latency mode {self.mode!r}.'
        if not 0 <= self.drop_probability < 1:
            errors['drop_probability'] = 'Drop probability must lie in [0, 1).'
        if errors:
            raise ValidationError(errors)

    @classmethod
    def instant(cls, **kwargs):
        """A link with no delay at all."""
        return cls(bandwidth_mbps=math.inf, propagation_delay_ms=0.0, extra_delay_ms=(0.0, 0.0), **kwargs)

    @property
    def floor_ms(self):
        """Smallest possible request-leg delay."""
        return self.request_leg_ms(self.extra_delay_ms[0])

    def transmission_ms(self, size_bytes):
        return size_bytes / 1024 * 8 / (1024 * self.bandwidth_mbps) * 1e3

    def request_leg_ms(self, draw):
        if self.mode == AGGREGATE:
            return compute_delay(self.request_size, self, draw)
        return self.transmission_ms(self.request_size) + self.propagation_delay_ms + draw

    def response_leg_ms(self):
        if self.mode == AGGREGATE:
            return 0.0
        return self.transmission_ms(self.response_size) + self.propagation_delay_ms


def compute_delay(size_bytes, model, draw):
    """Round-trip delay in milliseconds for ``size_bytes`` with the extra-delay sample ``draw``."""
    if not size_bytes > 0:
        raise ValueError(f'Message size must be positive, got {size_bytes}')
    return model.transmission_ms(size_bytes) + 2 * model.propagation_delay_ms + draw
