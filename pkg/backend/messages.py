"""
Backend request and response values and their wire mapping.

A request's payload stands in for the camera frame sent to the backend. Its
size drives the simulated transmission time; its first 96 bytes carry the
ground-truth camera pose as 12 little-endian float64 values, the side channel
the oracle backend estimates from. The rest is zero padding.
"""

import math
import struct
from dataclasses import dataclass
from typing import Optional

from django.db import models

from geom.exceptions import GeometryError
from geom.transforms import Pose
from netlink.wire import STATUS_FAILED, STATUS_OK, WireMessage, from_nanos, to_nanos

from .exceptions import InvalidPayloadError

DEFAULT_REQUEST_SIZE = 102400
POSE_HINT = struct.Struct('<12d')
HINT_ROTATION_TOL = 1e-6


class ResponseStatus(models.TextChoices):
    OK = 'ok', 'OK'
    FAILED = 'failed', 'Failed'


_WIRE_STATUS = {ResponseStatus.OK: STATUS_OK, ResponseStatus.FAILED: STATUS_FAILED}
_STATUS_FROM_WIRE = {code: status for status, code in _WIRE_STATUS.items()}


def frame_payload(pose, size=DEFAULT_REQUEST_SIZE):
    """Synthetic frame of ``size`` bytes carrying ``pose``."""
    if size < POSE_HINT.size:
        raise InvalidPayloadError(f'Payload of {size} bytes cannot hold a {POSE_HINT.size} byte pose hint')
    return POSE_HINT.pack(*pose.to_row()) + bytes(size - POSE_HINT.size)


def read_pose_hint(payload):
    """The pose carried by ``payload``; raises :class:`InvalidPayloadError` when there is none."""
    if len(payload) < POSE_HINT.size:
        raise InvalidPayloadError(f'Payload of {len(payload)} bytes is too short for a pose hint')
    values = POSE_HINT.unpack_from(payload)
    if not all(math.isfinite(v) for v in values):
        raise InvalidPayloadError('Pose hint has non-finite values')
    try:
        pose = Pose.from_row(values)
    except GeometryError as exc:
        raise InvalidPayloadError(str(exc)) from exc
    if not pose.is_valid(HINT_ROTATION_TOL):
        raise InvalidPayloadError('Pose hint rotation is not orthonormal')
    return pose


@dataclass(frozen=True)
class PoseRequest:
    request_id: int
    t0: float
    payload: bytes
    # ground truth for the oracle; None when the payload does not carry one
    true_pose_hint: Optional[Pose] = None

    @classmethod
    def synthesize(cls, request_id, t0, true_pose, size=DEFAULT_REQUEST_SIZE):
        return cls(request_id, t0, frame_payload(true_pose, size), true_pose)

    def to_wire(self):
        return WireMessage.request(self.request_id, to_nanos(self.t0), self.payload)

    @classmethod
    def from_wire(cls, message):
        try:
            hint = read_pose_hint(message.body)
        except InvalidPayloadError:
            hint = None
        return cls(message.request_id, from_nanos(message.t0_nanos), message.body, hint)


@dataclass(frozen=True)
class PoseResponse:
    request_id: int
    t0: float
    pose: Pose
    status: str = ResponseStatus.OK

    @classmethod
    def failed(cls, request):
        return cls(request.request_id, request.t0, Pose.identity(), ResponseStatus.FAILED)

    @property
    def ok(self):
        return self.status == ResponseStatus.OK

    def to_wire(self):
        return WireMessage.response(
            self.request_id, to_nanos(self.t0), _WIRE_STATUS[ResponseStatus(self.status)], self.pose.to_row()
        )

    @classmethod
    def from_wire(cls, message):
        code, row = message.response_fields()
        return cls(message.request_id, from_nanos(message.t0_nanos), Pose.from_row(row), _STATUS_FROM_WIRE[code])
