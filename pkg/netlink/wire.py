"""
Binary wire format shared by the simulated and socket transports.

Every message is a fixed little-endian header followed by a kind-specific
body::

    magic "VIOT" | version u16 | kind u8 | request_id u64 | t0_nanos u64 | body_length u32

A request body is the opaque payload. A response body is a status byte and
the pose as 12 float64 values, rotation row-major then translation. On a
stream every message travels behind a 4-byte little-endian length prefix.
"""

import struct
from dataclasses import dataclass

from .exceptions import BadMagicError, FrameTooLargeError, MalformedMessageError, UnsupportedVersionError

MAGIC = b'VIOT'
VERSION = 1
KIND_REQUEST = 1
KIND_RESPONSE = 2
STATUS_OK = 0
STATUS_FAILED = 1

HEADER = struct.Struct('<4sHBQQI')
RESPONSE_BODY = struct.Struct('<B12d')
LENGTH_PREFIX = struct.Struct('<I')
MAX_FRAME_SIZE = 16 * 1024 * 1024

U64_MAX = 2 ** 64 - 1


def to_nanos(t):
    return int(round(t * 1e9))


def from_nanos(nanos):
    return nanos / 1e9


@dataclass(frozen=True)
class WireMessage:
    kind: int
    request_id: int
    t0_nanos: int
    body: bytes = b''

    def __post_init__(self):
        if self.kind not in (KIND_REQUEST, KIND_RESPONSE):
            raise MalformedMessageError(f'Unknown message kind {self.kind}')
        for name in ('request_id', 't0_nanos'):
            if not 0 <= getattr(self, name) <= U64_MAX:
                raise MalformedMessageError(f'{name} {getattr(self, name)} does not fit in 64 bits')
        if self.kind == KIND_RESPONSE and len(self.body) != RESPONSE_BODY.size:
            raise MalformedMessageError(
                f'A response body is {RESPONSE_BODY.size} bytes, got {len(self.body)}'
            )
        if HEADER.size + len(self.body) > MAX_FRAME_SIZE:
            raise FrameTooLargeError(HEADER.size + len(self.body), MAX_FRAME_SIZE)

    @classmethod
    def request(cls, request_id, t0_nanos, payload):
        return cls(KIND_REQUEST, request_id, t0_nanos, bytes(payload))

    @classmethod
    def response(cls, request_id, t0_nanos, status, pose_row):
        if status not in (STATUS_OK, STATUS_FAILED):
            raise MalformedMessageError(f'Unknown response status {status}')
        return cls(KIND_RESPONSE, request_id, t0_nanos, RESPONSE_BODY.pack(status, *pose_row))

    @property
    def is_request(self):
        return self.kind == KIND_REQUEST

    def response_fields(self):
        """``(status, pose_row)`` of a response message."""
        if self.kind != KIND_RESPONSE:
            raise MalformedMessageError('Not a response message')
        status, *row = RESPONSE_BODY.unpack(self.body)
        if status not in (STATUS_OK, STATUS_FAILED):
            raise MalformedMessageError(f'Unknown response status {status}')
        return status, tuple(row)

    def encode(self):
        header = HEADER.pack(MAGIC, VERSION, self.kind, self.request_id, self.t0_nanos, len(self.body))
        return header + self.body

    @classmethod
    def decode(cls, data):
        data = bytes(data)
        if len(data) < HEADER.size:
            raise MalformedMessageError(f'Message of {len(data)} bytes is shorter than the header')
        magic, version, kind, request_id, t0_nanos, body_length = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise BadMagicError(f'Bad magic {magic!r}')
        if version != VERSION:
            raise UnsupportedVersionError(version)
        if len(data) != HEADER.size + body_length:
            raise MalformedMessageError(
                f'Header declares a {body_length} byte body but {len(data) - HEADER.size} bytes follow'
            )
        return cls(kind, request_id, t0_nanos, data[HEADER.size:])


def encode(message):
    return message.encode()


def decode(data):
    return WireMessage.decode(data)


def frame(data):
    """Length-prefix ``data`` for a byte stream."""
    if len(data) > MAX_FRAME_SIZE:
        raise FrameTooLargeError(len(data), MAX_FRAME_SIZE)
    return LENGTH_PREFIX.pack(len(data)) + data
