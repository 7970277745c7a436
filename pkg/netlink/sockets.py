"""
Length-prefixed message transport over stream sockets.

A frame is a 4-byte little-endian length followed by that many bytes. A
short read in the middle of a frame drops the connection; nothing tries to
resynchronize the stream.
"""

import logging
import socket

from .exceptions import ConnectionClosedError, ConnectionFailedError, FrameTooLargeError, FramingError
from .wire import LENGTH_PREFIX, MAX_FRAME_SIZE, frame

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0


def parse_address(address, default_port=None):
    """``'host:port'`` -> ``(host, port)``."""
    host, sep, port = address.rpartition(':')
    if not sep:
        if default_port is None:
            raise ValueError(f'Address {address!r} has no port')
        return address, int(default_port)
    try:
        port = int(port)
    except ValueError:
        raise ValueError(f'Invalid port in address {address!r}') from None
    if not 0 <= port <= 65535:
        raise ValueError(f'Port {port} out of range')
    return host or '127.0.0.1', port


class SocketEndpoint:

    def __init__(self, sock, max_frame_size=MAX_FRAME_SIZE):
        self.sock = sock
        self.max_frame_size = max_frame_size
        self.closed = False

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def close(self):
        if not self.closed:
            self.closed = True
            try:
                self.sock.close()
            except OSError:
                pass

    def send(self, data):
        if len(data) > self.max_frame_size:
            raise FrameTooLargeError(len(data), self.max_frame_size)
        try:
            self.sock.sendall(frame(data))
        except OSError as exc:
            self.close()
            raise ConnectionClosedError(f'Send failed: {exc}') from exc

    def _read_exactly(self, count, at_boundary):
        chunks = []
        remaining = count
        while remaining:
            try:
                chunk = self.sock.recv(min(remaining, 65536))
            except OSError as exc:
                self.close()
                raise ConnectionClosedError(f'Receive failed: {exc}') from exc
            if not chunk:
                self.close()
                if at_boundary and remaining == count:
                    raise ConnectionClosedError('Peer closed the connection')
                raise FramingError(f'Truncated frame: {count - remaining} of {count} bytes received')
            chunks.append(chunk)
            remaining -= len(chunk)
        return b''.join(chunks)

    def receive(self):
        """The next complete message."""
        (size,) = LENGTH_PREFIX.unpack(self._read_exactly(LENGTH_PREFIX.size, at_boundary=True))
        if size > self.max_frame_size:
            self.close()
            raise FrameTooLargeError(size, self.max_frame_size)
        return self._read_exactly(size, at_boundary=False)


def socket_transport(address, timeout=DEFAULT_TIMEOUT):
    """Client endpoint connected to ``'host:port'``."""
    host, port = parse_address(address) if isinstance(address, str) else address
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise ConnectionFailedError(f'Cannot connect to {host}:{port}: {exc}') from exc
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    logger.info('Connected to %s:%s', host, port)
    return SocketEndpoint(sock)


def memory_pair():
    """Two connected in-process endpoints."""
    a, b = socket.socketpair()
    return SocketEndpoint(a), SocketEndpoint(b)


class LockstepClient:
    """Sends one message and blocks for its reply; used to reach a remote backend request by request."""

    def __init__(self, endpoint):
        self.endpoint = endpoint

    def __call__(self, data):
        self.endpoint.send(data)
        return self.endpoint.receive()

    def close(self):
        self.endpoint.close()
