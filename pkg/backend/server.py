import itertools
import logging
import socketserver
import threading
import time

from netlink.exceptions import ConnectionClosedError, MalformedMessageError, TransportError
from netlink.sockets import SocketEndpoint
from netlink.wire import WireMessage

from .messages import PoseRequest, PoseResponse
from .oracle import estimate

logger = logging.getLogger(__name__)


class BackendServer:
    """Answers encoded requests for one connection."""

    def __init__(self, config, connection=0):
        self.config = config
        self.connection = connection
        self.handled = 0
        self._seen = set()
        self._lock = threading.Lock()

    def respond(self, request):
        with self._lock:
            duplicate = request.request_id in self._seen
            self._seen.add(request.request_id)
        if duplicate:
            logger.warning('Duplicate request id %s on connection %s', request.request_id, self.connection)
            response = PoseResponse.failed(request)
        else:
            response = estimate(request, self.config, self.connection)
        self.handled += 1
        return response

    def handle(self, data):
        """Encoded request in, encoded response out."""
        message = WireMessage.decode(data)
        if not message.is_request:
            raise MalformedMessageError('Backend expected a request message')
        return self.respond(PoseRequest.from_wire(message)).to_wire().encode()


def serve(transport, config, connection=0, realtime=True):
    """
    Answer every request arriving on ``transport`` until the peer closes it.

    Returns the number of requests answered. Other transport failures
    propagate to the caller.
    """
    server = BackendServer(config, connection)
    while True:
        try:
            data = transport.receive()
        except ConnectionClosedError:
            logger.info('Connection %s closed after %d requests', connection, server.handled)
            return server.handled
        reply = server.handle(data)
        if realtime and config.compute_delay > 0:
            time.sleep(config.compute_delay)
        transport.send(reply)


class _ConnectionHandler(socketserver.BaseRequestHandler):

    def handle(self):
        index = self.server.next_connection_index()
        logger.info('Connection %d accepted from %s:%s', index, *self.client_address[:2])
        endpoint = SocketEndpoint(self.request)
        try:
            serve(endpoint, self.server.backend_config, connection=index)
        except TransportError as exc:
            logger.warning('Connection %d dropped: %s', index, exc)
        finally:
            endpoint.close()


class PoseServer(socketserver.ThreadingTCPServer):
    """TCP backend; every connection runs in its own thread with its own random streams."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, config):
        super().__init__(address, _ConnectionHandler)
        self.backend_config = config
        self._indices = itertools.count()
        self._index_lock = threading.Lock()

    def next_connection_index(self):
        with self._index_lock:
            return next(self._indices)
