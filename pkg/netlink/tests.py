import socket
import struct
import threading

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from .channel import Link, simulated_channel
from .exceptions import (
    BadMagicError,
    ConnectionClosedError,
    ConnectionFailedError,
    FrameTooLargeError,
    FramingError,
    MalformedMessageError,
    UnsupportedVersionError,
)
from .latency import SPLIT, LatencyModel, compute_delay
from .sockets import LockstepClient, SocketEndpoint, memory_pair, parse_address, socket_transport
from .wire import (
    HEADER,
    KIND_REQUEST,
    KIND_RESPONSE,
    MAX_FRAME_SIZE,
    STATUS_FAILED,
    STATUS_OK,
    WireMessage,
    decode,
    encode,
    from_nanos,
    to_nanos,
)

IDENTITY_ROW = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.2)

GOLDEN_RESPONSE = bytes.fromhex(
    '56494f54' '0100' '02' '0700000000000000' '0065cd1d00000000' '61000000'
    '00'
    '000000000000f03f' '0000000000000000' '0000000000000000'
    '0000000000000000' '000000000000f03f' '0000000000000000'
    '0000000000000000' '0000000000000000' '000000000000f03f'
    '0000000000000000' '0000000000000000' '333333333333f33f'
)


class ComputeDelayTests(SimpleTestCase):

    def test_bounds_of_the_default_model(self):
        model = LatencyModel()
        self.assertAlmostEqual(compute_delay(102400, model, 0.0), 35.625, places=12)
        self.assertAlmostEqual(compute_delay(102400, model, 30.0), 65.625, places=12)

    def test_instant_link(self):
        self.assertEqual(compute_delay(102400, LatencyModel.instant(), 0.0), 0.0)

    def test_size_must_be_positive(self):
        with self.assertRaises(ValueError):
            compute_delay(0, LatencyModel(), 0.0)

    def test_split_legs(self):
        model = LatencyModel(mode=SPLIT)
        self.assertAlmostEqual(model.request_leg_ms(5.0), 15.625 + 10.0 + 5.0)
        self.assertAlmostEqual(model.response_leg_ms(), 1.5625 + 10.0)
        self.assertAlmostEqual(LatencyModel().response_leg_ms(), 0.0)

    def test_validation(self):
        bad = [
            {'bandwidth_mbps': 0},
            {'propagation_delay_ms': -1},
            {'extra_delay_ms': (10, 5)},
            {'extra_delay_ms': (-1, 5)},
            {'request_size': 0},
            {'mode': 'bursty'},
            {'drop_probability': 1.0},
        ]
        for kwargs in bad:
            with self.subTest(**{k: str(v) for k, v in kwargs.items()}):
                with self.assertRaises(ValidationError):
                    LatencyModel(**kwargs)


class SimulatedChannelTests(SimpleTestCase):

    def test_delivery_window(self):
        client, server = simulated_channel(LatencyModel(rng_seed=5))
        for k in range(200):
            t = float(k)
            delivery = client.send(b'x', t)
            self.assertGreaterEqual(delivery.deliver_at, t + 0.035625)
            self.assertLessEqual(delivery.deliver_at, t + 0.065625)

    def test_not_receivable_before_delivery(self):
        client, server = simulated_channel(LatencyModel(rng_seed=1))
        delivery = client.send(b'ping', 1.0)
        self.assertEqual(server.receive(delivery.deliver_at - 1e-9), [])
        self.assertEqual(server.receive(delivery.deliver_at), [b'ping'])
        self.assertEqual(server.in_flight, 0)

    def test_fifo_even_when_draws_invert(self):
        link = Link('test', lambda draw: draw, (0.0, 30.0), np.random.default_rng(2))
        deliveries = [link.transmit(k, k * 0.001) for k in range(1000)]
        times = [d.deliver_at for d in deliveries]
        self.assertEqual(times, sorted(times))
        # some later draws were shorter and got held back behind their predecessor
        self.assertTrue(any(a == b for a, b in zip(times, times[1:])))

    def test_extra_delay_statistics(self):
        client, _ = simulated_channel(LatencyModel(rng_seed=9))
        extras = [(client.send(b'', float(k)).deliver_at - k) * 1e3 - 35.625 for k in range(10_000)]
        self.assertAlmostEqual(np.mean(extras), 15.0, delta=0.5)
        self.assertGreaterEqual(min(extras), -1e-6)
        self.assertLessEqual(max(extras), 30.0 + 1e-6)

    def test_aggregate_response_is_instant(self):
        _, server = simulated_channel(LatencyModel())
        self.assertEqual(server.send(b'pong', 2.5).deliver_at, 2.5)

    def test_deterministic_given_seed(self):
        a, _ = simulated_channel(LatencyModel(rng_seed=4))
        b, _ = simulated_channel(LatencyModel(rng_seed=4))
        self.assertEqual(
            [a.send(b'', k * 0.1).deliver_at for k in range(50)],
            [b.send(b'', k * 0.1).deliver_at for k in range(50)],
        )

    def test_optional_drops(self):
        client, server = simulated_channel(LatencyModel(rng_seed=3, drop_probability=0.5))
        with self.assertLogs('netlink.channel', level='WARNING'):
            results = [client.send(b'', float(k)) for k in range(100)]
        dropped = sum(r is None for r in results)
        self.assertGreater(dropped, 20)
        self.assertLess(dropped, 80)
        self.assertEqual(server.in_flight, 100 - dropped)


class WireTests(SimpleTestCase):

    def test_golden_response(self):
        message = WireMessage.response(7, to_nanos(0.5), STATUS_OK, IDENTITY_ROW)
        self.assertEqual(HEADER.size, 27)
        self.assertEqual(encode(message), GOLDEN_RESPONSE)
        decoded = decode(GOLDEN_RESPONSE)
        self.assertEqual(decoded.request_id, 7)
        self.assertEqual(from_nanos(decoded.t0_nanos), 0.5)
        self.assertEqual(decoded.response_fields(), (STATUS_OK, IDENTITY_ROW))

    def test_random_round_trips(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            request_id = int(rng.integers(0, 2 ** 62)) * 2 + int(rng.integers(0, 2))
            t0 = int(rng.integers(0, 2 ** 62))
            if rng.random() < 0.5:
                message = WireMessage.request(request_id, t0, rng.bytes(int(rng.integers(0, 64))))
            else:
                status = STATUS_OK if rng.random() < 0.5 else STATUS_FAILED
                message = WireMessage.response(request_id, t0, status, tuple(rng.normal(size=12)))
            self.assertEqual(decode(encode(message)), message)

    def test_bad_magic(self):
        with self.assertRaises(BadMagicError):
            decode(b'XXXX' + GOLDEN_RESPONSE[4:])

    def test_unknown_version(self):
        with self.assertRaises(UnsupportedVersionError):
            decode(GOLDEN_RESPONSE[:4] + struct.pack('<H', 2) + GOLDEN_RESPONSE[6:])

    def test_declared_length_must_match(self):
        with self.assertRaises(MalformedMessageError):
            decode(GOLDEN_RESPONSE[:-1])
        with self.assertRaises(MalformedMessageError):
            decode(GOLDEN_RESPONSE[:10])

    def test_invalid_fields(self):
        with self.assertRaises(MalformedMessageError):
            WireMessage(3, 1, 0)
        with self.assertRaises(MalformedMessageError):
            WireMessage(KIND_REQUEST, -1, 0)
        with self.assertRaises(MalformedMessageError):
            WireMessage(KIND_RESPONSE, 1, 0, b'\x00')
        with self.assertRaises(MalformedMessageError):
            WireMessage.request(1, 0, b'').response_fields()


class SocketTransportTests(SimpleTestCase):

    def test_round_trip_over_a_pair(self):
        a, b = memory_pair()
        with a, b:
            message = WireMessage.response(3, 12, STATUS_FAILED, IDENTITY_ROW)
            a.send(encode(message))
            self.assertEqual(decode(b.receive()), message)

    def test_largest_frame(self):
        a, b = memory_pair()
        payload = bytes(MAX_FRAME_SIZE)
        sender = threading.Thread(target=a.send, args=(payload,))
        sender.start()
        with a, b:
            self.assertEqual(len(b.receive()), MAX_FRAME_SIZE)
            sender.join()

    def test_oversized_frame(self):
        raw_a, raw_b = socket.socketpair()
        endpoint = SocketEndpoint(raw_b)
        with raw_a:
            raw_a.sendall(struct.pack('<I', MAX_FRAME_SIZE + 1))
            with self.assertRaises(FrameTooLargeError):
                endpoint.receive()
        self.assertTrue(endpoint.closed)

    def test_truncated_frame_drops_the_connection(self):
        raw_a, raw_b = socket.socketpair()
        endpoint = SocketEndpoint(raw_b)
        raw_a.sendall(struct.pack('<I', 100) + bytes(10))
        raw_a.close()
        with self.assertRaises(FramingError):
            endpoint.receive()
        self.assertTrue(endpoint.closed)

    def test_clean_close(self):
        a, b = memory_pair()
        a.close()
        with self.assertRaises(ConnectionClosedError):
            b.receive()

    def test_connection_refused(self):
        scratch = socket.socket()
        scratch.bind(('127.0.0.1', 0))
        port = scratch.getsockname()[1]
        scratch.close()
        with self.assertRaises(ConnectionFailedError):
            socket_transport(f'127.0.0.1:{port}', timeout=1.0)

    def test_lockstep_client(self):
        a, b = memory_pair()

        def echo():
            b.send(b.receive()[::-1])

        worker = threading.Thread(target=echo)
        worker.start()
        client = LockstepClient(a)
        self.assertEqual(client(b'abc'), b'cba')
        worker.join()
        client.close()
        b.close()

    def test_parse_address(self):
        self.assertEqual(parse_address('127.0.0.1:47474'), ('127.0.0.1', 47474))
        self.assertEqual(parse_address(':9000'), ('127.0.0.1', 9000))
        self.assertEqual(parse_address('example.org', default_port=47474), ('example.org', 47474))
        for bad in ('host:port', 'host:70000', 'nohost'):
            with self.subTest(bad), self.assertRaises(ValueError):
                parse_address(bad)
