"""
Simulated transport on the experiment's virtual clock.

Each direction is a :class:`Link` with its own random stream. A message sent
at ``now`` becomes receivable at ``now + delay`` and never before an earlier
message of the same direction (FIFO).
"""

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

UPLINK = 'uplink'
DOWNLINK = 'downlink'


@dataclass(frozen=True)
class Delivery:
    sent_at: float
    deliver_at: float
    message: bytes


class Link:
    """One direction of a channel. ``leg`` maps an extra-delay draw (ms) to the leg delay (ms)."""

    def __init__(self, name, leg, extra_delay_ms, rng, drop_probability=0.0):
        self.name = name
        self.leg = leg
        self.extra_delay_ms = extra_delay_ms
        self.rng = rng
        self.drop_probability = drop_probability
        self.last_delivery = 0.0
        self.sent = 0
        self.dropped = 0

    def transmit(self, message, now):
        self.sent += 1
        draw = self.rng.uniform(*self.extra_delay_ms)
        if self.drop_probability and self.rng.random() < self.drop_probability:
            self.dropped += 1
            logger.warning('%s dropped a message sent at t=%.4f', self.name, now)
            return None
        deliver_at = max(now + self.leg(draw) / 1e3, self.last_delivery)
        self.last_delivery = deliver_at
        return Delivery(sent_at=now, deliver_at=deliver_at, message=message)


class ChannelEndpoint:
    """One side of a simulated channel: sends over its outgoing link, receives what the peer sent."""

    def __init__(self, name, link):
        self.name = name
        self.link = link
        self.peer = None
        self._inbox = deque()

    def send(self, message, now):
        """Queue ``message`` for the peer; returns its :class:`Delivery`, or ``None`` when dropped."""
        delivery = self.link.transmit(message, now)
        if delivery is not None:
            self.peer._inbox.append(delivery)
        return delivery

    def receive(self, now):
        """Messages whose delivery time has come, in sending order."""
        ready = []
        while self._inbox and self._inbox[0].deliver_at <= now:
            ready.append(self._inbox.popleft().message)
        return ready

    @property
    def in_flight(self):
        return len(self._inbox)


def simulated_channel(model):
    """``(client, server)`` endpoints joined by the delay ``model``."""
    uplink_seed, downlink_seed = np.random.SeedSequence(model.rng_seed).spawn(2)
    uplink = Link(
        UPLINK, model.request_leg_ms, model.extra_delay_ms, np.random.default_rng(uplink_seed),
        model.drop_probability,
    )
    downlink = Link(
        DOWNLINK, lambda draw: model.response_leg_ms(), model.extra_delay_ms, np.random.default_rng(downlink_seed),
        model.drop_probability,
    )
    client = ChannelEndpoint('client', uplink)
    server = ChannelEndpoint('server', downlink)
    client.peer, server.peer = server, client
    return client, server
