"""Deterministic discrete-event substrate: clock, event queue, network model.

All times are integer simulated milliseconds.  Ties in the event queue are
broken by enqueue sequence number so runs are fully reproducible.
"""

import heapq
from dataclasses import dataclass

from .errors import SchedulingInPast
from .timebase import MS_PER_SECOND


@dataclass(frozen=True)
class NetworkModel:
    """Affine transfer-time model replacing a real network.

    One connection per destination: requests serialize, each costing
    ``per_request_overhead`` plus bytes/bandwidth.  Durations are quantized
    up to whole milliseconds.
    """

    bandwidth: float  # bytes per simulated second
    per_request_overhead: float = 0.0  # simulated seconds per request

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.per_request_overhead < 0:
            raise ValueError("per_request_overhead must be >= 0")


def transfer_time(model: NetworkModel, payload_bytes: int) -> int:
    """Duration in ms to move ``payload_bytes`` over one request."""
    if payload_bytes < 0:
        raise ValueError("payload_bytes must be >= 0")
    overhead_ms = round(model.per_request_overhead * MS_PER_SECOND)
    wire_ms = -(-payload_bytes * MS_PER_SECOND // int(model.bandwidth))  # ceil
    return overhead_ms + wire_ms


class SimClock:
    """Monotone simulated clock with a (due, seq)-ordered event queue."""

    def __init__(self, start: int = 0):
        self.now = start
        self._queue = []
        self._seq = 0

    def pending(self) -> int:
        return len(self._queue)

    def schedule(self, due: int, event) -> None:
        """Enqueue a callable to run at ``due`` (>= now)."""
        if due < self.now:
            raise SchedulingInPast("due %d < now %d" % (due, self.now))
        heapq.heappush(self._queue, (due, self._seq, event))
        self._seq += 1

    def run_until(self, end: int) -> int:
        """Run every event due at or before ``end``; returns executed count."""
        executed = 0
        while self._queue and self._queue[0][0] <= end:
            due, _, event = heapq.heappop(self._queue)
            if due > self.now:
                self.now = due
            event()
            executed += 1
        if end > self.now:
            self.now = end
        return executed
