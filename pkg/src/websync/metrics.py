"""Consistency, latency, and transfer-efficiency metrics over a sync run.

Consistency at an instant is the fraction of in-sync URI pairs over the
union of lead and copy URI sets (both directions of inconsistency count);
it is maintained online as a step function and averaged time-weighted.
Latency for a change resolves at the first instant >= its timestamp at
which the affected pair is in sync again (both-absent counts as in sync),
so superseded changes collapse onto the next in-sync instant.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import ChangeType, ResourceStore
from .errors import EmptyCycle, EmptyInterval
from .timebase import seconds_from_ms


@dataclass
class CycleRecord:
    """Byte accounting for one sync cycle."""

    cycle_start: int
    cycle_end: int
    bytes_required: int = 0
    bytes_overhead: int = 0
    is_final: bool = False

    @property
    def bytes_total(self) -> int:
        return self.bytes_required + self.bytes_overhead


@dataclass(frozen=True)
class LatencyRecord:
    uri: str
    change_type: ChangeType
    change_timestamp: int
    resolved_timestamp: int

    @property
    def latency_ms(self) -> int:
        return self.resolved_timestamp - self.change_timestamp


@dataclass(frozen=True)
class TraceEvent:
    """One copy-state mutation at the destination, for latency replay."""

    kind: str  # "install" | "delete"
    timestamp: int
    uri: str
    digest: Optional[str] = None
    size: Optional[int] = None


def consistency_of_maps(lead: Dict[str, tuple], copy: Dict[str, tuple]) -> float:
    """Brute-force consistency over URI -> (digest, size) snapshots."""
    union = len(lead.keys() | copy.keys())
    if union == 0:
        return 1.0
    matches = len(lead.items() & copy.items())
    return matches / union


def consistency_at(lead: ResourceStore, copy: ResourceStore) -> float:
    """Fraction of in-sync pairs over the union of both stores' URIs."""
    return consistency_of_maps(lead.digest_map(), copy.digest_map())


def average_consistency(breakpoints: List[Tuple[int, float]],
                        from_time: int, until_time: int) -> float:
    """Time-weighted mean of a step function given as (time, value) points.

    Each value holds from its breakpoint until the next; the series must
    start at or before ``from_time``.
    """
    if from_time >= until_time:
        raise EmptyInterval("from %d >= until %d" % (from_time, until_time))
    if not breakpoints or breakpoints[0][0] > from_time:
        raise EmptyInterval("series does not cover the interval start")
    total = 0.0
    current = None
    prev_t = from_time
    for t, value in breakpoints:
        if t <= from_time:
            current = value
            continue
        if t >= until_time:
            break
        total += current * (t - prev_t)
        prev_t = t
        current = value
    total += current * (until_time - prev_t)
    return total / (until_time - from_time)


def data_transfer_efficiency(cycle: CycleRecord) -> float:
    """Required bytes over total bytes for one cycle."""
    if cycle.bytes_total == 0:
        raise EmptyCycle("cycle moved zero bytes")
    return cycle.bytes_required / cycle.bytes_total


def average_efficiency(cycles: List[CycleRecord], include_final: bool = False,
                       include_initial: bool = False) -> float:
    """Mean per-cycle efficiency, skipping empty cycles.

    The bootstrap cycle at time zero (initial copy creation) and the final
    convergence cycle measure setup and teardown rather than steady-state
    synchronization, so both are excluded by default.  If the exclusions
    would leave nothing, all non-empty cycles are averaged instead.
    """
    kept = [c for c in cycles
            if c.bytes_total > 0 and (include_final or not c.is_final)
            and (include_initial or c.cycle_start > 0)]
    if not kept:
        kept = [c for c in cycles if c.bytes_total > 0]
    if not kept:
        raise EmptyCycle("no cycles with transferred bytes")
    values = [data_transfer_efficiency(c) for c in kept]
    return sum(values) / len(values)


def _pair_in_sync(lead: Dict[str, tuple], copy: Dict[str, tuple], uri: str) -> bool:
    return lead.get(uri) == copy.get(uri)  # both-absent compares equal


class ConsistencyTracker:
    """Online consistency series + latency bookkeeping for one run.

    Fed with source changes and destination copy mutations in timestamp
    order; maintains the step function incrementally (O(1) per event) so a
    brute-force recomputation can serve as an independent oracle.
    """

    def __init__(self, initial_lead: Dict[str, tuple],
                 initial_copy: Optional[Dict[str, tuple]] = None):
        self.lead = dict(initial_lead)
        self.copy = dict(initial_copy or {})
        self._matches = len(self.lead.items() & self.copy.items())
        self._union = len(self.lead.keys() | self.copy.keys())
        self.breakpoints: List[Tuple[int, float]] = [(0, self.value())]
        self._pending: Dict[str, List[Tuple[int, ChangeType]]] = {}
        self.latencies: List[LatencyRecord] = []

    def value(self) -> float:
        return 1.0 if self._union == 0 else self._matches / self._union

    def _contribution(self, uri):
        in_lead = uri in self.lead
        in_copy = uri in self.copy
        union = 1 if (in_lead or in_copy) else 0
        match = 1 if (in_lead and in_copy and self.lead[uri] == self.copy[uri]) else 0
        return union, match

    def _mutate(self, uri, side, entry, timestamp):
        before_u, before_m = self._contribution(uri)
        target = self.lead if side == "lead" else self.copy
        if entry is None:
            target.pop(uri, None)
        else:
            target[uri] = entry
        after_u, after_m = self._contribution(uri)
        self._union += after_u - before_u
        self._matches += after_m - before_m
        self.breakpoints.append((timestamp, self.value()))

    def _maybe_resolve(self, uri, timestamp):
        if uri in self._pending and _pair_in_sync(self.lead, self.copy, uri):
            for change_ts, change_type in self._pending.pop(uri):
                self.latencies.append(
                    LatencyRecord(uri, change_type, change_ts, timestamp))

    def on_source_change(self, change) -> None:
        if change.change_type is ChangeType.DELETE:
            entry = None
        else:
            rep = change.new_representation
            entry = (rep.payload_digest, rep.byte_size)
        self._mutate(change.uri, "lead", entry, change.timestamp)
        self._pending.setdefault(change.uri, []).append(
            (change.timestamp, change.change_type))
        self._maybe_resolve(change.uri, change.timestamp)

    def on_install(self, uri, digest, size, timestamp) -> None:
        self._mutate(uri, "copy", (digest, size), timestamp)
        self._maybe_resolve(uri, timestamp)

    def on_delete(self, uri, timestamp) -> None:
        self._mutate(uri, "copy", None, timestamp)
        self._maybe_resolve(uri, timestamp)

    @property
    def unresolved_count(self) -> int:
        return sum(len(v) for v in self._pending.values())


def record_latencies(change_log, copy_trace,
                     initial_lead: Optional[Dict[str, tuple]] = None,
                     initial_copy: Optional[Dict[str, tuple]] = None):
    """Pure latency replay over a change log and a copy-state trace.

    Returns (records, unresolved_count).  Serves as an independent check of
    the online tracker.
    """
    tracker = ConsistencyTracker(initial_lead or {}, initial_copy)
    events = [(c.timestamp, 0, i, "source", c) for i, c in enumerate(change_log)]
    events += [(e.timestamp, 1, i, "copy", e) for i, e in enumerate(copy_trace)]
    events.sort(key=lambda item: item[:3])  # source changes first on ties
    for _, _, _, side, payload in events:
        if side == "source":
            tracker.on_source_change(payload)
        elif payload.kind == "install":
            tracker.on_install(payload.uri, payload.digest, payload.size,
                               payload.timestamp)
        else:
            tracker.on_delete(payload.uri, payload.timestamp)
    return tracker.latencies, tracker.unresolved_count


@dataclass
class SimReport:
    """Everything a simulation run produced, summaries included."""

    config: "object"
    breakpoints: List[Tuple[int, float]]
    latencies: List[LatencyRecord]
    unresolved_count: int
    ledger: List[CycleRecord]
    counts: Dict[str, int] = field(default_factory=dict)
    average_consistency: float = 0.0
    average_latency: float = 0.0  # seconds
    average_efficiency: float = 0.0
    final_consistency: float = 0.0
    # raw material for oracle replays; digests only, no payload bytes
    initial_lead: Dict[str, tuple] = field(default_factory=dict)
    change_records: List["object"] = field(default_factory=list)
    copy_trace: List[TraceEvent] = field(default_factory=list)


def summarize(breakpoints, latencies, ledger, duration_ms):
    """Recompute the three headline metrics from raw series."""
    avg_c = average_consistency(breakpoints, 0, duration_ms)
    avg_l = (sum(seconds_from_ms(r.latency_ms) for r in latencies) / len(latencies)
             if latencies else 0.0)
    avg_e = average_efficiency(ledger)
    return avg_c, avg_l, avg_e
