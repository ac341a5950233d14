"""Synthetic source + polling destination over the modeled network.

A run pre-generates the source's deterministic change stream (one change
per tick), then drives destination sync cycles whose requests serialize
over the network model; source changes that land mid-transfer are applied
at their own timestamps, so the consistency series interleaves correctly.
"""

import random
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from .core import (ChangeEvent, ChangeType, Representation, ResourceState,
                   ResourceStore, StoreRole, apply_change)
from .endpoints import SourceEndpoint
from .engine import SyncObserver, SyncSession, baseline_sync, incremental_sync
from .errors import ConfigError
from .metrics import ConsistencyTracker, SimReport, TraceEvent, summarize
from .simnet import NetworkModel, SimClock, transfer_time
from .syncdocs import (Capability, CapabilityDocument, build_change_list,
                       build_resource_list, serialize_capability_document,
                       serialize_change_list, serialize_resource_list)
from .timebase import ms_from_seconds, seconds_from_ms

URI_TEMPLATE = "http://sim/res/%d"

BASELINE = "baseline"
INCREMENTAL = "incremental"


def default_network() -> NetworkModel:
    # calibrated so a 10k-entry resource list takes on the order of 100 s,
    # making the list transfer the dominant latency term at desk scale
    return NetworkModel(bandwidth=20_000.0, per_request_overhead=0.002)


@dataclass(frozen=True)
class SimConfig:
    resource_count: int = 100
    change_interval: float = 10.0  # seconds between source changes
    sync_interval: float = 10.0  # seconds between destination sync starts
    sync_mode: str = BASELINE
    max_representation_size: int = 1000  # bytes
    duration: float = 2000.0  # seconds
    seed: int = 1
    change_mix: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    network: NetworkModel = field(default_factory=default_network)
    collect_trace: bool = True

    def validate(self) -> "SimConfig":
        if self.resource_count < 1:
            raise ConfigError("resource_count must be >= 1", key="resource_count")
        if self.change_interval <= 0:
            raise ConfigError("change_interval must be > 0", key="change_interval")
        if self.sync_interval <= 0:
            raise ConfigError("sync_interval must be > 0", key="sync_interval")
        if self.duration <= 0:
            raise ConfigError("duration must be > 0", key="duration")
        if self.max_representation_size < 1:
            raise ConfigError("max_representation_size must be >= 1",
                              key="max_representation_size")
        if self.sync_mode not in (BASELINE, INCREMENTAL):
            raise ConfigError("unknown mode %r" % self.sync_mode, key="sync_mode")
        if len(self.change_mix) != 3 or any(p < 0 for p in self.change_mix):
            raise ConfigError("change_mix needs 3 non-negative weights",
                              key="change_mix")
        if abs(sum(self.change_mix) - 1.0) > 1e-9:
            raise ConfigError("change_mix must sum to 1", key="change_mix")
        return self


class SourceAgent:
    """Lead store plus its append-only change log and RNG state."""

    def __init__(self, store: ResourceStore, rng: random.Random, next_id: int):
        self.store = store
        self.change_log: List[ChangeEvent] = []
        self.rng = rng
        self.next_id = next_id
        self._uris = list(store.uris())
        self._positions = {u: i for i, u in enumerate(self._uris)}

    def _add_uri(self, uri):
        self._positions[uri] = len(self._uris)
        self._uris.append(uri)

    def _remove_uri(self, uri):
        # O(1) swap-remove keeps sampling deterministic
        pos = self._positions.pop(uri)
        last = self._uris.pop()
        if last != uri:
            self._uris[pos] = last
            self._positions[last] = pos

    def sample_uri(self, rng) -> str:
        return self._uris[rng.randrange(len(self._uris))]


def _random_representation(rng, max_size) -> Representation:
    size = rng.randint(1, max_size)
    return Representation.from_payload(rng.randbytes(size))


def bootstrap_source(config: SimConfig) -> SourceAgent:
    """Create the initial collection: fixed URIs, random payload sizes."""
    config.validate()
    rng = random.Random(config.seed)
    store = ResourceStore(StoreRole.SOURCE_LEAD)
    for k in range(config.resource_count):
        rep = _random_representation(rng, config.max_representation_size)
        store.put(ResourceState(URI_TEMPLATE % k, rep, 0))
    return SourceAgent(store, rng, config.resource_count)


def generate_change(source: SourceAgent, now: int, change_mix, max_size: int,
                    rng: Optional[random.Random] = None) -> ChangeEvent:
    """Draw one change, apply it to the lead store, and log it.

    Update/delete drawn against an empty store falls back to create.
    """
    rng = rng if rng is not None else source.rng
    create_p, update_p, _ = change_mix
    draw = rng.random()
    if draw < create_p:
        kind = ChangeType.CREATE
    elif draw < create_p + update_p:
        kind = ChangeType.UPDATE
    else:
        kind = ChangeType.DELETE
    if kind is not ChangeType.CREATE and len(source.store) == 0:
        kind = ChangeType.CREATE

    if kind is ChangeType.CREATE:
        uri = URI_TEMPLATE % source.next_id
        source.next_id += 1
        event = ChangeEvent(uri, kind, now, _random_representation(rng, max_size))
        source._add_uri(uri)
    elif kind is ChangeType.UPDATE:
        uri = source.sample_uri(rng)
        event = ChangeEvent(uri, kind, now, _random_representation(rng, max_size))
    else:
        uri = source.sample_uri(rng)
        event = ChangeEvent(uri, kind, now)
        source._remove_uri(uri)

    apply_change(source.store, event)
    source.change_log.append(event)
    return event


class TimedSourceEndpoint(SourceEndpoint):
    """Serves a replayed source over the network model.

    Responses reflect the source state at request start; the endpoint clock
    then advances by the modeled transfer time, applying any source changes
    whose timestamps fall inside the transfer (they reach the tracker before
    the response "arrives").
    """

    def __init__(self, initial_store: ResourceStore, change_log, network,
                 on_source_change=None):
        self.store = initial_store
        self.change_log = change_log
        self.network = network
        self.on_source_change = on_source_change
        self.clock = 0
        self._cursor = 0

    def seek(self, target: int) -> None:
        """Advance simulated time, applying due source changes in order."""
        log = self.change_log
        while self._cursor < len(log) and log[self._cursor].timestamp <= target:
            event = log[self._cursor]
            apply_change(self.store, event)
            if self.on_source_change is not None:
                self.on_source_change(event)
            self._cursor += 1
        if target > self.clock:
            self.clock = target

    def _transfer(self, nbytes: int) -> None:
        self.seek(self.clock + transfer_time(self.network, nbytes))

    def now(self) -> int:
        return self.clock

    def get_capabilities(self):
        doc = CapabilityDocument({
            Capability.RESOURCE_LIST: "http://sim/capability/resourcelist",
            Capability.CHANGE_LIST: "http://sim/capability/changelist",
        })
        data = serialize_capability_document(doc)
        self._transfer(len(data))
        return data, len(data)

    def get_resource_list(self):
        data = serialize_resource_list(build_resource_list(self.store, self.clock))
        self._transfer(len(data))
        return data, len(data)

    def get_change_list(self, from_time: int):
        until = self.clock
        cl = build_change_list(self.change_log[:self._cursor], from_time, until)
        data = serialize_change_list(cl)
        self._transfer(len(data))
        return data, len(data)

    def get_representation(self, uri: str):
        state = self.store.get(uri)
        payload = None if state is None else state.representation.payload
        nbytes = 0 if payload is None else len(payload)
        self._transfer(nbytes)
        return payload, nbytes


@dataclass
class DestinationAgent:
    """Polling destination: its session plus the fixed sync cadence state."""

    session: SyncSession
    next_sync_at: int  # ms; nominal grid point of the next cycle
    skipped_cycles: int = 0
    cycles: int = 0


class _TraceObserver(SyncObserver):
    def __init__(self, tracker, trace):
        self.tracker = tracker
        self.trace = trace

    def on_install(self, uri, digest, size, timestamp):
        if self.trace is not None:
            self.trace.append(TraceEvent("install", timestamp, uri, digest, size))
        self.tracker.on_install(uri, digest, size, timestamp)

    def on_delete(self, uri, timestamp):
        if self.trace is not None:
            self.trace.append(TraceEvent("delete", timestamp, uri))
        self.tracker.on_delete(uri, timestamp)


def run_simulation(config: SimConfig) -> SimReport:
    """Run one configuration end to end and return its full report.

    Schedule: source changes every change_interval starting at one interval;
    sync cycles on a fixed grid from t=0 (the t=0 cycle is a baseline pass
    in both modes).  A cycle overrunning its grid starts the next cycle
    immediately on completion and counts fully missed grid points as
    skipped.  After ``duration`` the source freezes and one final sync runs,
    which must drive consistency to exactly 1.0.
    """
    config.validate()
    duration_ms = ms_from_seconds(config.duration)
    change_ms = ms_from_seconds(config.change_interval)
    sync_ms = ms_from_seconds(config.sync_interval)

    source = bootstrap_source(config)
    initial_store = source.store.clone()
    initial_lead = source.store.digest_map()

    tick = change_ms
    while tick <= duration_ms:
        generate_change(source, tick, config.change_mix,
                        config.max_representation_size)
        tick += change_ms
    change_log = source.change_log

    tracker = ConsistencyTracker(initial_lead)
    copy_trace = [] if config.collect_trace else None

    def feed_source_change(event):
        tracker.on_source_change(event)

    endpoint = TimedSourceEndpoint(initial_store, change_log, config.network,
                                   on_source_change=feed_source_change)
    session = SyncSession(ResourceStore(StoreRole.DESTINATION_COPY),
                          observer=_TraceObserver(tracker, copy_trace))
    agent = DestinationAgent(session, next_sync_at=0)
    outcomes = []
    clock = SimClock()

    def run_cycle():
        endpoint.seek(clock.now)
        if config.sync_mode == BASELINE or session.last_sync_time is None:
            outcomes.append(baseline_sync(session, endpoint))
        else:
            outcomes.append(incremental_sync(session, endpoint))
        agent.cycles += 1
        end = endpoint.clock
        missed = (end - agent.next_sync_at) // sync_ms  # grid points passed
        if missed >= 1:
            agent.skipped_cycles += missed - 1
            agent.next_sync_at += missed * sync_ms
            start_next = end
        else:
            agent.next_sync_at += sync_ms
            start_next = agent.next_sync_at
        if start_next <= duration_ms:
            clock.schedule(start_next, run_cycle)

    clock.schedule(0, run_cycle)
    clock.run_until(duration_ms)

    # freeze the source and converge with one final sync
    final_start = max(duration_ms, endpoint.clock)
    endpoint.seek(final_start)
    if config.sync_mode == BASELINE or session.last_sync_time is None:
        final_outcome = baseline_sync(session, endpoint, is_final=True)
    else:
        final_outcome = incremental_sync(session, endpoint, is_final=True)
    outcomes.append(final_outcome)

    avg_c, avg_l, avg_e = summarize(tracker.breakpoints, tracker.latencies,
                                    session.ledger, duration_ms)
    counts = {
        "changes": len(change_log),
        "cycles": agent.cycles,
        "final_cycles": 1,
        "skipped_cycles": agent.skipped_cycles,
        "fetched": sum(o.fetched for o in outcomes),
        "deleted": sum(o.deleted for o in outcomes),
        "skipped_entries": sum(o.skipped for o in outcomes),
        "warnings": sum(o.warnings for o in outcomes),
    }
    stripped_log = [c if c.new_representation is None else
                    replace(c, new_representation=c.new_representation.without_payload())
                    for c in change_log]
    return SimReport(
        config=config,
        breakpoints=tracker.breakpoints,
        latencies=tracker.latencies,
        unresolved_count=tracker.unresolved_count,
        ledger=session.ledger,
        counts=counts,
        average_consistency=avg_c,
        average_latency=avg_l,
        average_efficiency=avg_e,
        final_consistency=tracker.value(),
        initial_lead=initial_lead,
        change_records=stripped_log,
        copy_trace=copy_trace or [],
    )
