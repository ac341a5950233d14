"""Destination-side synchronization procedures.

Baseline sync reconciles the full copy store against a resource list;
incremental sync replays ordered change lists for the window since the last
completed sync.  Both classify transferred bytes into required (payloads
that changed the copy store) and overhead (documents plus payloads fetched
but already current) for efficiency accounting.
"""

from dataclasses import dataclass, field
from typing import List, Optional

from .core import (ChangeType, Representation, ResourceState, ResourceStore,
                   StoreRole, change_sort_key, payload_digest)
from .errors import (CorruptDump, OutOfOrderChangeList, SourceUnavailable,
                     StaleSession)
from .metrics import CycleRecord
from .syncdocs import (Capability, ResourceDump, parse_capability_document,
                       parse_change_list, parse_resource_dump,
                       parse_resource_list, serialize_resource_dump)


class SyncObserver:
    """Callbacks for copy-state mutations; default implementation ignores all."""

    def on_install(self, uri, digest, size, timestamp):
        pass

    def on_delete(self, uri, timestamp):
        pass


@dataclass
class SyncOutcome:
    fetched: int = 0
    deleted: int = 0
    skipped: int = 0
    errors: int = 0
    warnings: int = 0
    bytes_required: int = 0
    bytes_overhead: int = 0
    completed_at: int = 0

    @property
    def bytes_total(self) -> int:
        return self.bytes_required + self.bytes_overhead


@dataclass
class SyncSession:
    """One destination's sync state against one source."""

    destination_store: ResourceStore
    last_sync_time: Optional[int] = None
    delete_orphans: bool = True  # baseline removes copies absent from the list
    check_capabilities: bool = True  # fetch the lookup file on the first cycle
    observer: SyncObserver = field(default_factory=SyncObserver)
    ledger: List[CycleRecord] = field(default_factory=list)
    capabilities: Optional[object] = None

    def __post_init__(self):
        if self.destination_store.role is not StoreRole.DESTINATION_COPY:
            raise ValueError("session store must have destination_copy role")


def _ensure_capability(session, source, outcome, capability: Capability):
    if not session.check_capabilities:
        return
    if session.capabilities is None:
        data, nbytes = source.get_capabilities()
        outcome.bytes_overhead += nbytes
        session.capabilities = parse_capability_document(data)
    if not session.capabilities.supports(capability):
        raise SourceUnavailable("source does not expose %s" % capability.value)


def _install(session, outcome, uri, payload, nbytes, last_modified, timestamp):
    """Install a fetched payload; classify its bytes by whether state changed."""
    store = session.destination_store
    digest = payload_digest(payload)
    size = len(payload)
    local = store.get(uri)
    changed = (local is None
               or local.representation.payload_digest != digest
               or local.representation.byte_size != size)
    outcome.fetched += 1
    if changed:
        store.put(ResourceState(uri, Representation(digest, size), last_modified))
        outcome.bytes_required += nbytes
        session.observer.on_install(uri, digest, size, timestamp)
    else:
        outcome.bytes_overhead += nbytes


def _finish(session, outcome, source, started_at, is_final=False):
    outcome.completed_at = source.now()
    session.ledger.append(CycleRecord(started_at, outcome.completed_at,
                                      outcome.bytes_required,
                                      outcome.bytes_overhead,
                                      is_final=is_final))
    return outcome


def baseline_sync(session: SyncSession, source, is_final: bool = False) -> SyncOutcome:
    """Full reconciliation against the source's current resource list.

    Entries whose local digest and size already match are skipped; local
    copies missing from the list are deleted (unless disabled).  On a
    mid-cycle SourceUnavailable, already-applied fetches remain applied and
    last_sync_time does not advance.
    """
    outcome = SyncOutcome()
    started_at = source.now()
    store = session.destination_store
    try:
        _ensure_capability(session, source, outcome, Capability.RESOURCE_LIST)
        data, nbytes = source.get_resource_list()
        outcome.bytes_overhead += nbytes
        rl = parse_resource_list(data)
        for entry in rl.entries:
            local = store.get(entry.uri)
            if (local is not None
                    and local.representation.payload_digest == entry.payload_digest
                    and local.representation.byte_size == entry.byte_size):
                outcome.skipped += 1
                continue
            payload, pbytes = source.get_representation(entry.uri)
            if payload is None:
                # listed resource vanished between list snapshot and fetch
                outcome.warnings += 1
                continue
            _install(session, outcome, entry.uri, payload, pbytes,
                     entry.last_modified, source.now())
        if session.delete_orphans:
            listed = {entry.uri for entry in rl.entries}
            for uri in [u for u in store.uris() if u not in listed]:
                store.remove(uri)
                outcome.deleted += 1
                session.observer.on_delete(uri, source.now())
        session.last_sync_time = rl.snapshot_time
    except SourceUnavailable:
        outcome.errors += 1
        _finish(session, outcome, source, started_at, is_final)
        raise
    return _finish(session, outcome, source, started_at, is_final)


def incremental_sync(session: SyncSession, source, is_final: bool = False) -> SyncOutcome:
    """Replay the change list for (last_sync_time, source now].

    Changes are applied chronologically without coalescing; each non-delete
    entry dereferences the resource's current lead state, as HTTP would.
    Create-of-present and delete-of-absent are tolerated as warnings.
    """
    if session.last_sync_time is None:
        raise StaleSession("incremental sync requires a completed baseline pass")
    outcome = SyncOutcome()
    started_at = source.now()
    store = session.destination_store
    try:
        _ensure_capability(session, source, outcome, Capability.CHANGE_LIST)
        data, nbytes = source.get_change_list(session.last_sync_time)
        outcome.bytes_overhead += nbytes
        cl = parse_change_list(data)
        keys = [change_sort_key(e) for e in cl.entries]
        if sorted(keys) != keys:
            raise OutOfOrderChangeList("change list violates canonical order")
        for entry in cl.entries:
            local = store.get(entry.uri)
            if entry.change_type is ChangeType.DELETE:
                if local is None:
                    outcome.warnings += 1
                else:
                    store.remove(entry.uri)
                    outcome.deleted += 1
                    session.observer.on_delete(entry.uri, source.now())
                continue
            if entry.change_type is ChangeType.CREATE and local is not None:
                outcome.warnings += 1  # upsert below
            payload, pbytes = source.get_representation(entry.uri)
            if payload is None:
                # already deleted at the source; a later delete entry follows
                outcome.warnings += 1
                continue
            _install(session, outcome, entry.uri, payload, pbytes,
                     entry.timestamp, source.now())
        session.last_sync_time = cl.until_time
    except SourceUnavailable:
        outcome.errors += 1
        _finish(session, outcome, source, started_at, is_final)
        raise
    return _finish(session, outcome, source, started_at, is_final)


def baseline_sync_from_dump(session: SyncSession, dump,
                            timestamp: int = 0) -> SyncOutcome:
    """Baseline reconciliation from a resource dump archive.

    ``dump`` is either the archive bytes or a ResourceDump (re-serialized
    to size the archive).  The whole archive is validated before any copy
    state changes, so digest mismatches leave the destination untouched.
    """
    if isinstance(dump, (bytes, bytearray)):
        archive_size = len(dump)
        dump = parse_resource_dump(bytes(dump))  # raises CorruptDump/MissingPayload
    elif isinstance(dump, ResourceDump):
        archive_size = len(serialize_resource_dump(dump))
    else:
        raise TypeError("dump must be bytes or ResourceDump")

    outcome = SyncOutcome()
    store = session.destination_store
    for entry in dump.manifest.entries:
        payload = dump.payloads[entry.uri]
        if (len(payload) != entry.byte_size
                or payload_digest(payload) != entry.payload_digest):
            raise CorruptDump("payload for %s does not match manifest" % entry.uri)

    for entry in dump.manifest.entries:
        local = store.get(entry.uri)
        if (local is not None
                and local.representation.payload_digest == entry.payload_digest
                and local.representation.byte_size == entry.byte_size):
            outcome.skipped += 1
            continue
        store.put(ResourceState(entry.uri,
                                Representation(entry.payload_digest, entry.byte_size),
                                entry.last_modified))
        outcome.fetched += 1
        outcome.bytes_required += entry.byte_size
        session.observer.on_install(entry.uri, entry.payload_digest,
                                    entry.byte_size, timestamp)
    if session.delete_orphans:
        listed = {entry.uri for entry in dump.manifest.entries}
        for uri in [u for u in store.uris() if u not in listed]:
            store.remove(uri)
            outcome.deleted += 1
            session.observer.on_delete(uri, timestamp)
    session.last_sync_time = dump.manifest.snapshot_time
    outcome.bytes_overhead = archive_size - outcome.bytes_required
    outcome.completed_at = timestamp
    session.ledger.append(CycleRecord(timestamp, timestamp,
                                      outcome.bytes_required,
                                      outcome.bytes_overhead))
    return outcome
