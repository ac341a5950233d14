"""Core synchronization model: resources, representations, states, changes.

A resource is a URI paired with exactly one deterministic representation.
Representation identity is decided by digest plus byte size; a digest match
is treated as payload equality (collisions are ignored), which lets stores
hold digests only instead of full payload bytes.
"""

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Optional
from urllib.parse import urlsplit

from .errors import ChangePreconditionViolation

DIGEST_ALGORITHM = "sha256"


def payload_digest(payload: bytes) -> str:
    """Lowercase hex digest identifying a payload."""
    return hashlib.sha256(payload).hexdigest()


@lru_cache(maxsize=65536)
def validate_uri(uri: str) -> str:
    """Check that ``uri`` is a non-empty absolute URI with scheme+authority.

    URIs are otherwise opaque: no normalization, equality is string equality.
    """
    if not uri:
        raise ValueError("empty URI")
    parts = urlsplit(uri)
    if not parts.scheme or not parts.netloc:
        raise ValueError("URI must be absolute with scheme and authority: %r" % uri)
    return uri


class ChangeType(str, Enum):
    CREATE = "create"
    UPDATE = "update"
    DELETE = "delete"


class StoreRole(str, Enum):
    SOURCE_LEAD = "source_lead"
    DESTINATION_COPY = "destination_copy"


@dataclass(frozen=True)
class Representation:
    """Digest/size identity of a payload; the bytes themselves are optional."""

    payload_digest: str
    byte_size: int
    payload: Optional[bytes] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.byte_size < 0:
            raise ValueError("byte_size must be >= 0")
        if self.payload is not None:
            if len(self.payload) != self.byte_size:
                raise ValueError("payload length does not match byte_size")
            if payload_digest(self.payload) != self.payload_digest:
                raise ValueError("payload does not match payload_digest")

    @classmethod
    def from_payload(cls, payload: bytes, keep_payload: bool = True):
        return cls(payload_digest(payload), len(payload),
                   payload if keep_payload else None)

    def without_payload(self):
        return replace(self, payload=None)


@dataclass(frozen=True)
class ResourceState:
    """One resource's current state: URI, single representation, lastmod."""

    uri: str
    representation: Representation
    last_modified: int  # simulated ms

    def __post_init__(self):
        validate_uri(self.uri)
        if self.last_modified < 0:
            raise ValueError("last_modified must be >= 0")


@dataclass(frozen=True)
class ChangeEvent:
    """The change triple: affected URI, type, timestamp (plus new payload)."""

    uri: str
    change_type: ChangeType
    timestamp: int  # simulated ms
    new_representation: Optional[Representation] = None

    def __post_init__(self):
        validate_uri(self.uri)
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        if (self.change_type is ChangeType.DELETE) != (self.new_representation is None):
            raise ValueError("new_representation must be absent iff delete")


def change_sort_key(entry):
    """Canonical change order: timestamp, then URI, then type."""
    return (entry.timestamp, entry.uri, entry.change_type.value)


class ResourceStore:
    """Mutable URI -> ResourceState map owned by a single agent."""

    def __init__(self, role: StoreRole, states=()):
        self.role = role
        self.entries = {}
        for state in states:
            self.entries[state.uri] = state

    def __len__(self):
        return len(self.entries)

    def __contains__(self, uri):
        return uri in self.entries

    def get(self, uri) -> Optional[ResourceState]:
        return self.entries.get(uri)

    def uris(self):
        return self.entries.keys()

    def states(self):
        return self.entries.values()

    def put(self, state: ResourceState):
        self.entries[state.uri] = state

    def remove(self, uri):
        del self.entries[uri]

    def digest_map(self):
        """URI -> (digest, size) snapshot, for comparisons and oracles."""
        return {u: (s.representation.payload_digest, s.representation.byte_size)
                for u, s in self.entries.items()}

    def clone(self):
        other = ResourceStore(self.role)
        other.entries = dict(self.entries)
        return other


def states_equal(a: Representation, b: Representation) -> bool:
    """Payload equivalence, decided by digest and byte size."""
    return a.payload_digest == b.payload_digest and a.byte_size == b.byte_size


def in_sync(copy: ResourceState, lead: ResourceState) -> bool:
    """True iff the copy's representation equals the lead's.

    Last-modified metadata does not participate.
    """
    return states_equal(copy.representation, lead.representation)


def apply_change(store: ResourceStore, change: ChangeEvent) -> ResourceStore:
    """Apply one change to a store, enforcing create/update/delete preconditions."""
    present = change.uri in store
    if change.change_type is ChangeType.CREATE:
        if present:
            raise ChangePreconditionViolation("create of existing URI %s" % change.uri)
        store.put(ResourceState(change.uri, change.new_representation, change.timestamp))
    elif change.change_type is ChangeType.UPDATE:
        if not present:
            raise ChangePreconditionViolation("update of missing URI %s" % change.uri)
        store.put(ResourceState(change.uri, change.new_representation, change.timestamp))
    else:
        if not present:
            raise ChangePreconditionViolation("delete of missing URI %s" % change.uri)
        store.remove(change.uri)
    return store
