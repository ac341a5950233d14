"""Source endpoint interface plus simple in-process implementations.

An endpoint answers four requests, each returning the response body plus
the byte count that crossed the wire, and reports the current (simulated)
time so sessions can stamp installs and cycle boundaries.
"""

import abc
from pathlib import Path
from urllib.parse import quote

from .core import ResourceStore, StoreRole
from .errors import SourceUnavailable
from .syncdocs import (Capability, CapabilityDocument, build_change_list,
                       build_resource_list, serialize_capability_document,
                       serialize_change_list, serialize_resource_list)


class SourceEndpoint(abc.ABC):
    """Abstract source a destination synchronizes against."""

    @abc.abstractmethod
    def now(self) -> int:
        """Current simulated time in ms."""

    @abc.abstractmethod
    def get_capabilities(self):
        """-> (document bytes, byte count)."""

    @abc.abstractmethod
    def get_resource_list(self):
        """-> (document bytes, byte count)."""

    @abc.abstractmethod
    def get_change_list(self, from_time: int):
        """Changes in (from_time, now] -> (document bytes, byte count)."""

    @abc.abstractmethod
    def get_representation(self, uri: str):
        """-> (payload bytes or None if the resource is gone, byte count)."""


class ScriptedSourceEndpoint(SourceEndpoint):
    """In-memory source with a manually driven clock, for tests and replays."""

    def __init__(self, store: ResourceStore, change_log=None, clock: int = 0,
                 capabilities=(Capability.RESOURCE_LIST, Capability.CHANGE_LIST)):
        assert store.role is StoreRole.SOURCE_LEAD
        self.store = store
        self.change_log = list(change_log or [])
        self.clock = clock
        self.capabilities = set(capabilities)
        self.fail_after_requests = None  # fault injection for tests
        self._requests = 0

    def _count_request(self):
        if (self.fail_after_requests is not None
                and self._requests >= self.fail_after_requests):
            raise SourceUnavailable("endpoint scripted to fail")
        self._requests += 1

    def now(self) -> int:
        return self.clock

    def get_capabilities(self):
        self._count_request()
        doc = CapabilityDocument(
            {cap: "http://source.test/%s" % cap.value for cap in self.capabilities})
        data = serialize_capability_document(doc)
        return data, len(data)

    def get_resource_list(self):
        self._count_request()
        if Capability.RESOURCE_LIST not in self.capabilities:
            raise SourceUnavailable("resource_list capability not exposed")
        data = serialize_resource_list(build_resource_list(self.store, self.clock))
        return data, len(data)

    def get_change_list(self, from_time: int):
        self._count_request()
        if Capability.CHANGE_LIST not in self.capabilities:
            raise SourceUnavailable("change_list capability not exposed")
        data = serialize_change_list(
            build_change_list(self.change_log, from_time, self.clock))
        return data, len(data)

    def get_representation(self, uri: str):
        self._count_request()
        state = self.store.get(uri)
        if state is None:
            return None, 0
        payload = state.representation.payload
        if payload is None:
            raise SourceUnavailable("no payload stored for %s" % uri)
        return payload, len(payload)


class LocalDirectoryEndpoint(SourceEndpoint):
    """Serves the files under a directory as a frozen source (tests only).

    Each regular file ``rel/path`` becomes resource ``<base_uri>rel/path``
    with last_modified 0; only baseline capability is exposed.
    """

    def __init__(self, root, base_uri: str = "http://localdir.test/", clock: int = 0):
        self.root = Path(root)
        self.base_uri = base_uri
        self.clock = clock

    def _paths(self):
        return sorted(p for p in self.root.rglob("*") if p.is_file())

    def _uri_for(self, path: Path) -> str:
        rel = path.relative_to(self.root).as_posix()
        return self.base_uri + quote(rel, safe="/")

    def _store(self) -> ResourceStore:
        from .core import Representation, ResourceState
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        for path in self._paths():
            payload = path.read_bytes()
            store.put(ResourceState(self._uri_for(path),
                                    Representation.from_payload(payload), 0))
        return store

    def now(self) -> int:
        return self.clock

    def get_capabilities(self):
        doc = CapabilityDocument({Capability.RESOURCE_LIST: self.base_uri + "resourcelist.xml"})
        data = serialize_capability_document(doc)
        return data, len(data)

    def get_resource_list(self):
        data = serialize_resource_list(build_resource_list(self._store(), self.clock))
        return data, len(data)

    def get_change_list(self, from_time: int):
        raise SourceUnavailable("directory endpoint has no change log")

    def get_representation(self, uri: str):
        for path in self._paths():
            if self._uri_for(path) == uri:
                payload = path.read_bytes()
                return payload, len(payload)
        return None, 0
