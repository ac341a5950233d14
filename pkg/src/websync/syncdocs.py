"""Synchronization documents: resource lists, change lists, dumps, capabilities.

Wire format is sitemap-style XML under a strict profile:

* root ``<urlset>`` in the sitemap namespace, with an extension namespace
  (prefix ``rs``) for sync metadata;
* a header ``<rs:md capability="resourcelist" at="TS"/>`` (resource lists) or
  ``<rs:md capability="changelist" from="TS" until="TS"/>`` (change lists);
* resource entry
  ``<url><loc>URI</loc><lastmod>TS</lastmod><rs:md hash="HEX" length="N"/></url>``
  with all fields mandatory;
* change entry uses the change timestamp as ``lastmod`` and carries
  ``<rs:md change="create|update|delete"/>`` with no hash/length.

Timestamps render via :func:`websync.timebase.format_ts`.  Serialization is
byte-deterministic; golden documents under ``tests/golden`` pin the bytes.

Dumps are ZIP archives with the manifest at member ``manifest.xml`` and each
payload at ``payloads/<percent-encoded-uri>`` (``urllib.parse.quote`` with
``safe=''``).  Archive metadata is fixed so equal dumps are byte-identical.
"""

import io
import xml.etree.ElementTree as ET
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple
from urllib.parse import quote, unquote
from xml.sax.saxutils import escape

from .core import (ChangeEvent, ChangeType, Representation, ResourceStore,
                   StoreRole, change_sort_key, payload_digest, validate_uri)
from .errors import (CorruptDump, InvalidWindow, MalformedDocument,
                     MissingPayload)
from .timebase import format_ts, parse_ts

SITEMAP_NS = "http://www.sitemaps.org/schemas/sitemap/0.9"
SYNC_NS = "urn:websync:terms"

_XML_DECL = '<?xml version="1.0" encoding="UTF-8"?>\n'
_URLSET_OPEN = '<urlset xmlns="%s" xmlns:rs="%s">\n' % (SITEMAP_NS, SYNC_NS)
_S_URL = "{%s}url" % SITEMAP_NS
_S_LOC = "{%s}loc" % SITEMAP_NS
_S_LASTMOD = "{%s}lastmod" % SITEMAP_NS
_RS_MD = "{%s}md" % SYNC_NS
_RS_CAPABILITY = "{%s}capability" % SYNC_NS

MANIFEST_MEMBER = "manifest.xml"
PAYLOAD_PREFIX = "payloads/"


class Capability(str, Enum):
    RESOURCE_LIST = "resource_list"
    CHANGE_LIST = "change_list"
    RESOURCE_DUMP = "resource_dump"
    CHANGE_DUMP = "change_dump"


@dataclass(frozen=True)
class ResourceListEntry:
    uri: str
    last_modified: int
    payload_digest: str
    byte_size: int


@dataclass(frozen=True)
class ResourceList:
    """Snapshot of a source's collection; entries sorted ascending by URI."""

    snapshot_time: int
    entries: Tuple[ResourceListEntry, ...]

    def __post_init__(self):
        uris = [e.uri for e in self.entries]
        if sorted(uris) != uris:
            raise ValueError("resource list entries must be sorted by URI")
        if len(set(uris)) != len(uris):
            raise ValueError("resource list entries must have unique URIs")


@dataclass(frozen=True)
class ChangeListEntry:
    uri: str
    change_type: ChangeType
    timestamp: int


@dataclass(frozen=True)
class ChangeList:
    """Ordered changes within the half-open window (from_time, until_time]."""

    from_time: int
    until_time: int
    entries: Tuple[ChangeListEntry, ...]

    def __post_init__(self):
        if self.from_time > self.until_time:
            raise InvalidWindow("from %d > until %d" % (self.from_time, self.until_time))
        keys = [change_sort_key(e) for e in self.entries]
        if sorted(keys) != keys:
            raise ValueError("change list entries must be in canonical order")
        for e in self.entries:
            if not (self.from_time < e.timestamp <= self.until_time):
                raise ValueError("entry timestamp %d outside window (%d, %d]"
                                 % (e.timestamp, self.from_time, self.until_time))


@dataclass(frozen=True)
class ResourceDump:
    manifest: ResourceList
    payloads: Dict[str, bytes]

    def __post_init__(self):
        manifest_uris = {e.uri for e in self.manifest.entries}
        if manifest_uris != set(self.payloads):
            raise ValueError("dump payload set does not match manifest")
        for e in self.manifest.entries:
            p = self.payloads[e.uri]
            if len(p) != e.byte_size or payload_digest(p) != e.payload_digest:
                raise ValueError("payload for %s does not match manifest" % e.uri)


@dataclass(frozen=True)
class ChangeDump:
    manifest: ChangeList
    payloads: Dict[str, bytes]

    def __post_init__(self):
        expected = set(_live_uris(self.manifest))
        if expected != set(self.payloads):
            raise ValueError("change dump payloads must cover exactly the "
                             "URIs whose final entry is non-delete")


@dataclass(frozen=True)
class CapabilityDocument:
    locations: Dict[Capability, str] = field(default_factory=dict)

    @property
    def available(self):
        return set(self.locations)

    def supports(self, capability: Capability) -> bool:
        return capability in self.locations


def _live_uris(cl: ChangeList):
    """URIs whose final entry in the window is a create/update."""
    final = {}
    for e in cl.entries:
        final[e.uri] = e.change_type
    return [u for u, t in final.items() if t is not ChangeType.DELETE]


# ---------------------------------------------------------------------------
# builders

def build_resource_list(source_store: ResourceStore, now: int) -> ResourceList:
    """Snapshot a lead store as a resource list, canonically sorted."""
    if source_store.role is not StoreRole.SOURCE_LEAD:
        raise ValueError("resource lists are built from a source_lead store")
    entries = tuple(
        ResourceListEntry(s.uri, s.last_modified,
                          s.representation.payload_digest,
                          s.representation.byte_size)
        for s in sorted(source_store.states(), key=lambda s: s.uri))
    return ResourceList(now, entries)


def build_change_list(change_log, from_time: int, until_time: int) -> ChangeList:
    """Window the append-only log to (from, until], canonically ordered.

    Changes are never coalesced: every logged change in the window appears.
    """
    if from_time > until_time:
        raise InvalidWindow("from %d > until %d" % (from_time, until_time))
    selected = [c for c in change_log if from_time < c.timestamp <= until_time]
    selected.sort(key=change_sort_key)
    entries = tuple(ChangeListEntry(c.uri, c.change_type, c.timestamp)
                    for c in selected)
    return ChangeList(from_time, until_time, entries)


def build_resource_dump(source_store: ResourceStore, now: int) -> ResourceDump:
    manifest = build_resource_list(source_store, now)
    payloads = {}
    for e in manifest.entries:
        rep = source_store.get(e.uri).representation
        if rep.payload is None:
            raise MissingPayload("no payload bytes stored for %s" % e.uri)
        payloads[e.uri] = rep.payload
    return ResourceDump(manifest, payloads)


def build_change_dump(change_log, payload_lookup, from_time: int,
                      until_time: int) -> ChangeDump:
    """Package a change list with payloads for its surviving URIs.

    ``payload_lookup`` maps URI -> bytes (mapping or callable) and must serve
    every URI whose final windowed entry is non-delete.
    """
    manifest = build_change_list(change_log, from_time, until_time)
    getter = payload_lookup.get if hasattr(payload_lookup, "get") else payload_lookup
    payloads = {}
    for uri in _live_uris(manifest):
        payload = getter(uri)
        if payload is None:
            raise MissingPayload("no payload available for %s" % uri)
        payloads[uri] = payload
    return ChangeDump(manifest, payloads)


# ---------------------------------------------------------------------------
# XML serialization

def serialize_resource_list(rl: ResourceList) -> bytes:
    parts = [_XML_DECL, _URLSET_OPEN,
             '<rs:md capability="resourcelist" at="%s"/>\n' % format_ts(rl.snapshot_time)]
    for e in rl.entries:
        parts.append(
            '<url><loc>%s</loc><lastmod>%s</lastmod>'
            '<rs:md hash="%s" length="%d"/></url>\n'
            % (escape(e.uri), format_ts(e.last_modified), e.payload_digest, e.byte_size))
    parts.append('</urlset>\n')
    return "".join(parts).encode("utf-8")


def serialize_change_list(cl: ChangeList) -> bytes:
    parts = [_XML_DECL, _URLSET_OPEN,
             '<rs:md capability="changelist" from="%s" until="%s"/>\n'
             % (format_ts(cl.from_time), format_ts(cl.until_time))]
    for e in cl.entries:
        parts.append(
            '<url><loc>%s</loc><lastmod>%s</lastmod>'
            '<rs:md change="%s"/></url>\n'
            % (escape(e.uri), format_ts(e.timestamp), e.change_type.value))
    parts.append('</urlset>\n')
    return "".join(parts).encode("utf-8")


def serialize_capability_document(doc: CapabilityDocument) -> bytes:
    parts = [_XML_DECL, '<capabilities xmlns="%s">\n' % SYNC_NS]
    for cap in sorted(doc.locations, key=lambda c: c.value):
        parts.append('<capability name="%s" loc="%s"/>\n'
                     % (cap.value, escape(doc.locations[cap], {'"': "&quot;"})))
    parts.append('</capabilities>\n')
    return "".join(parts).encode("utf-8")


def _parse_root(data: bytes):
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedDocument("XML parse error: %s" % exc,
                                position="%d:%d" % exc.position) from None


def _parse_ts_field(text, what, position):
    if text is None:
        raise MalformedDocument("missing %s" % what, position=position)
    try:
        return parse_ts(text)
    except ValueError as exc:
        raise MalformedDocument("bad %s: %s" % (what, exc), position=position) from None


def _header_md(root):
    header = root.find(_RS_MD)
    if header is None:
        raise MalformedDocument("missing header md element", position="header")
    return header


def _entry_elements(root, index):
    url = root[index]
    position = "entry %d" % index
    if url.tag != _S_URL:
        raise MalformedDocument("unexpected element %s" % url.tag, position=position)
    loc = url.find(_S_LOC)
    if loc is None or not (loc.text or "").strip():
        raise MalformedDocument("missing loc", position=position)
    uri = loc.text.strip()
    try:
        validate_uri(uri)
    except ValueError as exc:
        raise MalformedDocument(str(exc), position=position) from None
    lastmod = url.find(_S_LASTMOD)
    lm_text = lastmod.text.strip() if lastmod is not None and lastmod.text else None
    md = url.find(_RS_MD)
    if md is None:
        raise MalformedDocument("missing md element", position=position)
    return uri, lm_text, md, position


def parse_resource_list(data: bytes) -> ResourceList:
    root = _parse_root(data)
    if root.tag != "{%s}urlset" % SITEMAP_NS:
        raise MalformedDocument("root element is not urlset", position="root")
    header = _header_md(root)
    if header.get("capability") != "resourcelist":
        raise MalformedDocument("document is not a resource list", position="header")
    snapshot_time = _parse_ts_field(header.get("at"), "at timestamp", "header")
    entries = []
    for index in range(1, len(root)):
        uri, lm_text, md, position = _entry_elements(root, index)
        last_modified = _parse_ts_field(lm_text, "lastmod", position)
        digest = md.get("hash")
        length = md.get("length")
        if digest is None:
            raise MalformedDocument("missing hash attribute", position=position)
        if length is None:
            raise MalformedDocument("missing length attribute", position=position)
        if md.get("change") is not None:
            raise MalformedDocument("change attribute not allowed in resource list",
                                    position=position)
        try:
            byte_size = int(length)
        except ValueError:
            raise MalformedDocument("bad length %r" % length, position=position) from None
        if byte_size < 0:
            raise MalformedDocument("negative length", position=position)
        entries.append(ResourceListEntry(uri, last_modified, digest, byte_size))
    try:
        return ResourceList(snapshot_time, tuple(entries))
    except ValueError as exc:
        raise MalformedDocument(str(exc)) from None


def parse_change_list(data: bytes) -> ChangeList:
    root = _parse_root(data)
    if root.tag != "{%s}urlset" % SITEMAP_NS:
        raise MalformedDocument("root element is not urlset", position="root")
    header = _header_md(root)
    if header.get("capability") != "changelist":
        raise MalformedDocument("document is not a change list", position="header")
    from_time = _parse_ts_field(header.get("from"), "from timestamp", "header")
    until_time = _parse_ts_field(header.get("until"), "until timestamp", "header")
    entries = []
    for index in range(1, len(root)):
        uri, lm_text, md, position = _entry_elements(root, index)
        timestamp = _parse_ts_field(lm_text, "lastmod", position)
        token = md.get("change")
        if token is None:
            raise MalformedDocument("missing change attribute", position=position)
        if md.get("hash") is not None or md.get("length") is not None:
            raise MalformedDocument("hash/length not allowed in change list",
                                    position=position)
        try:
            change_type = ChangeType(token)
        except ValueError:
            raise MalformedDocument("unknown change type %r" % token,
                                    position=position) from None
        entries.append(ChangeListEntry(uri, change_type, timestamp))
    try:
        return ChangeList(from_time, until_time, tuple(entries))
    except (ValueError, InvalidWindow) as exc:
        raise MalformedDocument(str(exc)) from None


def parse_capability_document(data: bytes) -> CapabilityDocument:
    root = _parse_root(data)
    if root.tag != "{%s}capabilities" % SYNC_NS:
        raise MalformedDocument("root element is not capabilities", position="root")
    locations = {}
    for index, elem in enumerate(root):
        position = "capability %d" % index
        if elem.tag != _RS_CAPABILITY:
            raise MalformedDocument("unexpected element %s" % elem.tag, position=position)
        name = elem.get("name")
        loc = elem.get("loc")
        if name is None or loc is None:
            raise MalformedDocument("capability needs name and loc", position=position)
        try:
            cap = Capability(name)
        except ValueError:
            raise MalformedDocument("unknown capability %r" % name,
                                    position=position) from None
        if cap in locations:
            raise MalformedDocument("duplicate capability %r" % name, position=position)
        locations[cap] = loc
    return CapabilityDocument(locations)


def document_byte_size(doc) -> int:
    """Exact byte length of a document's canonical serialization."""
    if isinstance(doc, (bytes, bytearray)):
        return len(doc)
    if isinstance(doc, ResourceList):
        return len(serialize_resource_list(doc))
    if isinstance(doc, ChangeList):
        return len(serialize_change_list(doc))
    if isinstance(doc, CapabilityDocument):
        return len(serialize_capability_document(doc))
    if isinstance(doc, ResourceDump):
        return len(serialize_resource_dump(doc))
    if isinstance(doc, ChangeDump):
        return len(serialize_change_dump(doc))
    raise TypeError("unsupported document type: %r" % type(doc))


# ---------------------------------------------------------------------------
# dump archives

def payload_member_name(uri: str) -> str:
    return PAYLOAD_PREFIX + quote(uri, safe="")


def _write_archive(manifest_bytes: bytes, payloads: Dict[str, bytes]) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        members = [(MANIFEST_MEMBER, manifest_bytes)]
        members += sorted((payload_member_name(u), p) for u, p in payloads.items())
        for name, data in members:
            # fixed metadata keeps equal dumps byte-identical
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)
    return buf.getvalue()


def serialize_resource_dump(dump: ResourceDump) -> bytes:
    return _write_archive(serialize_resource_list(dump.manifest), dump.payloads)


def serialize_change_dump(dump: ChangeDump) -> bytes:
    return _write_archive(serialize_change_list(dump.manifest), dump.payloads)


def _read_archive(data: bytes):
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise CorruptDump("not a valid archive: %s" % exc) from None
    names = zf.namelist()
    if MANIFEST_MEMBER not in names:
        raise MissingPayload("archive has no %s member" % MANIFEST_MEMBER)
    payloads = {}
    try:
        for name in names:
            if name == MANIFEST_MEMBER:
                continue
            if not name.startswith(PAYLOAD_PREFIX):
                raise CorruptDump("unexpected archive member %r" % name)
            payloads[unquote(name[len(PAYLOAD_PREFIX):])] = zf.read(name)
        return zf.read(MANIFEST_MEMBER), payloads
    except zipfile.BadZipFile as exc:
        raise CorruptDump("damaged archive member: %s" % exc) from None


def parse_resource_dump(data: bytes) -> ResourceDump:
    manifest_bytes, payloads = _read_archive(data)
    manifest = parse_resource_list(manifest_bytes)
    by_uri = {e.uri: e for e in manifest.entries}
    if set(by_uri) != set(payloads):
        raise MissingPayload("payload members do not match manifest entries")
    for uri, entry in by_uri.items():
        p = payloads[uri]
        if len(p) != entry.byte_size or payload_digest(p) != entry.payload_digest:
            raise CorruptDump("payload for %s does not match manifest" % uri)
    return ResourceDump(manifest, payloads)


def parse_change_dump(data: bytes) -> ChangeDump:
    manifest_bytes, payloads = _read_archive(data)
    manifest = parse_change_list(manifest_bytes)
    expected = set(_live_uris(manifest))
    if expected != set(payloads):
        raise MissingPayload("payload members do not match live manifest entries")
    return ChangeDump(manifest, payloads)


def change_dump_events(dump: ChangeDump):
    """Manifest entries re-hydrated as ChangeEvents, using dump payloads.

    The archive holds one payload per URI (its final state), so superseded
    non-delete entries reuse that payload; non-delete entries whose URI ends
    deleted have no materializable payload and are dropped (their effect is
    erased by the later delete anyway).
    """
    events = []
    for e in dump.manifest.entries:
        if e.change_type is ChangeType.DELETE:
            events.append(ChangeEvent(e.uri, e.change_type, e.timestamp))
        else:
            payload = dump.payloads.get(e.uri)
            if payload is None:
                continue
            rep = Representation.from_payload(payload)
            events.append(ChangeEvent(e.uri, e.change_type, e.timestamp, rep))
    return events
