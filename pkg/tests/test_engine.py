import pytest

from websync.core import (ChangeEvent, ChangeType, Representation,
                          ResourceState, ResourceStore, StoreRole,
                          apply_change, payload_digest)
from websync.endpoints import LocalDirectoryEndpoint, ScriptedSourceEndpoint
from websync.engine import (SyncSession, baseline_sync, baseline_sync_from_dump,
                            incremental_sync)
from websync.errors import (CorruptDump, SourceUnavailable, StaleSession)
from websync.syncdocs import Capability, build_resource_dump, serialize_resource_dump


def rep(payload):
    return Representation.from_payload(payload)


def lead_store(**entries):
    s = ResourceStore(StoreRole.SOURCE_LEAD)
    for name, payload in entries.items():
        s.put(ResourceState("http://s/%s" % name, rep(payload), 0))
    return s


def new_session(**kwargs):
    return SyncSession(ResourceStore(StoreRole.DESTINATION_COPY), **kwargs)


class TestBaselineSync:
    def test_empty_destination_fetches_all(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1", b=b"2", c=b"3"), clock=50)
        session = new_session()
        outcome = baseline_sync(session, source)
        assert outcome.fetched == 3 and outcome.deleted == 0
        assert session.destination_store.digest_map() == source.store.digest_map()
        assert session.last_sync_time == 50

    def test_idempotent_second_pass(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1", b=b"2"))
        session = new_session()
        baseline_sync(session, source)
        outcome = baseline_sync(session, source)
        assert outcome.fetched == 0 and outcome.skipped == 2 and outcome.deleted == 0

    def test_stale_and_orphan_handling(self):
        # source {a,b}; destination {b(stale), c} -> fetch a+b, delete c
        source = ScriptedSourceEndpoint(lead_store(a=b"1", b=b"2"))
        session = new_session()
        session.destination_store.put(
            ResourceState("http://s/b", rep(b"old"), 0))
        session.destination_store.put(
            ResourceState("http://s/c", rep(b"gone"), 0))
        outcome = baseline_sync(session, source)
        assert outcome.fetched == 2 and outcome.deleted == 1
        assert session.destination_store.digest_map() == source.store.digest_map()

    def test_orphan_deletion_can_be_disabled(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1"))
        session = new_session(delete_orphans=False)
        session.destination_store.put(ResourceState("http://s/z", rep(b"zz"), 0))
        outcome = baseline_sync(session, source)
        assert outcome.deleted == 0
        assert "http://s/z" in session.destination_store

    def test_lastmod_alone_never_triggers_fetch(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1"))
        session = new_session()
        baseline_sync(session, source)
        # bump lead lastmod without changing the payload
        state = source.store.get("http://s/a")
        source.store.put(ResourceState(state.uri, state.representation, 999))
        outcome = baseline_sync(session, source)
        assert outcome.fetched == 0 and outcome.skipped == 1

    def test_bytes_required_le_total(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1", b=b"22"))
        session = new_session()
        outcome = baseline_sync(session, source)
        assert 0 <= outcome.bytes_required <= outcome.bytes_total

    def test_capability_gate(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1"),
                                        capabilities=[Capability.CHANGE_LIST])
        with pytest.raises(SourceUnavailable):
            baseline_sync(new_session(), source)

    def test_partial_failure_keeps_applied_fetches(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1", b=b"2", c=b"3"))
        session = new_session()
        source.fail_after_requests = 4  # caps + list + two representation fetches
        with pytest.raises(SourceUnavailable):
            baseline_sync(session, source)
        assert len(session.destination_store) == 2
        assert session.last_sync_time is None  # window re-covered next cycle


class TestIncrementalSync:
    def make_synced_pair(self, **entries):
        source = ScriptedSourceEndpoint(lead_store(**entries))
        session = new_session()
        baseline_sync(session, source)
        return source, session

    def apply_at_source(self, source, change):
        apply_change(source.store, change)
        source.change_log.append(change)

    def test_requires_baseline_first(self):
        source = ScriptedSourceEndpoint(lead_store(a=b"1"))
        with pytest.raises(StaleSession):
            incremental_sync(new_session(), source)

    def test_empty_window_advances_last_sync(self):
        source, session = self.make_synced_pair(a=b"1")
        source.clock = 100
        outcome = incremental_sync(session, source)
        assert outcome.fetched == 0 and outcome.deleted == 0
        assert session.last_sync_time == 100

    def test_create_update_sequence_two_fetches(self):
        source, session = self.make_synced_pair()
        self.apply_at_source(source, ChangeEvent("http://s/u", ChangeType.CREATE,
                                                 10, rep(b"v1")))
        self.apply_at_source(source, ChangeEvent("http://s/u", ChangeType.UPDATE,
                                                 20, rep(b"v2")))
        source.clock = 30
        outcome = incremental_sync(session, source)
        # no coalescing: both entries dereference, second fetch is overhead
        assert outcome.fetched == 2
        state = session.destination_store.get("http://s/u")
        assert state.representation.payload_digest == payload_digest(b"v2")
        assert outcome.bytes_required == 2 and outcome.bytes_overhead > 2

    def test_delete_propagates(self):
        source, session = self.make_synced_pair(a=b"1", b=b"2")
        self.apply_at_source(source, ChangeEvent("http://s/a", ChangeType.DELETE, 10))
        source.clock = 20
        outcome = incremental_sync(session, source)
        assert outcome.deleted == 1
        assert "http://s/a" not in session.destination_store

    def test_delete_of_never_held_uri_is_warning(self):
        source, session = self.make_synced_pair(a=b"1")
        session.destination_store.remove("http://s/a")
        self.apply_at_source(source, ChangeEvent("http://s/a", ChangeType.DELETE, 10))
        source.clock = 20
        outcome = incremental_sync(session, source)
        assert outcome.deleted == 0 and outcome.warnings == 1
        assert len(session.destination_store) == 0

    def test_fetch_of_vanished_resource_is_warning(self):
        source, session = self.make_synced_pair(a=b"1")
        self.apply_at_source(source, ChangeEvent("http://s/a", ChangeType.UPDATE,
                                                 10, rep(b"v2")))
        self.apply_at_source(source, ChangeEvent("http://s/a", ChangeType.DELETE, 20))
        source.clock = 15  # window only covers the update; store already lost it
        outcome = incremental_sync(session, source)
        assert outcome.warnings == 1

    def test_windows_tile_without_duplication(self):
        source, session = self.make_synced_pair(a=b"1")
        for t, payload in ((10, b"x"), (20, b"y"), (30, b"z")):
            self.apply_at_source(source, ChangeEvent("http://s/a", ChangeType.UPDATE,
                                                     t, rep(payload)))
        total_fetched = 0
        for clock in (15, 25, 40):
            source.clock = clock
            total_fetched += incremental_sync(session, source).fetched
        assert total_fetched == 3
        assert session.destination_store.digest_map() == source.store.digest_map()


class TestWindowedEquivalence:
    """Windowed incremental replay ends in the same state as one baseline."""

    URIS = ["http://s/a", "http://s/b", "http://s/c"]

    def valid_moves(self, present, step):
        for uri in self.URIS:
            if uri in present:
                yield ChangeEvent(uri, ChangeType.UPDATE, step,
                                  rep(b"%s@%d" % (uri.encode(), step)))
                yield ChangeEvent(uri, ChangeType.DELETE, step)
            else:
                yield ChangeEvent(uri, ChangeType.CREATE, step,
                                  rep(b"%s@%d" % (uri.encode(), step)))

    def all_logs(self, max_len):
        stack = [((), frozenset())]
        while stack:
            log, present = stack.pop()
            yield log
            if len(log) < max_len:
                for move in self.valid_moves(present, len(log) + 1):
                    if move.change_type is ChangeType.CREATE:
                        nxt = present | {move.uri}
                    elif move.change_type is ChangeType.DELETE:
                        nxt = present - {move.uri}
                    else:
                        nxt = present
                    stack.append((log + (move,), nxt))

    def run_windowed(self, log, cut_times):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        source = ScriptedSourceEndpoint(store)
        session = new_session(check_capabilities=False)
        baseline_sync(session, source)  # t=0 baseline on the initial state
        for change in log:
            apply_change(store, change)
            source.change_log.append(change)
        for cut in list(cut_times) + [len(log) + 1]:
            source.clock = cut
            incremental_sync(session, source)
        return session.destination_store.digest_map()

    def run_single_baseline(self, log):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        for change in log:
            apply_change(store, change)
        source = ScriptedSourceEndpoint(store, clock=len(log) + 1)
        session = new_session(check_capabilities=False)
        baseline_sync(session, source)
        return session.destination_store.digest_map()

    @pytest.mark.slow
    def test_exhaustive_small_logs(self):
        checked = 0
        for log in self.all_logs(4):
            expected = self.run_single_baseline(log)
            singleton_cuts = list(range(1, len(log) + 1))
            for cuts in ((), (len(log) // 2,), singleton_cuts):
                assert self.run_windowed(log, cuts) == expected, log
            checked += 1
        assert checked > 100


class TestDumpSync:
    def test_dump_matches_baseline_end_state(self):
        store = lead_store(a=b"alpha", b=b"bravo")
        dump = build_resource_dump(store, 9)

        via_dump = new_session()
        baseline_sync_from_dump(via_dump, dump)

        via_list = new_session()
        baseline_sync(via_list, ScriptedSourceEndpoint(store, clock=9))

        assert via_dump.destination_store.digest_map() == \
            via_list.destination_store.digest_map()
        assert via_dump.last_sync_time == via_list.last_sync_time == 9

    def test_empty_dump_into_empty_destination(self):
        dump = build_resource_dump(lead_store(), 0)
        session = new_session()
        outcome = baseline_sync_from_dump(session, dump)
        assert outcome.fetched == 0 and len(session.destination_store) == 0

    def test_archive_bytes_accounting(self):
        store = lead_store(a=b"alpha", b=b"bravo")
        data = serialize_resource_dump(build_resource_dump(store, 9))
        session = new_session()
        outcome = baseline_sync_from_dump(session, data)
        assert outcome.bytes_total == len(data)
        assert outcome.bytes_required == len(b"alpha") + len(b"bravo")

    def test_corrupt_member_leaves_destination_unchanged(self):
        store = lead_store(a=b"alpha")
        data = serialize_resource_dump(build_resource_dump(store, 9))
        session = new_session()
        with pytest.raises(CorruptDump):
            baseline_sync_from_dump(session, data.replace(b"alpha", b"delta"))
        assert len(session.destination_store) == 0


class TestLocalDirectoryEndpoint:
    def test_baseline_from_directory(self, tmp_path):
        (tmp_path / "one.txt").write_bytes(b"first")
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "two.txt").write_bytes(b"second")
        endpoint = LocalDirectoryEndpoint(tmp_path)
        session = new_session()
        outcome = baseline_sync(session, endpoint)
        assert outcome.fetched == 2
        uris = sorted(session.destination_store.uris())
        assert uris == ["http://localdir.test/one.txt",
                        "http://localdir.test/sub/two.txt"]

    def test_no_change_list_capability(self, tmp_path):
        endpoint = LocalDirectoryEndpoint(tmp_path)
        session = new_session()
        baseline_sync(session, endpoint)
        with pytest.raises(SourceUnavailable):
            incremental_sync(session, endpoint)
