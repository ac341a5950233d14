import pytest
from hypothesis import given, strategies as st

from websync.core import (ChangeEvent, ChangeType, Representation,
                          ResourceState, ResourceStore, StoreRole,
                          apply_change, in_sync, payload_digest, states_equal,
                          validate_uri)
from websync.errors import ChangePreconditionViolation


def rep(payload=b"hello"):
    return Representation.from_payload(payload)


class TestUri:
    def test_valid(self):
        validate_uri("http://example.org/a/b")
        validate_uri("sim://host/res")

    @pytest.mark.parametrize("bad", ["", "res/1", "http:///nopath-authority",
                                     "/abs/path", "example.org/x"])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            validate_uri(bad)


class TestRepresentation:
    def test_payload_must_match_digest(self):
        with pytest.raises(ValueError):
            Representation("00" * 32, 5, b"hello")
        with pytest.raises(ValueError):
            Representation(payload_digest(b"hello"), 4, b"hello")

    def test_negative_size(self):
        with pytest.raises(ValueError):
            Representation("ab", -1)

    def test_without_payload_keeps_identity(self):
        r = rep()
        bare = r.without_payload()
        assert bare.payload is None
        assert states_equal(r, bare)


class TestStatesEqual:
    def test_identical_values(self):
        assert states_equal(Representation("ab", 3), Representation("ab", 3))

    def test_differing_digest(self):
        assert not states_equal(Representation("ab", 3), Representation("cd", 3))

    def test_differing_size(self):
        assert not states_equal(Representation("ab", 3), Representation("ab", 4))

    def test_independent_digests_agree(self):
        # digest computed twice over the same payload compares equal
        a = Representation.from_payload(b"hello")
        b = Representation(payload_digest(b"hello"), len(b"hello"))
        assert states_equal(a, b)


class TestInSync:
    def test_identical(self):
        a = ResourceState("http://s/r", rep(), 5)
        b = ResourceState("http://s/r", rep(), 5)
        assert in_sync(a, b)

    def test_lastmod_is_metadata_only(self):
        a = ResourceState("http://s/r", rep(), 5)
        b = ResourceState("http://s/r", rep(), 99)
        assert in_sync(a, b) and in_sync(b, a)

    def test_different_size(self):
        a = ResourceState("http://s/r", rep(b"xy"), 5)
        b = ResourceState("http://s/r", rep(b"xyz"), 5)
        assert not in_sync(a, b)

    @given(st.binary(max_size=64))
    def test_reflexive_symmetric(self, payload):
        r = Representation.from_payload(payload)
        assert states_equal(r, r)


class TestChangeEvent:
    def test_delete_must_omit_representation(self):
        with pytest.raises(ValueError):
            ChangeEvent("http://s/r", ChangeType.DELETE, 1, rep())
        with pytest.raises(ValueError):
            ChangeEvent("http://s/r", ChangeType.UPDATE, 1, None)

    def test_negative_timestamp(self):
        with pytest.raises(ValueError):
            ChangeEvent("http://s/r", ChangeType.DELETE, -1)


class TestApplyChange:
    def test_create_into_empty(self):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        apply_change(store, ChangeEvent("http://s/r", ChangeType.CREATE, 7, rep()))
        assert len(store) == 1
        assert store.get("http://s/r").last_modified == 7

    def test_delete_only_entry(self):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        apply_change(store, ChangeEvent("http://s/r", ChangeType.CREATE, 1, rep()))
        apply_change(store, ChangeEvent("http://s/r", ChangeType.DELETE, 2))
        assert len(store) == 0

    def test_identical_update_accepted_lastmod_advances(self):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        apply_change(store, ChangeEvent("http://s/r", ChangeType.CREATE, 1, rep()))
        apply_change(store, ChangeEvent("http://s/r", ChangeType.UPDATE, 9, rep()))
        state = store.get("http://s/r")
        assert state.last_modified == 9
        assert states_equal(state.representation, rep())

    @pytest.mark.parametrize("change", [
        ChangeEvent("http://s/r", ChangeType.UPDATE, 1, rep()),
        ChangeEvent("http://s/r", ChangeType.DELETE, 1),
    ])
    def test_missing_target_rejected(self, change):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        with pytest.raises(ChangePreconditionViolation):
            apply_change(store, change)

    def test_create_of_present_rejected(self):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        apply_change(store, ChangeEvent("http://s/r", ChangeType.CREATE, 1, rep()))
        with pytest.raises(ChangePreconditionViolation):
            apply_change(store, ChangeEvent("http://s/r", ChangeType.CREATE, 2, rep()))

    def test_create_then_delete_restores_entry_set(self):
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        apply_change(store, ChangeEvent("http://s/a", ChangeType.CREATE, 1, rep(b"a")))
        before = set(store.uris())
        apply_change(store, ChangeEvent("http://s/b", ChangeType.CREATE, 2, rep(b"b")))
        apply_change(store, ChangeEvent("http://s/b", ChangeType.DELETE, 3))
        assert set(store.uris()) == before


@given(st.lists(st.tuples(st.sampled_from(["a", "b", "c"]),
                          st.binary(min_size=1, max_size=8)), max_size=12))
def test_replay_is_deterministic(steps):
    def build():
        store = ResourceStore(StoreRole.SOURCE_LEAD)
        t = 0
        for name, payload in steps:
            t += 1
            uri = "http://s/%s" % name
            kind = ChangeType.UPDATE if uri in store else ChangeType.CREATE
            apply_change(store, ChangeEvent(uri, kind, t,
                                            Representation.from_payload(payload)))
        return store.digest_map()

    assert build() == build()
