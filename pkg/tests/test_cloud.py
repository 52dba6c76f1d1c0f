import os
import stat
import threading

import pytest

from cloudplus import cloud, envelope
from cloudplus.errors import (
    DuplicateIdentity,
    DuplicateTag,
    IdentityRevoked,
    NotFound,
    StaleRevocationList,
    StoreExists,
    UnknownIdentity,
)
from cloudplus.group import make_rng
from cloudplus.scheme import RevocationList
from cloudplus.timecode import epoch_at

from conftest import at


@pytest.fixture
def store(tmp_path, cfg, rng):
    root = tmp_path / "store"
    cloud.sta_init(root, "toy", None, cfg, rng)
    return cloud.open_store(root, rng)


def _put(store_, data, policy, rng):
    env = envelope.outsource_encrypt(store_.pp, data, policy, store_.rl, rng)
    return cloud.store_object(store_, env)


def _get(store_, sk, oid, now):
    return envelope.access_decrypt(store_.pp, sk, cloud.fetch_object(store_, oid), now.date(), now.time())


def test_layout_and_modes(store):
    cs, auth = store
    root = cs.root
    for name in (cloud.PP_FILE, cloud.MSK_FILE, cloud.BUNDLE_FILE, cloud.RL_FILE, cloud.TABLE_FILE):
        assert (root / name).is_file()
    for secret in (cloud.MSK_FILE, cloud.BUNDLE_FILE, cloud.TABLE_FILE):
        assert stat.S_IMODE(os.stat(root / secret).st_mode) == 0o600
    assert not [p for p in root.rglob("*.tmp")]


def test_init_refuses_existing(store, cfg, rng):
    with pytest.raises(StoreExists):
        cloud.sta_init(store[0].root, "toy", None, cfg, rng)


def test_open_missing(tmp_path):
    with pytest.raises(NotFound):
        cloud.open_store(tmp_path / "nothing")


def test_bundle_matches_authority(store):
    cs, auth = store
    pp, msk = cloud.load_auditor_bundle(cs.root)
    assert pp == auth.pp and msk == auth.msk


def test_store_fetch_list(store, rng):
    cs, auth = store
    oids = sorted(_put(cs, bytes([i]) * 10, "A", rng) for i in range(5))
    assert cloud.list_objects(cs) == oids
    with pytest.raises(NotFound):
        cloud.fetch_object(cs, "0" * 32)
    with pytest.raises(NotFound):
        cloud.fetch_object(cs, "../pp")


def test_register_persists_table(store, cfg, rng):
    cs, auth = store
    sk = cloud.register_user(auth, "alice", {"A"}, 30, at(0))
    assert sk.ten.epoch == 30
    again = cloud.Authority.load(cs.root)
    assert again.table.get(sk.c).id == "alice"
    assert [r.id for r in again.issued] == ["alice"]


def test_duplicate_registration(store):
    cs, auth = store
    cloud.register_user(auth, "alice", {"A"}, 5, at(0))
    with pytest.raises(DuplicateIdentity):
        cloud.register_user(auth, "alice", {"B"}, 9, at(1))
    # after expiry the id may register again
    sk = cloud.register_user(auth, "alice", {"B"}, 9, at(6))
    assert sk.attrs == {"B"}


def test_revoke_and_update(store, rng):
    cs, auth = store
    alice = cloud.register_user(auth, "alice", {"A", "B"}, 100, at(0))
    bob = cloud.register_user(auth, "bob", {"A", "B"}, 100, at(0))
    oids = [_put(cs, f"file{i}".encode(), "A AND B", rng) for i in range(4)]
    version = cloud.revoke_and_update(cs, auth, "bob", at(2))
    assert version == 1
    assert cs.stale_objects() == []
    for i, oid in enumerate(oids):
        assert _get(cs, alice, oid, at(3)) == f"file{i}".encode()
        with pytest.raises(IdentityRevoked):
            _get(cs, bob, oid, at(3))
    # a second store handle sees the durable state
    cs2, auth2 = cloud.open_store(cs.root, rng)
    assert cs2.rl.version == 1 and bob.c in cs2.rl
    assert cs2.rl.entries[0].epoch == 2
    with pytest.raises(IdentityRevoked):
        _get(cs2, bob, oids[0], at(3))


def test_revoke_unknown(store):
    cs, auth = store
    with pytest.raises(UnknownIdentity):
        cloud.revoke_and_update(cs, auth, "nobody", at(0))


def test_revoke_twice_keeps_version(store, rng):
    cs, auth = store
    cloud.register_user(auth, "bob", {"A"}, 10, at(0))
    assert cloud.revoke_and_update(cs, auth, "bob", at(0)) == 1
    assert cloud.revoke_and_update(cs, auth, "bob", at(0)) == 1


def test_reissue_after_revocation(store, rng):
    cs, auth = store
    old = cloud.register_user(auth, "bob", {"A"}, 10, at(0))
    oid = _put(cs, b"doc", "A", rng)
    cloud.revoke_and_update(cs, auth, "bob", at(1))
    new = cloud.reissue(auth, "bob", 20, at(1))
    assert new.c != old.c and new.attrs == old.attrs
    assert _get(cs, new, oid, at(2)) == b"doc"
    with pytest.raises(IdentityRevoked):
        _get(cs, old, oid, at(2))
    with pytest.raises(UnknownIdentity):
        cloud.reissue(auth, "carol", 5, at(1))


def test_reissue_same_expiry_is_duplicate(store):
    cs, auth = store
    cloud.register_user(auth, "bob", {"A"}, 10, at(0))
    with pytest.raises(DuplicateTag):
        cloud.reissue(auth, "bob", 9, at(1))


def test_interrupted_update_is_resumable(store, rng, monkeypatch):
    cs, auth = store
    cloud.register_user(auth, "bob", {"A"}, 10, at(0))
    for i in range(3):
        _put(cs, bytes([i]), "A", rng)
    calls = {"n": 0}
    real = cloud.update_envelope

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            raise OSError("disk full")
        return real(*a, **k)

    monkeypatch.setattr(cloud, "update_envelope", flaky)
    with pytest.raises(OSError):
        cloud.revoke_and_update(cs, auth, "bob", at(0))
    monkeypatch.setattr(cloud, "update_envelope", real)
    # RL was published first, so the lagging objects are visible and fixable
    fresh, _ = cloud.open_store(cs.root, rng)
    assert fresh.rl.version == 1
    assert len(fresh.stale_objects()) == 2
    assert fresh.update_all() == 2
    assert fresh.stale_objects() == []


def test_publish_rejects_older(store):
    cs, auth = store
    cloud.register_user(auth, "bob", {"A"}, 10, at(0))
    cloud.revoke_and_update(cs, auth, "bob", at(0))
    with pytest.raises(StaleRevocationList):
        cs.publish_rl(RevocationList())


def test_concurrent_stores(store, rng):
    cs, auth = store
    errors = []

    def worker(i):
        try:
            r = make_rng(i)
            env = envelope.outsource_encrypt(cs.pp, bytes([i]), "A", cs.rl, r)
            cs.store_object(env)
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(cs.list_objects()) == 8


def test_live_key_semantics(store):
    cs, auth = store
    cloud.register_user(auth, "alice", {"A"}, 3, at(0))
    assert auth.has_live_key("alice", at(3))
    assert not auth.has_live_key("alice", at(4))
    assert epoch_at(at(4), auth.pp.epoch_cfg) == 4


def test_reload_gives_identical_params(store):
    cs, auth = store
    again, _ = cloud.open_store(cs.root)
    assert again.pp.to_bytes() == auth.pp.to_bytes() == (cs.root / cloud.PP_FILE).read_bytes()


def test_fetch_is_byte_identical(store, rng):
    cs, auth = store
    env = envelope.outsource_encrypt(cs.pp, b"abc", "A", cs.rl, rng)
    oid = cloud.store_object(cs, env)
    assert cs.fetch_bytes(oid) == env.to_bytes()
