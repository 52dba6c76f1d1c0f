import dataclasses
from datetime import date

import pytest

from cloudplus import plain, scheme
from cloudplus.errors import (
    AttributeSetUnsatisfying,
    EmptyAttributeSet,
    IdentityRevoked,
    KeyExpired,
    StaleRevocationList,
    UnknownWellFormedKey,
)
from cloudplus.group import make_rng
from cloudplus.scheme import IdentityTable, RevocationList
from cloudplus.timecode import EpochConfig, tag_for_epoch

from _support import tampered_keys

DAY0 = date(2025, 1, 1)


@pytest.fixture
def env(system, cfg, rng):
    pp, msk, rl = system
    table = IdentityTable()

    def issue(ident, attrs, expiry=100):
        return scheme.keygen(pp, msk, ident, attrs, tag_for_epoch(expiry, cfg), rng, table)

    return pp, msk, rl, table, issue


def test_setup_consistency(system):
    pp, msk, rl = system
    G = pp.group
    assert pp.g_a == G.g ** msk.a
    assert pp.egg_alpha == G.gt ** msk.alpha
    assert rl.version == 0 and not rl.entries
    assert len(msk.k_trace) == 32


def test_setup_needs_config_and_rng(cfg, rng):
    with pytest.raises(TypeError):
        scheme.setup("toy", None, None, rng)
    with pytest.raises(TypeError):
        scheme.setup("toy", None, cfg, None)


def test_roundtrip(env, rng):
    pp, msk, rl, table, issue = env
    sk = issue("alice", {"A", "B", "C"})
    for policy in ("A", "A AND B", "(A AND B) OR D", "A AND B AND C", "D OR C"):
        m = scheme.random_gt(pp, rng)
        ct = scheme.encrypt(pp, m, policy, rl, rng)
        assert scheme.decrypt(pp, sk, ct, DAY0) == m


def test_key_algebra(env, rng):
    pp, msk, rl, table, issue = env
    sk = issue("alice", {"A"})
    G = pp.group
    t = sk.L.value
    # K^(a+c) = g^(alpha + a t)
    assert sk.K ** (msk.a + sk.c) == G.g ** (msk.alpha + msk.a * t)
    assert sk.Kx["A"] == G.hash_to_group("A") ** t


def test_unsatisfying(env, rng):
    pp, msk, rl, table, issue = env
    sk = issue("bob", {"A"})
    ct = scheme.encrypt(pp, scheme.random_gt(pp, rng), "A AND B", rl, rng)
    with pytest.raises(AttributeSetUnsatisfying) as ei:
        scheme.decrypt(pp, sk, ct, DAY0)
    assert ei.value.reason == "AttributeSetUnsatisfying"


def test_error_precedence(env, rng):
    pp, msk, rl, table, issue = env
    sk = issue("bob", {"A"}, expiry=3)
    rl.add(sk.c, "bob", 0)
    ct = scheme.encrypt(pp, scheme.random_gt(pp, rng), "B", rl, rng)
    with pytest.raises(KeyExpired):
        scheme.decrypt(pp, sk, ct, date(2025, 1, 5))
    with pytest.raises(IdentityRevoked):
        scheme.decrypt(pp, sk, ct, date(2025, 1, 4))


def test_collusion_resistance(env, rng):
    pp, msk, rl, table, issue = env
    a = issue("alice", {"A"})
    b = issue("bob", {"B"})
    m = scheme.random_gt(pp, rng)
    ct = scheme.encrypt(pp, m, "A AND B", rl, rng)
    merged = dataclasses.replace(a, attrs=frozenset({"A", "B"}), Kx={**a.Kx, **b.Kx})
    assert scheme.keyform_check(pp, merged) == 0
    assert scheme.decrypt(pp, merged, ct, DAY0) != m


def test_keygen_rejects_empty_and_bad_tag(env, cfg, rng):
    pp, msk, rl, table, issue = env
    with pytest.raises(EmptyAttributeSet):
        issue("x", set())
    other = EpochConfig(cfg.genesis, 16)
    with pytest.raises(ValueError):
        scheme.keygen(pp, msk, "x", {"A"}, tag_for_epoch(3, other), rng)


def test_universe_enforced(cfg, rng):
    pp, msk, rl = scheme.setup("toy", {"A", "B"}, cfg, rng)
    ten = tag_for_epoch(5, cfg)
    scheme.keygen(pp, msk, "u", {"A"}, ten, rng)
    with pytest.raises(ValueError):
        scheme.keygen(pp, msk, "u", {"Q"}, ten, rng)
    with pytest.raises(ValueError):
        scheme.encrypt(pp, scheme.random_gt(pp, rng), "A OR Q", rl, rng)


def test_identity_tag_deterministic_and_distinct(env, cfg):
    pp, msk, rl, table, issue = env
    t1 = tag_for_epoch(10, cfg)
    t2 = tag_for_epoch(11, cfg)
    c = scheme.identity_tag(pp, msk, "alice", t1)
    assert c == scheme.identity_tag(pp, msk, "alice", t1)
    assert c != scheme.identity_tag(pp, msk, "alice", t2)
    assert c != scheme.identity_tag(pp, msk, "bob", t1)
    assert c.value != 0 and (msk.a + c).value != 0


def test_identity_tag_skips_collision(env, cfg, monkeypatch):
    pp, msk, rl, table, issue = env
    ten = tag_for_epoch(10, cfg)
    first = scheme.identity_tag(pp, msk, "alice", ten)
    # pretend a different user already owns alice's first candidate
    table.add(first, "mallory", {"A"}, ten)
    second = scheme.identity_tag(pp, msk, "alice", ten, table)
    assert second != first
    # the authority still recognises the resampled tag as alice's
    rec = scheme.IdentityRecord("alice", frozenset({"A"}), ten, 0, 1)
    assert scheme._tag_matches(pp, msk, rec, second)


def test_keyform_check_accepts_honest(env):
    pp, msk, rl, table, issue = env
    for i in range(20):
        assert scheme.keyform_check(pp, issue(f"user{i}", {"A", "B", f"X{i}"})) == 1


def test_keyform_check_rejects_tampering(env, rng):
    pp, msk, rl, table, issue = env
    sk = issue("alice", {"A", "B", "C"})
    seen = 0
    for label, bad in tampered_keys(pp, sk, rng):
        assert scheme.keyform_check(pp, bad) == 0, label
        seen += 1
    assert seen > 15


def test_trace(env, rng):
    pp, msk, rl, table, issue = env
    keys = [issue(f"user{i}", {"A"}) for i in range(10)]
    for i, sk in enumerate(keys):
        assert scheme.trace(pp, msk, sk, table, rl, epoch=4) == f"user{i}"
    assert rl.version == 10
    assert rl.entries[3].id == "user3" and rl.entries[3].epoch == 4
    # tracing again does not grow the list
    scheme.trace(pp, msk, keys[0], table, rl)
    assert rl.version == 10


def test_trace_malformed_and_foreign(env, cfg, rng):
    pp, msk, rl, table, issue = env
    sk = issue("alice", {"A", "B"})
    assert scheme.trace(pp, msk, dataclasses.replace(sk, L=sk.K), table, rl) is None
    assert scheme.trace(pp, msk, None, table, rl) is None
    # same public parameters, but a key whose tag the table never saw
    other_table = IdentityTable()
    stray = scheme.keygen(pp, msk, "ghost", {"A"}, tag_for_epoch(7, cfg), rng, other_table)
    with pytest.raises(UnknownWellFormedKey):
        scheme.trace(pp, msk, stray, table, rl)
    assert rl.version == 0


def test_audit_pair(env, rng):
    pp, msk, rl, table, issue = env
    a = issue("alice", {"A"})
    b = issue("bob", {"A"})
    assert scheme.audit_pair(pp, a, a) == 1
    assert scheme.audit_pair(pp, b, a) == 0
    assert scheme.audit_pair(pp, a, dataclasses.replace(a, L=b.L)) == 0
    assert scheme.audit_pair(pp, a, None) == 0


def test_ct_update(env, rng):
    pp, msk, rl, table, issue = env
    alice = issue("alice", {"A", "B"})
    bob = issue("bob", {"A", "B"})
    m = scheme.random_gt(pp, rng)
    ct = scheme.encrypt(pp, m, "A AND B", rl, rng)
    new_rl = rl.snapshot()
    new_rl.add(bob.c, "bob", 1)
    ct2 = scheme.ct_update(pp, ct, new_rl, rng)
    assert ct2.ct_uuid == ct.ct_uuid
    assert ct2.C1 != ct.C1 and ct2.Ci != ct.Ci
    assert ct2.rl_snapshot.version == 1
    assert scheme.decrypt(pp, alice, ct2, DAY0) == m
    assert scheme.decrypt(pp, bob, ct, DAY0) == m
    with pytest.raises(IdentityRevoked):
        scheme.decrypt(pp, bob, ct2, DAY0)
    with pytest.raises(StaleRevocationList):
        scheme.ct_update(pp, ct2, RevocationList(), rng)


def test_encrypt_does_not_alias_rl(env, rng):
    pp, msk, rl, table, issue = env
    ct = scheme.encrypt(pp, scheme.random_gt(pp, rng), "A", rl, rng)
    rl.add(pp.group.scalar(5), "x", 0)
    assert ct.rl_snapshot.version == 0


def test_revocation_list_add_idempotent(system):
    pp, _, rl = system
    c = pp.group.scalar(9)
    assert rl.add(c, "x", 1) is True
    assert rl.add(c, "x", 2) is False
    assert c in rl and rl.version == 1


def test_table_tags_oldest_first(env, cfg):
    pp, msk, rl, table, issue = env
    k1 = issue("alice", {"A"}, expiry=10)
    issue("bob", {"A"}, expiry=10)
    k2 = issue("alice", {"A"}, expiry=20)
    assert table.tags_for("alice") == [k1.c, k2.c]
    assert [r.id for r in table.issued()] == ["alice", "bob", "alice"]


def test_plain_baseline(system, rng):
    pp, msk, rl = system
    sk = plain.keygen(pp, msk, {"A", "B"}, rng)
    m = scheme.random_gt(pp, rng)
    ct = plain.encrypt(pp, m, "A AND B", rng)
    assert plain.decrypt(pp, sk, ct) == m
    with pytest.raises(AttributeSetUnsatisfying):
        plain.decrypt(pp, plain.keygen(pp, msk, {"A"}, rng), ct)


def test_seeded_runs_reproducible(cfg):
    def run():
        r = make_rng(99)
        pp, msk, rl = scheme.setup("toy", None, cfg, r)
        sk = scheme.keygen(pp, msk, "u", {"A"}, tag_for_epoch(3, cfg), r)
        ct = scheme.encrypt(pp, scheme.random_gt(pp, r), "A", rl, r)
        return sk.to_bytes(), ct.to_bytes()

    assert run() == run()


def test_fresh_randomness_per_encryption(env, rng):
    pp, msk, rl, table, issue = env
    m = scheme.random_gt(pp, rng)
    a = scheme.encrypt(pp, m, "A", rl, rng)
    b = scheme.encrypt(pp, m, "A", rl, rng)
    assert a.C1.encode() != b.C1.encode()
    assert a.ct_uuid != b.ct_uuid
