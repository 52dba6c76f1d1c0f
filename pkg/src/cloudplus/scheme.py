"""ATR-CP-ABE: traceable, revocable, time-limited ciphertext-policy ABE.

LSSS-based CP-ABE with the user's identity tag ``c`` folded into the key
exponent::

    K  = (g^alpha * g^(a t))^(1/(a+c))     L = g^t     K_x = H(x)^t
    C  = m * e(g,g)^(alpha s)   C1 = g^s   C2 = g^(a s)
    C_i = g^(a lambda_i) * H(rho(i))^(-r_i)          D_i = g^(r_i)

Decryption computes ``e(C1^c * C2, K) = e(g,g)^(s(alpha + a t))`` and strips
the ``e(g,g)^(a t s)`` part recovered from the policy rows.  Without ``a``
a user cannot move ``K`` to another tag, which is what tracing relies on.
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, field
from datetime import date
from typing import Optional

from . import policy as pol
from .encoding import (
    TAG_CT,
    TAG_MSK,
    TAG_PP,
    TAG_RL,
    TAG_SK,
    TAG_TABLE,
    Reader,
    Writer,
    sorted_by_key_bytes,
)
from .errors import (
    AttributeSetUnsatisfying,
    DuplicateTag,
    EmptyAttributeSet,
    FormatError,
    IdentityRevoked,
    InvariantViolation,
    ParseError,
    StaleRevocationList,
    UnknownWellFormedKey,
    Unsatisfiable,
)
from .group import GroupElem, GtElem, Scalar, ToyGroup, group_setup
from .timecode import EpochConfig, TimeTag, time_decode

PP_VERSION = 1
TAG_SEPARATOR = b"\x1f"
MAX_TAG_COUNTER = 255


def _group(group):
    return group if group is not None else group_setup("toy")


def _check_attr_name(name):
    if not pol.NAME_RE.match(name):
        raise InvariantViolation(f"invalid attribute name {name!r}")


@dataclass(frozen=True)
class PublicParams:
    group: ToyGroup
    g_a: GroupElem
    egg_alpha: GtElem
    epoch_cfg: EpochConfig
    universe: Optional[frozenset] = None
    version: int = PP_VERSION

    def to_bytes(self) -> bytes:
        w = Writer(TAG_PP).str(self.group.backend_id)
        w.elem(self.g_a).elem(self.egg_alpha)
        w.str(self.epoch_cfg.genesis.isoformat()).u32(self.epoch_cfg.lifetime)
        if self.universe is None:
            w.u8(0)
        else:
            w.u8(1).strs(sorted_by_key_bytes(self.universe))
        return w.u8(self.version).finish()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicParams":
        r = Reader(data, TAG_PP)
        try:
            group = group_setup(r.str())
        except Exception as exc:
            raise FormatError(str(exc)) from None
        g_a = r.elem(group.decode_g)
        egg = r.elem(group.decode_gt)
        try:
            genesis = date.fromisoformat(r.str())
            cfg = EpochConfig(genesis, r.u32())
        except (ValueError, TypeError) as exc:
            raise InvariantViolation(f"bad epoch configuration: {exc}") from None
        flag = r.u8()
        if flag not in (0, 1):
            raise FormatError("bad universe flag")
        universe = None
        if flag:
            names = r.strs()
            for n in names:
                _check_attr_name(n)
            if names != sorted_by_key_bytes(set(names)):
                raise InvariantViolation("universe not canonical")
            universe = frozenset(names)
        version = r.u8()
        r.done()
        if version != PP_VERSION:
            raise FormatError(f"unsupported parameter version {version}")
        if g_a.is_identity() or egg.is_identity():
            raise InvariantViolation("degenerate public parameters")
        return cls(group, g_a, egg, cfg, universe, version)


@dataclass(frozen=True)
class MasterSecret:
    alpha: Scalar
    a: Scalar
    k_trace: bytes

    def to_bytes(self) -> bytes:
        return Writer(TAG_MSK).elem(self.alpha).elem(self.a).blob(self.k_trace).finish()

    @classmethod
    def from_bytes(cls, data: bytes, group=None) -> "MasterSecret":
        group = _group(group)
        r = Reader(data, TAG_MSK)
        alpha = r.elem(group.decode_scalar)
        a = r.elem(group.decode_scalar)
        k = r.blob()
        r.done()
        if not alpha or not a:
            raise InvariantViolation("master secret exponents must be non-zero")
        if len(k) != 32:
            raise InvariantViolation("trace key must be 32 bytes")
        return cls(alpha, a, k)


@dataclass(frozen=True)
class SecretKey:
    """A user credential. ``ten`` is None on the time-stripped view."""

    id: str
    attrs: frozenset
    ten: Optional[TimeTag]
    c: Optional[Scalar]
    K: Optional[GroupElem]
    L: Optional[GroupElem]
    Kx: dict = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        if None in (self.ten, self.c, self.K, self.L):
            raise InvariantViolation("cannot encode an incomplete key")
        w = Writer(TAG_SK).str(self.id).strs(sorted_by_key_bytes(self.attrs))
        w.str(self.ten.bits).elem(self.c).elem(self.K).elem(self.L)
        keys = sorted_by_key_bytes(self.Kx)
        w.u32(len(keys))
        for k in keys:
            w.str(k).elem(self.Kx[k])
        return w.finish()

    @classmethod
    def from_bytes(cls, data: bytes, group=None) -> "SecretKey":
        group = _group(group)
        r = Reader(data, TAG_SK)
        ident = r.str()
        attrs = r.strs()
        bits = r.str()
        c = r.elem(group.decode_scalar)
        K = r.elem(group.decode_g)
        L = r.elem(group.decode_g)
        kx = {}
        order = []
        for _ in range(r.count()):
            name = r.str()
            order.append(name)
            kx[name] = r.elem(group.decode_g)
        r.done()
        for n in attrs:
            _check_attr_name(n)
        if attrs != sorted_by_key_bytes(set(attrs)) or order != sorted_by_key_bytes(set(order)):
            raise InvariantViolation("key attribute lists not canonical")
        if not bits or set(bits) - {"0", "1"}:
            raise InvariantViolation("time tag must be a non-empty bit string")
        return cls(ident, frozenset(attrs), TimeTag(bits), c, K, L, kx)


@dataclass(frozen=True)
class RevokedEntry:
    c: Scalar
    id: str
    epoch: int


@dataclass
class RevocationList:
    """Append-only list of revoked identity tags; one version bump per add."""

    version: int = 0
    entries: list = field(default_factory=list)

    def __contains__(self, c) -> bool:
        return any(e.c == c for e in self.entries)

    def add(self, c: Scalar, ident: str, epoch: int) -> bool:
        if c in self:
            return False
        self.entries.append(RevokedEntry(c, ident, epoch))
        self.version += 1
        return True

    def snapshot(self) -> "RevocationList":
        return RevocationList(self.version, list(self.entries))

    def to_bytes(self) -> bytes:
        w = Writer(TAG_RL).u32(self.version).u32(len(self.entries))
        for e in self.entries:
            w.elem(e.c).str(e.id).u32(e.epoch)
        return w.finish()

    @classmethod
    def from_bytes(cls, data: bytes, group=None) -> "RevocationList":
        group = _group(group)
        r = Reader(data, TAG_RL)
        version = r.u32()
        entries = []
        for _ in range(r.count()):
            entries.append(RevokedEntry(r.elem(group.decode_scalar), r.str(), r.u32()))
        r.done()
        if len({e.c for e in entries}) != len(entries):
            raise InvariantViolation("duplicate identity tag in revocation list")
        if version != len(entries):
            raise InvariantViolation("revocation list version does not match its history")
        return cls(version, entries)


@dataclass(frozen=True)
class IdentityRecord:
    id: str
    attrs: frozenset
    ten: TimeTag
    issue_epoch: int
    serial: int


@dataclass
class IdentityTable:
    """Authority-side map from identity tag to the key it was issued for."""

    records: dict = field(default_factory=dict)

    def __contains__(self, c) -> bool:
        return c in self.records

    def __len__(self):
        return len(self.records)

    def get(self, c) -> Optional[IdentityRecord]:
        return self.records.get(c)

    def add(self, c: Scalar, ident: str, attrs, ten: TimeTag, issue_epoch: int = 0) -> IdentityRecord:
        rec = IdentityRecord(ident, frozenset(attrs), ten, issue_epoch, len(self.records))
        old = self.records.get(c)
        if old is not None:
            rec = IdentityRecord(ident, frozenset(attrs), ten, issue_epoch, old.serial)
        self.records[c] = rec
        return rec

    def tags_for(self, ident: str) -> list:
        """Tags issued to ``ident``, oldest first."""
        found = [(rec.serial, c) for c, rec in self.records.items() if rec.id == ident]
        return [c for _, c in sorted(found, key=lambda t: t[0])]

    def issued(self) -> list:
        return sorted(self.records.values(), key=lambda rec: rec.serial)

    def snapshot(self) -> "IdentityTable":
        return IdentityTable(dict(self.records))

    def to_bytes(self) -> bytes:
        w = Writer(TAG_TABLE).u32(len(self.records))
        for c in sorted(self.records, key=lambda s: s.encode()):
            rec = self.records[c]
            w.elem(c).str(rec.id).strs(sorted_by_key_bytes(rec.attrs))
            w.str(rec.ten.bits).u32(rec.issue_epoch).u32(rec.serial)
        return w.finish()

    @classmethod
    def from_bytes(cls, data: bytes, group=None) -> "IdentityTable":
        group = _group(group)
        r = Reader(data, TAG_TABLE)
        records = {}
        prev = None
        for _ in range(r.count()):
            c = r.elem(group.decode_scalar)
            if prev is not None and c.encode() <= prev:
                raise InvariantViolation("identity table not sorted by tag")
            prev = c.encode()
            ident = r.str()
            attrs = r.strs()
            bits = r.str()
            if not bits or set(bits) - {"0", "1"}:
                raise InvariantViolation("time tag must be a non-empty bit string")
            records[c] = IdentityRecord(ident, frozenset(attrs), TimeTag(bits), r.u32(), r.u32())
        r.done()
        if sorted(rec.serial for rec in records.values()) != list(range(len(records))):
            raise InvariantViolation("identity table serials are not contiguous")
        return cls(records)


@dataclass(frozen=True)
class AbeCiphertext:
    policy_text: str
    lsss: pol.LsssMatrix
    C: GtElem
    C1: GroupElem
    C2: GroupElem
    Ci: tuple
    Di: tuple
    rl_snapshot: RevocationList
    ct_uuid: bytes

    def to_bytes(self) -> bytes:
        w = Writer(TAG_CT).str(self.policy_text)
        m = self.lsss
        w.u32(m.n).u32(len(m.rows))
        for row in m.rows:
            for v in row:
                w.raw(v.to_bytes(8, "big"))
        w.strs(list(m.rho))
        w.elem(self.C).elem(self.C1).elem(self.C2).elems(self.Ci).elems(self.Di)
        w.blob(self.rl_snapshot.to_bytes()).blob(self.ct_uuid)
        return w.finish()

    @classmethod
    def from_bytes(cls, data: bytes, group=None) -> "AbeCiphertext":
        group = _group(group)
        r = Reader(data, TAG_CT)
        text = r.str()
        n = r.u32()
        nrows = r.count()
        rows = tuple(tuple(r.elem(group.decode_scalar).value for _ in range(n)) for _ in range(nrows))
        rho = tuple(r.strs())
        C = r.elem(group.decode_gt)
        C1 = r.elem(group.decode_g)
        C2 = r.elem(group.decode_g)
        Ci = tuple(r.elems(group.decode_g))
        Di = tuple(r.elems(group.decode_g))
        rl = RevocationList.from_bytes(r.blob(), group)
        uuid = r.blob()
        r.done()
        try:
            expected = pol.compile_policy(text, group.p)
        except ParseError as exc:
            raise InvariantViolation(f"stored policy does not parse: {exc}") from None
        lsss = pol.LsssMatrix(rows, rho, n, group.p) if len(rho) == nrows else None
        if lsss != expected:
            raise InvariantViolation("LSSS matrix does not match the stored policy")
        if len(Ci) != nrows or len(Di) != nrows:
            raise InvariantViolation("ciphertext row components do not match the matrix")
        if len(uuid) != 16:
            raise InvariantViolation("ciphertext uuid must be 16 bytes")
        return cls(text, lsss, C, C1, C2, Ci, Di, rl, uuid)


# --------------------------------------------------------------------------
# algorithms


def setup(selector="toy", universe=None, epoch_cfg: EpochConfig = None, rng=None):
    """Return ``(PublicParams, MasterSecret, RevocationList)`` with an empty RL."""
    if epoch_cfg is None or rng is None:
        raise TypeError("setup needs an epoch configuration and an rng")
    group = group_setup(selector)
    if universe is not None:
        universe = frozenset(universe)
        for name in universe:
            _check_attr_name(name)
    alpha = group.random_nonzero(rng)
    a = group.random_nonzero(rng)
    k_trace = rng.randbytes(32)
    pp = PublicParams(group, group.g ** a, group.pair(group.g, group.g) ** alpha, epoch_cfg, universe)
    if group.pair(group.g, pp.g_a) != group.gt ** a:
        raise AssertionError("public parameters inconsistent with master secret")
    return pp, MasterSecret(alpha, a, k_trace), RevocationList()


def _prf(key: bytes, data: bytes, p: int) -> int:
    return int.from_bytes(hmac.new(key, data, hashlib.sha256).digest(), "big") % p


def _tag_candidates(pp, msk, ident, ten):
    base = ident.encode("utf-8") + TAG_SEPARATOR + ten.bits.encode("ascii")
    for counter in range(MAX_TAG_COUNTER + 1):
        data = base if counter == 0 else base + bytes([counter - 1])
        yield _prf(msk.k_trace, data, pp.group.p)


def identity_tag(pp: PublicParams, msk: MasterSecret, ident: str, ten: TimeTag, table=None) -> Scalar:
    """c = PRF(k_trace, id || 0x1F || ten) mod p, resampled with a counter byte."""
    p = pp.group.p
    for c in _tag_candidates(pp, msk, ident, ten):
        if c == 0 or (msk.a.value + c) % p == 0:
            continue
        if table is not None:
            rec = table.get(Scalar(c, p))
            if rec is not None and rec.id != ident:
                continue
        return Scalar(c, p)
    raise DuplicateTag(f"no usable identity tag for {ident!r}")


def _check_universe(pp, names):
    if pp.universe is not None:
        missing = set(names) - pp.universe
        if missing:
            raise ValueError(f"attributes outside the declared universe: {sorted(missing)}")


def keygen(pp: PublicParams, msk: MasterSecret, ident: str, attrs, ten: TimeTag, rng,
           table: IdentityTable = None, issue_epoch: int = 0) -> SecretKey:
    attrs = frozenset(attrs)
    if not attrs:
        raise EmptyAttributeSet("a key needs at least one attribute")
    for name in attrs:
        _check_attr_name(name)
    _check_universe(pp, attrs)
    if not ten.valid_for(pp.epoch_cfg):
        raise ValueError("time tag does not fit the system's epoch configuration")
    group = pp.group
    c = identity_tag(pp, msk, ident, ten, table)
    t = group.random_scalar(rng)
    exponent = (msk.alpha + msk.a * t) * (msk.a + c).inverse()
    K = group.g ** exponent
    L = group.g ** t
    Kx = {x: group.hash_to_group(x) ** t for x in attrs}
    if table is not None:
        table.add(c, ident, attrs, ten, issue_epoch)
    return SecretKey(ident, attrs, ten, c, K, L, Kx)


def _compile(policy, p):
    """(policy text, lsss) for a policy string or AST."""
    if isinstance(policy, str):
        return policy, pol.parse_and_compile(policy, p)[1]
    return pol.to_text(policy), pol.to_lsss(policy, p)


def _row_components(pp: PublicParams, lsss: pol.LsssMatrix, secret: int, rng):
    group = pp.group
    vec = [secret] + [rng.randrange(group.p) for _ in range(lsss.n - 1)]
    lam = pol.shares(lsss, vec)
    Ci, Di = [], []
    for lam_i, name in zip(lam, lsss.rho):
        r_i = rng.randrange(group.p)
        Ci.append((pp.g_a ** lam_i) * (group.hash_to_group(name) ** -r_i))
        Di.append(group.g ** r_i)
    return Ci, Di


def encrypt(pp: PublicParams, m: GtElem, policy, rl: RevocationList, rng) -> AbeCiphertext:
    text, lsss = _compile(policy, pp.group.p)
    _check_universe(pp, lsss.rho)
    group = pp.group
    s = rng.randrange(group.p)
    Ci, Di = _row_components(pp, lsss, s, rng)
    return AbeCiphertext(
        policy_text=text,
        lsss=lsss,
        C=m * (pp.egg_alpha ** s),
        C1=group.g ** s,
        C2=pp.g_a ** s,
        Ci=tuple(Ci),
        Di=tuple(Di),
        rl_snapshot=rl.snapshot(),
        ct_uuid=rng.randbytes(16),
    )


def decrypt(pp: PublicParams, sk: SecretKey, ct: AbeCiphertext, c_date, c_time=None) -> GtElem:
    """Recover m; raises KeyExpired, IdentityRevoked, AttributeSetUnsatisfying in that order."""
    sk = time_decode(sk, c_date, c_time, pp.epoch_cfg)
    if sk.c is None or sk.c in ct.rl_snapshot:
        raise IdentityRevoked(f"identity {sk.id!r} is on the ciphertext's revocation list")
    try:
        coeffs = pol.reconstruct_coeffs(ct.lsss, sk.attrs)
    except Unsatisfiable:
        raise AttributeSetUnsatisfying("key attributes do not satisfy the access policy") from None
    group = pp.group
    num = group.pair((ct.C1 ** sk.c) * ct.C2, sk.K)
    den = group.gt ** 0
    for i, w in coeffs.items():
        kx = sk.Kx.get(ct.lsss.rho[i])
        if kx is None:
            raise AttributeSetUnsatisfying(f"key has no component for {ct.lsss.rho[i]!r}")
        den = den * ((group.pair(ct.Ci[i], sk.L) * group.pair(ct.Di[i], kx)) ** w)
    return ct.C / (num / den)


def keyform_check(pp: PublicParams, sk) -> int:
    """1 if the key is structurally complete and passes the pairing checks."""
    try:
        group = pp.group
        p = group.p
        if not isinstance(sk, SecretKey):
            return 0
        if not isinstance(sk.id, str) or not sk.attrs or set(sk.Kx) != set(sk.attrs):
            return 0
        if not isinstance(sk.ten, TimeTag) or not sk.ten.valid_for(pp.epoch_cfg):
            return 0
        if not isinstance(sk.c, Scalar) or sk.c.p != p or not 0 < sk.c.value < p:
            return 0
        for elem in (sk.K, sk.L, *sk.Kx.values()):
            if type(elem) is not GroupElem or elem.group != group:
                return 0
        lhs = group.pair(sk.K, pp.g_a * (group.g ** sk.c))
        if lhs != pp.egg_alpha * group.pair(pp.g_a, sk.L):
            return 0
        for x, kx in sk.Kx.items():
            if group.pair(kx, group.g) != group.pair(group.hash_to_group(x), sk.L):
                return 0
        return 1
    except Exception:  # noqa: BLE001 - any malformed value means "not well formed"
        return 0


def trace(pp: PublicParams, msk: MasterSecret, sk_star, table: IdentityTable,
          rl: RevocationList, epoch: int = 0) -> Optional[str]:
    """Return the identity a leaked key was issued to and revoke it.

    Returns None (noTraceReq) for a key that is not well formed; raises
    UnknownWellFormedKey when the key checks out but no issued tag matches.
    """
    if keyform_check(pp, sk_star) != 1:
        return None
    rec = table.get(sk_star.c)
    if rec is None or not _tag_matches(pp, msk, rec, sk_star.c):
        raise UnknownWellFormedKey("well-formed key whose tag was never issued")
    rl.add(sk_star.c, rec.id, epoch)
    return rec.id


def _tag_matches(pp, msk, rec, c) -> bool:
    """Authority-side recomputation: was ``c`` derived from (id, ten)?"""
    return any(cand == c.value for cand in _tag_candidates(pp, msk, rec.id, rec.ten))


def audit_pair(pp: PublicParams, sk_accused: SecretKey, sk_leaked) -> int:
    """1 (guilty) iff the leaked key is well formed and carries the accused's tag."""
    if keyform_check(pp, sk_leaked) != 1:
        return 0
    return 1 if sk_leaked.c == sk_accused.c else 0


def ct_update(pp: PublicParams, ct: AbeCiphertext, new_rl: RevocationList, rng) -> AbeCiphertext:
    """Re-randomise a ciphertext under a newer revocation list, without msk."""
    if new_rl.version < ct.rl_snapshot.version:
        raise StaleRevocationList(
            f"revocation list version {new_rl.version} older than snapshot {ct.rl_snapshot.version}"
        )
    group = pp.group
    s2 = rng.randrange(group.p)
    Ci2, Di2 = _row_components(pp, ct.lsss, s2, rng)
    return AbeCiphertext(
        policy_text=ct.policy_text,
        lsss=ct.lsss,
        C=ct.C * (pp.egg_alpha ** s2),
        C1=ct.C1 * (group.g ** s2),
        C2=ct.C2 * (pp.g_a ** s2),
        Ci=tuple(x * y for x, y in zip(ct.Ci, Ci2)),
        Di=tuple(x * y for x, y in zip(ct.Di, Di2)),
        rl_snapshot=new_rl.snapshot(),
        ct_uuid=ct.ct_uuid,
    )


def random_gt(pp: PublicParams, rng) -> GtElem:
    return pp.group.gt ** rng.randrange(pp.group.p)
