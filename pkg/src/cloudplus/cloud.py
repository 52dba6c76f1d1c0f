"""Simulated public cloud storage and the semi-trusted authority (STA).

Store layout under ``root``::

    pp.bin                 public parameters
    msk.bin                master secret (authority only, mode 0600)
    auditors/bundle.bin    (Pp, msk) handed to auditors at setup
    rl.bin                 published revocation list
    table.bin              identity table (tag -> issued key record)
    objects/<uuid>.env     stored envelopes

Every write goes to a temp file in the same directory followed by an atomic
rename.  On revocation ``rl.bin`` is replaced before the objects are
re-randomised, so an interrupted update leaves objects with an older snapshot
(never a newer one) and ``update_all`` finishes the job.
"""
from __future__ import annotations

import logging
import os
import tempfile
import threading
from datetime import datetime
from pathlib import Path

from . import scheme
from .encoding import TAG_BUNDLE, Reader, Writer
from .envelope import EnvelopeObject, update_envelope
from .errors import (
    DuplicateIdentity,
    DuplicateTag,
    NotFound,
    StaleRevocationList,
    StoreExists,
    UnknownIdentity,
)
from .group import make_rng
from .scheme import IdentityTable, MasterSecret, PublicParams, RevocationList
from .timecode import EpochConfig, epoch_at, time_encode

log = logging.getLogger(__name__)

PP_FILE = "pp.bin"
MSK_FILE = "msk.bin"
BUNDLE_FILE = "auditors/bundle.bin"
RL_FILE = "rl.bin"
TABLE_FILE = "table.bin"
OBJECTS_DIR = "objects"
OBJECT_SUFFIX = ".env"


def atomic_write(path: Path, data: bytes, mode: int = 0o644) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        os.fchmod(fd, mode)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_bundle(pp: PublicParams, msk: MasterSecret) -> bytes:
    return Writer(TAG_BUNDLE).blob(pp.to_bytes()).blob(msk.to_bytes()).finish()


def decode_bundle(data: bytes):
    r = Reader(data, TAG_BUNDLE)
    pp = PublicParams.from_bytes(r.blob())
    msk = MasterSecret.from_bytes(r.blob(), pp.group)
    r.done()
    return pp, msk


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except FileNotFoundError:
        raise NotFound(f"missing store file {path}") from None


class CloudStore:
    """The untrusted storage role: envelopes, the published RL, ct updates."""

    def __init__(self, root, rng=None):
        self.root = Path(root)
        self.rng = rng if rng is not None else make_rng()
        self.lock = threading.RLock()
        self.pp = PublicParams.from_bytes(_read(self.root / PP_FILE))
        self.rl = RevocationList.from_bytes(_read(self.root / RL_FILE), self.pp.group)
        (self.root / OBJECTS_DIR).mkdir(exist_ok=True)

    def _object_path(self, oid: str) -> Path:
        if len(oid) != 32 or any(ch not in "0123456789abcdef" for ch in oid):
            raise NotFound(f"no object {oid!r}")
        return self.root / OBJECTS_DIR / f"{oid}{OBJECT_SUFFIX}"

    def reload(self) -> None:
        with self.lock:
            self.rl = RevocationList.from_bytes(_read(self.root / RL_FILE), self.pp.group)

    def store_object(self, env) -> str:
        data = env.to_bytes() if isinstance(env, EnvelopeObject) else bytes(env)
        env = EnvelopeObject.from_bytes(data, self.pp.group)
        oid = env.object_id
        with self.lock:
            atomic_write(self._object_path(oid), data)
        return oid

    def fetch_bytes(self, oid: str) -> bytes:
        path = self._object_path(oid)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"no object {oid!r}") from None

    def fetch_object(self, oid: str) -> EnvelopeObject:
        return EnvelopeObject.from_bytes(self.fetch_bytes(oid), self.pp.group)

    def list_objects(self) -> list:
        names = os.listdir(self.root / OBJECTS_DIR)
        return sorted(n[: -len(OBJECT_SUFFIX)] for n in names
                      if n.endswith(OBJECT_SUFFIX) and not n.startswith("."))

    def publish_rl(self, rl: RevocationList) -> None:
        with self.lock:
            if rl.version < self.rl.version:
                raise StaleRevocationList("refusing to publish an older revocation list")
            atomic_write(self.root / RL_FILE, rl.to_bytes())
            self.rl = rl.snapshot()

    def stale_objects(self) -> list:
        out = []
        for oid in self.list_objects():
            if self.fetch_object(oid).abe_ct.rl_snapshot.version < self.rl.version:
                out.append(oid)
        return out

    def update_all(self, force: bool = False) -> int:
        """ct_update every object whose snapshot lags the published RL."""
        count = 0
        with self.lock:
            for oid in self.list_objects():
                env = self.fetch_object(oid)
                if not force and env.abe_ct.rl_snapshot.version >= self.rl.version:
                    continue
                env = update_envelope(self.pp, env, self.rl, self.rng)
                atomic_write(self._object_path(oid), env.to_bytes())
                count += 1
        log.debug("updated %d objects to RL version %d", count, self.rl.version)
        return count


class Authority:
    """Semi-trusted authority state: msk, identity table, issue log."""

    def __init__(self, root, pp: PublicParams, msk: MasterSecret, table: IdentityTable, rng=None):
        self.root = Path(root)
        self.pp = pp
        self.msk = msk
        self.table = table
        self.rng = rng if rng is not None else make_rng()
        self.lock = threading.RLock()

    @classmethod
    def load(cls, root, rng=None) -> "Authority":
        root = Path(root)
        pp = PublicParams.from_bytes(_read(root / PP_FILE))
        msk = MasterSecret.from_bytes(_read(root / MSK_FILE), pp.group)
        table = IdentityTable.from_bytes(_read(root / TABLE_FILE), pp.group)
        return cls(root, pp, msk, table, rng)

    @property
    def issued(self) -> list:
        return self.table.issued()

    def _rl(self) -> RevocationList:
        return RevocationList.from_bytes(_read(self.root / RL_FILE), self.pp.group)

    def _persist_table(self) -> None:
        atomic_write(self.root / TABLE_FILE, self.table.to_bytes(), mode=0o600)

    def has_live_key(self, ident: str, now: datetime, rl: RevocationList = None) -> bool:
        rl = rl if rl is not None else self._rl()
        epoch = epoch_at(now, self.pp.epoch_cfg)
        for c in self.table.tags_for(ident):
            rec = self.table.get(c)
            if c not in rl and rec.ten.epoch >= epoch:
                return True
        return False

    def _issue(self, ident: str, attrs, validity: int, now: datetime):
        cfg = self.pp.epoch_cfg
        ten = time_encode(now.date(), validity, cfg)
        c = scheme.identity_tag(self.pp, self.msk, ident, ten, self.table)
        if c in self.table:
            raise DuplicateTag(
                f"{ident!r} already holds a key with this expiry; choose a different validity"
            )
        sk = scheme.keygen(self.pp, self.msk, ident, attrs, ten, self.rng, self.table,
                           issue_epoch=epoch_at(now, cfg))
        self._persist_table()
        return sk


def sta_init(root, selector="toy", universe=None, epoch_cfg: EpochConfig = None, rng=None):
    """Create a store: returns ``(Authority, PublicParams, RevocationList)``."""
    root = Path(root)
    if (root / PP_FILE).exists() or (root / MSK_FILE).exists():
        raise StoreExists(f"{root} already holds a store")
    root.mkdir(parents=True, exist_ok=True)
    rng = rng if rng is not None else make_rng()
    pp, msk, rl = scheme.setup(selector, universe, epoch_cfg, rng)
    table = IdentityTable()
    atomic_write(root / MSK_FILE, msk.to_bytes(), mode=0o600)
    atomic_write(root / BUNDLE_FILE, encode_bundle(pp, msk), mode=0o600)
    atomic_write(root / TABLE_FILE, table.to_bytes(), mode=0o600)
    atomic_write(root / RL_FILE, rl.to_bytes())
    (root / OBJECTS_DIR).mkdir(exist_ok=True)
    # pp.bin last: its presence marks a complete store
    atomic_write(root / PP_FILE, pp.to_bytes())
    return Authority(root, pp, msk, table, rng), pp, rl


def load_auditor_bundle(root):
    return decode_bundle(_read(Path(root) / BUNDLE_FILE))


def register_user(auth: Authority, ident: str, attrs, validity: int, now: datetime):
    with auth.lock:
        if auth.has_live_key(ident, now):
            raise DuplicateIdentity(f"{ident!r} already holds a live key")
        return auth._issue(ident, attrs, validity, now)


def reissue(auth: Authority, ident: str, validity: int, now: datetime):
    """Fresh key (new expiry, hence new tag) for a previously registered id."""
    with auth.lock:
        tags = auth.table.tags_for(ident)
        if not tags:
            raise UnknownIdentity(f"{ident!r} was never registered")
        attrs = auth.table.get(tags[-1]).attrs
        return auth._issue(ident, attrs, validity, now)


def store_object(store: CloudStore, env) -> str:
    return store.store_object(env)


def fetch_object(store: CloudStore, oid: str) -> EnvelopeObject:
    return store.fetch_object(oid)


def list_objects(store: CloudStore) -> list:
    return store.list_objects()


def revoke_and_update(store: CloudStore, auth: Authority, ident: str, now: datetime, tag=None) -> int:
    """Revoke ``ident`` (its newest tag, or ``tag``) and refresh every object.

    Returns the new RL version.
    """
    with auth.lock, store.lock:
        tags = auth.table.tags_for(ident)
        if not tags:
            raise UnknownIdentity(f"{ident!r} was never registered")
        if tag is not None and tag not in tags:
            raise UnknownIdentity(f"tag does not belong to {ident!r}")
        c = tag if tag is not None else tags[-1]
        store.reload()
        rl = store.rl.snapshot()
        if rl.add(c, ident, epoch_at(now, store.pp.epoch_cfg)):
            store.publish_rl(rl)
        store.update_all(force=True)
        return store.rl.version


def open_store(root, rng=None):
    """Load both roles from ``root``: ``(CloudStore, Authority)``."""
    return CloudStore(root, rng), Authority.load(root, rng)
