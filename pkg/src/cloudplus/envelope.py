"""Hybrid file envelope: the ABE layer carries a random GT element, a KDF
turns it into an AES-256-GCM key for the file bytes."""
from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from . import scheme
from .encoding import TAG_ENVELOPE, Reader, Writer
from .errors import IntegrityFailure, InvariantViolation
from .scheme import AbeCiphertext, PublicParams, SecretKey

KDF_INFO = "cloudplus/v1/session"
NONCE_BYTES = 12


@dataclass(frozen=True)
class EnvelopeObject:
    abe_ct: AbeCiphertext
    kdf_info: str
    nonce: bytes
    aead_blob: bytes
    filename_hint: str
    created_epoch: int

    @property
    def object_id(self) -> str:
        return self.abe_ct.ct_uuid.hex()

    def to_bytes(self) -> bytes:
        w = Writer(TAG_ENVELOPE).blob(self.abe_ct.to_bytes()).str(self.kdf_info)
        w.blob(self.nonce).blob(self.aead_blob).str(self.filename_hint).u32(self.created_epoch)
        return w.finish()

    @classmethod
    def from_bytes(cls, data: bytes, group=None) -> "EnvelopeObject":
        r = Reader(data, TAG_ENVELOPE)
        ct = AbeCiphertext.from_bytes(r.blob(), group)
        info = r.str()
        nonce = r.blob()
        blob = r.blob()
        hint = r.str()
        epoch = r.u32()
        r.done()
        if info != KDF_INFO:
            raise InvariantViolation(f"unknown KDF context {info!r}")
        if len(nonce) != NONCE_BYTES:
            raise InvariantViolation("AEAD nonce must be 12 bytes")
        if len(blob) < 16:
            raise InvariantViolation("AEAD blob shorter than its tag")
        return cls(ct, info, nonce, blob, hint, epoch)


def session_key(m, ct_uuid: bytes, info: str = KDF_INFO) -> bytes:
    """kappa = HKDF-SHA256(encode(m) || ct_uuid, info), 32 bytes; never stored."""
    hkdf = HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=info.encode("utf-8"))
    return hkdf.derive(m.encode() + ct_uuid)


def outsource_encrypt(pp: PublicParams, data: bytes, policy, rl, rng,
                      filename_hint: str = "", created_epoch: int = 0) -> EnvelopeObject:
    m = scheme.random_gt(pp, rng)
    ct = scheme.encrypt(pp, m, policy, rl, rng)
    nonce = rng.randbytes(NONCE_BYTES)
    key = session_key(m, ct.ct_uuid)
    blob = AESGCM(key).encrypt(nonce, bytes(data), ct.ct_uuid + nonce)
    return EnvelopeObject(ct, KDF_INFO, nonce, blob, filename_hint, created_epoch)


def access_decrypt(pp: PublicParams, sk: SecretKey, env: EnvelopeObject, c_date, c_time=None) -> bytes:
    m = scheme.decrypt(pp, sk, env.abe_ct, c_date, c_time)
    key = session_key(m, env.abe_ct.ct_uuid, env.kdf_info)
    try:
        return AESGCM(key).decrypt(env.nonce, env.aead_blob, env.abe_ct.ct_uuid + env.nonce)
    except InvalidTag:
        raise IntegrityFailure("file blob failed authentication") from None


def update_envelope(pp: PublicParams, env: EnvelopeObject, rl, rng) -> EnvelopeObject:
    """ct_update on the ABE layer; the AEAD blob is untouched."""
    ct = scheme.ct_update(pp, env.abe_ct, rl, rng)
    return EnvelopeObject(ct, env.kdf_info, env.nonce, env.aead_blob, env.filename_hint, env.created_epoch)
