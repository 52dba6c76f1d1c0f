"""Auditor panel: independent trace/audit verdicts combined by strict majority."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import scheme
from .encoding import TAG_REPORT, Reader, Writer, sorted_by_key_bytes
from .errors import EvenPanel, FormatError, InvariantViolation, UnknownWellFormedKey
from .scheme import IdentityTable, MasterSecret, PublicParams, SecretKey

HONEST = "honest"
INVERTED = "inverted"  # fault injection for tests: flips every verdict

TRACED = "traced"
NO_TRACE_REQ = "noTraceReq"
UNKNOWN_KEY = "UnknownWellFormedKey"


@dataclass
class AuditorState:
    auditor_id: str
    pp: PublicParams
    msk: MasterSecret
    table: IdentityTable
    behavior: str = HONEST


@dataclass(frozen=True)
class AuditReport:
    per_auditor: dict
    majority: int
    dissenters: tuple

    def render(self) -> str:
        lines = [f"{aid} {v}" for aid, v in self.per_auditor.items()]
        lines.append(f"majority {self.majority} dissenters {','.join(self.dissenters) or '-'}")
        return "\n".join(lines)

    def to_bytes(self) -> bytes:
        keys = sorted_by_key_bytes(self.per_auditor)
        w = Writer(TAG_REPORT).u32(len(keys))
        for k in keys:
            w.str(k).u8(self.per_auditor[k])
        return w.u8(self.majority).strs(list(self.dissenters)).finish()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AuditReport":
        r = Reader(data, TAG_REPORT)
        per = {}
        for _ in range(r.count()):
            k = r.str()
            per[k] = r.u8()
        majority = r.u8()
        dissenters = tuple(r.strs())
        r.done()
        if list(per) != sorted_by_key_bytes(per) or set(per.values()) - {0, 1}:
            raise InvariantViolation("malformed verdict map")
        try:
            expected = _tally(per)
        except EvenPanel as exc:
            raise InvariantViolation(str(exc)) from None
        if (majority, dissenters) != expected:
            raise InvariantViolation("majority/dissenters inconsistent with verdicts")
        return cls(per, majority, dissenters)


def _tally(per_auditor: dict):
    n = len(per_auditor)
    if n < 3 or n % 2 == 0:
        raise EvenPanel(f"auditor panel must be odd and at least 3, got {n}")
    ones = sum(per_auditor.values())
    majority = 1 if ones * 2 > n else 0
    dissenters = tuple(sorted_by_key_bytes(a for a, v in per_auditor.items() if v != majority))
    return majority, dissenters


def _verdict(auditor: AuditorState, sk_accused, sk_leaked) -> int:
    v = scheme.audit_pair(auditor.pp, sk_accused, sk_leaked)
    return 1 - v if auditor.behavior == INVERTED else v


def run_multi_audit(auditors, sk_accused: SecretKey, sk_leaked) -> AuditReport:
    """Every auditor judges independently; the report carries the majority."""
    auditors = list(auditors)
    if len(auditors) < 3 or len(auditors) % 2 == 0:
        raise EvenPanel(f"auditor panel must be odd and at least 3, got {len(auditors)}")
    if len({a.auditor_id for a in auditors}) != len(auditors):
        raise ValueError("auditor ids must be distinct")
    with ThreadPoolExecutor(max_workers=len(auditors)) as pool:
        verdicts = list(pool.map(lambda a: _verdict(a, sk_accused, sk_leaked), auditors))
    per = {a.auditor_id: v for a, v in zip(auditors, verdicts)}
    majority, dissenters = _tally(per)
    return AuditReport(per, majority, dissenters)


@dataclass(frozen=True)
class TraceReport:
    auditor_id: str
    outcome: str
    identity: Optional[str] = None
    tag: Optional[scheme.Scalar] = None


def run_trace(auditor: AuditorState, sk_star, rl, epoch: int = 0) -> TraceReport:
    """Trace a leaked credential (object or raw bytes).

    The auditor works on a copy of ``rl``; the caller publishes the
    revocation through the cloud service.
    """
    if isinstance(sk_star, (bytes, bytearray)):
        try:
            sk_star = SecretKey.from_bytes(bytes(sk_star), auditor.pp.group)
        except FormatError:
            return TraceReport(auditor.auditor_id, NO_TRACE_REQ)
    scratch = rl.snapshot()
    try:
        ident = scheme.trace(auditor.pp, auditor.msk, sk_star, auditor.table, scratch, epoch)
    except UnknownWellFormedKey:
        return TraceReport(auditor.auditor_id, UNKNOWN_KEY)
    if ident is None:
        return TraceReport(auditor.auditor_id, NO_TRACE_REQ)
    return TraceReport(auditor.auditor_id, TRACED, ident, sk_star.c)


def make_panel(pp, msk, table, n: int = 3, behaviors=None) -> list:
    behaviors = list(behaviors) if behaviors is not None else [HONEST] * n
    if len(behaviors) != n:
        raise ValueError("one behaviour per auditor")
    return [AuditorState(f"auditor-{i + 1}", pp, msk, table.snapshot(), b)
            for i, b in enumerate(behaviors)]


def load_panel(root, n: int = 3, behaviors=None) -> list:
    """Auditors built from the store's setup bundle and identity table."""
    from .cloud import TABLE_FILE, load_auditor_bundle

    pp, msk = load_auditor_bundle(root)
    table = IdentityTable.from_bytes((Path(root) / TABLE_FILE).read_bytes(), pp.group)
    return make_panel(pp, msk, table, n, behaviors)
