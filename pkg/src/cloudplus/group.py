"""Symmetric bilinear group abstraction and the exact "toy" backend.

The toy backend stores every group element as its discrete logarithm with
respect to the generator, so the group law is addition of exponents and the
pairing is multiplication of exponents mod p.  It has no security at all; it
exists so that every algebraic identity of the scheme can be checked exactly.
"""
from __future__ import annotations

import hashlib
import random
import struct
from functools import lru_cache

from . import _kernels as kernels
from .errors import BackendMismatch, EmptyAttribute, FormatError, UnknownBackend

M61 = (1 << 61) - 1
ELEM_BYTES = 8


class Scalar:
    """Residue modulo the group order."""

    __slots__ = ("value", "p")

    def __init__(self, value: int, p: int):
        self.value = value % p
        self.p = p

    def _coerce(self, other) -> int:
        if isinstance(other, Scalar):
            if other.p != self.p:
                raise BackendMismatch("scalars from different fields")
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(self.value + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(self.value - o, self.p)

    def __rsub__(self, other):
        return Scalar(other - self.value, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Scalar(self.value * o, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return Scalar(-self.value, self.p)

    def inverse(self) -> "Scalar":
        if self.value == 0:
            raise ZeroDivisionError("zero scalar has no inverse")
        return Scalar(kernels.invmod(self.value, self.p), self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * Scalar(o, self.p).inverse()

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.value == other.value and self.p == other.p
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"Scalar({self.value})"

    def encode(self) -> bytes:
        return self.value.to_bytes(ELEM_BYTES, "big")


class GroupElem:
    """Element of the source group (toy: stored as its discrete log)."""

    __slots__ = ("group", "value")
    kind = "G"

    def __init__(self, group: "ToyGroup", value: int):
        self.group = group
        self.value = value

    def _check(self, other):
        if type(other) is not type(self) or other.group.backend_id != self.group.backend_id:
            raise BackendMismatch(f"cannot combine {self!r} with {other!r}")

    def __mul__(self, other):
        self._check(other)
        return type(self)(self.group, (self.value + other.value) % self.group.p)

    def __truediv__(self, other):
        self._check(other)
        return type(self)(self.group, (self.value - other.value) % self.group.p)

    def __pow__(self, e):
        e = e.value if isinstance(e, Scalar) else e
        return type(self)(self.group, self.value * e % self.group.p)

    def __eq__(self, other):
        if not isinstance(other, GroupElem):
            return NotImplemented
        return (
            type(other) is type(self)
            and other.group.backend_id == self.group.backend_id
            and other.value == self.value
        )

    def __hash__(self):
        return hash((self.kind, self.group.backend_id, self.value))

    def __repr__(self):
        return f"{self.kind}({self.value:#x})"

    def is_identity(self) -> bool:
        return self.value == 0

    def encode(self) -> bytes:
        return self.value.to_bytes(ELEM_BYTES, "big")


class GtElem(GroupElem):
    """Element of the target group."""

    __slots__ = ()
    kind = "GT"


class ToyGroup:
    """Group context: prime order p, generators g and gt = e(g, g).

    Immutable and shareable; randomness always comes from a caller-owned rng.
    """

    backend_id = "toy"

    def __init__(self, p: int = M61):
        self.p = p
        self.g = GroupElem(self, 1)
        self.gt = GtElem(self, 1)
        self._hash = lru_cache(maxsize=4096)(self._hash_uncached)

    def __eq__(self, other):
        return isinstance(other, ToyGroup) and other.backend_id == self.backend_id and other.p == self.p

    def __hash__(self):
        return hash((self.backend_id, self.p))

    def __repr__(self):
        return f"ToyGroup(p={self.p})"

    def scalar(self, value: int) -> Scalar:
        return Scalar(value, self.p)

    def random_scalar(self, rng: random.Random) -> Scalar:
        return Scalar(rng.randrange(self.p), self.p)

    def random_nonzero(self, rng: random.Random) -> Scalar:
        return Scalar(rng.randrange(1, self.p), self.p)

    def pair(self, x: GroupElem, y: GroupElem) -> GtElem:
        if type(x) is not GroupElem or type(y) is not GroupElem:
            raise BackendMismatch("pairing takes two source-group elements")
        if x.group.backend_id != self.backend_id or y.group.backend_id != self.backend_id:
            raise BackendMismatch("pairing operands belong to another backend")
        return GtElem(self, x.value * y.value % self.p)

    def hash_to_group(self, attr: str) -> GroupElem:
        if not attr:
            raise EmptyAttribute("attribute name must be non-empty")
        return self._hash(attr)

    def _hash_uncached(self, attr: str) -> GroupElem:
        data = attr.encode("utf-8")
        h = int.from_bytes(hashlib.sha256(data).digest(), "big") % self.p
        counter = 0
        while h == 0:
            h = int.from_bytes(hashlib.sha256(data + bytes([counter])).digest(), "big") % self.p
            counter += 1
        return GroupElem(self, h)

    def decode_scalar(self, raw: bytes) -> Scalar:
        v = _decode_residue(raw, self.p)
        return Scalar(v, self.p)

    def decode_g(self, raw: bytes) -> GroupElem:
        return GroupElem(self, _decode_residue(raw, self.p))

    def decode_gt(self, raw: bytes) -> GtElem:
        return GtElem(self, _decode_residue(raw, self.p))


def _decode_residue(raw: bytes, p: int) -> int:
    if len(raw) != ELEM_BYTES:
        raise FormatError(f"expected {ELEM_BYTES}-byte residue, got {len(raw)}")
    (v,) = struct.unpack(">Q", raw)
    if v >= p:
        raise FormatError("residue not reduced modulo group order")
    return v


_BACKENDS = {"toy": ToyGroup}
_INSTANCES: dict[str, ToyGroup] = {}


def register_backend(name: str, factory) -> None:
    _BACKENDS[name] = factory


def group_setup(selector: str = "toy") -> ToyGroup:
    """Return the (shared, immutable) context for a registered backend."""
    if selector not in _BACKENDS:
        raise UnknownBackend(f"no bilinear backend named {selector!r}")
    if selector not in _INSTANCES:
        _INSTANCES[selector] = _BACKENDS[selector]()
    return _INSTANCES[selector]


def make_rng(seed: int | None = None) -> random.Random:
    """Seeded ``random.Random`` for reproducible runs, OS entropy otherwise."""
    if seed is None:
        return random.SystemRandom()
    return random.Random(seed)
