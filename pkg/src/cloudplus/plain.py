"""Plain LSSS CP-ABE baseline: no identity tag, no time tag, no revocation.

Same code path as :mod:`cloudplus.scheme` with the tracing/revocation
machinery removed; used only as the benchmark comparison point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import policy as pol
from .errors import AttributeSetUnsatisfying, EmptyAttributeSet, Unsatisfiable
from .group import GroupElem, GtElem
from .scheme import MasterSecret, PublicParams, _compile, _row_components


@dataclass(frozen=True)
class PlainKey:
    attrs: frozenset
    K: GroupElem
    L: GroupElem
    Kx: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PlainCiphertext:
    policy_text: str
    lsss: pol.LsssMatrix
    C: GtElem
    C1: GroupElem
    Ci: tuple
    Di: tuple


def keygen(pp: PublicParams, msk: MasterSecret, attrs, rng) -> PlainKey:
    attrs = frozenset(attrs)
    if not attrs:
        raise EmptyAttributeSet("a key needs at least one attribute")
    group = pp.group
    t = group.random_scalar(rng)
    K = group.g ** (msk.alpha + msk.a * t)
    L = group.g ** t
    return PlainKey(attrs, K, L, {x: group.hash_to_group(x) ** t for x in attrs})


def encrypt(pp: PublicParams, m: GtElem, policy, rng) -> PlainCiphertext:
    text, lsss = _compile(policy, pp.group.p)
    s = rng.randrange(pp.group.p)
    Ci, Di = _row_components(pp, lsss, s, rng)
    return PlainCiphertext(text, lsss, m * (pp.egg_alpha ** s), pp.group.g ** s, tuple(Ci), tuple(Di))


def decrypt(pp: PublicParams, sk: PlainKey, ct: PlainCiphertext) -> GtElem:
    try:
        coeffs = pol.reconstruct_coeffs(ct.lsss, sk.attrs)
    except Unsatisfiable:
        raise AttributeSetUnsatisfying("key attributes do not satisfy the access policy") from None
    group = pp.group
    num = group.pair(ct.C1, sk.K)
    den = group.gt ** 0
    for i, w in coeffs.items():
        kx = sk.Kx[ct.lsss.rho[i]]
        den = den * ((group.pair(ct.Ci[i], sk.L) * group.pair(ct.Di[i], kx)) ** w)
    return ct.C / (num / den)
