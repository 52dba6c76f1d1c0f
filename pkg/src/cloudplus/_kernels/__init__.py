"""Modular-arithmetic kernels with a compiled fast path.

The Cython module is used when it imported cleanly and the modulus fits in
63 bits; ``CLOUDPLUS_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

from . import _pykernels as python

try:
    if os.environ.get("CLOUDPLUS_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python forced by environment")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

IMPLEMENTATION = "cython" if compiled is not None else "python"
_impl = compiled if compiled is not None else python
_LIMIT = 1 << 63


def available():
    """Map implementation name to module for every importable kernel set."""
    out = {"python": python}
    if compiled is not None:
        out["cython"] = compiled
    return out


def _pick(p):
    return _impl if p < _LIMIT else python


def mulmod(a, b, p):
    return _pick(p).mulmod(a, b, p)


def powmod(a, e, p):
    return _pick(p).powmod(a, e, p)


def invmod(a, p):
    return _pick(p).invmod(a, p)


def matvec(rows, vec, p):
    return _pick(p).matvec(rows, vec, p)


def solve_span(rows, p):
    return _pick(p).solve_span(rows, p)
