# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled modular kernels for moduli below 2**63.

Same contracts as ``_pykernels``; the Mersenne prime 2**61 - 1 takes a
shift-and-add reduction path instead of a 128-bit division.
"""
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

cdef extern from *:
    """
    typedef unsigned __int128 cp_u128;
    static inline uint64_t cp_mulmod(uint64_t a, uint64_t b, uint64_t p) {
        cp_u128 z = (cp_u128)a * b;
        if (p == 0x1FFFFFFFFFFFFFFFULL) {
            uint64_t lo = (uint64_t)(z & p);
            uint64_t hi = (uint64_t)(z >> 61);
            uint64_t s = lo + hi;
            s = (s & p) + (s >> 61);
            return s >= p ? s - p : s;
        }
        return (uint64_t)(z % p);
    }
    """
    uint64_t cp_mulmod(uint64_t a, uint64_t b, uint64_t p) nogil

M61 = (1 << 61) - 1
LIMIT = 1 << 63


cdef inline uint64_t _pow(uint64_t a, uint64_t e, uint64_t p) nogil:
    cdef uint64_t r = 1 % p
    a = a % p
    while e:
        if e & 1:
            r = cp_mulmod(r, a, p)
        a = cp_mulmod(a, a, p)
        e >>= 1
    return r


cdef inline uint64_t _sub(uint64_t a, uint64_t b, uint64_t p) nogil:
    return a - b if a >= b else a + (p - b)


def mulmod(a, b, p):
    return cp_mulmod(a % p, b % p, p)


def powmod(a, e, p):
    if e < 0:
        return _pow(invmod(a, p), -e, p)
    if e >= (1 << 64):
        e = e % (p - 1)
    return _pow(a % p, e, p)


def invmod(a, p):
    cdef uint64_t v = a % p
    if v == 0:
        raise ZeroDivisionError("zero has no inverse mod p")
    return _pow(v, p - 2, p)


def matvec(rows, vec, p):
    cdef Py_ssize_t n = len(vec), i, j
    cdef uint64_t q = p, acc
    cdef uint64_t *v = <uint64_t *> malloc(n * sizeof(uint64_t))
    if v == NULL:
        raise MemoryError()
    out = []
    try:
        for j in range(n):
            v[j] = vec[j] % p
        for row in rows:
            acc = 0
            for j in range(n):
                acc += cp_mulmod(<uint64_t>(row[j] % p), v[j], q)
                if acc >= q:
                    acc -= q
            out.append(acc)
    finally:
        free(v)
    return out


def solve_span(rows, p):
    cdef Py_ssize_t k = len(rows)
    if k == 0:
        return None
    cdef Py_ssize_t n = len(rows[0])
    cdef Py_ssize_t w = k + 1, r, c, j, piv, rank = 0, npiv = 0
    cdef uint64_t q = p, inv, f, t
    cdef uint64_t *a = <uint64_t *> malloc(n * w * sizeof(uint64_t))
    cdef Py_ssize_t *pivots = <Py_ssize_t *> malloc(k * sizeof(Py_ssize_t))
    if a == NULL or pivots == NULL:
        free(a)
        free(pivots)
        raise MemoryError()
    try:
        for j in range(k):
            row = rows[j]
            for c in range(n):
                a[c * w + j] = row[c] % p
        for c in range(n):
            a[c * w + k] = 1 if c == 0 else 0
        with nogil:
            for j in range(k):
                piv = -1
                for r in range(rank, n):
                    if a[r * w + j] != 0:
                        piv = r
                        break
                if piv < 0:
                    continue
                if piv != rank:
                    for c in range(w):
                        t = a[piv * w + c]
                        a[piv * w + c] = a[rank * w + c]
                        a[rank * w + c] = t
                inv = _pow(a[rank * w + j], q - 2, q)
                if inv != 1:
                    for c in range(j, w):
                        a[rank * w + c] = cp_mulmod(a[rank * w + c], inv, q)
                for r in range(n):
                    if r != rank:
                        f = a[r * w + j]
                        if f != 0:
                            for c in range(j, w):
                                a[r * w + c] = _sub(a[r * w + c], cp_mulmod(f, a[rank * w + c], q), q)
                pivots[npiv] = j
                npiv += 1
                rank += 1
                if rank == n:
                    break
        for r in range(rank, n):
            if a[r * w + k] != 0:
                return None
        out = [0] * k
        for r in range(npiv):
            out[pivots[r]] = a[r * w + k]
        return out
    finally:
        free(a)
        free(pivots)
