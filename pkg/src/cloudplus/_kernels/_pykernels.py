"""Pure-Python modular kernels; reference behaviour for the compiled module."""

M61 = (1 << 61) - 1


def mulmod(a, b, p):
    return a * b % p


def powmod(a, e, p):
    return pow(a, e, p)


def invmod(a, p):
    a %= p
    if a == 0:
        raise ZeroDivisionError("zero has no inverse mod p")
    return pow(a, p - 2, p)


def matvec(rows, vec, p):
    """Return ``[row . vec mod p for row in rows]``."""
    return [sum(x * y for x, y in zip(row, vec)) % p for row in rows]


def solve_span(rows, p):
    """Coefficients w with sum(w[j] * rows[j]) == (1, 0, ..., 0) mod p.

    Gaussian elimination on the transposed system; unknowns are visited in
    row order and the first non-zero pivot wins, free unknowns are zero.
    Returns None when the target is outside the span.
    """
    k = len(rows)
    if k == 0:
        return None
    n = len(rows[0])
    # one equation per matrix column, k unknowns plus the right-hand side
    eqs = [[rows[j][col] % p for j in range(k)] + [1 if col == 0 else 0] for col in range(n)]
    pivots = []
    rank = 0
    for j in range(k):
        piv = None
        for r in range(rank, n):
            if eqs[r][j]:
                piv = r
                break
        if piv is None:
            continue
        eqs[rank], eqs[piv] = eqs[piv], eqs[rank]
        prow = eqs[rank]
        inv = pow(prow[j], p - 2, p)
        if inv != 1:
            for c in range(j, k + 1):
                prow[c] = prow[c] * inv % p
        for r in range(n):
            if r != rank:
                f = eqs[r][j]
                if f:
                    row = eqs[r]
                    for c in range(j, k + 1):
                        row[c] = (row[c] - f * prow[c]) % p
        pivots.append(j)
        rank += 1
        if rank == n:
            break
    for r in range(rank, n):
        if eqs[r][k]:
            return None
    out = [0] * k
    for i, j in enumerate(pivots):
        out[j] = eqs[i][k]
    return out
