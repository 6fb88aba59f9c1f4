"""Exact linear algebra over the rationals.

Rank uses fraction-free Bareiss elimination on integer-scaled rows.
Solving and null spaces use reduced row echelon form over mpq.
"""

from math import lcm

from gmpy2 import mpq, mpz

from .polynomial import as_rational


def _integer_rows(rows):
    out = []
    for row in rows:
        qs = [as_rational(x) for x in row]
        den = 1
        for q in qs:
            den = lcm(den, int(q.denominator))
        out.append([mpz(q * den) for q in qs])
    return out


def bareiss_rank(rows):
    """Rank and pivot row indices (in input order) of a rational matrix."""
    if not rows:
        return 0, []
    m = _integer_rows(rows)
    ncols = len(m[0])
    order = list(range(len(m)))
    rank = 0
    prev = mpz(1)
    for col in range(ncols):
        piv = None
        for r in range(rank, len(m)):
            if m[r][col]:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        order[rank], order[piv] = order[piv], order[rank]
        p = m[rank][col]
        for r in range(rank + 1, len(m)):
            a = m[r][col]
            row_r, row_p = m[r], m[rank]
            m[r] = [(p * row_r[c] - a * row_p[c]) // prev for c in range(ncols)]
        prev = p
        rank += 1
        if rank == len(m):
            break
    return rank, order[:rank]


def rank(rows):
    return bareiss_rank(rows)[0]


def independent_rows(rows):
    """Indices of a maximal independent subset chosen greedily in input order."""
    chosen = []
    basis = []
    for i, row in enumerate(rows):
        if bareiss_rank(basis + [row])[0] > len(basis):
            basis.append(row)
            chosen.append(i)
    return chosen


def rref(rows, ncols=None):
    """Reduced row echelon form; returns (matrix, pivot columns)."""
    m = [[as_rational(x) for x in row] for row in rows]
    if ncols is None:
        ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c]:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                rowr = m[r]
                m[i] = [a - f * b for a, b in zip(m[i], rowr)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def solve(a, b):
    """One exact solution of a x = b, or None when inconsistent."""
    ncols = len(a[0]) if a else 0
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, piv = rref(aug, ncols + 1)
    if piv and piv[-1] == ncols:
        return None
    x = [mpq(0)] * ncols
    for row, c in zip(red, piv):
        x[c] = row[ncols]
    return x


def nullspace(a, ncols=None):
    """Basis of {x : a x = 0}."""
    if ncols is None:
        ncols = len(a[0]) if a else 0
    if not a:
        return [[mpq(1) if i == j else mpq(0) for i in range(ncols)] for j in range(ncols)]
    red, piv = rref(a, ncols)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [mpq(0)] * ncols
        v[f] = mpq(1)
        for row, c in zip(red, piv):
            v[c] = -row[f]
        basis.append(v)
    return basis


def same_row_space(a, b):
    """True when two rational matrices have identical row spaces."""
    ra = rank(a) if a else 0
    rb = rank(b) if b else 0
    if ra != rb:
        return False
    if ra == 0:
        return True
    return rank(list(a) + list(b)) == ra


def mat_vec(a, x):
    return [sum((ai * xi for ai, xi in zip(row, x)), mpq(0)) for row in a]
