"""Pfaffians and determinants over generic scalar rings."""

from __future__ import annotations

from .scalars import ONE, ZERO


class PfaffianCache:
    """Pfaffians of principal submatrices, memoized on index subsets.

    ``pf(mask)`` is the Pfaffian of the submatrix on the indices set in
    ``mask``, expanded along the first row.
    """

    def __init__(self, matrix):
        self.m = matrix
        self.memo = {0: ONE}

    def pf(self, mask: int):
        got = self.memo.get(mask)
        if got is not None:
            return got
        if mask.bit_count() & 1:
            return ZERO
        low = mask & -mask
        i0 = low.bit_length() - 1
        rest = mask ^ low
        row = self.m[i0]
        total = ZERO
        sign = 1
        r = rest
        while r:
            lj = r & -r
            j = lj.bit_length() - 1
            a = row[j]
            if a != 0:
                sub = self.pf(rest ^ lj)
                if sub != 0:
                    term = a * sub
                    total = total + term if sign > 0 else total - term
            sign = -sign
            r ^= lj
        self.memo[mask] = total
        return total


def pfaffian(matrix):
    """Pfaffian of an antisymmetric matrix given as nested sequences."""
    n = len(matrix)
    if n & 1:
        return ZERO
    rows = [list(r) for r in matrix]
    return PfaffianCache(rows).pf((1 << n) - 1)


def pfaffian_of_indices(matrix, idx):
    """Pfaffian of [matrix[i_k][i_l]] for an arbitrary index list (repeats give 0)."""
    idx = list(idx)
    if len(set(idx)) < len(idx):
        return ZERO
    return pfaffian([[matrix[i][j] for j in idx] for i in idx])


def determinant(matrix):
    """Determinant by Gaussian elimination over any field of scalars.

    Float matrices use partial pivoting; exact ones take the first nonzero pivot.
    """
    a = [list(r) for r in matrix]
    n = len(a)
    if n == 0:
        return ONE
    det = ONE
    for col in range(n):
        cands = [r for r in range(col, n) if a[r][col] != 0]
        if not cands:
            return ZERO
        piv = cands[0]
        if isinstance(a[piv][col], complex):
            piv = max(cands, key=lambda r: abs(a[r][col]))
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        p = a[col][col]
        det = det * p
        for r in range(col + 1, n):
            if a[r][col] != 0:
                f = a[r][col] / p
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


def solve(matrix, rhs_columns):
    """Solve matrix @ X = B exactly by Gauss-Jordan; returns X as rows."""
    n = len(matrix)
    k = len(rhs_columns[0]) if rhs_columns else 0
    a = [list(matrix[i]) + list(rhs_columns[i]) for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular linear system")
        a[col], a[piv] = a[piv], a[col]
        inv = ONE / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:n + k] for row in a]
