"""Small dense linear algebra over ``Fraction`` (exact) with float fallbacks.

Matrices are lists of row lists. Sizes here are tiny (n <= 8), so plain
Gaussian elimination is the right tool.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


class SingularMatrixError(ArithmeticError):
    pass


def to_fractions(A):
    return [[Fraction(x) for x in row] for row in A]


def matmul(A, B):
    cols = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col)), start=0 * row[0]) for col in cols] for row in A]


def identity(n, one=Fraction(1)):
    return [[one if i == j else 0 * one for j in range(n)] for i in range(n)]


def rref(A):
    """Reduced row echelon form; returns (R, pivot_columns). Exact for Fractions."""
    R = [list(row) for row in A]
    rows, cols = len(R), len(R[0]) if R else 0
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if R[i][c] != 0), None)
        if pivot is None:
            continue
        R[r], R[pivot] = R[pivot], R[r]
        lead = R[r][c]
        R[r] = [x / lead for x in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R, pivots


def rank(A) -> int:
    return len(rref(A)[1])


def det(A):
    """Determinant by fraction-exact elimination."""
    M = [list(row) for row in A]
    n = len(M)
    sign = 1
    result = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if M[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            M[c], M[pivot] = M[pivot], M[c]
            sign = -sign
        lead = M[c][c]
        result *= lead
        for i in range(c + 1, n):
            if M[i][c] != 0:
                f = M[i][c] / lead
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return sign * result


def inverse(A):
    n = len(A)
    aug = [list(row) + identity(n)[i] for i, row in enumerate(to_fractions(A))]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n:] for row in R]


def nullspace(A):
    """Basis of {c : A c = 0}, one vector per free column, exact.

    Each basis vector is supported on the pivot columns plus one free
    column, i.e. it is a minimal dependence among the columns of A.
    """
    R, pivots = rref(to_fractions(A))
    cols = len(A[0])
    basis = []
    for free in (c for c in range(cols) if c not in pivots):
        v = [Fraction(0)] * cols
        v[free] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[free]
        basis.append(v)
    return basis


def float_det(A) -> float:
    return float(np.linalg.det(np.asarray(A, dtype=float)))
