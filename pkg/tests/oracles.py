"""Reference implementations that share no code with the package internals."""

import itertools
import math
from fractions import Fraction

import numpy as np


def brute_force(m, n, rows, psi_exact, q_max, *, classical=False, inclusive=False, canonical=True):
    """Every nonzero q with |q| <= q_max whose forms satisfy the bound, using exact rationals.

    ``rows`` holds Fractions, ``psi_exact(h)`` returns a Fraction or a tuple of n Fractions.
    """
    out = []
    for q in itertools.product(range(-q_max, q_max + 1), repeat=m):
        if not any(q):
            continue
        if canonical and next(c for c in q if c) < 0:
            continue
        h = max(abs(c) for c in q)
        bound = psi_exact(h)
        bounds = bound if isinstance(bound, tuple) else (bound,) * n
        ok = True
        for i in range(n):
            v = sum(q[j] * rows[j][i] for j in range(m))
            if classical:
                v = abs(v - math.floor(v + Fraction(1, 2)))
            else:
                v = abs(v)
            if not (v <= bounds[i] if inclusive else v < bounds[i]):
                ok = False
                break
        if ok:
            out.append(q)
    return sorted(out, key=lambda q: (max(abs(c) for c in q), q))


def brute_force_float(rows, bound_of_height, q_max, q_min=1):
    """Canonical float solutions with |qX|_i < bound(h), and the margins, by a full numpy grid."""
    X = np.asarray(rows, dtype=float)
    m = X.shape[0]
    axis = np.arange(-q_max, q_max + 1)
    Q = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    h = np.abs(Q).max(axis=1)
    Q, h = Q[(h >= q_min) & (h > 0)], h[(h >= q_min) & (h > 0)]
    first = Q[np.arange(len(Q)), (Q != 0).argmax(axis=1)]
    Q, h = Q[first > 0], h[first > 0]
    vals = np.abs(Q @ X)
    b = np.array([bound_of_height(int(x)) for x in h])
    margin = (b[:, None] - vals).min(axis=1)
    return Q, margin, b


def shell_size(m, r):
    return sum(1 for q in itertools.product(range(-r, r + 1), repeat=m)
               if max(abs(c) for c in q) == r and next(c for c in q if c) > 0)


def wilson(hits, n, z=1.959963984540054):
    p = hits / n
    a = p + z * z / (2 * n)
    b = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    d = 1 + z * z / n
    return (a - b) / d, (a + b) / d


def p_series(e, k):
    """Convergence of sum r^e (log r)^k by the textbook test."""
    if e < -1 or (e == -1 and k < -1):
        return "Convergent"
    if e == -1 and k == -1:
        return "Boundary"
    return "Divergent"
