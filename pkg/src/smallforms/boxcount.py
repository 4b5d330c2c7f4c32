"""Box counting of unions of slabs {X : |qX|_i < psi(|q|)} on the grid of side delta.

A box with integer corner j (side delta) meets the slab of q exactly when the
integer q.j lies strictly between -psi/delta - pos(q) and psi/delta - neg(q),
where pos and neg sum the positive and negative coordinates of q. Along the
axis of the leading coordinate of q this picks out a run of boxes in every
grid column, so each slab is marked with two writes per column into a
difference array.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .domain import ApproxFunction, DomainError, coordinate_functions

MAX_CELLS = 1 << 26


def canonical_vectors(m: int, q_min: int, q_max: int):
    """Sign-canonical integer vectors with q_min <= |q| <= q_max, as an array."""
    axis = np.arange(-q_max, q_max + 1)
    out = []
    for k in range(m):
        width = m - k - 1
        if width:
            tails = np.stack([g.ravel() for g in np.meshgrid(*([axis] * width), indexing="ij")], axis=1)
        else:
            tails = np.zeros((1, 0), dtype=np.int64)
        th = np.abs(tails).max(axis=1) if width else np.zeros(1, dtype=np.int64)
        for a in range(1, q_max + 1):
            h = np.maximum(th, a)
            sel = tails[h >= q_min]
            block = np.zeros((len(sel), m), dtype=np.int64)
            block[:, k] = a
            block[:, k + 1:] = sel
            out.append(block)
    return np.concatenate(out) if out else np.zeros((0, m), dtype=np.int64)


def _runs(q, bound, delta, G):
    """(mask over the other axes, lo, hi) of boxes met by one slab, along the leading axis."""
    q = [int(x) for x in q]
    m = len(q)
    k = next(i for i, x in enumerate(q) if x)
    a = q[k]
    pos = sum(x for x in q if x > 0)
    neg = sum(x for x in q if x < 0)
    L = -bound / delta - pos
    U = bound / delta - neg
    rest = q[k + 1:]
    if rest:
        grids = np.meshgrid(*([np.arange(G)] * len(rest)), indexing="ij")
        t = sum(c * g for c, g in zip(rest, grids))
    else:
        t = np.zeros((), dtype=np.int64)
    # a * j_k + t in (L, U) with a > 0
    lo = np.floor((L - t) / a).astype(np.int64) + 1
    hi = np.ceil((U - t) / a).astype(np.int64) - 1
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, G - 1)
    return k, lo, hi


def _mark_n1(qs, bounds, delta, G, m):
    """Boolean grid G^m of boxes met by the union of slabs (one form)."""
    diffs = {}
    for q, b in zip(qs, bounds):
        k, lo, hi = _runs(q, b, delta, G)
        width = m - k - 1
        if k not in diffs:
            diffs[k] = np.zeros((G + 1,) + (G,) * width, dtype=np.int32)
        d = diffs[k]
        ok = lo <= hi
        if width == 0:
            if ok:
                d[int(lo)] += 1
                d[int(hi) + 1] -= 1
            continue
        cols = np.nonzero(ok)
        np.add.at(d, (lo[cols],) + cols, 1)
        np.add.at(d, (hi[cols] + 1,) + cols, -1)
    grid = np.zeros((G,) * m, dtype=bool)
    for k, d in diffs.items():
        covered = np.cumsum(d, axis=0)[:G] > 0  # shape (G,) * (m - k)
        grid |= covered.reshape((1,) * k + covered.shape)
    return grid


def _grid_size(delta: float) -> int:
    G = int(round(1 / delta))
    if G < 1 or not math.isclose(G * delta, 1.0, rel_tol=1e-12):
        raise DomainError(f"1/delta must be an integer (delta = {delta})")
    return G


def count_boxes(m: int, n: int, psi: ApproxFunction, delta: float, q_min: int, q_max: int) -> int:
    """Number of delta-boxes of I^(mn) meeting the union of slabs over q_min <= |q| <= q_max."""
    G = _grid_size(delta)
    if G ** (m * n) > MAX_CELLS:
        raise DomainError(f"grid of {G}^{m * n} cells exceeds the cell budget {MAX_CELLS}")
    funcs = coordinate_functions(psi, n)
    qs = canonical_vectors(m, q_min, q_max)
    heights = np.abs(qs).max(axis=1)
    if n == 1:
        bounds = [funcs[0].value(int(h)) for h in heights]
        return int(_mark_n1(qs, bounds, delta, G, m).sum())
    # product structure: the i-th form involves only the i-th column of X
    grid = np.zeros((G,) * (m * n), dtype=bool)
    for q, h in zip(qs, heights):
        masks = [_mark_n1([q], [f.value(int(h))], delta, G, m) for f in funcs]
        prod = masks[0]
        for mk in masks[1:]:
            prod = np.logical_and.outer(prod, mk)
        grid |= prod
    # axes are ordered column by column; the count is order independent
    return int(grid.sum())


def count_slab_boxes(q, bounds, delta: float) -> int:
    """Boxes of I^(mn) meeting the single product slab {X : |qX|_i < bounds[i]}."""
    G = _grid_size(delta)
    total = 1
    for b in bounds:
        k, lo, hi = _runs(q, b, delta, G)
        # axes before the leading coordinate do not constrain the box
        total *= G**k * int(np.maximum(hi - lo + 1, 0).sum())
    return total


def covering_volume_bound(m: int, n: int, psi: ApproxFunction, delta: float, q_min: int, q_max: int) -> float:
    """Upper bound for N(delta) delta^(mn): the union of met boxes lies in the slabs
    widened by delta ||q||_1, so their total volume (capped at 1) dominates."""
    funcs = coordinate_functions(psi, n)
    total = 0.0
    for q in canonical_vectors(m, q_min, q_max):
        h = int(np.abs(q).max())
        widen = delta * int(np.abs(q).sum())
        total += math.prod(slab_volume(q, Fraction(f.value(h)) + Fraction(widen)) for f in funcs)
        if total >= 1:
            return 1.0
    return total


def slab_volume(q, bound) -> float:
    """Lebesgue measure of {x in [0,1]^m : |q.x| < bound}, by the closed-form CDF
    of a weighted sum of independent uniforms (inclusion-exclusion)."""
    a = [abs(int(x)) for x in q if x]
    shift = -sum(abs(int(x)) for x in q if x < 0)
    if not a:
        return 1.0 if bound > 0 else 0.0
    k = len(a)
    denom = math.factorial(k) * math.prod(a)

    def cdf(t):  # P(sum a_i U_i <= t)
        total = Fraction(0)
        for r in range(k + 1):
            for S in itertools.combinations(a, r):
                z = t - sum(S)
                if z > 0:
                    total += (-1) ** r * z**k
        return total / denom

    b = Fraction(bound)
    return float(cdf(b - shift) - cdf(-b - shift))


@dataclass(frozen=True)
class BoxCountResult:
    m: int
    n: int
    tau: float
    deltas: tuple
    windows: tuple
    counts: tuple
    slope: float
    intercept: float
    residuals: tuple
    target: float  # critical exponent s*

    @property
    def error(self) -> float:
        return self.slope - self.target

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "tau": self.tau,
            "target": self.target,
            "slope": self.slope,
            "intercept": self.intercept,
            "error": self.error,
            "rows": [
                {"delta": d, "q_min": w[0], "q_max": w[1], "box_count": c, "residual": r}
                for d, w, c, r in zip(self.deltas, self.windows, self.counts, self.residuals)
            ],
        }


def default_window(delta: float, tau: float, n: int = 1) -> tuple:
    """Heights whose slabs are about delta thick: [R, 2R] with R the least r with psi(r)/r <= delta."""
    R = max(1, math.ceil(delta ** (-1.0 / (float(tau) + 1)) - 1e-9))
    return R, 2 * R


def fit_slope(deltas, counts) -> tuple:
    x = np.log(1 / np.asarray(deltas, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), tuple(float(r) for r in resid)
