"""Evaluation of the n linear forms qX and bounded-height enumeration of solutions.

The scan visits every sign-canonical q (first nonzero coordinate positive) with
q_min <= |q| <= q_max. Vectors are grouped by the position k of their leading
coordinate; for each leading value a, the contribution of the remaining
coordinates ("tails") is precomputed once and kept sorted by the first form,
so the candidates that can possibly satisfy the first inequality form a
contiguous slice found by binary search. The remaining forms are then checked
one at a time on the survivors, dropping a candidate at its first violation.

Rational matrices are handled in integers: X = A / D, and each bound psi(r)
becomes an integer threshold on |qA| (or on the residue of qA mod D), so
every membership decision is exact.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .domain import (
    DomainError,
    FormMatrix,
    IntegerVector,
    ProblemSpec,
    SolutionRecord,
    Table,
    Variant,
    as_vector,
    coordinate_functions,
    make_record,
)

DEFAULT_GUARD = 1e-12
_INT64_SAFE = 2**62
_CHUNK = 1 << 20


class DimensionMismatchError(DomainError):
    pass


@dataclass(frozen=True)
class HeightWindow:
    q_min: int
    q_max: int

    def __post_init__(self):
        if isinstance(self.q_min, bool) or isinstance(self.q_max, bool):
            raise DomainError("window bounds must be integers")
        if int(self.q_min) != self.q_min or int(self.q_max) != self.q_max:
            raise DomainError("window bounds must be integers")
        if not 1 <= self.q_min <= self.q_max:
            raise DomainError(f"invalid height window [{self.q_min}, {self.q_max}]")

    @classmethod
    def parse(cls, text: str) -> "HeightWindow":
        lo, sep, hi = text.partition(":")
        if not sep:
            raise DomainError(f"window must look like 'qmin:qmax', got {text!r}")
        return cls(int(lo), int(hi))

    def heights(self) -> range:
        return range(self.q_min, self.q_max + 1)

    def split(self, parts: int, m: int) -> list:
        """Contiguous sub-windows with roughly equal candidate counts."""
        parts = max(1, min(parts, self.q_max - self.q_min + 1))
        total = candidate_count(m, self)
        bounds, lo, acc = [], self.q_min, 0
        for r in self.heights():
            acc += shell_size(m, r)
            if acc * parts >= total * (len(bounds) + 1) and len(bounds) < parts - 1:
                bounds.append(HeightWindow(lo, r))
                lo = r + 1
        if lo <= self.q_max:
            bounds.append(HeightWindow(lo, self.q_max))
        return bounds

    def to_json(self) -> list:
        return [self.q_min, self.q_max]


def shell_size(m: int, r: int) -> int:
    """Number of sign-canonical q in Z^m with |q| = r."""
    return ((2 * r + 1) ** m - (2 * r - 1) ** m) // 2


def candidate_count(m: int, window: HeightWindow) -> int:
    return ((2 * window.q_max + 1) ** m - (2 * window.q_min - 1) ** m) // 2


# --------------------------------------------------------------------------
# single evaluations


def linear_forms(q, X) -> tuple:
    """Signed values (qX)_1, ..., (qX)_n; exact for rational X.

    ``X`` is a FormMatrix or any sequence of rows (entries not range-checked).
    """
    q = as_vector(q)
    rows = X.rows if isinstance(X, FormMatrix) else [list(r) for r in X]
    if len(q) != len(rows):
        raise DimensionMismatchError(f"vector of length {len(q)} against a matrix with {len(rows)} rows")
    n = len(rows[0])
    exact = all(isinstance(x, (int, Fraction)) for r in rows for x in r)
    zero = Fraction(0) if exact else 0.0
    return tuple(sum((qj * rows[j][i] for j, qj in enumerate(q)), zero) for i in range(n))


def eval_abs_forms(q, X) -> tuple:
    """(|qX|_1, ..., |qX|_n)."""
    return tuple(abs(v) for v in linear_forms(q, X))


def eval_dist_forms(r, Y) -> tuple:
    """Nearest-integer distances of rY and the nearest integer vector p.

    Ties at distance 1/2 round to the even integer.
    """
    values = linear_forms(r, Y)
    p = tuple(int(round(v)) for v in values)
    return tuple(abs(v - pi) for v, pi in zip(values, p)), p


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class EnumerationReport:
    spec: ProblemSpec
    window: HeightWindow
    solutions: tuple
    shell_counts: tuple  # counts for r = q_min..q_max
    vectors_scanned: int
    uncertain: tuple = ()  # float mode: q whose margin is within the guard
    inclusive: bool = False

    @property
    def count(self) -> int:
        return len(self.solutions)

    def shell_dict(self) -> dict:
        return dict(zip(self.window.heights(), self.shell_counts))

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "window": self.window.to_json(),
            "inclusive": self.inclusive,
            "count": self.count,
            "vectors_scanned": self.vectors_scanned,
            "shell_counts": [{"r": r, "count": c} for r, c in self.shell_dict().items()],
            "uncertain": [list(q) for q in self.uncertain],
            "solutions": [s.to_json() for s in self.solutions],
        }

    def shell_counts_csv(self) -> str:
        return shell_counts_csv(self.shell_dict())


@dataclass(frozen=True)
class ShellCounts:
    window: HeightWindow
    counts: tuple
    vectors_scanned: int
    uncertain: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict:
        return dict(zip(self.window.heights(), self.counts))

    def first_hit(self):
        """Smallest height with a solution, or None."""
        for r, c in zip(self.window.heights(), self.counts):
            if c:
                return r
        return None


def shell_counts_csv(counts: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "count"])
    for r, c in counts.items():
        w.writerow([r, c])
    return buf.getvalue()


# --------------------------------------------------------------------------
# the scan


@lru_cache(maxsize=16)
def _tails(width: int, Q: int):
    """All vectors of [-Q, Q]^width with their sup norms (read-only arrays)."""
    if width == 0:
        T = np.zeros((1, 0), dtype=np.int64)
    else:
        axis = np.arange(-Q, Q + 1, dtype=np.int64)
        grids = np.meshgrid(*([axis] * width), indexing="ij")
        T = np.stack([g.ravel() for g in grids], axis=1)
    h = np.abs(T).max(axis=1) if width else np.zeros(1, dtype=np.int64)
    T.setflags(write=False)
    h.setflags(write=False)
    return T, h


def _int_threshold(bound: Fraction, D: int, inclusive: bool) -> int:
    """Largest integer k with k < bound*D (or <= with ``inclusive``)."""
    t = bound * D
    if inclusive:
        return t.numerator // t.denominator
    return -((-t.numerator) // t.denominator) - 1


class _Kernel:
    """Per-matrix data for the scan: coefficients and per-height thresholds."""

    def __init__(self, spec: ProblemSpec, X: FormMatrix, Q: int, inclusive: bool, guard: float):
        if (spec.m, spec.n) != X.shape:
            raise DimensionMismatchError(f"spec is {spec.m}x{spec.n} but matrix is {X.m}x{X.n}")
        funcs = coordinate_functions(spec.psi, spec.n)
        for f in funcs:
            if isinstance(f, Table) and Q > f.size:
                from .domain import TableRangeError

                raise TableRangeError(f"window reaches height {Q} beyond tabulated range 1..{f.size}")
        self.m, self.n, self.Q = spec.m, spec.n, Q
        self.classical = spec.variant is Variant.CLASSICAL
        self.inclusive = inclusive
        self.guard = guard
        self.exact = X.exact
        self.funcs = funcs
        if X.exact:
            A, D = X.integer_numerators()
            self.D = D
            amax = max(1, max(abs(a) for row in A for a in row))
            big = self.m * Q * amax + D
            self.dtype = np.int64 if big < _INT64_SAFE else object
            self.C = np.array(A, dtype=self.dtype)
            cap = big + 1
            thr = np.full((self.n, Q + 1), -1, dtype=self.dtype)
            for i, f in enumerate(funcs):
                for r in range(1, Q + 1):
                    b = f.exact(r) if f.is_exact else Fraction(f.value(r))
                    thr[i, r] = min(_int_threshold(b, D, inclusive), cap)
            self.thr = thr
        else:
            self.D = None
            self.dtype = float
            self.C = X.as_float()
            thr = np.zeros((self.n, Q + 1))
            for i, f in enumerate(funcs):
                thr[i, 1:] = [f.value(r) for r in range(1, Q + 1)]
            self.thr = thr
        # suffix maxima: the loosest bound among heights >= r
        self.thr_suffix = np.maximum.accumulate(self.thr[:, ::-1], axis=1)[:, ::-1]

    # candidate slice for the first form -------------------------------
    def key(self, tf0):
        if not self.classical:
            return tf0
        if self.exact:
            return tf0 % self.D
        return tf0 - np.floor(tf0)

    def key_ranges(self, a, bound):
        """Closed key intervals that contain every tail passing form 0 for leading value a."""
        x0 = self.C[self.k_row, 0]
        if self.exact:
            if not self.classical:
                c = -a * x0
                return [(c - bound, c + bound)]
            D = self.D
            if 2 * bound + 1 >= D:
                return None
            c = (-a * x0) % D
            return _mod_ranges(c - bound, c + bound, D)
        slack = bound * (1 + 1e-6) + 1e-9 * (abs(a * x0) + 1.0)
        if not self.classical:
            c = -a * x0
            return [(c - slack, c + slack)]
        if slack >= 0.5:
            return None
        c = (-a * x0) % 1.0
        return _mod_ranges(c - slack, c + slack, 1.0)

    def form_values(self, a, k, tf_col, i):
        v = a * self.C[k, i] + tf_col
        if not self.classical:
            return np.abs(v)
        if self.exact:
            res = v % self.D
            return np.minimum(res, self.D - res)
        return np.abs(v - np.rint(v))


def _mod_ranges(lo, hi, period):
    lo_w = lo % period
    span = hi - lo
    if lo_w + span < period:
        return [(lo_w, lo_w + span)]
    return [(lo_w, period), (0 * period, lo_w + span - period)]


def _scan(spec: ProblemSpec, X: FormMatrix, window: HeightWindow, *, inclusive=False,
          guard=DEFAULT_GUARD, collect=False, prune=True):
    """Core scan. Returns (counts per height, uncertain list, hits list)."""
    Q, qmin = window.q_max, window.q_min
    K = _Kernel(spec, X, Q, inclusive, guard)
    m, n = K.m, K.n
    counts = np.zeros(Q + 1, dtype=np.int64)
    uncertain, hits = [], []
    for k in range(m):
        T, h = _tails(m - k - 1, Q)
        K.k_row = k
        rest = K.C[k + 1:, :]
        if T.shape[1]:
            tf = T.astype(K.dtype) @ rest if K.dtype is object else T @ rest
        else:
            tf = np.zeros((1, n), dtype=K.C.dtype)
        pools = {}
        for key_name, sel in (("all", None), ("hi", h >= qmin)):
            idx = np.arange(len(h)) if sel is None else np.flatnonzero(sel)
            if prune:
                kv = K.key(tf[idx, 0])
                order = np.argsort(kv, kind="stable")
                pools[key_name] = (idx[order], kv[order])
            else:
                pools[key_name] = (idx, None)
        for a in range(1, Q + 1):
            pool_idx, pool_keys = pools["all"] if a >= qmin else pools["hi"]
            if len(pool_idx) == 0:
                continue
            if prune:
                lo_h = max(a, qmin)
                bmax = K.thr_suffix[0, lo_h]
                ranges = K.key_ranges(a, bmax)
                if ranges is None:
                    cand = pool_idx
                else:
                    parts = []
                    for lo, hi in ranges:
                        s = np.searchsorted(pool_keys, lo, side="left")
                        e = np.searchsorted(pool_keys, hi, side="right")
                        if e > s:
                            parts.append(pool_idx[s:e])
                    if not parts:
                        continue
                    cand = parts[0] if len(parts) == 1 else np.concatenate(parts)
            else:
                cand = pool_idx
            for start in range(0, len(cand), _CHUNK):
                _check_chunk(K, k, a, cand[start:start + _CHUNK], T, h, tf, counts, uncertain, hits, collect)
    return counts[qmin:Q + 1], uncertain, hits


def _check_chunk(K, k, a, cand, T, h, tf, counts, uncertain, hits, collect):
    heights = np.maximum(h[cand], a)
    unsure = np.zeros(len(cand), dtype=bool)
    vals = []
    for i in range(K.n):
        v = K.form_values(a, k, tf[cand, i], i)
        b = K.thr[i, heights]
        if K.exact:
            ok = v <= b
        else:
            ok = v <= b if K.inclusive else v < b
            near = np.abs(b - v) <= K.guard * b
            keep = ok | near
            unsure = unsure | near
            ok = keep
        cand, heights, unsure, v = cand[ok], heights[ok], unsure[ok], v[ok]
        vals = [x[ok] for x in vals] + [v]
        if len(cand) == 0:
            return
    if unsure.any():
        for c in cand[unsure]:
            uncertain.append(_vector(k, a, T[c], K.m))
        cand, heights, vals = cand[~unsure], heights[~unsure], [x[~unsure] for x in vals]
    counts += np.bincount(heights.astype(np.int64), minlength=len(counts))
    if collect:
        for j, c in enumerate(cand):
            hits.append((_vector(k, a, T[c], K.m), tuple(x[j] for x in vals), int(heights[j])))


def _vector(k, a, tail, m):
    return (0,) * k + (a,) + tuple(int(t) for t in tail)


# --------------------------------------------------------------------------
# public entry points


def _scan_job(args):
    spec, X, window, kwargs = args
    return window, _scan(spec, X, window, **kwargs)


def _run(spec, X, window, jobs, **kwargs):
    if jobs <= 1:
        return [(window, _scan(spec, X, window, **kwargs))]
    parts = window.split(jobs, spec.m)
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_scan_job, [(spec, X, w, kwargs) for w in parts]))


def _bounds_at(K_funcs, r, exact):
    return tuple((f.exact(r) if (exact and f.is_exact) else f.value(r)) for f in K_funcs)


def enumerate_solutions(spec: ProblemSpec, X: FormMatrix, window: HeightWindow, *,
                        inclusive: bool = False, guard: float = DEFAULT_GUARD,
                        jobs: int = 1, prune: bool = True) -> EnumerationReport:
    """All sign-canonical q in the window with every form value below its bound.

    Solutions are ordered by height, then lexicographically. Exact matrices give
    exact records; float matrices report near-boundary vectors in ``uncertain``
    instead of deciding them.
    """
    results = _run(spec, X, window, jobs, inclusive=inclusive, guard=guard, collect=True, prune=prune)
    funcs = coordinate_functions(spec.psi, spec.n)
    counts, uncertain, raw = [], [], []
    for _, (c, u, hits) in results:
        counts.extend(int(x) for x in c)
        uncertain.extend(u)
        raw.extend(hits)
    raw.sort(key=lambda t: (t[2], t[0]))
    D = X.common_denominator() if X.exact else None
    records = []
    for q, vals, r in raw:
        if X.exact:
            values = tuple(Fraction(int(v), D) for v in vals)
        else:
            values = tuple(float(v) for v in vals)
        records.append(make_record(q, values, _bounds_at(funcs, r, X.exact), inclusive=inclusive))
    uncertain.sort(key=lambda q: (max(abs(c) for c in q), q))
    return EnumerationReport(
        spec=spec,
        window=window,
        solutions=tuple(records),
        shell_counts=tuple(counts),
        vectors_scanned=candidate_count(spec.m, window),
        uncertain=tuple(uncertain),
        inclusive=inclusive,
    )


def count_shells(spec: ProblemSpec, X: FormMatrix, window: HeightWindow, *,
                 inclusive: bool = False, guard: float = DEFAULT_GUARD,
                 jobs: int = 1, prune: bool = True) -> ShellCounts:
    """Per-height solution counts without building records."""
    results = _run(spec, X, window, jobs, inclusive=inclusive, guard=guard, collect=False, prune=prune)
    counts, unsure = [], 0
    for _, (c, u, _) in results:
        counts.extend(int(x) for x in c)
        unsure += len(u)
    return ShellCounts(window, tuple(counts), candidate_count(spec.m, window), unsure)


def verify_record(record: SolutionRecord, spec: ProblemSpec, X: FormMatrix, *, inclusive: bool = False) -> bool:
    """Re-check a record by direct evaluation of the forms."""
    q = record.q
    if q.is_zero:
        return False
    if spec.variant is Variant.CLASSICAL:
        values, _ = eval_dist_forms(q, X)
    else:
        values = eval_abs_forms(q, X)
    funcs = coordinate_functions(spec.psi, spec.n)
    bounds = _bounds_at(funcs, q.height, X.exact)
    if inclusive:
        return all(v <= b for v, b in zip(values, bounds))
    return all(v < b for v, b in zip(values, bounds))


def integer_vector(components) -> IntegerVector:
    return IntegerVector(tuple(components))
