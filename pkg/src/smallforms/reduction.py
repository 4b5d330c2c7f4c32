"""Reduction of small linear forms to classical approximation.

For m > n write X = (X~; X') with X~ the top n x n block. Then
X = (I_n; X^) X~ with X^ = X' X~^(-1), and an integer vector r with
||r X^||_i <= psi(|r|) / (nN) lifts to q = (-p, r), p the nearest integer
vector to r X^, for which qX = (r X^ - p) X~ and hence
|qX|_i <= n * N * psi(|r|) / (nN) = psi(|r|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import linalg
from .domain import (
    ApproxFunction,
    DomainError,
    FormMatrix,
    IntegerVector,
    ProblemSpec,
    TableRangeError,
    Variant,
    as_vector,
    is_rational,
    number_from_json,
    number_to_json,
)
from .forms import HeightWindow, eval_abs_forms, eval_dist_forms, enumerate_solutions

FLOAT_DET_FLOOR = 1e-8
FLOAT_RECONSTRUCTION_TOL = 1e-10


class SingularTopBlock(DomainError):
    pass


class MembershipViolation(DomainError):
    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        super().__init__(f"membership in A(eps, N) fails: {condition}" + (f" ({detail})" if detail else ""))


class EqOneViolation(DomainError):
    def __init__(self, coordinate: int, distance, bound):
        self.coordinate = coordinate
        super().__init__(f"||r X^||_{coordinate + 1} = {distance} exceeds psi(|r|)/(nN) = {bound}")


class RegimeError(DomainError):
    pass


def _num(x):
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x) if is_rational(x) else float(x)


def _rows(X) -> tuple:
    if isinstance(X, FormMatrix):
        return X.rows
    rows = [list(r) for r in X]
    if not rows or not rows[0] or any(len(r) != len(rows[0]) for r in rows):
        raise DomainError("matrix must be a non-empty rectangular array")
    exact = all(is_rational(x) for r in rows for x in r)
    if exact:
        return tuple(tuple(Fraction(x) for x in r) for r in rows)
    return tuple(tuple(float(x) for x in r) for r in rows)


def _is_exact(rows) -> bool:
    return all(isinstance(x, Fraction) for r in rows for x in r)


def _check_block(block, epsilon, N, exact):
    """Ã(eps, N) conditions on an n x n block; returns its determinant."""
    n = len(block)
    if exact:
        d = linalg.det(block)
        if d == 0:
            raise SingularTopBlock("top n x n block is singular")
    else:
        d = linalg.float_det(block)
        if abs(d) < FLOAT_DET_FLOOR:
            raise SingularTopBlock(f"top block determinant {d:.3e} below the float floor")
    if not d > epsilon:
        raise MembershipViolation("eps < det(X~)", f"det = {d}, eps = {epsilon}")
    if not d < 1 / epsilon:
        raise MembershipViolation("det(X~) < 1/eps", f"det = {d}, 1/eps = {1 / epsilon}")
    big = max(abs(x) for row in block for x in row)
    if big > N:
        raise MembershipViolation("max |x_ij| <= N", f"max = {big}, N = {N}")
    return d


@dataclass(frozen=True)
class RestrictedMatrix:
    """A matrix of A(eps, N) with its cached blocks X~, X' and X^ = X' X~^(-1)."""

    rows: tuple
    epsilon: object
    N: object
    top: tuple
    bottom: tuple
    hat: tuple
    det: object

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    @property
    def exact(self) -> bool:
        return _is_exact(self.rows)

    def reconstruct(self) -> tuple:
        """(I_n; X^) X~."""
        n = self.n
        stacked = [[Fraction(int(i == j)) if self.exact else float(i == j) for j in range(n)] for i in range(n)]
        stacked += [list(r) for r in self.hat]
        if self.exact:
            return tuple(tuple(r) for r in linalg.matmul(stacked, self.top))
        return tuple(tuple(r) for r in (np.array(stacked) @ np.array(self.top)).tolist())

    def hat_mod_one(self) -> FormMatrix:
        """X^ reduced mod 1 entrywise; distances to the nearest integer are unchanged."""
        if self.exact:
            return FormMatrix([[x - math.floor(x) for x in r] for r in self.hat], exact=True)
        return FormMatrix([[x - math.floor(x) for x in r] for r in self.hat], exact=False)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "epsilon": number_to_json(self.epsilon),
            "N": number_to_json(self.N),
            "det": number_to_json(self.det),
            "X": [[number_to_json(x) for x in r] for r in self.rows],
            "X_top": [[number_to_json(x) for x in r] for r in self.top],
            "X_bottom": [[number_to_json(x) for x in r] for r in self.bottom],
            "X_hat": [[number_to_json(x) for x in r] for r in self.hat],
        }


def decompose(X, epsilon, N) -> RestrictedMatrix:
    """Split X into X~ (first n rows) and X' (last m - n rows) and form X^ = X' X~^(-1).

    Raises SingularTopBlock or MembershipViolation naming the failed condition.
    """
    rows = _rows(X)
    m, n = len(rows), len(rows[0])
    if not m > n:
        raise RegimeError(f"decomposition needs m > n (got m={m}, n={n})")
    exact = _is_exact(rows)
    epsilon, N = _num(epsilon), _num(N)
    if not epsilon > 0 or not N > 0:
        raise DomainError("epsilon and N must be positive")
    if not exact:
        epsilon, N = float(epsilon), float(N)
    top, bottom = rows[:n], rows[n:]
    d = _check_block(top, epsilon, N, exact)
    if exact:
        hat = linalg.matmul([list(r) for r in bottom], linalg.inverse(top))
        hat = tuple(tuple(r) for r in hat)
    else:
        hat = np.linalg.solve(np.array(top).T, np.array(bottom).T).T
        hat = tuple(tuple(float(x) for x in r) for r in hat)
    rx = RestrictedMatrix(rows, epsilon, N, top, bottom, hat, d)
    if not exact:
        err = np.abs(np.array(rx.reconstruct()) - np.array(rows)).max()
        if err > FLOAT_RECONSTRUCTION_TOL:
            raise SingularTopBlock(f"float reconstruction error {err:.2e} exceeds tolerance")
    return rx


# --------------------------------------------------------------------------
# lifting


def _psi_at(psi: ApproxFunction, r: int, exact: bool):
    return tuple((f.exact(r) if (exact and f.is_exact) else f.value(r)) for f in psi_funcs(psi))


def psi_funcs(psi):
    from .domain import PerCoordinate

    return psi.psis if isinstance(psi, PerCoordinate) else (psi,)


@dataclass(frozen=True)
class LiftCertificate:
    X: tuple
    epsilon: object
    N: object
    psi: ApproxFunction
    r: IntegerVector
    p: IntegerVector
    q: IntegerVector
    residuals: tuple  # ||r X^||_i
    eq_one_bounds: tuple  # psi_i(|r|) / (nN)
    form_values: tuple  # |qX|_i
    bounds: tuple  # psi_i(|r|)
    holds_at_q_height: bool | None  # |qX|_i < psi_i(|q|); None if psi(|q|) is not tabulated

    @property
    def m(self) -> int:
        return len(self.X)

    @property
    def n(self) -> int:
        return len(self.X[0])

    @property
    def triangle_bound_holds(self) -> bool:
        return all(v <= b for v, b in zip(self.form_values, self.bounds))

    def to_json(self) -> dict:
        return {
            "type": "lift-certificate",
            "version": 1,
            "m": self.m,
            "n": self.n,
            "X": [[number_to_json(x) for x in r] for r in self.X],
            "epsilon": number_to_json(self.epsilon),
            "N": number_to_json(self.N),
            "psi": self.psi.to_json(),
            "r": list(self.r.components),
            "p": list(self.p.components),
            "q": list(self.q.components),
            "residuals": [number_to_json(v) for v in self.residuals],
            "eq_one_bounds": [number_to_json(v) for v in self.eq_one_bounds],
            "form_values": [number_to_json(v) for v in self.form_values],
            "bounds": [number_to_json(v) for v in self.bounds],
            "triangle_bound_holds": self.triangle_bound_holds,
            "holds_at_q_height": self.holds_at_q_height,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LiftCertificate":
        nums = lambda xs: tuple(number_from_json(x) for x in xs)  # noqa: E731
        return cls(
            X=tuple(nums(r) for r in obj["X"]),
            epsilon=number_from_json(obj["epsilon"]),
            N=number_from_json(obj["N"]),
            psi=ApproxFunction.from_json(obj["psi"]),
            r=IntegerVector(obj["r"]),
            p=IntegerVector(obj["p"]),
            q=IntegerVector(obj["q"]),
            residuals=nums(obj["residuals"]),
            eq_one_bounds=nums(obj["eq_one_bounds"]),
            form_values=nums(obj["form_values"]),
            bounds=nums(obj["bounds"]),
            holds_at_q_height=obj.get("holds_at_q_height"),
        )


def _broadcast(values: tuple, n: int) -> tuple:
    return values * n if len(values) == 1 else values


def lift_solution(rx: RestrictedMatrix, r, psi: ApproxFunction) -> LiftCertificate:
    """Lift r with ||r X^||_i <= psi(|r|)/(nN) to q = (-p, r) with |qX|_i <= psi(|r|)."""
    r = as_vector(r)
    m, n = rx.m, rx.n
    if len(r) != m - n:
        raise DomainError(f"r must have length m - n = {m - n}")
    if r.is_zero:
        raise DomainError("r must be nonzero")
    if psi.arity not in (1, n):
        raise DomainError(f"psi has {psi.arity} coordinate functions, expected 1 or {n}")
    exact = rx.exact and psi.is_exact and is_rational(rx.N)
    residuals, p = eval_dist_forms(r, rx.hat)
    h = r.height
    bounds = _broadcast(_psi_at(psi, h, exact), n)
    scale = n * rx.N
    eq1 = tuple(b / scale for b in bounds)
    for i, (d, b) in enumerate(zip(residuals, eq1)):
        if not d <= b:
            raise EqOneViolation(i, d, b)
    q = IntegerVector(tuple(-x for x in p) + r.components)
    values = eval_abs_forms(q, rx.rows)
    try:
        at_q = _broadcast(_psi_at(psi, q.height, exact), n)
        strong = all(v < b for v, b in zip(values, at_q))
    except TableRangeError:
        strong = None
    return LiftCertificate(
        X=rx.rows,
        epsilon=rx.epsilon,
        N=rx.N,
        psi=psi,
        r=r,
        p=IntegerVector(p),
        q=q,
        residuals=tuple(residuals),
        eq_one_bounds=eq1,
        form_values=tuple(values),
        bounds=bounds,
        holds_at_q_height=strong,
    )


def transport_solutions(rx: RestrictedMatrix, psi: ApproxFunction, window: HeightWindow, *, jobs: int = 1) -> list:
    """Classical solutions r of ||r X^|| < psi(|r|)/(nN) in the window, each lifted."""
    scaled = psi.scaled(Fraction(1) / (rx.n * Fraction(rx.N)) if is_rational(rx.N) else 1.0 / (rx.n * rx.N))
    spec = ProblemSpec(rx.m - rx.n, rx.n, scaled, Variant.CLASSICAL)
    report = enumerate_solutions(spec, rx.hat_mod_one(), window, jobs=jobs)
    return [lift_solution(rx, rec.q, psi) for rec in report.solutions]


@dataclass(frozen=True)
class Verification:
    ok: bool
    failures: tuple = ()

    def to_json(self) -> dict:
        return {"ok": self.ok, "failures": list(self.failures)}


def verify_certificate(cert) -> Verification:
    """Re-check a certificate (object or JSON dict) from its raw data alone."""
    if isinstance(cert, dict):
        try:
            cert = LiftCertificate.from_json(cert)
        except (KeyError, TypeError, ValueError) as exc:
            return Verification(False, (f"malformed certificate: {exc}",))
    failures = []
    X = cert.X
    m, n = len(X), len(X[0])
    q, r = cert.q, cert.r
    if len(q) != m or len(r) != m - n:
        return Verification(False, ("vector lengths do not match the matrix",))
    if q.is_zero:
        failures.append("q is the zero vector")
    if tuple(q.components[n:]) != tuple(r.components):
        failures.append("q does not end with r")
    exact = all(isinstance(x, Fraction) for row in X for x in row) and cert.psi.is_exact and isinstance(cert.N, Fraction)
    top = [list(row) for row in X[:n]]
    try:
        _check_block(top if exact else [[float(x) for x in row] for row in top],
                     cert.epsilon if exact else float(cert.epsilon),
                     cert.N if exact else float(cert.N), exact)
    except DomainError as exc:
        failures.append(str(exc))
    values = eval_abs_forms(q, X)
    bounds = _broadcast(_psi_at(cert.psi, r.height, exact), n)
    for i, (v, b) in enumerate(zip(values, bounds)):
        if not v <= b:
            failures.append(f"|qX|_{i + 1} = {v} exceeds psi(|r|) = {b}")
    if exact:
        if tuple(values) != tuple(cert.form_values):
            failures.append("recorded form values differ from recomputed ones")
        if tuple(bounds) != tuple(cert.bounds):
            failures.append("recorded bounds differ from psi(|r|)")
    return Verification(not failures, tuple(failures))


# --------------------------------------------------------------------------
# the embedding (Y, X~) -> (X~; Y X~)


def eta_embed(Y, Xt, epsilon, N) -> tuple:
    """Stack X~ on top of Y X~ after checking X~ against Ã(eps, N)."""
    Yr, Tr = _rows(Y), _rows(Xt)
    n = len(Tr)
    if len(Tr[0]) != n:
        raise DomainError("X~ must be square")
    if len(Yr[0]) != n:
        raise DomainError(f"Y must have n = {n} columns")
    exact = _is_exact(Yr) and _is_exact(Tr)
    epsilon, N = _num(epsilon), _num(N)
    if not exact:
        epsilon, N = float(epsilon), float(N)
        Yr = tuple(tuple(float(x) for x in r) for r in Yr)
        Tr = tuple(tuple(float(x) for x in r) for r in Tr)
    _check_block(Tr, epsilon, N, exact)
    if exact:
        low = linalg.matmul([list(r) for r in Yr], [list(r) for r in Tr])
        low = tuple(tuple(r) for r in low)
    else:
        low = tuple(tuple(r) for r in (np.array(Yr) @ np.array(Tr)).tolist())
    return Tr + low


def lipschitz_constant(n: int, N) -> float:
    """Sup-norm Lipschitz bound of eta on I^((m-n)n) x Ã(eps, N): n(1 + N)."""
    return n * (1 + float(N))


@dataclass(frozen=True)
class LipschitzDiagnostic:
    constant: float
    max_ratio: float
    pairs: int

    @property
    def bounded(self) -> bool:
        return self.max_ratio <= self.constant * (1 + 1e-9)


def lipschitz_diagnostic(m: int, n: int, epsilon: float, N: float, *, pairs: int = 1000,
                         radius: float = 1e-3, seed: int = 0) -> LipschitzDiagnostic:
    """Sample nearby pairs in the domain of eta and record the worst distance ratio."""
    rng = np.random.default_rng(seed)
    worst, done = 0.0, 0
    while done < pairs:
        Xt = rng.uniform(-N, N, size=(n, n))
        if not epsilon < np.linalg.det(Xt) < 1 / epsilon:
            continue
        Y = rng.random((m - n, n))
        dY = rng.uniform(-radius, radius, size=Y.shape)
        dX = rng.uniform(-radius, radius, size=Xt.shape)
        Y2, X2 = np.clip(Y + dY, 0, 1), np.clip(Xt + dX, -N, N)
        if not epsilon < np.linalg.det(X2) < 1 / epsilon:
            continue
        a = np.vstack([Xt, Y @ Xt])
        b = np.vstack([X2, Y2 @ X2])
        d_in = max(np.abs(Y - Y2).max(), np.abs(Xt - X2).max())
        if d_in == 0:
            continue
        worst = max(worst, float(np.abs(a - b).max() / d_in))
        done += 1
    return LipschitzDiagnostic(lipschitz_constant(n, N), worst, pairs)


# --------------------------------------------------------------------------
# column dependence for m <= n


@dataclass(frozen=True)
class DependenceWitness:
    rank: int
    vector: tuple  # c != 0 with X c = 0 (exact) or ||X c|| small (float)
    residual: object

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "vector": [number_to_json(x) for x in self.vector],
            "residual": number_to_json(self.residual),
        }


def matrix_rank(X, tolerance: float = 1e-9) -> int:
    rows = _rows(X)
    if _is_exact(rows):
        return linalg.rank([list(r) for r in rows])
    sv = np.linalg.svd(np.array(rows, dtype=float), compute_uv=False)
    return int((sv > tolerance * max(1.0, sv.max(initial=0.0))).sum())


def column_null_vector(X, tolerance: float = 1e-9):
    """A minimal nonzero c with Xc = 0 whenever the n columns are dependent (rank < n)."""
    rows = _rows(X)
    n = len(rows[0])
    if _is_exact(rows):
        basis = linalg.nullspace([list(r) for r in rows])
        return tuple(basis[0]) if basis else None
    A = np.array(rows, dtype=float)
    if matrix_rank(rows, tolerance) == n:
        return None
    _, _, vt = np.linalg.svd(A)
    return tuple(float(x) for x in vt[-1])


def column_dependence_witness(X, tolerance: float = 1e-9):
    """Witness of rank deficiency (rank X < m) for m <= n, or None.

    The witness is a nonzero c in R^n with Xc = 0 (exact) or |Xc| below the
    tolerance (float). Independent columns in the sense rank X = m give None.
    """
    rows = _rows(X)
    m, n = len(rows), len(rows[0])
    if m > n:
        raise RegimeError(f"dependence witnesses are for m <= n (got m={m}, n={n})")
    rk = matrix_rank(rows, tolerance)
    if rk == m:
        return None
    c = column_null_vector(rows, tolerance)
    if _is_exact(rows):
        product = linalg.matmul([list(r) for r in rows], [[x] for x in c])
        residual = max(abs(row[0]) for row in product)
    else:
        residual = float(np.abs(np.array(rows) @ np.array(c)).max())
    return DependenceWitness(rk, c, residual)
