"""Core value types: approximating functions, dimension functions, form matrices,
integer vectors and problem specifications.

All values are immutable. Numbers that must stay exact are carried as
``fractions.Fraction``; floats are accepted everywhere a real is expected but
make the enclosing object "inexact".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

Real = Union[int, float, Fraction]


class DomainError(ValueError):
    """Raised when a value violates the invariants of its type."""


class TableRangeError(DomainError, IndexError):
    pass


def parse_number(text: str | Real, *, exact: bool | None = None) -> Real:
    """Parse ``"3"``, ``"1/3"``, ``"0.25"`` or a number.

    Strings are read exactly (``"0.1"`` becomes ``Fraction(1, 10)``) unless
    ``exact=False``.
    """
    if isinstance(text, bool):
        raise DomainError("booleans are not numbers here")
    if isinstance(text, (int, Fraction)):
        return Fraction(text) if exact is not False else float(text)
    if isinstance(text, float):
        return Fraction(text) if exact else text
    s = str(text).strip()
    if not s:
        raise DomainError("empty number literal")
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse number {s!r}") from exc
    if exact is False:
        return float(value)
    return value


def is_rational(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def number_to_json(x: Real):
    """Fractions become ``"p/q"`` strings (bit-exact), everything else a float/int."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, int):
        return str(x)
    return float(x)


def number_from_json(x) -> Real:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, bool):
        raise DomainError("boolean where a number was expected")
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


# --------------------------------------------------------------------------
# approximating functions


class ApproxFunction:
    """Base class of the approximating function psi: N -> R+ (tending to 0)."""

    def value(self, r: int):
        raise NotImplementedError

    def exact(self, r: int):
        raise NotImplementedError

    @property
    def is_exact(self) -> bool:
        raise NotImplementedError

    @property
    def arity(self) -> int:
        """Number of coordinate functions (1 unless per-coordinate)."""
        return 1

    def scaled(self, factor: Real) -> "ApproxFunction":
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> "ApproxFunction":
        family = obj.get("family")
        if family == "powerlog":
            return PowerLog(
                number_from_json(obj["c"]),
                number_from_json(obj["tau"]),
                number_from_json(obj.get("kappa", 0)),
            )
        if family == "table":
            return Table([number_from_json(v) for v in obj["values"]], cut=int(obj.get("cut", 1)))
        if family == "percoord":
            return PerCoordinate([ApproxFunction.from_json(o) for o in obj["psis"]])
        raise DomainError(f"unknown approximating-function family {family!r}")


def _check_r(r: int) -> int:
    if isinstance(r, bool) or int(r) != r or r < 1:
        raise DomainError(f"height must be a positive integer, got {r!r}")
    return int(r)


@dataclass(frozen=True)
class PowerLog(ApproxFunction):
    """psi(r) = c * r**(-tau) * log(r + 1)**(-kappa)."""

    c: Real
    tau: Real = 1
    kappa: Real = 0

    def __post_init__(self):
        for name in ("c", "tau", "kappa"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
                raise DomainError(f"PowerLog.{name} must be a real number, got {v!r}")
            if isinstance(v, float) and not math.isfinite(v):
                raise DomainError(f"PowerLog.{name} must be finite")
        if self.c <= 0:
            raise DomainError("PowerLog coefficient c must be positive")
        if self.tau < 0:
            raise DomainError("PowerLog with tau < 0 does not tend to 0")
        if self.tau == 0 and self.kappa <= 0:
            raise DomainError("PowerLog with tau = 0 needs kappa > 0 to tend to 0")

    @property
    def is_exact(self) -> bool:
        return self.kappa == 0 and is_rational(self.c) and Fraction(self.tau).denominator == 1

    def value(self, r: int) -> float:
        r = _check_r(r)
        v = float(self.c) * float(r) ** (-float(self.tau))
        if self.kappa:
            v *= math.log(r + 1) ** (-float(self.kappa))
        return v

    def exact(self, r: int) -> Fraction:
        r = _check_r(r)
        if not self.is_exact:
            raise DomainError(f"{self} has no exact rational values")
        return Fraction(self.c) / Fraction(r) ** int(self.tau)

    def scaled(self, factor: Real) -> "PowerLog":
        c = Fraction(self.c) * Fraction(factor) if is_rational(self.c) and is_rational(factor) else float(self.c) * float(factor)
        return PowerLog(c, self.tau, self.kappa)

    def to_json(self) -> dict:
        return {
            "family": "powerlog",
            "c": number_to_json(self.c),
            "tau": number_to_json(self.tau),
            "kappa": number_to_json(self.kappa),
        }


@dataclass(frozen=True)
class Table(ApproxFunction):
    """Tabulated values psi(1), ..., psi(R).

    ``cut`` is the 1-based index from which the table must be non-increasing;
    it stands in for "tends to 0" on finite data.
    """

    values: tuple
    cut: int = 1

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise DomainError("Table must hold at least one value")
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
                raise DomainError(f"Table value {v!r} is not a real number")
            if not v > 0:
                raise DomainError("Table values must be positive")
        if not 1 <= self.cut <= len(vals):
            raise DomainError(f"cut index {self.cut} outside 1..{len(vals)}")
        tail = vals[self.cut - 1:]
        if any(b > a for a, b in zip(tail, tail[1:])):
            raise DomainError(f"Table values increase beyond the declared cut index {self.cut}")

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def is_exact(self) -> bool:
        return all(is_rational(v) for v in self.values)

    def _lookup(self, r: int):
        r = _check_r(r)
        if r > len(self.values):
            raise TableRangeError(f"height {r} outside tabulated range 1..{len(self.values)}")
        return self.values[r - 1]

    def value(self, r: int) -> float:
        return float(self._lookup(r))

    def exact(self, r: int) -> Fraction:
        v = self._lookup(r)
        if not is_rational(v):
            raise DomainError("Table holds float values; no exact evaluation")
        return Fraction(v)

    def scaled(self, factor: Real) -> "Table":
        if self.is_exact and is_rational(factor):
            return Table([Fraction(v) * Fraction(factor) for v in self.values], cut=self.cut)
        return Table([float(v) * float(factor) for v in self.values], cut=self.cut)

    def to_json(self) -> dict:
        return {"family": "table", "values": [number_to_json(v) for v in self.values], "cut": self.cut}


@dataclass(frozen=True)
class PerCoordinate(ApproxFunction):
    """One approximating function per linear form (different rates)."""

    psis: tuple

    def __post_init__(self):
        psis = tuple(self.psis)
        object.__setattr__(self, "psis", psis)
        if not psis:
            raise DomainError("PerCoordinate needs at least one function")
        for p in psis:
            if not isinstance(p, ApproxFunction) or isinstance(p, PerCoordinate):
                raise DomainError("PerCoordinate entries must be PowerLog or Table functions")

    @property
    def arity(self) -> int:
        return len(self.psis)

    @property
    def is_exact(self) -> bool:
        return all(p.is_exact for p in self.psis)

    def value(self, r: int) -> tuple:
        return tuple(p.value(r) for p in self.psis)

    def exact(self, r: int) -> tuple:
        return tuple(p.exact(r) for p in self.psis)

    def scaled(self, factor: Real) -> "PerCoordinate":
        return PerCoordinate([p.scaled(factor) for p in self.psis])

    def to_json(self) -> dict:
        return {"family": "percoord", "psis": [p.to_json() for p in self.psis]}


def eval_psi(psi: ApproxFunction, r: int, *, exact: bool = False):
    """psi(r); a tuple for per-coordinate functions."""
    return psi.exact(r) if exact else psi.value(r)


def eval_Psi(psi: ApproxFunction, r: int, *, exact: bool = False):
    """Psi(r) = psi(r) / r."""
    v = eval_psi(psi, r, exact=exact)
    d = Fraction(r) if exact else float(r)
    if isinstance(v, tuple):
        return tuple(x / d for x in v)
    return v / d


def coordinate_functions(psi: ApproxFunction, n: int) -> tuple:
    """The n per-form functions (the same function repeated when uniform)."""
    if isinstance(psi, PerCoordinate):
        if psi.arity != n:
            raise DomainError(f"PerCoordinate has {psi.arity} functions but there are {n} forms")
        return psi.psis
    return (psi,) * n


# --------------------------------------------------------------------------
# dimension functions

#: Exponent shifts k for the derived functions r**(-k) f(r) that the
#: Hausdorff statements ask about.
def derived_shifts(m: int, n: int) -> dict:
    return {
        "n^2": n * n,
        "(m-n-1)n": (m - n - 1) * n,
        "(n-m+1)(m-1)": (n - m + 1) * (m - 1),
        "mn": m * n,
        "(m-1)(n+1)": (m - 1) * (n + 1),
    }


def _is_dimension_exponent(s, kappa) -> bool:
    return s > 0 or (s == 0 and kappa > 0)


@dataclass(frozen=True)
class DimensionFunction:
    """f(x) = x**s * log(1 + 1/x)**(-kappa), a dimension function near 0.

    ``log(1 + 1/x)`` replaces ``log(1/x)`` so that f stays positive for all
    x > 0; both agree asymptotically as x -> 0.
    """

    s: Real
    kappa: Real = 0

    def __post_init__(self):
        for name in ("s", "kappa"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
                raise DomainError(f"DimensionFunction.{name} must be a real number")
        if not _is_dimension_exponent(self.s, self.kappa):
            raise DomainError(
                f"x^{self.s} log(1/x)^{-self.kappa} does not tend to 0 increasingly as x -> 0"
            )

    def __call__(self, x: float) -> float:
        if x <= 0:
            raise DomainError("dimension functions are evaluated at positive arguments")
        v = float(x) ** float(self.s)
        if self.kappa:
            v *= math.log1p(1.0 / float(x)) ** (-float(self.kappa))
        return v

    def shifted(self, k: Real) -> "DimensionFunction":
        """x**(-k) f(x); raises DomainError if that is not a dimension function."""
        return DimensionFunction(self.s - k, self.kappa)

    def shift_is_dimension_function(self, k: Real) -> bool:
        return _is_dimension_exponent(self.s - k, self.kappa)

    def derived_validity(self, m: int, n: int) -> dict:
        """For each named shift k: is x**(-k) f(x) itself a dimension function?"""
        return {name: self.shift_is_dimension_function(k) for name, k in derived_shifts(m, n).items()}

    def to_json(self) -> dict:
        return {"s": number_to_json(self.s), "kappa": number_to_json(self.kappa)}

    @staticmethod
    def from_json(obj: dict) -> "DimensionFunction":
        return DimensionFunction(number_from_json(obj["s"]), number_from_json(obj.get("kappa", 0)))


# --------------------------------------------------------------------------
# matrices and vectors


@dataclass(frozen=True)
class FormMatrix:
    """An m x n matrix with entries in [0, 1]; row j holds the coefficients of q_j.

    Exact matrices carry ``Fraction`` entries, float matrices ``float`` ones.
    """

    rows: tuple
    exact: bool = field(default=None)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        if not rows or not rows[0]:
            raise DomainError("matrix must have at least one row and one column")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise DomainError("ragged matrix")
        flat = [x for r in rows for x in r]
        if any(isinstance(x, bool) or not isinstance(x, (int, float, Fraction)) for x in flat):
            raise DomainError("matrix entries must be numbers")
        rational = [is_rational(x) for x in flat]
        exact = self.exact
        if exact is None:
            if all(rational):
                exact = True
            elif not any(rational):
                exact = False
            else:
                raise DomainError("mixed exact and float entries; representation must be uniform")
        if exact:
            if not all(rational):
                raise DomainError("exact matrix with float entries")
            rows = tuple(tuple(Fraction(x) for x in r) for r in rows)
        else:
            rows = tuple(tuple(float(x) for x in r) for r in rows)
        for x in (x for r in rows for x in r):
            if not 0 <= x <= 1:
                raise DomainError(f"entry {x} lies outside [0, 1]")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "exact", exact)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    @property
    def shape(self) -> tuple:
        return (self.m, self.n)

    def column(self, i: int) -> tuple:
        return tuple(r[i] for r in self.rows)

    def as_float(self):
        import numpy as np

        return np.array([[float(x) for x in r] for r in self.rows], dtype=float)

    def common_denominator(self) -> int:
        if not self.exact:
            raise DomainError("float matrix has no common denominator")
        return math.lcm(*(x.denominator for r in self.rows for x in r))

    def integer_numerators(self) -> tuple:
        """(A, D) with X = A / D, A an integer matrix (nested tuples)."""
        D = self.common_denominator()
        return tuple(tuple(int(x * D) for x in r) for r in self.rows), D

    @classmethod
    def parse(cls, literal: str, *, exact: bool | None = None) -> "FormMatrix":
        """Rows separated by ';', entries by ','; ``p/q`` rationals, ``0.25`` floats.

        A literal containing any '.' is read as a float matrix unless
        ``exact=True``.
        """
        rows = [r for r in literal.strip().split(";")]
        if exact is None:
            exact = "." not in literal and "e" not in literal.lower()
        parsed = [[parse_number(e, exact=exact) for e in r.split(",")] for r in rows]
        return cls(parsed, exact=exact)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "exact": self.exact,
            "rows": [[number_to_json(x) for x in r] for r in self.rows],
        }

    @classmethod
    def from_json(cls, obj) -> "FormMatrix":
        if isinstance(obj, dict):
            rows, exact = obj["rows"], obj.get("exact")
        else:
            rows, exact = obj, None
        parsed = [[number_from_json(x) for x in r] for r in rows]
        if exact is False:
            parsed = [[float(x) for x in r] for r in parsed]
        return cls(parsed, exact=exact)


@dataclass(frozen=True)
class IntegerVector:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DomainError("empty integer vector")
        if any(isinstance(c, bool) or int(c) != c for c in comps):
            raise DomainError("integer vector components must be integers")
        object.__setattr__(self, "components", tuple(int(c) for c in comps))

    @property
    def height(self) -> int:
        return max(abs(c) for c in self.components)

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def negated(self) -> "IntegerVector":
        return IntegerVector(tuple(-c for c in self.components))

    def is_canonical(self) -> bool:
        """First nonzero coordinate positive."""
        for c in self.components:
            if c:
                return c > 0
        return False


def as_vector(q) -> IntegerVector:
    return q if isinstance(q, IntegerVector) else IntegerVector(tuple(q))


# --------------------------------------------------------------------------
# problems and regimes


class Variant(str, Enum):
    ABSOLUTE = "absolute"  # small linear forms, |qX|
    CLASSICAL = "classical"  # distance to the nearest integer, ||qX||


class Regime(str, Enum):
    SINGLETON = "Singleton"
    EXCLUDED = "Excluded"
    HYPERSURFACE = "Hypersurface"
    GENERIC = "Generic"
    UNCOVERED = "Uncovered"  # m = 2 <= n, absolute: no zero-full statement applies
    CLASSICAL = "Classical"


@dataclass(frozen=True)
class ProblemSpec:
    m: int
    n: int
    psi: ApproxFunction
    variant: Variant = Variant.ABSOLUTE

    def __post_init__(self):
        for name in ("m", "n"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer")
        object.__setattr__(self, "variant", Variant(self.variant))
        if not isinstance(self.psi, ApproxFunction):
            raise DomainError("psi must be an ApproxFunction")
        if isinstance(self.psi, PerCoordinate) and self.psi.arity != self.n:
            raise DomainError(f"PerCoordinate has {self.psi.arity} functions, expected n = {self.n}")

    @property
    def regime(self) -> Regime:
        return classify_regime(self)

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "variant": self.variant.value, "psi": self.psi.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "ProblemSpec":
        return cls(int(obj["m"]), int(obj["n"]), ApproxFunction.from_json(obj["psi"]), Variant(obj["variant"]))


def regime_of(m: int, n: int, variant: Variant | str = Variant.ABSOLUTE) -> Regime:
    if Variant(variant) is Variant.CLASSICAL:
        return Regime.CLASSICAL
    if m == 1:
        return Regime.SINGLETON
    if (m, n) == (2, 1):
        return Regime.EXCLUDED
    if m > n:
        return Regime.GENERIC  # m > n >= 1 and (m, n) != (2, 1) forces m + n > 3
    if m > 2:
        return Regime.HYPERSURFACE
    return Regime.UNCOVERED


def classify_regime(spec: ProblemSpec) -> Regime:
    return regime_of(spec.m, spec.n, spec.variant)


@dataclass(frozen=True)
class SolutionRecord:
    """Membership certificate for one integer vector q at one matrix X."""

    q: IntegerVector
    form_values: tuple
    bounds: tuple
    margin: Real

    @property
    def height(self) -> int:
        return self.q.height

    def to_json(self) -> dict:
        return {
            "q": list(self.q.components),
            "height": self.height,
            "form_values": [number_to_json(v) for v in self.form_values],
            "bounds": [number_to_json(v) for v in self.bounds],
            "margin": number_to_json(self.margin),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SolutionRecord":
        return cls(
            IntegerVector(obj["q"]),
            tuple(number_from_json(v) for v in obj["form_values"]),
            tuple(number_from_json(v) for v in obj["bounds"]),
            number_from_json(obj["margin"]),
        )


def make_record(q: Sequence[int], values: Iterable, bounds: Iterable, *, inclusive: bool = False) -> SolutionRecord:
    """Build a record; a non-positive margin is refused (zero allowed only with ``inclusive``)."""
    values, bounds = tuple(values), tuple(bounds)
    margin = min(b - v for v, b in zip(values, bounds))
    if not (margin >= 0 if inclusive else margin > 0):
        raise DomainError(f"q={tuple(q)} is not a solution (margin {margin})")
    return SolutionRecord(as_vector(q), values, bounds, margin)
