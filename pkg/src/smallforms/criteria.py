"""Convergence criteria for the zero-full laws and critical Hausdorff exponents.

Every series here has terms asymptotic to ``r**e * (log r)**k`` when psi and f
are power-log families, so its fate is settled by comparing (e, k) with the
p-series threshold. Exponents are kept as ``Fraction`` so that the threshold
case e = -1 is detected exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .domain import (
    ApproxFunction,
    DimensionFunction,
    DomainError,
    PerCoordinate,
    PowerLog,
    Table,
    derived_shifts,
    is_rational,
)

DEFAULT_CUTOFFS = (10, 100, 1_000, 10_000, 100_000)


class Kind(str, Enum):
    KG_CLASSICAL = "kg"
    W0_HAUSDORFF_THM1 = "thm1"
    W0_LEBESGUE_COR1 = "cor1"
    W0_LEBESGUE_COR2 = "cor2"
    W_HAUSDORFF_THM3 = "thm3"
    COR1_DIFFERENT_RATES = "cor1-rates"


HAUSDORFF_KINDS = (Kind.W0_HAUSDORFF_THM1, Kind.W_HAUSDORFF_THM3)

FORMULAS = {
    Kind.KG_CLASSICAL: "sum r^(m-1) psi(r)^n",
    Kind.W0_HAUSDORFF_THM1: "sum f(Psi(r)) Psi(r)^(-(m-1)n) r^(m-1)",
    Kind.W0_LEBESGUE_COR1: "sum psi(r)^n r^(m-n-1)",
    Kind.W0_LEBESGUE_COR2: "sum psi(r)^(m-1)",
    Kind.W_HAUSDORFF_THM3: "sum f(Psi(r)) Psi(r)^(-(m-1)n) r^(m+n-1)",
    Kind.COR1_DIFFERENT_RATES: "sum psi_1(r)...psi_n(r) r^(m-n-1)",
}

G_FORMULA = "sum g(Psi(r)) Psi(r)^(-(m-n-1)n) r^(m-1), g(x) = x^(-n^2) f(x)"


class Classification(str, Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    BOUNDARY = "Boundary"
    UNKNOWN = "Unknown"


class HypothesisError(DomainError):
    """(m, n) or the dimension function falls outside a statement's hypotheses."""


def _q(x) -> Fraction:
    """Exact reading of a parameter; floats are read by their shortest repr."""
    if is_rational(x):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class CriterionSeries:
    kind: Kind
    m: int
    n: int
    psi: ApproxFunction
    f: DimensionFunction | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.m < 1 or self.n < 1:
            raise DomainError("m and n must be positive")
        if self.kind in HAUSDORFF_KINDS and self.f is None:
            raise DomainError(f"{self.kind.value} needs a dimension function f")
        if isinstance(self.psi, PerCoordinate):
            if self.kind is not Kind.COR1_DIFFERENT_RATES:
                raise DomainError("per-coordinate psi is only meaningful for the different-rates series")
            if self.psi.arity != self.n:
                raise DomainError(f"PerCoordinate has {self.psi.arity} functions, expected n = {self.n}")

    @property
    def coordinate_psis(self) -> tuple:
        if isinstance(self.psi, PerCoordinate):
            return self.psi.psis
        return (self.psi,) * self.n


@dataclass(frozen=True)
class SeriesVerdict:
    kind: str
    m: int
    n: int
    classification: Classification
    power_exponent: Fraction | None
    log_exponent: Fraction | None
    partial_sums: tuple  # ((R, S_R), ...)
    hypotheses: dict = field(default_factory=dict)
    formula: str = ""

    @property
    def hypotheses_hold(self) -> bool:
        return all(self.hypotheses.values())

    @property
    def violations(self) -> list:
        return [name for name, ok in self.hypotheses.items() if not ok]

    def to_json(self) -> dict:
        def num(x):
            return None if x is None else float(x)

        return {
            "kind": self.kind,
            "m": self.m,
            "n": self.n,
            "formula": self.formula,
            "classification": self.classification.value,
            "power_exponent": num(self.power_exponent),
            "log_exponent": num(self.log_exponent),
            "power_exponent_exact": None if self.power_exponent is None else str(self.power_exponent),
            "log_exponent_exact": None if self.log_exponent is None else str(self.log_exponent),
            "hypotheses": dict(self.hypotheses),
            "hypotheses_hold": self.hypotheses_hold,
            "partial_sums": [{"cutoff": R, "sum": s} for R, s in self.partial_sums],
        }


def p_series_verdict(e, k) -> Classification:
    """Fate of sum r**e (log r)**k."""
    if e < -1 or (e == -1 and k < -1):
        return Classification.CONVERGENT
    if e == -1 and k == -1:
        return Classification.BOUNDARY
    return Classification.DIVERGENT


# --------------------------------------------------------------------------
# numerical terms


def _log_psi(psi: ApproxFunction, r: np.ndarray) -> np.ndarray:
    if isinstance(psi, PowerLog):
        out = math.log(float(psi.c)) - float(psi.tau) * np.log(r)
        if psi.kappa:
            out = out - float(psi.kappa) * np.log(np.log(r + 1.0))
        return out
    if isinstance(psi, Table):
        vals = np.array([float(v) for v in psi.values])
        idx = r.astype(np.int64) - 1
        if idx.max(initial=0) >= len(vals):
            raise DomainError(f"height {int(idx.max()) + 1} outside tabulated range 1..{len(vals)}")
        return np.log(vals[idx])
    raise DomainError(f"no scalar evaluation for {type(psi).__name__}")


def _log_f(f: DimensionFunction, log_x: np.ndarray, shift=0) -> np.ndarray:
    """log of x**(-shift) f(x) given log x."""
    out = (float(f.s) - float(shift)) * log_x
    if f.kappa:
        out = out - float(f.kappa) * np.log(np.logaddexp(0.0, -log_x))
    return out


def _log_terms(series: CriterionSeries, r: np.ndarray) -> np.ndarray:
    m, n, kind = series.m, series.n, series.kind
    logr = np.log(r)
    if kind is Kind.COR1_DIFFERENT_RATES:
        return sum(_log_psi(p, r) for p in series.coordinate_psis) + (m - n - 1) * logr
    lpsi = _log_psi(series.psi, r)
    if kind is Kind.KG_CLASSICAL:
        return (m - 1) * logr + n * lpsi
    if kind is Kind.W0_LEBESGUE_COR1:
        return n * lpsi + (m - n - 1) * logr
    if kind is Kind.W0_LEBESGUE_COR2:
        return (m - 1) * lpsi
    lPsi = lpsi - logr
    base = _log_f(series.f, lPsi) - (m - 1) * n * lPsi
    if kind is Kind.W0_HAUSDORFF_THM1:
        return base + (m - 1) * logr
    return base + (m + n - 1) * logr


def series_term(series: CriterionSeries, r: int) -> float:
    if r < 1:
        raise DomainError("series index starts at 1")
    return float(np.exp(_log_terms(series, np.array([float(r)]))[0]))


def _partial_sums_from_logs(log_terms_fn, cutoffs) -> tuple:
    R = max(cutoffs)
    r = np.arange(1, R + 1, dtype=float)
    sums = np.cumsum(np.exp(log_terms_fn(r)))
    return tuple((int(c), float(sums[c - 1])) for c in sorted(cutoffs))


def partial_sums(series: CriterionSeries, cutoffs=DEFAULT_CUTOFFS) -> tuple:
    cutoffs = _usable_cutoffs(series.psi, cutoffs)
    if not cutoffs:
        return ()
    return _partial_sums_from_logs(lambda r: _log_terms(series, r), cutoffs)


def _table_size(psi):
    if isinstance(psi, Table):
        return psi.size
    if isinstance(psi, PerCoordinate):
        sizes = [p.size for p in psi.psis if isinstance(p, Table)]
        return min(sizes) if sizes else None
    return None


def _usable_cutoffs(psi, cutoffs):
    size = _table_size(psi)
    cutoffs = sorted(set(int(c) for c in cutoffs))
    if size is None:
        return cutoffs
    usable = [c for c in cutoffs if c <= size]
    if size not in usable:
        usable.append(size)
    return usable


# --------------------------------------------------------------------------
# exponents


def _psi_exponents(psi) -> tuple:
    """(tau, kappa) with psi(r) ~ r**-tau (log r)**-kappa, or None for tables."""
    if isinstance(psi, PowerLog):
        return _q(psi.tau), _q(psi.kappa)
    return None


def term_exponents(series: CriterionSeries):
    """(e, k) with term ~ r**e (log r)**k, or None when psi is tabulated."""
    m, n, kind = series.m, series.n, series.kind
    if kind is Kind.COR1_DIFFERENT_RATES:
        pairs = [_psi_exponents(p) for p in series.coordinate_psis]
        if any(p is None for p in pairs):
            return None
        return -sum(t for t, _ in pairs) + (m - n - 1), -sum(k for _, k in pairs)
    pe = _psi_exponents(series.psi)
    if pe is None:
        return None
    tau, kap = pe
    if kind is Kind.KG_CLASSICAL:
        return (m - 1) - n * tau, -n * kap
    if kind is Kind.W0_LEBESGUE_COR1:
        return -n * tau + (m - n - 1), -n * kap
    if kind is Kind.W0_LEBESGUE_COR2:
        return -(m - 1) * tau, -(m - 1) * kap
    return _hausdorff_exponents(series.f.s, series.f.kappa, tau, kap, (m - 1) * n,
                                (m - 1) if kind is Kind.W0_HAUSDORFF_THM1 else (m + n - 1))


def _hausdorff_exponents(s, kappa_f, tau, kap, psi_power, r_power):
    """Exponents of f(Psi(r)) Psi(r)**(-psi_power) r**r_power."""
    s, kappa_f = _q(s), _q(kappa_f)
    # Psi(r) ~ r**-(tau+1) (log r)**-kap and log(1/Psi(r)) ~ (tau+1) log r
    e = -(s - psi_power) * (tau + 1) + r_power
    k = -(s - psi_power) * kap - kappa_f
    return e, k


# --------------------------------------------------------------------------
# hypotheses


def _dimfn(f: DimensionFunction, shift) -> bool:
    return f.shift_is_dimension_function(shift)


def _exceeds_ambient(f: DimensionFunction, d: int) -> bool:
    """x**(-d) f(x) -> 0 as x -> 0, so H^f vanishes on d-dimensional sets."""
    s, kap = _q(f.s), _q(f.kappa)
    return s > d or (s == d and kap > 0)


def hypotheses(series: CriterionSeries) -> dict:
    m, n, kind = series.m, series.n, series.kind
    f = series.f
    h: dict = {}
    monotone_psi = all(isinstance(p, PowerLog) for p in series.coordinate_psis)
    if kind is Kind.KG_CLASSICAL:
        h["psi monotonic (needed for divergence)"] = monotone_psi
    elif kind in (Kind.W0_LEBESGUE_COR1, Kind.COR1_DIFFERENT_RATES):
        h["m > n"] = m > n
        h["m + n > 3"] = m + n > 3
    elif kind is Kind.W0_LEBESGUE_COR2:
        h["2 < m <= n"] = 2 < m <= n
    elif kind is Kind.W0_HAUSDORFF_THM1:
        sh = derived_shifts(m, n)
        h["f dimension function"] = True
        h["r^(-n^2) f dimension function"] = _dimfn(f, sh["n^2"])
        h["r^(-(m-n-1)n) f dimension function"] = _dimfn(f, sh["(m-n-1)n"])
        if m > n:
            h["m > n"] = True
            h["m + n > 3"] = m + n > 3
            h["r^(-mn) f monotonic"] = True  # power-log families are monotone near 0
            h["r^(-mn) f does not vanish (H^f(I^mn) > 0)"] = not _exceeds_ambient(f, m * n)
        else:
            h["2 < m <= n"] = 2 < m
            h["r^(-(n-m+1)(m-1)) f dimension function"] = _dimfn(f, sh["(n-m+1)(m-1)"])
            h["r^(-(m-1)(n+1)) f monotonic"] = True
    elif kind is Kind.W_HAUSDORFF_THM3:
        h["m + n > 2"] = m + n > 2
        h["f dimension function"] = True
        h["r^(-(m-1)n) f dimension function"] = _dimfn(f, (m - 1) * n)
        h["r^(-mn) f monotonic"] = True
        h["r^(-mn) f does not vanish (H^f(I^mn) > 0)"] = not _exceeds_ambient(f, m * n)
    return h


def classify(series: CriterionSeries, cutoffs=DEFAULT_CUTOFFS) -> SeriesVerdict:
    """Exponent comparison for power-log data; tables get partial sums only."""
    ek = term_exponents(series)
    if ek is None:
        cls, e, k = Classification.UNKNOWN, None, None
    else:
        e, k = ek
        cls = p_series_verdict(e, k)
    return SeriesVerdict(
        kind=series.kind.value,
        m=series.m,
        n=series.n,
        classification=cls,
        power_exponent=e,
        log_exponent=k,
        partial_sums=partial_sums(series, cutoffs),
        hypotheses=hypotheses(series),
        formula=FORMULAS[series.kind],
    )


# --------------------------------------------------------------------------
# critical exponents


@dataclass(frozen=True)
class CriticalExponent:
    kind: str
    m: int
    n: int
    tau: Fraction
    s_star: float
    s_star_exact: Fraction
    ambient: int

    @property
    def within_ambient(self) -> bool:
        """s* <= mn; otherwise the ambient Lebesgue regime applies."""
        return self.s_star_exact <= self.ambient

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "m": self.m,
            "n": self.n,
            "tau": float(self.tau),
            "s_star": self.s_star,
            "s_star_exact": str(self.s_star_exact),
            "ambient": self.ambient,
            "within_ambient": self.within_ambient,
        }


def admissibility(kind: Kind, m: int, n: int) -> list:
    """Violated hypotheses on (m, n) for a Hausdorff statement (empty if admissible)."""
    kind = Kind(kind)
    bad = []
    if kind is Kind.W0_HAUSDORFF_THM1:
        if not m > n:
            bad.append("m > n")
        if not m + n > 3:
            bad.append("m + n > 3")
    elif kind is Kind.W_HAUSDORFF_THM3:
        if not m + n > 2:
            bad.append("m + n > 2")
    else:
        raise DomainError(f"critical exponents are defined for thm1 and thm3, not {kind.value}")
    return bad


def critical_exponent(kind, m: int, n: int, tau, *, strict: bool = True) -> CriticalExponent:
    """The s at which f = r**s, psi = r**-tau puts the series exponent at -1.

    ``strict=False`` skips the (m, n) admissibility check and returns the
    exponent algebra anyway (useful for the classical m = n = 1 value).
    """
    kind = Kind(kind)
    bad = admissibility(kind, m, n)
    if bad and strict:
        raise HypothesisError(f"{kind.value} requires {', '.join(bad)} (got m={m}, n={n})")
    t = _q(tau)
    if not t > 0:
        raise DomainError("critical exponents need tau > 0")
    r_power = m if kind is Kind.W0_HAUSDORFF_THM1 else m + n
    s = Fraction((m - 1) * n) + Fraction(r_power) / (t + 1)
    return CriticalExponent(kind.value, m, n, t, float(s), s, m * n)


# --------------------------------------------------------------------------
# auxiliary g-series from the infinite-measure argument


@dataclass(frozen=True)
class GSeriesVerdict:
    verdict: SeriesVerdict
    hausdorff: SeriesVerdict
    g: DimensionFunction

    @property
    def matches_hausdorff(self) -> bool:
        return self.verdict.classification is self.hausdorff.classification

    def to_json(self) -> dict:
        out = self.verdict.to_json()
        out["g"] = self.g.to_json()
        out["hausdorff_classification"] = self.hausdorff.classification.value
        out["matches_hausdorff"] = self.matches_hausdorff
        return out


def g_series(m: int, n: int, psi: ApproxFunction, f: DimensionFunction,
             cutoffs=DEFAULT_CUTOFFS) -> GSeriesVerdict:
    """Classify sum g(Psi) Psi**(-(m-n-1)n) r**(m-1) with g(x) = x**(-n^2) f(x).

    Since g(Psi) Psi**(-(m-n-1)n) = f(Psi) Psi**(-(m-1)n), the verdict always
    agrees with the corresponding W0 Hausdorff series; both are computed
    independently so that agreement can be asserted.
    """
    try:
        g = f.shifted(n * n)
    except DomainError as exc:
        raise HypothesisError(f"g(r) = r^(-n^2) f(r) is not a dimension function: {exc}") from exc
    thm1 = classify(CriterionSeries(Kind.W0_HAUSDORFF_THM1, m, n, psi, f), cutoffs)
    pe = _psi_exponents(psi)
    psi_power = (m - n - 1) * n
    if pe is None:
        cls, e, k = Classification.UNKNOWN, None, None
    else:
        e, k = _hausdorff_exponents(g.s, g.kappa, pe[0], pe[1], psi_power, m - 1)
        cls = p_series_verdict(e, k)

    def logs(r):
        lPsi = _log_psi(psi, r) - np.log(r)
        return _log_f(g, lPsi) - psi_power * lPsi + (m - 1) * np.log(r)

    cut = _usable_cutoffs(psi, cutoffs)
    sums = _partial_sums_from_logs(logs, cut) if cut else ()
    hyp = {
        "g dimension function": True,
        "r^(-(m-n-1)n) g dimension function": g.shift_is_dimension_function(psi_power),
        "r^(-(m-n)n) g monotonic": True,
        "r^(-mn) f -> infinity (infinite-measure case)": _q(f.s) < m * n or (_q(f.s) == m * n and _q(f.kappa) < 0),
    }
    verdict = SeriesVerdict("g-series", m, n, cls, e, k, sums, hyp, G_FORMULA)
    return GSeriesVerdict(verdict, thm1, g)


# --------------------------------------------------------------------------
# m <= n: zero / finite positive / infinite


class MeasureOutcome(str, Enum):
    ZERO = "zero"
    FINITE_POSITIVE = "finite-positive"
    INFINITE = "infinite"
    UNDETERMINED = "undetermined"


def hypersurface_measure(m: int, n: int, psi: ApproxFunction, f: DimensionFunction) -> MeasureOutcome:
    """H^f(W0(m, n; psi)) for 2 < m <= n from the series and the limit of r^(-(m-1)(n+1)) f(r)."""
    if not 2 < m <= n:
        raise HypothesisError(f"requires 2 < m <= n (got m={m}, n={n})")
    verdict = classify(CriterionSeries(Kind.W0_HAUSDORFF_THM1, m, n, psi, f), cutoffs=(10,))
    if verdict.classification is Classification.CONVERGENT:
        return MeasureOutcome.ZERO
    if verdict.classification is not Classification.DIVERGENT:
        return MeasureOutcome.UNDETERMINED
    d = (m - 1) * (n + 1)
    s, kap = _q(f.s), _q(f.kappa)
    if s < d or (s == d and kap < 0):
        return MeasureOutcome.INFINITE
    return MeasureOutcome.FINITE_POSITIVE
