"""Monte Carlo confrontation of the zero-full laws, box-counting dimension
estimates, and persisted run records.

Matrices are sampled uniformly from I^(mn). Sample i draws from its own
stream ``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on how
samples are split across workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import ENGINE_VERSION
from .boxcount import BoxCountResult, count_boxes, default_window, fit_slope
from .criteria import Classification, CriterionSeries, Kind, classify, critical_exponent
from .domain import DomainError, FormMatrix, PerCoordinate, PowerLog, ProblemSpec, Regime, Variant, coordinate_functions
from .forms import HeightWindow, candidate_count, count_shells, shell_size

SCHEMA_VERSION = 1
DEFAULT_BUDGET = 10**9
WILSON_Z = 1.959963984540054  # two-sided 95%


class BudgetExceeded(DomainError):
    def __init__(self, estimate: int, budget: int):
        self.estimate = estimate
        self.budget = budget
        super().__init__(f"scan needs about {estimate:.3e} candidate-form evaluations, budget is {budget:.3e}")


class RegimeRejected(DomainError):
    pass


class RunRecordError(ValueError):
    pass


def wilson_interval(hits: int, n: int, z: float = WILSON_Z) -> tuple:
    if n <= 0:
        raise ValueError("need at least one sample")
    p = hits / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # rounding can push an endpoint just past p at hits = 0 or n
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def sample_matrix(seed: int, index: int, m: int, n: int) -> FormMatrix:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return FormMatrix(rng.random((m, n)).tolist(), exact=False)


def scan_cost(spec: ProblemSpec, window: HeightWindow) -> int:
    return candidate_count(spec.m, window) * spec.n


def _check_regime(spec: ProblemSpec):
    regime = spec.regime
    if regime not in (Regime.GENERIC, Regime.CLASSICAL):
        raise RegimeRejected(f"Monte Carlo estimation needs a Generic or Classical spec, got {regime.value}")


def _check_budget(spec, window, budget):
    if budget is None:
        return
    est = scan_cost(spec, window)
    if est > budget:
        raise BudgetExceeded(est, budget)


def _shell_block(args):
    spec, window, seed, indices = args
    out = np.zeros((len(indices), window.q_max - window.q_min + 1), dtype=np.int64)
    unsure = 0
    for row, i in enumerate(indices):
        sc = count_shells(spec, sample_matrix(seed, i, spec.m, spec.n), window)
        out[row] = sc.counts
        unsure += sc.uncertain
    return out, unsure


def sample_shell_counts(spec: ProblemSpec, window: HeightWindow, samples: int, seed: int, *,
                        jobs: int = 1) -> tuple:
    """Per-sample shell counts (samples x heights) and the number of undecided candidates."""
    if samples < 1:
        raise DomainError("samples must be at least 1")
    indices = list(range(samples))
    if jobs <= 1:
        return _shell_block((spec, window, seed, indices))
    chunks = [indices[j::jobs] for j in range(jobs)]
    chunks = [c for c in chunks if c]
    out = np.zeros((samples, window.q_max - window.q_min + 1), dtype=np.int64)
    unsure = 0
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        for chunk, (block, u) in zip(chunks, ex.map(_shell_block, [(spec, window, seed, c) for c in chunks])):
            out[chunk] = block
            unsure += u
    return out, unsure


@dataclass(frozen=True)
class HitFraction:
    window: HeightWindow
    hits: int
    samples: int
    mean_solutions: float
    ci_low: float
    ci_high: float
    first_moment_bound: float

    @property
    def fraction(self) -> float:
        return self.hits / self.samples

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "hits": self.hits,
            "samples": self.samples,
            "fraction": self.fraction,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "mean_solutions": self.mean_solutions,
            "first_moment_bound": self.first_moment_bound,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "HitFraction":
        return cls(
            HeightWindow(*obj["window"]),
            int(obj["hits"]),
            int(obj["samples"]),
            float(obj["mean_solutions"]),
            float(obj["ci_low"]),
            float(obj["ci_high"]),
            float(obj["first_moment_bound"]),
        )


def first_moment_bound(spec: ProblemSpec, window: HeightWindow) -> float:
    """Upper bound on the expected number of solutions for uniform X.

    For |q| = r some coordinate has |q_j| = r, so q.x has density at most 1/r
    and P(|q.x| < psi) <= 2 psi / r for each column (columns are independent).
    The classical variant uses P(||q.x|| < psi) <= 2 psi, valid for psi < 1/2.
    """
    funcs = coordinate_functions(spec.psi, spec.n)
    total = 0.0
    for r in window.heights():
        p = 1.0
        for f in funcs:
            width = 2 * f.value(r)
            p *= min(1.0, width if spec.variant is Variant.CLASSICAL else width / r)
        total += shell_size(spec.m, r) * p
    return total


def _fractions_from_counts(spec, counts, union: HeightWindow, windows) -> list:
    out = []
    samples = counts.shape[0]
    for w in windows:
        block = counts[:, w.q_min - union.q_min: w.q_max - union.q_min + 1]
        hits = int((block.sum(axis=1) > 0).sum())
        lo, hi = wilson_interval(hits, samples)
        out.append(HitFraction(w, hits, samples, float(block.sum()) / samples, lo, hi, first_moment_bound(spec, w)))
    return out


def estimate_hit_fraction(spec: ProblemSpec, window: HeightWindow, samples: int, seed: int, *,
                          jobs: int = 1, budget: int | None = DEFAULT_BUDGET) -> HitFraction:
    """Fraction of uniform X with at least one solution of height in the window."""
    _check_regime(spec)
    _check_budget(spec, window, budget)
    counts, _ = sample_shell_counts(spec, window, samples, seed, jobs=jobs)
    return _fractions_from_counts(spec, counts, window, [window])[0]


# --------------------------------------------------------------------------
# plans and records


class Mode(str, Enum):
    MEASURE_TREND = "MeasureTrend"
    DIMENSION_BOX_COUNT = "DimensionBoxCount"


class Agreement(str, Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class ExperimentPlan:
    spec: ProblemSpec
    seed: int
    windows: tuple
    samples: int
    mode: Mode = Mode.MEASURE_TREND
    deltas: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "windows", tuple(self.windows))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit non-negative integer")
        if self.samples < 1:
            raise DomainError("samples must be at least 1")
        if self.mode is Mode.MEASURE_TREND:
            if not self.windows:
                raise DomainError("a trend plan needs at least one window")
            highs = [w.q_max for w in self.windows]
            if any(b <= a for a, b in zip(highs, highs[1:])):
                raise DomainError("window schedule must be strictly increasing")

    @property
    def union_window(self) -> HeightWindow:
        return HeightWindow(min(w.q_min for w in self.windows), max(w.q_max for w in self.windows))

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "seed": self.seed,
            "sampler": "uniform-unit-cube",
            "windows": [w.to_json() for w in self.windows],
            "samples": self.samples,
            "mode": self.mode.value,
            "deltas": list(self.deltas),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentPlan":
        return cls(
            ProblemSpec.from_json(_field(obj, "spec", "plan")),
            int(_field(obj, "seed", "plan")),
            tuple(HeightWindow(*w) for w in _field(obj, "windows", "plan")),
            int(_field(obj, "samples", "plan")),
            Mode(obj.get("mode", Mode.MEASURE_TREND.value)),
            tuple(obj.get("deltas", ())),
        )


def _field(obj, name, where):
    if not isinstance(obj, dict) or name not in obj:
        raise RunRecordError(f"missing field '{where}.{name}'")
    return obj[name]


@dataclass(frozen=True)
class RunRecord:
    plan: ExperimentPlan
    results: tuple
    predicted: str
    agreement: Agreement
    statement: str
    wall_time: float
    engine_version: str = ENGINE_VERSION
    undecided: int = 0
    box_count: dict | None = None

    def numerics(self) -> tuple:
        """Everything that must reproduce bit-for-bit from the plan."""
        return tuple((r.hits, r.samples, r.mean_solutions, r.ci_low, r.ci_high) for r in self.results)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "engine_version": self.engine_version,
            "plan": self.plan.to_json(),
            "results": [r.to_json() for r in self.results],
            "predicted": self.predicted,
            "agreement": self.agreement.value,
            "statement": self.statement,
            "wall_time": self.wall_time,
            "undecided": self.undecided,
            "box_count": self.box_count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        if not isinstance(obj, dict):
            raise RunRecordError("run record must be a JSON object")
        version = _field(obj, "schema_version", "record")
        if version != SCHEMA_VERSION:
            raise RunRecordError(f"unsupported schema_version {version}")
        plan_obj = _field(obj, "plan", "record")
        for name in ("spec", "seed", "windows", "samples"):
            _field(plan_obj, name, "plan")
        try:
            plan = ExperimentPlan.from_json(plan_obj)
            results = tuple(HitFraction.from_json(r) for r in _field(obj, "results", "record"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, RunRecordError):
                raise
            raise RunRecordError(f"malformed run record: {exc}") from exc
        return cls(
            plan=plan,
            results=results,
            predicted=_field(obj, "predicted", "record"),
            agreement=Agreement(_field(obj, "agreement", "record")),
            statement=obj.get("statement", ""),
            wall_time=float(obj.get("wall_time", 0.0)),
            engine_version=_field(obj, "engine_version", "record"),
            undecided=int(obj.get("undecided", 0)),
            box_count=obj.get("box_count"),
        )

    def fractions_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q_min", "q_max", "fraction", "ci_low", "ci_high"])
        for r in self.results:
            w.writerow([r.window.q_min, r.window.q_max, repr(r.fraction), repr(r.ci_low), repr(r.ci_high)])
        return buf.getvalue()


def persist_run(record: RunRecord, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n")
    return path


def load_run(path) -> RunRecord:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RunRecordError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return RunRecord.from_json(obj)


def predicted_series(spec: ProblemSpec):
    """The series whose convergence predicts measure 0 / 1, or None."""
    regime = spec.regime
    if regime is Regime.GENERIC:
        if isinstance(spec.psi, PerCoordinate):
            return CriterionSeries(Kind.COR1_DIFFERENT_RATES, spec.m, spec.n, spec.psi)
        return CriterionSeries(Kind.W0_LEBESGUE_COR1, spec.m, spec.n, spec.psi)
    if regime is Regime.CLASSICAL and not isinstance(spec.psi, PerCoordinate):
        return CriterionSeries(Kind.KG_CLASSICAL, spec.m, spec.n, spec.psi)
    return None


def judge_trend(classification: Classification, results) -> Agreement:
    """Divergence: hit fractions non-decreasing and ending at >= 1/2.
    Convergence: non-increasing, ending at <= 1/2, and mean solution counts
    within 3x the first-moment bound in every window."""
    fr = [r.fraction for r in results]
    if classification is Classification.DIVERGENT:
        ok = all(b >= a for a, b in zip(fr, fr[1:])) and fr[-1] >= 0.5
    elif classification is Classification.CONVERGENT:
        ok = (
            all(b <= a for a, b in zip(fr, fr[1:]))
            and fr[-1] <= 0.5
            and all(r.mean_solutions <= 3 * r.first_moment_bound for r in results)
        )
    else:
        return Agreement.NOT_APPLICABLE
    return Agreement.CONSISTENT if ok else Agreement.INCONSISTENT


def zero_one_verdict(plan: ExperimentPlan, *, jobs: int = 1, budget: int | None = DEFAULT_BUDGET) -> RunRecord:
    """Run the hit-fraction trend over the plan's windows and compare with the series verdict."""
    if plan.mode is not Mode.MEASURE_TREND:
        raise DomainError("zero_one_verdict needs a MeasureTrend plan")
    spec = plan.spec
    _check_regime(spec)
    union = plan.union_window
    _check_budget(spec, union, budget)
    series = predicted_series(spec)
    cls = classify(series, cutoffs=(10,)).classification if series is not None else Classification.UNKNOWN
    start = time.perf_counter()
    counts, unsure = sample_shell_counts(spec, union, plan.samples, plan.seed, jobs=jobs)
    results = tuple(_fractions_from_counts(spec, counts, union, plan.windows))
    wall = time.perf_counter() - start
    agreement = judge_trend(cls, results)
    if agreement is Agreement.NOT_APPLICABLE:
        statement = "no prediction to test"
    else:
        statement = f"{agreement.value} with a {cls.value.lower()} series at the heights tested"
    return RunRecord(plan, results, cls.value, agreement, statement, wall, ENGINE_VERSION, unsure)


# --------------------------------------------------------------------------
# box counting


DEFAULT_DELTAS = tuple(2.0**-k for k in range(4, 9))


def box_count_dimension(m: int, n: int, tau, deltas=DEFAULT_DELTAS, windows=None, c=1) -> BoxCountResult:
    """Least-squares slope of log N(delta) against log(1/delta) for psi = c r^(-tau).

    N(delta) counts grid boxes meeting the union of slabs of the heights in
    ``windows[i]`` (default: the band [R, 2R] where R is the least height whose
    slab thickness psi(R)/R is at most delta).
    """
    from .domain import regime_of

    if regime_of(m, n) is not Regime.GENERIC:
        raise RegimeRejected(f"box counting needs the Generic regime (m > n, m + n > 3), got m={m}, n={n}")
    deltas = tuple(float(d) for d in deltas)
    if len(deltas) < 3:
        raise DomainError("box counting needs at least 3 deltas")
    crit = critical_exponent(Kind.W0_HAUSDORFF_THM1, m, n, tau)
    if not crit.within_ambient:
        raise DomainError(f"tau = {tau} is below the Lebesgue boundary (s* = {crit.s_star} > mn)")
    if windows is None:
        windows = [default_window(d, tau) for d in deltas]
    windows = tuple(tuple(w) for w in windows)
    if len(windows) != len(deltas):
        raise DomainError("one height window per delta")
    psi = PowerLog(c, tau, 0)
    counts = tuple(count_boxes(m, n, psi, d, lo, hi) for d, (lo, hi) in zip(deltas, windows))
    slope, intercept, resid = fit_slope(deltas, counts)
    return BoxCountResult(m, n, float(tau), deltas, windows, counts, slope, intercept, resid, crit.s_star)


def box_counts_csv(result: BoxCountResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "box_count"])
    for d, c in zip(result.deltas, result.counts):
        w.writerow([repr(d), c])
    return buf.getvalue()
