import json
from fractions import Fraction as F

import numpy as np
import pytest

import oracles
from smallforms.domain import DomainError, PowerLog, ProblemSpec, Variant
from smallforms.forms import HeightWindow, count_shells
from smallforms.lab import (
    Agreement,
    BudgetExceeded,
    ExperimentPlan,
    RegimeRejected,
    RunRecord,
    RunRecordError,
    estimate_hit_fraction,
    first_moment_bound,
    judge_trend,
    load_run,
    persist_run,
    sample_matrix,
    sample_shell_counts,
    scan_cost,
    wilson_interval,
    zero_one_verdict,
)
from smallforms.criteria import Classification

DIVERGENT = ProblemSpec(3, 1, PowerLog(1, F(3, 2), 0))
CONVERGENT = ProblemSpec(3, 1, PowerLog(F(1, 10), 4, 0))


@pytest.mark.parametrize("hits,n", [(0, 10), (3, 10), (10, 10), (450, 500), (1, 1)])
def test_wilson_interval(hits, n):
    lo, hi = wilson_interval(hits, n)
    ref = oracles.wilson(hits, n)
    assert lo == pytest.approx(max(0.0, ref[0]), abs=1e-12)
    assert hi == pytest.approx(min(1.0, ref[1]), abs=1e-12)
    assert 0 <= lo <= hits / n <= hi <= 1


def test_sampling_is_per_index():
    a = sample_matrix(7, 3, 3, 2)
    b = sample_matrix(7, 3, 3, 2)
    c = sample_matrix(7, 4, 3, 2)
    assert a == b and a != c
    assert all(0 <= x < 1 for r in a.rows for x in r)


def test_sample_counts_match_direct_scans():
    window = HeightWindow(1, 6)
    counts, _ = sample_shell_counts(DIVERGENT, window, 5, seed=3)
    for i in range(5):
        X = sample_matrix(3, i, 3, 1)
        assert tuple(counts[i]) == count_shells(DIVERGENT, X, window).counts


def test_partitioning_does_not_change_counts():
    window = HeightWindow(1, 8)
    one, u1 = sample_shell_counts(DIVERGENT, window, 13, seed=9)
    three, u3 = sample_shell_counts(DIVERGENT, window, 13, seed=9, jobs=3)
    assert np.array_equal(one, three) and u1 == u3


def test_hit_fraction_monotone_in_window():
    spec = ProblemSpec(4, 1, PowerLog(F(1, 20), 2, 0))
    fr = [estimate_hit_fraction(spec, HeightWindow(1, q), 60, seed=1).fraction for q in (2, 4, 8)]
    assert fr == sorted(fr)


def test_regime_guard():
    with pytest.raises(RegimeRejected):
        estimate_hit_fraction(ProblemSpec(1, 2, PowerLog(1, 1, 0)), HeightWindow(1, 5), 10, seed=0)
    with pytest.raises(RegimeRejected):
        estimate_hit_fraction(ProblemSpec(3, 3, PowerLog(1, 1, 0)), HeightWindow(1, 5), 10, seed=0)
    estimate_hit_fraction(ProblemSpec(1, 1, PowerLog(1, 1, 0), Variant.CLASSICAL), HeightWindow(1, 5), 10, seed=0)


def test_budget_guard():
    spec = ProblemSpec(6, 1, PowerLog(1, 1, 0))
    w = HeightWindow(1, 40)
    with pytest.raises(BudgetExceeded) as info:
        estimate_hit_fraction(spec, w, 10, seed=0)
    assert info.value.estimate == scan_cost(spec, w) > 10**9
    with pytest.raises(BudgetExceeded):
        estimate_hit_fraction(DIVERGENT, HeightWindow(1, 10), 5, seed=0, budget=100)


def test_first_moment_bound_dominates_observed_mean():
    w = HeightWindow(5, 20)
    spec = ProblemSpec(3, 1, PowerLog(F(1, 2), 2, 0))
    res = estimate_hit_fraction(spec, w, 300, seed=4)
    bound = first_moment_bound(spec, w)
    assert res.mean_solutions <= bound
    assert res.mean_solutions >= 0.2 * bound  # the bound is not vacuous


def test_first_moment_bound_formula():
    w = HeightWindow(50, 200)
    # 12 r^2 + 1 canonical vectors per shell, each with probability at most 2 psi(r) / r
    expected = sum((12 * r * r + 1) * 0.2 * r**-5 for r in w.heights())
    assert first_moment_bound(CONVERGENT, w) == pytest.approx(expected, rel=1e-12)


def test_plan_invariants():
    with pytest.raises(DomainError):
        ExperimentPlan(DIVERGENT, 1, [HeightWindow(1, 5), HeightWindow(1, 5)], 10)
    with pytest.raises(DomainError):
        ExperimentPlan(DIVERGENT, 1, [HeightWindow(1, 5)], 0)
    with pytest.raises(DomainError):
        ExperimentPlan(DIVERGENT, -1, [HeightWindow(1, 5)], 10)
    with pytest.raises(DomainError):
        ExperimentPlan(DIVERGENT, 1, [], 10)


def test_judge_trend():
    def res(frs):
        from smallforms.lab import HitFraction

        return [HitFraction(HeightWindow(1, i + 1), int(f * 10), 10, f, 0, 1, 1.0) for i, f in enumerate(frs)]

    assert judge_trend(Classification.DIVERGENT, res([0.5, 0.7, 0.9])) is Agreement.CONSISTENT
    assert judge_trend(Classification.DIVERGENT, res([0.5, 0.4, 0.9])) is Agreement.INCONSISTENT
    assert judge_trend(Classification.DIVERGENT, res([0.1, 0.2])) is Agreement.INCONSISTENT
    assert judge_trend(Classification.CONVERGENT, res([0.3, 0.1])) is Agreement.CONSISTENT
    assert judge_trend(Classification.BOUNDARY, res([0.3])) is Agreement.NOT_APPLICABLE


def test_boundary_series_is_not_applicable():
    spec = ProblemSpec(3, 1, PowerLog(1, 2, 1))  # e = -1, k = -1
    rec = zero_one_verdict(ExperimentPlan(spec, 5, [HeightWindow(1, 4)], 10))
    assert rec.predicted == "Boundary"
    assert rec.agreement is Agreement.NOT_APPLICABLE


def test_small_verdicts_and_determinism(tmp_path):
    plan = ExperimentPlan(DIVERGENT, 2024, [HeightWindow(1, q) for q in (4, 8, 16)], 40)
    rec = zero_one_verdict(plan)
    assert rec.predicted == "Divergent"
    assert rec.agreement is Agreement.CONSISTENT
    again = zero_one_verdict(plan, jobs=2)
    assert again.numerics() == rec.numerics()
    path = persist_run(rec, tmp_path / "run.json")
    loaded = load_run(path)
    assert loaded == rec
    assert zero_one_verdict(loaded.plan).numerics() == rec.numerics()


def test_load_run_errors(tmp_path):
    rec = zero_one_verdict(ExperimentPlan(DIVERGENT, 1, [HeightWindow(1, 3)], 5))
    doc = rec.to_json()
    del doc["plan"]["seed"]
    p = tmp_path / "noseed.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(RunRecordError, match="plan.seed"):
        load_run(p)
    p.write_text('{"schema_version": 1,\n "plan": [')
    with pytest.raises(RunRecordError, match="line 2"):
        load_run(p)
    with pytest.raises(RunRecordError, match="schema_version"):
        RunRecord.from_json({"plan": {}})


def test_csv_export():
    rec = zero_one_verdict(ExperimentPlan(DIVERGENT, 1, [HeightWindow(1, 3), HeightWindow(1, 5)], 5))
    lines = rec.fractions_csv().splitlines()
    assert lines[0] == "q_min,q_max,fraction,ci_low,ci_high"
    assert len(lines) == 3 and lines[1].startswith("1,3,")
