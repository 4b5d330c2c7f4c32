import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from smallforms.domain import (
    ApproxFunction,
    DimensionFunction,
    DomainError,
    FormMatrix,
    IntegerVector,
    PerCoordinate,
    PowerLog,
    ProblemSpec,
    Regime,
    SolutionRecord,
    Table,
    TableRangeError,
    Variant,
    classify_regime,
    derived_shifts,
    eval_Psi,
    eval_psi,
    make_record,
    number_from_json,
    number_to_json,
    parse_number,
    regime_of,
)


def test_powerlog_values():
    assert eval_psi(PowerLog(1, 2, 0), 10) == pytest.approx(0.01, rel=1e-15)
    assert eval_psi(PowerLog(1, 0, 1), 1) == pytest.approx(1 / math.log(2))
    assert eval_Psi(PowerLog(1, 2, 0), 10) == pytest.approx(0.001, rel=1e-15)


def test_powerlog_exact_values():
    psi = PowerLog(F(1, 10), 4, 0)
    assert psi.is_exact
    assert eval_psi(psi, 3, exact=True) == F(1, 810)
    assert eval_Psi(psi, 3, exact=True) == F(1, 2430)
    assert not PowerLog(1, 1.5, 0).is_exact
    with pytest.raises(DomainError):
        PowerLog(1, 1, 1).exact(2)


@pytest.mark.parametrize("c,tau,kappa", [(1, 0, 0), (1, 0, -1), (0, 1, 0), (-1, 2, 0), (1, -1, 3), (1, float("nan"), 0)])
def test_powerlog_rejects_non_decaying(c, tau, kappa):
    with pytest.raises(DomainError):
        PowerLog(c, tau, kappa)


def test_powerlog_rejects_bad_heights():
    psi = PowerLog(1, 1, 0)
    for r in (0, -3, 1.5, True):
        with pytest.raises(DomainError):
            psi.value(r)


def test_table_lookup_and_range():
    t = Table([0.5, 0.25, 0.125])
    assert eval_psi(t, 2) == 0.25
    assert eval_Psi(Table([0.5, 0.25]), 1) == 0.5
    with pytest.raises(TableRangeError):
        t.value(4)


def test_table_invariants():
    with pytest.raises(DomainError):
        Table([0.5, 0, 0.1])
    with pytest.raises(DomainError):
        Table([0.5, 0.25, 0.3])
    Table([0.1, 0.5, 0.25], cut=2)  # increasing before the cut is allowed
    with pytest.raises(DomainError):
        Table([0.1, 0.5], cut=3)
    with pytest.raises(DomainError):
        Table([])


def test_table_exactness_follows_entries():
    assert Table([F(1, 2), F(1, 3)]).exact(2) == F(1, 3)
    with pytest.raises(DomainError):
        Table([0.5, 0.25]).exact(1)


def test_percoordinate_arity_checked_by_spec():
    pc = PerCoordinate([PowerLog(1, 1, 0), PowerLog(1, 2, 0)])
    assert pc.value(2) == (0.5, 0.25)
    ProblemSpec(3, 2, pc)
    with pytest.raises(DomainError):
        ProblemSpec(3, 1, pc)
    with pytest.raises(DomainError):
        PerCoordinate([pc])


@pytest.mark.parametrize(
    "psi",
    [
        PowerLog(F(1, 3), 2, 0),
        PowerLog(0.5, 1.25, 2),
        Table([F(1, 2), F(1, 4)], cut=1),
        Table([0.3, 0.2]),
        PerCoordinate([PowerLog(1, 1, 0), Table([F(1, 2)])]),
    ],
)
def test_psi_json_round_trip(psi):
    assert ApproxFunction.from_json(psi.to_json()) == psi


def test_scaled_keeps_exactness():
    psi = PowerLog(1, 2, 0).scaled(F(1, 4))
    assert psi.exact(2) == F(1, 16)
    assert Table([F(1, 2)]).scaled(F(1, 2)).exact(1) == F(1, 4)


def test_dimension_function_validity():
    f = DimensionFunction(2.5)
    assert f(0.25) == pytest.approx(0.25**2.5)
    DimensionFunction(0, 1)
    for s, k in [(0, 0), (0, -1), (-1, 2)]:
        with pytest.raises(DomainError):
            DimensionFunction(s, k)


def test_dimension_function_shifts():
    f = DimensionFunction(3)
    assert f.shifted(1) == DimensionFunction(2)
    with pytest.raises(DomainError):
        f.shifted(3)
    validity = f.derived_validity(3, 1)
    assert set(validity) == set(derived_shifts(3, 1))
    assert validity["n^2"] and validity["(m-n-1)n"]
    assert not validity["mn"]


def test_dimension_function_log_factor():
    f = DimensionFunction(1, 2)
    x = 0.01
    assert f(x) == pytest.approx(x * math.log1p(1 / x) ** -2)


def test_form_matrix_parse_exact_and_float():
    X = FormMatrix.parse("1/2;1/3")
    assert X.exact and X.shape == (2, 1)
    assert X.rows == ((F(1, 2),), (F(1, 3),))
    assert X.integer_numerators() == (((3,), (2,)), 6)
    Y = FormMatrix.parse("0.5,0.25;1,0")
    assert not Y.exact and Y.rows == ((0.5, 0.25), (1.0, 0.0))


def test_form_matrix_invariants():
    with pytest.raises(DomainError):
        FormMatrix([[F(3, 2)]])
    with pytest.raises(DomainError):
        FormMatrix([[F(1, 2), 0.5]])
    with pytest.raises(DomainError):
        FormMatrix([[0.1], [0.2, 0.3]])
    with pytest.raises(DomainError):
        FormMatrix([[0.5]], exact=True)
    with pytest.raises(DomainError):
        FormMatrix([[-0.1]])


def test_form_matrix_json_round_trip():
    for X in (FormMatrix.parse("1/2,1/7;0,1"), FormMatrix.parse("0.1,0.2")):
        assert FormMatrix.from_json(X.to_json()) == X


def test_integer_vector():
    q = IntegerVector((0, -2, 1))
    assert q.height == 2
    assert not q.is_canonical() and q.negated().is_canonical()
    assert IntegerVector((0, 0)).is_zero
    with pytest.raises(DomainError):
        IntegerVector((1.5,))


@pytest.mark.parametrize(
    "m,n,variant,regime",
    [
        (1, 5, "absolute", Regime.SINGLETON),
        (1, 1, "absolute", Regime.SINGLETON),
        (2, 1, "absolute", Regime.EXCLUDED),
        (3, 3, "absolute", Regime.HYPERSURFACE),
        (4, 7, "absolute", Regime.HYPERSURFACE),
        (3, 1, "absolute", Regime.GENERIC),
        (5, 4, "absolute", Regime.GENERIC),
        (2, 2, "absolute", Regime.UNCOVERED),
        (2, 5, "absolute", Regime.UNCOVERED),
        (2, 1, "classical", Regime.CLASSICAL),
        (1, 1, "classical", Regime.CLASSICAL),
    ],
)
def test_regimes(m, n, variant, regime):
    assert regime_of(m, n, variant) is regime
    assert classify_regime(ProblemSpec(m, n, PowerLog(1, 1, 0), Variant(variant))) is regime


@given(st.integers(1, 8), st.integers(1, 8))
def test_regime_partition(m, n):
    r = regime_of(m, n)
    assert (r is Regime.GENERIC) == (m > n and m + n > 3)
    assert (r is Regime.HYPERSURFACE) == (2 < m <= n)


def test_problem_spec_json_round_trip():
    spec = ProblemSpec(3, 2, PerCoordinate([PowerLog(1, 1, 0), PowerLog(F(1, 2), 3, 1)]), Variant.CLASSICAL)
    assert ProblemSpec.from_json(spec.to_json()) == spec
    with pytest.raises(DomainError):
        ProblemSpec(0, 1, PowerLog(1, 1, 0))


def test_make_record_refuses_non_positive_margin():
    rec = make_record((2, -3), (F(0),), (F(1, 9),))
    assert rec.margin == F(1, 9) and rec.height == 3
    assert SolutionRecord.from_json(rec.to_json()) == rec
    with pytest.raises(DomainError):
        make_record((1,), (F(1, 2),), (F(1, 2),))
    assert make_record((1,), (F(1, 2),), (F(1, 2),), inclusive=True).margin == 0
    with pytest.raises(DomainError):
        make_record((1,), (F(1, 2),), (F(1, 3),), inclusive=True)


@given(st.fractions(min_value=-10, max_value=10, max_denominator=50) | st.integers(-100, 100))
def test_number_json_round_trip(x):
    assert number_from_json(number_to_json(x)) == x


def test_parse_number():
    assert parse_number("1/3") == F(1, 3)
    assert parse_number("0.1") == F(1, 10)
    assert parse_number("0.1", exact=False) == 0.1
    for bad in ("", "x", "1/0", True):
        with pytest.raises(DomainError):
            parse_number(bad)
