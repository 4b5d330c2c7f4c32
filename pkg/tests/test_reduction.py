import random
from fractions import Fraction as F

import numpy as np
import pytest

from smallforms.domain import DomainError, FormMatrix, PowerLog, Table
from smallforms.forms import HeightWindow, eval_abs_forms, eval_dist_forms
from smallforms.reduction import (
    EqOneViolation,
    LiftCertificate,
    MembershipViolation,
    RegimeError,
    SingularTopBlock,
    column_dependence_witness,
    column_null_vector,
    decompose,
    eta_embed,
    lift_solution,
    lipschitz_constant,
    lipschitz_diagnostic,
    matrix_rank,
    transport_solutions,
    verify_certificate,
)

EPS, CAP = F(1, 10), 2


def random_restricted(rng, m, n, den=12):
    while True:
        X = [[F(rng.randint(0, den), den) for _ in range(n)] for _ in range(m)]
        try:
            return decompose(X, EPS, CAP)
        except DomainError:
            continue


def test_scalar_decomposition():
    rx = decompose([[F(1, 2)], [F(1, 3)]], EPS, 1)
    assert rx.hat == ((F(2, 3),),)
    assert rx.det == F(1, 2)


def test_identity_top_block_gives_bottom():
    X = [[1, 0], [0, 1], [F(1, 3), F(2, 5)], [F(1, 7), 0]]
    rx = decompose(X, EPS, 1)
    assert rx.hat == ((F(1, 3), F(2, 5)), (F(1, 7), F(0)))


@pytest.mark.parametrize("seed", range(20))
def test_reconstruction_is_exact(seed):
    rx = random_restricted(random.Random(seed), 4, 2)
    assert rx.reconstruct() == rx.rows
    assert eta_embed(rx.hat, rx.top, EPS, CAP) == rx.rows


def test_float_reconstruction_within_tolerance():
    X = np.random.default_rng(0).random((4, 2)) * 0.5 + np.eye(4, 2)
    rx = decompose(X.tolist(), 0.1, 2)
    assert np.abs(np.array(rx.reconstruct()) - X).max() <= 1e-10


@pytest.mark.parametrize(
    "X,condition",
    [
        ([[F(1, 20)], [F(1, 2)]], "eps < det(X~)"),
        ([[F(1, 2), 0], [0, 3], [0, 0]], "max |x_ij| <= N"),
        ([[15], [1]], "det(X~) < 1/eps"),
    ],
)
def test_membership_violations_name_the_condition(X, condition):
    with pytest.raises(MembershipViolation) as info:
        decompose(X, EPS, 20 if condition != "max |x_ij| <= N" else 2)
    assert info.value.condition == condition


def test_negative_determinant_is_rejected():
    with pytest.raises(MembershipViolation):
        decompose([[0, 1], [1, 0], [F(1, 2), F(1, 2)]], EPS, 2)


def test_singular_top_block():
    with pytest.raises(SingularTopBlock):
        decompose([[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)], [0, 1]], EPS, 2)
    with pytest.raises(SingularTopBlock):
        decompose([[1e-9], [0.5]], 1e-12, 2)


def test_decompose_needs_more_rows_than_columns():
    with pytest.raises(RegimeError):
        decompose([[1, 0], [0, 1]], EPS, 2)


def test_lift_fixture_sign_convention():
    rx = decompose([[F(1, 2)], [F(1, 3)]], EPS, 1)
    cert = lift_solution(rx, (3,), PowerLog(1, 2, 0))
    assert cert.p.components == (2,)
    assert cert.q.components == (-2, 3)
    assert cert.form_values == (0,)
    assert cert.residuals == (0,)
    assert verify_certificate(cert).ok


def test_identity_top_block_values_are_distances():
    X = [[1], [F(2, 7)], [F(5, 9)]]
    rx = decompose(X, EPS, 1)
    psi = PowerLog(1, 0, 1)  # slowly decaying, so most r lift
    for r in [(1, 1), (2, -1), (3, 2), (0, 1)]:
        try:
            cert = lift_solution(rx, r, psi)
        except EqOneViolation:
            continue
        dists, _ = eval_dist_forms(r, [[F(2, 7)], [F(5, 9)]])
        assert cert.form_values == dists


def test_lift_rejects_non_solutions():
    rx = decompose([[F(1, 2)], [F(1, 3)]], EPS, 1)
    with pytest.raises(EqOneViolation) as info:
        lift_solution(rx, (1,), PowerLog(F(1, 10), 2, 0))
    assert info.value.coordinate == 0
    with pytest.raises(DomainError):
        lift_solution(rx, (0,), PowerLog(1, 2, 0))
    with pytest.raises(DomainError):
        lift_solution(rx, (1, 2), PowerLog(1, 2, 0))


@pytest.mark.parametrize("seed", range(30))
def test_transported_certificates_verify(seed):
    rng = random.Random(seed)
    m, n = rng.choice([3, 4]), rng.choice([1, 2])
    rx = random_restricted(rng, m, n)
    psi = PowerLog(1, 1, 0)
    certs = transport_solutions(rx, psi, HeightWindow(1, 4))
    for c in certs:
        assert verify_certificate(c).ok
        assert verify_certificate(c.to_json()).ok
        assert c.triangle_bound_holds
        assert eval_abs_forms(c.q, rx.rows) == c.form_values
        if c.p.height <= c.r.height:
            assert c.holds_at_q_height is not False
            assert all(v <= b for v, b in zip(c.form_values, c.bounds))


def test_transport_finds_every_classical_solution():
    rng = random.Random(3)
    rx = random_restricted(rng, 3, 1)
    psi = PowerLog(1, 1, 0)
    certs = transport_solutions(rx, psi, HeightWindow(1, 5))
    found = {c.r.components for c in certs}
    bound = lambda h: F(1, h) / (1 * CAP)  # noqa: E731
    for a in range(-5, 6):
        for b in range(-5, 6):
            if (a, b) == (0, 0) or next(x for x in (a, b) if x) < 0:
                continue
            d, _ = eval_dist_forms((a, b), rx.hat)
            assert ((a, b) in found) == (d[0] < bound(max(abs(a), abs(b))))


def test_certificate_json_round_trip_and_tampering():
    rx = decompose([[F(1, 2)], [F(1, 3)], [F(1, 5)]], EPS, 2)
    cert = transport_solutions(rx, PowerLog(1, 1, 0), HeightWindow(1, 3))[0]
    doc = cert.to_json()
    assert LiftCertificate.from_json(doc) == cert
    bad = dict(doc, q=[5, 5, 5])
    assert not verify_certificate(bad).ok
    bad = dict(doc, form_values=["0"])
    assert not verify_certificate(bad).ok
    assert not verify_certificate({"type": "lift-certificate"}).ok


def test_table_psi_beyond_range_marks_strong_claim_unknown():
    rx = decompose([[F(1, 2)], [F(1, 3)]], EPS, 1)
    cert = lift_solution(rx, (3,), Table([F(1), F(1, 2), F(1, 3)]))
    assert cert.q.height == 3 and cert.holds_at_q_height is True
    rx = decompose([[F(1, 4)], [F(3, 4)]], EPS, 1)
    cert = lift_solution(rx, (1,), Table([F(1, 2)]))
    assert cert.q.components == (-3, 1)
    assert cert.holds_at_q_height is None


def test_eta_embed_identity_block():
    Y = [[F(1, 3), F(1, 5)]]
    out = eta_embed(Y, [[1, 0], [0, 1]], EPS, 1)
    assert out == ((1, 0), (0, 1), (F(1, 3), F(1, 5)))


def test_eta_embed_checks_membership():
    with pytest.raises(MembershipViolation):
        eta_embed([[F(1, 2)]], [[F(1, 100)]], EPS, 1)


def test_decompose_inverts_eta():
    rng = random.Random(8)
    for _ in range(20):
        n = rng.choice([1, 2])
        Y = [[F(rng.randint(0, 9), 9) for _ in range(n)] for _ in range(2)]
        while True:
            T = [[F(rng.randint(-6, 6), 3) for _ in range(n)] for _ in range(n)]
            try:
                X = eta_embed(Y, T, EPS, CAP)
                break
            except DomainError:
                continue
        rx = decompose(X, EPS, CAP)
        assert rx.hat == tuple(tuple(r) for r in Y)
        assert rx.top == tuple(tuple(r) for r in T)


def test_lipschitz_ratio_is_bounded():
    diag = lipschitz_diagnostic(4, 2, 0.1, 2, pairs=1000, seed=1)
    assert diag.constant == lipschitz_constant(2, 2) == 6
    assert diag.bounded
    assert 0 < diag.max_ratio


def test_dependence_witness_constructed():
    X = [[F(1, 2), F(1, 3), F(5, 6)], [F(1, 4), 0, F(1, 4)], [F(1, 7), F(2, 7), F(3, 7)]]
    w = column_dependence_witness(X)
    assert w.rank == 2
    c = w.vector
    assert c[0] / c[2] == -1 and c[1] / c[2] == -1
    assert w.residual == 0


def test_dependence_witness_zero_matrix():
    w = column_dependence_witness([[0, 0, 0], [0, 0, 0]])
    assert w.rank == 0
    assert sorted(abs(x) for x in w.vector) == [0, 0, 1]


def test_random_wide_matrices_have_full_rank():
    rng = np.random.default_rng(4)
    for _ in range(20):
        X = rng.random((3, 4))
        assert column_dependence_witness(X.tolist()) is None
        rational = [[F(x).limit_denominator(1000) for x in r] for r in X]
        assert matrix_rank(rational) == 3
        c = column_null_vector(X.tolist())
        assert np.abs(X @ np.array(c)).max() < 1e-9


def test_dependence_witness_regime():
    with pytest.raises(RegimeError):
        column_dependence_witness([[1], [2]])


def test_float_witness_residual_below_tolerance():
    X = np.array([[0.2, 0.4, 0.1], [0.3, 0.6, 0.7], [0.1, 0.2, 0.5]])
    w = column_dependence_witness(X.tolist())
    assert w is not None and w.residual < 1e-9


def test_restricted_matrix_json():
    rx = decompose([[F(1, 2)], [F(1, 3)]], EPS, 1)
    doc = rx.to_json()
    assert doc["X_hat"] == [["2/3"]] and doc["det"] == "1/2"
    assert rx.hat_mod_one() == FormMatrix([[F(2, 3)]])
