import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyfb import maxdet, oracle
from noisyfb.exceptions import IdentityViolation
from noisyfb.nblock import NBlockProblem, build_noisy_problem
from noisyfb.noise import MA1, White, covariance


def test_random_search_scalar():
    prob = NBlockProblem(np.eye(1), 0.5 * np.eye(1), 2.0)
    _, best = oracle.random_search(prob, samples=100_000, seed=1)
    assert best == pytest.approx(0.5 * np.log2(3.0), abs=2e-3)


def test_random_search_white_does_not_exceed_half_bit():
    prob = NBlockProblem(np.eye(2), np.eye(2), 1.0)
    _, best = oracle.random_search(prob, samples=50_000, seed=2)
    assert best <= 0.5 + 1e-9


def test_random_search_points_are_feasible():
    prob = NBlockProblem(covariance(MA1(0.4), 3), 0.3 * np.eye(3), 2.0)
    pt, best = oracle.random_search(prob, samples=5000, seed=4)
    n = prob.n
    assert np.all(np.triu(pt.B) == 0)
    assert np.linalg.eigvalsh(pt.K_s)[0] >= -1e-12
    spent = np.trace(pt.K_s + pt.B @ (prob.K_v + prob.K_w) @ pt.B.T)
    assert spent <= n * prob.P * (1 + 1e-12)


def test_random_search_is_deterministic():
    prob = NBlockProblem(covariance(MA1(0.4), 2), 0.3 * np.eye(2), 2.0)
    assert oracle.random_search(prob, 3000, seed=9)[1] == oracle.random_search(prob, 3000, seed=9)[1]


def test_random_search_limits():
    with pytest.raises(ValueError):
        oracle.random_search(NBlockProblem(np.eye(5), np.eye(5), 1.0))


def test_identity_check_trivial_point():
    K_w = covariance(MA1(0.5), 3)
    rep = oracle.schur_identity_check(K_w, 0.2 * np.eye(3), oracle.FeasiblePoint(np.eye(3), np.zeros((3, 3))))
    assert rep.ok()


def test_identity_check_flags_indefinite_point():
    K_w = covariance(MA1(0.3), 4)
    pt = oracle.FeasiblePoint(np.diag([1.0, 1.0, 1.0, -0.1]), np.zeros((4, 4)))
    rep = oracle.schur_identity_check(K_w, 0.25 * np.eye(4), pt)
    assert rep.lmi_min_eig < 0


def test_identity_violation_is_raised(monkeypatch):
    K_w = covariance(MA1(0.3), 2)
    pt = oracle.FeasiblePoint(np.eye(2), np.array([[0.0, 0.0], [0.5, 0.0]]))
    monkeypatch.setattr(oracle, "lmi_matrix", lambda *a: -np.eye(6))
    with pytest.raises(IdentityViolation):
        oracle.schur_identity_check(K_w, np.eye(2), pt)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_lmi_consistency_rule(lmi_min, ks_min):
    ok = oracle.lmi_consistent(lmi_min, ks_min)
    if ks_min > 1e-9 and lmi_min < -1e-9:
        assert not ok
    if ks_min < -1e-9 and lmi_min >= 0:
        assert not ok


@given(st.integers(0, 2**32 - 1))
def test_identities_hold_at_random_points(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    prob = NBlockProblem(covariance(MA1(rng.uniform(-0.8, 0.8)), n), rng.uniform(0.05, 2) * np.eye(n), 3.0)
    rep = oracle.schur_identity_check(prob.K_w, prob.K_v, oracle.random_feasible_point(prob, rng))
    assert rep.ok()


def _n3_problem():
    n = 3
    K_w, K_v = covariance(MA1(0.3), n), covariance(White(0.25), n)
    mp, lay = build_noisy_problem(K_w, K_v, 2.0)
    return mp, lay.pack(K_w + np.eye(n), np.zeros((n, n)))


def test_finite_differences_order_of_accuracy():
    mp, x0 = _n3_problem()
    x = oracle.random_interior_points(mp, x0, 1, np.random.default_rng(0))[0]
    g4 = oracle.finite_diff_check(mp, x, h=1e-4)[0]
    g5 = oracle.finite_diff_check(mp, x, h=1e-5)[0]
    # central differences: shrinking h tenfold cuts the truncation error ~100x
    assert 30 <= g4 / g5 <= 300


def test_finite_differences_catch_a_sign_flip(monkeypatch):
    mp, x0 = _n3_problem()
    real = maxdet.barrier_value_grad_hess

    def flipped(prob, x, t):
        v, g, h = real(prob, x, t)
        return v, -g, h

    monkeypatch.setattr(maxdet, "barrier_value_grad_hess", flipped)
    assert oracle.finite_diff_check(mp, x0)[0] > 1.0


def test_finite_differences_reject_bad_step():
    mp, x0 = _n3_problem()
    with pytest.raises(ValueError):
        oracle.finite_diff_check(mp, x0, h=1e-3)


def test_interior_points_are_strictly_feasible():
    mp, x0 = _n3_problem()
    for x in oracle.random_interior_points(mp, x0, 10, np.random.default_rng(1)):
        assert maxdet.is_strictly_feasible(mp, x)
