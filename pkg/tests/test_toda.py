import math

import numpy as np
import pytest

from nambuflow.flows import symmetric_flow
from nambuflow.integrate import integrate
from nambuflow.special import circle_solution
from nambuflow.toda import (TodaError, TodaState, build_M, build_U, constraint_residual, continuum_variables,
                            factor_state, invariants_from_matrix, invariants_from_state, iterate, pin_gauge,
                            random_state, reconstruct, step, structure_residual)

import oracles

ONES = TodaState([1, 1, 1], [1, 1, 1])


def test_state_validation():
    with pytest.raises(TodaError):
        TodaState([1, 1], [1, 1])
    with pytest.raises(TodaError):
        TodaState([1, 1, 1], [1, 1])
    with pytest.raises(TodaError):
        TodaState([1, 1, np.inf], [1, 1, 1])
    s = TodaState([1, 2, 3], [1, 2, 0.5])
    assert s.m == 3 and s.c == 1.0 and s.det_U == 7.0
    assert s.to_json() == {"i": [1.0, 2.0, 3.0], "v": [1.0, 2.0, 0.5]}


def test_build_M_examples():
    np.testing.assert_array_equal(build_M(ONES), [[2, 1, 1], [1, 2, 1], [1, 1, 2]])
    M = build_M(TodaState([1, 2, 3], [1, 1, 1]))
    assert (M[1, 0], M[2, 1], M[0, 2]) == (2.0, 3.0, 1.0)
    s = TodaState([0.5, 1.5, 2.0, 0.7], [1.1, 0.3, 0.9, 1.4])
    assert np.trace(build_M(s)) == pytest.approx(s.i.sum() + s.v.sum())


def test_build_U_examples():
    np.testing.assert_array_equal(build_U(ONES), [[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    assert np.linalg.det(build_U(TodaState([2, 2, 2], [1, 1, 1]))) == pytest.approx(9.0)
    rng = np.random.default_rng(7)
    for _ in range(50):
        s = random_state(rng)
        assert np.linalg.det(build_U(s)) == pytest.approx(np.prod(s.i) + 1, rel=1e-12)
        assert s.det_U == pytest.approx(np.prod(s.i) + 1, rel=1e-12)
    s4 = TodaState([0.5, 1.5, 2.0, 0.7], [1, 1, 1, 1])
    assert np.linalg.det(build_U(s4)) == pytest.approx(s4.det_U, rel=1e-12)


def test_step_fixed_point_and_similarity():
    U = build_U(ONES)
    P = U @ U + 2 * U + np.eye(3)
    np.testing.assert_allclose(step(P, U), P, atol=1e-13)
    M = build_M(ONES)
    np.testing.assert_allclose(invariants_from_matrix(step(M, U)), invariants_from_matrix(M), atol=1e-12)


def test_step_singular():
    s = TodaState([1, 1, -1], [1, 1, 1])
    with pytest.raises(TodaError, match="singular U"):
        step(build_M(s), build_U(s))


def test_invariants_examples():
    np.testing.assert_allclose(invariants_from_matrix(np.eye(3)), [3, 3, 1])
    x = invariants_from_matrix(build_M(ONES))
    # principal-minor sum gives x2 = 9 for the all-ones state
    np.testing.assert_allclose(x, [6, 9, 4], atol=1e-12)
    np.testing.assert_allclose(invariants_from_state(ONES), [6, 9, 4])
    s = TodaState([1, 2, 3], [1, 1, 1])
    np.testing.assert_allclose(invariants_from_matrix(build_M(s)), oracles.TODA_123_X, atol=1e-12)


def test_invariants_match_principal_minors():
    rng = np.random.default_rng(3)
    for m in (3, 4, 5):
        M = rng.normal(size=(m, m))
        np.testing.assert_allclose(invariants_from_matrix(M), oracles.principal_minor_sums(M), atol=1e-10)


def test_x3_product_form_and_scaling():
    rng = np.random.default_rng(4)
    for _ in range(20):
        s = random_state(rng, c=rng.uniform(0.5, 2.0))
        assert invariants_from_state(s)[2] == (1 + s.i[0] * s.i[1] * s.i[2]) * (1 + s.v[0] * s.v[1] * s.v[2])
        lam = 1.7
        t = TodaState(s.i, lam * s.v)
        assert invariants_from_matrix(build_M(t))[2] == pytest.approx(
            (1 + np.prod(s.i)) * (1 + lam**3 * np.prod(s.v)), rel=1e-12)


def test_state_formulas_agree_with_matrix_1000():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        s = random_state(rng)
        worst = max(worst, float(np.max(np.abs(invariants_from_state(s) - invariants_from_matrix(build_M(s))))))
    assert worst < 1e-10


def test_state_formulas_m3_only():
    with pytest.raises(TodaError, match="m=3 only"):
        invariants_from_state(TodaState([1, 1, 1, 1], [1, 1, 1, 1]))


def test_iteration_preserves_invariants_20_states():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = random_state(rng)
        run = iterate(s, 100)
        x0 = run.invariants[0]
        rel = np.max(np.abs(run.invariants - x0) / np.abs(x0))
        assert rel < 1e-8
        assert np.max(run.structure) < 1e-12
        assert all(abs(t.c - s.c) < 1e-12 for t in run.states)


def test_iteration_m4_and_zero_steps():
    s = TodaState([0.9, 1.3, 0.7, 1.1], [1.2, 0.8, 1.0, 1.05])
    run = iterate(s, 30)
    assert np.max(np.abs(run.invariants - run.invariants[0]) / np.abs(run.invariants[0])) < 1e-8
    empty = iterate(s, 0)
    assert len(empty.states) == 1 and empty.invariants.shape == (1, 4)
    with pytest.raises(TodaError):
        iterate(s, -1)


def test_next_matrix_is_structured():
    # U^{-1} M U keeps the superdiagonal ones and the corner entry
    s = random_state(np.random.default_rng(9))
    M1 = step(build_M(s), build_U(s))
    assert structure_residual(M1) < 1e-13
    s1 = factor_state(M1, s.c, s)
    np.testing.assert_allclose(build_M(s1), M1, atol=1e-12)


def test_reconstruct_round_trip():
    rng = np.random.default_rng(21)
    for _ in range(10):
        s = random_state(rng)
        x = invariants_from_matrix(build_M(s))
        lam = np.roots([1, -x[0], x[1], -x[2]])
        if np.max(np.abs(lam.imag)) > 1e-9:
            continue
        lam = lam.real
        X = circle_solution(x[0], x[1], 0.37)
        gauge = [pin_gauge("v1", s.v[0]), pin_gauge("v2", s.v[1])]
        guess = TodaState(s.i * 1.002, s.v * np.array([1.0, 1.0, 0.998]))
        rec = reconstruct(lam, s.c, X, gauge, guess)
        np.testing.assert_allclose(np.concatenate([rec.i, rec.v]), np.concatenate([s.i, s.v]), atol=1e-9)
        assert constraint_residual(rec, lam, s.c, gauge) < 1e-10


def _real_spectrum_state(seed):
    rng = np.random.default_rng(seed)
    while True:
        s = random_state(rng)
        x = invariants_from_matrix(build_M(s))
        lam = np.roots([1, -x[0], x[1], -x[2]])
        if np.max(np.abs(lam.imag)) < 1e-9:
            return s, x, lam.real


def test_reconstruct_along_nambu_trajectory():
    s, x, lam = _real_spectrum_state(2)
    spec = symmetric_flow(3, x[:2])
    traj = integrate(spec, circle_solution(x[0], x[1], 0.0), (0.0, 2 * math.pi / math.sqrt(3)), samples=64)
    guess, X1_0 = s, traj.states[0, 0]
    xs = []
    for X in traj.states:
        # v1 follows the orbit continuously, v2 stays pinned; X1(0) is the maximum
        # of X1 on the circle, so v1 only grows (this state sits on a fold for smaller v1)
        gauge = [pin_gauge("v1", s.v[0] * (1 + 0.05 * (X1_0 - X[0]))), pin_gauge("v2", s.v[1])]
        guess = reconstruct(lam, s.c, X, gauge, guess)
        xs.append(invariants_from_state(guess))
    xs = np.array(xs)
    assert np.max(np.abs(xs - x) / np.abs(x)) < 1e-8


def test_reconstruct_errors():
    s, x, lam = _real_spectrum_state(2)
    gauge = [pin_gauge("v1", s.v[0]), pin_gauge("v2", s.v[1])]
    with pytest.raises(TodaError, match="two gauge"):
        reconstruct(lam, s.c, None, gauge[:1], s)
    with pytest.raises(TodaError, match="do not match"):
        reconstruct(lam, s.c, [1.0, 2.0, 3.0], gauge, s)
    with pytest.raises(TodaError, match="unknown component"):
        pin_gauge("w1", 1.0)
    with pytest.raises(TodaError, match="Newton did not converge|singular Jacobian"):
        # v1 v2 v3 = c with v1 = v2 = 0 has no solution
        reconstruct(lam, s.c, None, [pin_gauge("v1", 0.0), pin_gauge("v2", 0.0)], s, max_iter=20)


def test_factor_state_failure():
    with pytest.raises(TodaError, match="refactorization failed"):
        factor_state(np.arange(9.0).reshape(3, 3), 1.0, ONES)


def test_continuum_bridge():
    a = np.array([0.25, 1.0, 0.5])
    s = continuum_variables(a, [0.1, -0.2, 0.3])
    assert np.prod(a) == 1 / 8 and s.c == pytest.approx(1.0)
    np.testing.assert_allclose(s.i, [0.9, 1.2, 0.7])
