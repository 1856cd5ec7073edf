import numpy as np
import pytest

from multibump.boxes import classify, r_lambda, ClassifierConfig
from multibump.greens import Grid
from multibump.indexset import IndexSet
from multibump.newton import (NewtonConfig, fd_jacobian, fd_residual, jacobian_sign, make_profile,
                              newton_solve, seed_profile, solve_all)
from multibump.weight import sin_weight


def test_residual_of_zero_is_zero(w3):
    assert not np.any(fd_residual(-80, np.zeros(66), w3, 3))


def test_residual_of_parabola(w3):
    # u = x(1-x): -u'' = 2 exactly on the grid
    g = Grid(63)
    u = g.x * (1 - g.x)
    F = fd_residual(-80.0, u, w3, 3.0)
    xi = g.x[1:-1]
    ui = u[1:-1]
    np.testing.assert_allclose(F, 2 + 80 * ui - w3(xi) * ui ** 3, atol=1e-10)


def test_jacobian_at_negative_is_laplacian(w3):
    g = Grid(31)
    J = fd_jacobian(-80, -np.ones(g.N + 2), w3, 3).toarray()
    lap = (2 * np.eye(g.N) - np.eye(g.N, k=1) - np.eye(g.N, k=-1)) / g.h ** 2
    np.testing.assert_array_equal(J, lap)


def test_jacobian_at_zero_diagonal(w3):
    g = Grid(31)
    J = fd_jacobian(-80, np.zeros(g.N + 2), w3, 3)
    np.testing.assert_array_equal(J.diagonal(), np.full(g.N, 2 / g.h ** 2))


def test_jacobian_directional_derivatives(w3):
    # central differences, well inside u > 0 where the residual is smooth
    rng = np.random.default_rng(1234)
    N = 257
    worst = 0.0
    for _ in range(100):
        u = np.r_[0.0, 0.5 + 5.0 * rng.random(N), 0.0]
        d = np.r_[0.0, rng.standard_normal(N), 0.0]
        lam = rng.uniform(-400, 10)
        t = 1e-5
        fd = (fd_residual(lam, u + t * d, w3, 3) - fd_residual(lam, u - t * d, w3, 3)) / (2 * t)
        jd = fd_jacobian(lam, u, w3, 3) @ d[1:-1]
        worst = max(worst, np.max(np.abs(fd - jd)) / np.max(np.abs(jd)))
    assert worst <= 1e-6


def test_jacobian_sign_matches_determinant(w3):
    rng = np.random.default_rng(5)
    for _ in range(20):
        u = np.r_[0.0, 3 * rng.random(15), 0.0]
        lam = rng.uniform(-100, 50)
        det = np.linalg.det(fd_jacobian(lam, u, w3, 3).toarray())
        assert jacobian_sign(lam, u, w3, 3) == np.sign(det)


def test_newton_monotone_history(w3):
    g = Grid(257)
    seed = seed_profile(IndexSet.of(1), w3, -80, 2 * r_lambda(-80, 1, 3), g)
    res = newton_solve(-80, seed, w3, 3)
    assert res.converged
    assert all(b < a for a, b in zip(res.history, res.history[1:]))


def test_seed_profile_examples(w3):
    g = Grid(2049)
    A = 2 * np.sqrt(80)
    s = seed_profile(IndexSet.of(1), w3, -80, A, g)
    assert s.max() == pytest.approx(A, rel=1e-5)
    assert not np.any(s[g.x >= 1 / 3])
    both = seed_profile(IndexSet.of(1, 2), w3, -80, A, g)
    assert both[np.argmin(np.abs(g.x - 5 / 6))] == pytest.approx(A, rel=1e-5)
    with pytest.raises(ValueError):
        seed_profile(IndexSet.of(3), w3, -80, A, g)
    with pytest.raises(ValueError):
        seed_profile(IndexSet.of(1), w3, -80, 0.0, g)


def test_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(max_iters=0)
    with pytest.raises(ValueError):
        NewtonConfig(backtrack=1.0)


def test_solve_all_sin3(newton3, w3):
    ss = newton3(-80.0)
    assert len(ss) == 3
    assert {b.label() for b in ss.occupied()} == {"{1}", "{2}", "{1,2}"}
    r = r_lambda(-80, 1, 3)
    for pr in ss.profiles:
        assert pr.residual_norm <= 1e-6
        assert pr.values.min() >= -1e-8
        assert pr.sup > r
    assert sorted(ss.indices) == [-1, -1, 1]


def test_solve_all_rejects_nonnegative_lambda(w3):
    with pytest.raises(ValueError):
        solve_all(1.0, w3, 3)


def test_classification_stable_under_refinement(newton3, w3):
    coarse = newton3(-80.0)
    fine = solve_all(-80.0, w3, 3.0, N=4099)
    assert {b.label() for b in fine.occupied()} == {b.label() for b in coarse.occupied()}


def test_extrapolation_moves_toward_fine_solution(newton3, w3):
    ext = newton3(-80.0, extrapolate=True)
    raw = newton3(-80.0)
    fine = solve_all(-80.0, w3, 3.0, N=8199)
    for a, b in zip(raw.profiles, ext.profiles):
        match = min(fine.profiles, key=lambda f: np.max(np.abs(f.values[::4] - a.values)))
        assert np.max(np.abs(match.values[::4] - b.values)) < np.max(np.abs(match.values[::4] - a.values))
        assert b.meta["extrapolated"]


def test_classify_examples(w3):
    g = Grid(2049)
    cfg = ClassifierConfig(rho=1.0)
    u = seed_profile(IndexSet.of(2), w3, -80, 5.0, g)
    assert classify(make_profile(-80, u, w3, 3), w3.pattern, cfg) == IndexSet.of(2)
    u = seed_profile(IndexSet.of(1, 2), w3, -80, 5.0, g)
    assert classify(make_profile(-80, u, w3, 3), w3.pattern, cfg) == IndexSet.of(1, 2)
    assert classify(make_profile(-80, 0.5 * np.sin(np.pi * g.x), w3, 3), w3.pattern, cfg) == IndexSet(())
