import math

import numpy as np
import pytest

from multibump.boxes import r_lambda
from multibump.continuation import (Branch, audit, continue_branch, detect_fold, init_branch,
                                    residual_floor)
from multibump.errors import SpecError
from multibump.greens import Eigenpair, Grid
from multibump.indexset import IndexSet


@pytest.fixture(scope="module")
def branch3(w3):
    seed = init_branch(w3, 3.0, 1e-4, N=257)
    return continue_branch(seed, w3, 3.0, lam_stop=-100.0, targets=(-80.0,))


def test_synthetic_fold():
    s = np.linspace(0, 2, 41)
    lam_t, idx = detect_fold(s, 1 - (s - 1) ** 2)
    assert lam_t == pytest.approx(1.0, abs=1e-6)
    assert s[idx] == pytest.approx(1.0, abs=0.05)


def test_synthetic_fold_off_grid():
    # vertex between samples; the quadratic fit recovers it exactly
    s = np.linspace(0, 2, 30)
    lam_t, _ = detect_fold(s, 3 - 2 * (s - 0.913) ** 2)
    assert lam_t == pytest.approx(3.0, abs=1e-6)


def test_monotone_branch_has_no_fold():
    s = np.linspace(0, 1, 20)
    assert detect_fold(s, -5 * s) is None
    with pytest.raises(ValueError):
        detect_fold([0, 1], [0, 1])


def test_seed_near_pi_squared(w3):
    seed = init_branch(w3, 3.0, 1e-4, N=2049)
    assert abs(seed.lam - math.pi ** 2) <= 1e-2
    assert seed.amplitude == pytest.approx(1e-4, rel=1e-9)


def test_seed_tangent_to_eigenfunction(w3):
    seed = init_branch(w3, 3.0, 1e-4, N=257)
    eig = Eigenpair(seed.profile.grid)
    assert np.max(np.abs(seed.profile.values - 1e-4 * eig.phi)) <= 0.1 * 1e-4


def test_seed_converges_to_discrete_eigenvalue(w3):
    # the discrete problem bifurcates from its own first eigenvalue 4/h^2 sin^2(pi h/2)
    N = 257
    h = Grid(N).h
    sigma = 4 / h ** 2 * math.sin(math.pi * h / 2) ** 2
    gaps = [abs(init_branch(w3, 3.0, eps, N=N).lam - sigma) for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    # tangency: the shift is quadratic in epsilon for p = 3
    assert gaps[1] / gaps[2] == pytest.approx(100, rel=0.05)


def test_seed_rejects_bad_epsilon(w3):
    with pytest.raises(SpecError):
        init_branch(w3, 3.0, 0.5)


def test_branch_points_are_solutions(branch3, w3):
    assert branch3.status == "LAMBDA_STOP"
    assert audit(branch3, w3, 3.0) == []
    for pt in branch3.points[::50]:
        assert pt.profile.values.min() >= -1e-10


def test_branch_fold_right_of_bifurcation(branch3):
    assert branch3.fold is not None
    lam_t, idx = branch3.fold
    assert lam_t > math.pi ** 2
    lo, hi = branch3.projection()
    assert hi == pytest.approx(lam_t, abs=1e-3)
    assert lo < -100


def test_arclength_increasing_and_steps_bounded(branch3):
    s = branch3.arclength
    assert np.all(np.diff(s) > 0)
    assert np.max(np.diff(s)) <= 0.1 + 1e-12


def test_landing_is_a_large_solution(branch3, w3, enum3):
    landed = branch3.landings[-80.0]
    assert landed.sup > r_lambda(-80.0, 1.0, 3.0)
    assert landed.residual_norm <= 1e-6
    # it matches the shooting solution in the {1,2} box up to the coarse grid error
    ss = enum3.at(-80.0)
    ref = [pr for pr, b in zip(ss.profiles, ss.boxes) if b == IndexSet.of(1, 2)][0]
    assert landed.sup == pytest.approx(ref.sup, rel=1e-3)


def test_branch_csv(branch3):
    rows = branch3.to_csv().strip().splitlines()
    assert rows[0] == "lambda,sup_norm,fold_flag"
    assert len(rows) == len(branch3.points) + 1
    assert sum(int(r.split(",")[2]) for r in rows[1:]) == 1


def test_residual_floor_scaling():
    u = np.ones(10)
    assert residual_floor(2 * u, 0.01) == pytest.approx(2 * residual_floor(u, 0.01))
    assert residual_floor(u, 0.005) == pytest.approx(4 * residual_floor(u, 0.01))


def test_step_bounds(w3):
    seed = init_branch(w3, 3.0, 1e-4, N=65)
    with pytest.raises(SpecError):
        continue_branch(seed, w3, 3.0, step=1.0)
    short = continue_branch(seed, w3, 3.0, max_points=5)
    assert isinstance(short, Branch) and short.status == "MAX_POINTS" and len(short.points) == 5
