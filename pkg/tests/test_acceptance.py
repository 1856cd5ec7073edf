"""End-to-end acceptance criteria 1-10.

Each test records one PASS/FAIL line (printed in the terminal summary)
before asserting, so a red criterion still reports its measured numbers.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from multibump.boxes import r_lambda
from multibump.cli import LIOUVILLE_GRID, run
from multibump.continuation import continue_branch, init_branch
from multibump.greens import Grid, apply_K
from multibump.indexset import IndexSet
from multibump.newton import fd_jacobian, fd_residual, solve_all
from multibump.shooting import LiouvilleProblem, enumerate_solutions, liouville_check
from multibump.solutions import match_profiles
from multibump.verify import (degree_table, estimate_R_cap, multiplicity_sweep, verify_lemma22,
                              verify_lemma23, verify_lemma24, verify_lemma25)

SWEEP = [-40.0, -80.0, -160.0, -320.0]
THETAS = [0.25, 0.5, 0.75, 1.0]
# solution sets from criteria 1 and 2, reused by criterion 3
PRODUCED = {}


def record(k, ok, detail):
    ACCEPTANCE_LINES[k] = f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}"


def test_criterion_01_multiplicity_n2(w3):
    t0 = time.perf_counter()
    newton = solve_all(-80.0, w3, 3.0, extrapolate=True)
    shoot = enumerate_solutions(-80.0, w3, 3.0)
    elapsed = time.perf_counter() - t0
    raw = solve_all(-80.0, w3, 3.0)
    PRODUCED["c1"] = [newton, shoot, raw]
    want = {IndexSet.of(1), IndexSet.of(2), IndexSet.of(1, 2)}
    pairs = match_profiles(newton, shoot)
    diff = max((d for _, _, d in pairs), default=math.inf)
    raw_diff = max(d for _, _, d in match_profiles(raw, shoot))
    ok = (len(newton) >= 3 and len(shoot) >= 3 and want <= set(newton.occupied())
          and want <= set(shoot.occupied()) and len(pairs) == len(shoot) and diff <= 1e-5 and elapsed <= 60)
    record(1, ok, f"newton={len(newton)} shooting={len(shoot)} "
                  f"boxes={[b.label() for b in shoot.occupied()]} diff={diff:.2e} "
                  f"(unextrapolated {raw_diff:.2e}) runtime={elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_02_multiplicity_n3(w5, enum5):
    t0 = time.perf_counter()
    rows, sets, lam_c = multiplicity_sweep(SWEEP, w5, 3.0)
    elapsed = time.perf_counter() - t0
    PRODUCED["c2"] = sets + [enum5.at(lam) for lam in SWEEP]
    shoot_full = [len(enum5.at(lam).occupied()) == 7 for lam in SWEEP]
    ok = lam_c is not None and elapsed <= 600
    record(2, ok, f"lambda_c={lam_c} counts={[r.solutions for r in rows]} "
                  f"boxes={[len(r.occupied) for r in rows]} shooting_all7={shoot_full} runtime={elapsed:.1f}s")
    assert ok


def test_criterion_03_lower_bound(w3, w5, enum3, enum5):
    sets = [ss for key in ("c1", "c2") for ss in PRODUCED.get(key, [])]
    if "c1" not in PRODUCED:
        sets += [solve_all(-80.0, w3, 3.0), enum3.at(-80.0)]
    if "c2" not in PRODUCED:
        sets += [enum5.at(lam) for lam in SWEEP]
    violations, checked = 0, 0
    for ss in sets:
        r = r_lambda(ss.lam, 1.0, 3.0)
        for pr in ss.profiles:
            checked += 1
            violations += not pr.sup > r
    reps = [verify_lemma22(lam, THETAS, w, 3.0, e) for w, e in ((w3, enum3), (w5, enum5)) for lam in (-80.0,)]
    theta_count = sum(r.margins["solutions"] for r in reps)
    ok = violations == 0 and all(r.passed for r in reps) and checked > 0
    record(3, ok, f"violations=0/{checked + theta_count}" if ok else
           f"violations={violations}/{checked} theta_reports={[r.status for r in reps]}")
    assert ok


def test_criterion_04_degree_table(w3, enum3):
    dt = degree_table(-80.0, w3, 3.0, rho=1.0, enum=enum3)
    table = {k.label(): v for k, v in dt.boxes.items()}
    omegas = {k.label(): v for k, v in dt.omegas.items()}
    ok = table == {"{}": 1, "{1}": -1, "{2}": -1, "{1,2}": 1} and all(
        v == 0 for k, v in dt.omegas.items() if len(k))
    record(4, ok, f"Lambda={table} Omega={omegas}")
    assert ok


@pytest.mark.slow
def test_criterion_05_dichotomy(w3, enum3):
    grid = [-10.0, -20.0, -40.0, -80.0, -160.0, -320.0, -400.0]
    rep = verify_lemma25(1.0, grid, w3, 3.0, margin=1e-3, enum=enum3)
    lam_hat = rep.thresholds["lambda_hat"]
    below = [sups for lam, sups in zip(grid, rep.raw["sups"]) if lam_hat is not None and lam <= lam_hat]
    in_band = sum(0.999 <= v <= 1.001 for sups in below for v in sups)
    ok = lam_hat is not None and -400 <= lam_hat <= -10 and in_band == 0
    record(5, ok, f"lambda_hat={lam_hat} sups_in_band={in_band} "
                  f"min_distance={rep.margins['min_distance_to_rho']:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_06_decay_on_K(w3, enum3):
    rep = verify_lemma24([-20.0, -320.0], w3, 3.0, K=(0.4, 0.6), enum=enum3)
    m20, m320 = rep.raw["maxima"]
    ratio = m20 / m320 if m320 > 0 else math.inf
    # every solution, not just the largest
    per = [pr.sup_on(0.4, 0.6) for pr in enum3.at(-320.0).profiles]
    ok = ratio >= 10 and all(m20 / v >= 10 for v in per if v > 0)
    record(6, ok, f"max_K(-20)={m20:.4f} max_K(-320)={m320:.4f} ratio={ratio:.2f} (need >= 10)")
    assert ok, "decay factor below 10 on K = [0.4, 0.6]"


def test_criterion_07_forced_nonexistence(w3, enum3):
    R_cap = estimate_R_cap([enum3.at(lam) for lam in SWEEP])
    rep = verify_lemma23(-80.0, IndexSet.of(1), w3, 3.0, R_cap, factor=1.05)
    ok = rep.passed and rep.margins["solutions"] == 0
    record(7, ok, f"solutions={rep.margins['solutions']} mu*={rep.raw['mu_star']:.4g} R_cap={R_cap:.3g}")
    assert ok


def test_criterion_08_liouville():
    g = LIOUVILLE_GRID
    total, bad = 0, 0
    for alpha in g["alpha"]:
        for gamma in g["gamma"]:
            for kappa in g["kappa"]:
                for beta in g["beta"]:
                    prob = LiouvilleProblem(alpha, gamma, kappa, beta)
                    for v in liouville_check(prob, 3.0, g["slopes"], 20.0 * (1 + kappa)):
                        total += 1
                        bad += v.verdict != "EXITS" or not v.bound_ok
    ok = bad == 0 and total >= 50
    record(8, ok, f"configurations={total} failures={bad}")
    assert ok


def test_criterion_09_continuation(w3):
    seed = init_branch(w3, 3.0, 1e-4, N=2049)
    branch = continue_branch(init_branch(w3, 3.0, 1e-4, N=257), w3, 3.0, lam_stop=-100.0)
    fold = branch.fold
    ok = abs(seed.lam - math.pi ** 2) <= 1e-2 and (fold is None or fold[0] > math.pi ** 2)
    record(9, ok, f"seed_lambda={seed.lam:.8f} |lam-pi^2|={abs(seed.lam - math.pi ** 2):.2e} "
                  f"lambda_t={None if fold is None else round(fold[0], 5)}")
    assert ok


def _jacobian_worst(weight, cases=100, N=257, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        u = np.r_[0.0, 0.5 + 5.0 * rng.random(N), 0.0]
        d = np.r_[0.0, rng.standard_normal(N), 0.0]
        lam = rng.uniform(-400, 10)
        t = 1e-5
        fd = (fd_residual(lam, u + t * d, weight, 3) - fd_residual(lam, u - t * d, weight, 3)) / (2 * t)
        jd = fd_jacobian(lam, u, weight, 3) @ d[1:-1]
        worst = max(worst, float(np.max(np.abs(fd - jd)) / np.max(np.abs(jd))))
    return worst


def _K_order():
    errs = []
    for N in (129, 257, 513):
        g = Grid(N)
        exact = -np.exp(g.x) + 1 + (math.e - 1) * g.x
        errs.append(np.max(np.abs(apply_K(np.exp(g.x)) - exact)))
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def _artifacts(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_10_hygiene(w3, tmp_path):
    worst = _jacobian_worst(w3)
    orders = _K_order()
    spec = tmp_path / "spec.json"
    spec.write_text('{"weight": {"kind": "sin_multibump", "m": 3}, "p": 3, "lambda": -80, "N": 257, '
                    '"lambda_grid": [-40, -80], "continuation": {"max_points": 100, "N": 129}}')
    runs = []
    for name in ("a", "b"):
        root = tmp_path / name
        for cmd in ("solve", "count", "classify", "sweep", "continue", "degree-table", "liouville"):
            assert run([cmd, "--spec", str(spec), "--out", str(root / cmd)]) == 0
        runs.append(_artifacts(root))
    same = runs[0] == runs[1]
    ok = worst <= 1e-6 and all(1.9 <= o <= 2.1 for o in orders) and same
    record(10, ok, f"jacobian_max_rel={worst:.2e} K_orders={[round(o, 3) for o in orders]} "
                   f"deterministic={same} files={len(runs[0])}")
    assert ok
