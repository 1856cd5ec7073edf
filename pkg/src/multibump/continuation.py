"""Pseudo-arclength continuation of positive solutions from (Sigma1, 0).

Unknowns are the interior grid values and lambda.  The extended system is
the finite-difference residual of the u+ problem plus one scalar
constraint: a fixed amplitude at the peak node for the seed, the usual
pseudo-arclength condition along a secant direction afterwards.  Bordered
Jacobians are factorised with a sparse LU, which stays well conditioned
at folds where the tridiagonal block alone is singular.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import SpecError
from .greens import Eigenpair, Grid, GridProfile
from .newton import _jac_bands, fd_residual, make_profile, solve_at_lambda

log = logging.getLogger(__name__)

CONTINUATION_N = 257
RESIDUAL_TOL = 1e-9
H_MIN, H_MAX = 1e-4, 1e-1


def residual_floor(u, h) -> float:
    """Smallest max-norm residual reachable with u stored in double precision."""
    return 8.0 * np.finfo(float).eps * float(np.max(np.abs(u))) / h ** 2


@dataclass
class BranchPoint:
    lam: float
    profile: GridProfile
    arclength: float

    @property
    def amplitude(self) -> float:
        return self.profile.sup


@dataclass
class Branch:
    points: list[BranchPoint] = field(default_factory=list)
    fold: tuple | None = None
    status: str = "RUNNING"  # RUNNING, MAX_POINTS, AMPLITUDE, LAMBDA_STOP, TERMINATED
    landings: dict = field(default_factory=dict)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([pt.amplitude for pt in self.points])

    @property
    def arclength(self) -> np.ndarray:
        return np.array([pt.arclength for pt in self.points])

    def projection(self) -> tuple[float, float]:
        lams = self.lambdas
        return float(lams.min()), float(lams.max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["lambda", "sup_norm", "fold_flag"])
        k_fold = None if self.fold is None else self.fold[1]
        for k, pt in enumerate(self.points):
            wr.writerow([f"{pt.lam:.17g}", f"{pt.amplitude:.17g}", int(k == k_fold)])
        return buf.getvalue()

    def profiles_json(self, every=10) -> str:
        """Full profiles of every ``every``-th point."""
        rows = [{"index": k, "arclength": pt.arclength, "profile": pt.profile.to_dict()}
                for k, pt in enumerate(self.points) if k % every == 0]
        return json.dumps(rows, sort_keys=True)


def _inner(a, b, h):
    return h * float(np.dot(a, b))


def _bordered_solve(lam, u, weight, p, a_int, h, row_u, row_lam, rhs_F, rhs_c):
    """Solve [[J, F_lam], [row_u, row_lam]] (du, dlam) = (rhs_F, rhs_c)."""
    ab = _jac_bands(lam, u, a_int, p, h)
    n = ab.shape[1]
    J = sp.diags([ab[2, :-1], ab[1], ab[0, 1:]], [-1, 0, 1], shape=(n, n), format="csc")
    F_lam = -np.maximum(u[1:-1], 0.0)
    A = sp.bmat([[J, sp.csc_matrix(F_lam[:, None])],
                 [sp.csc_matrix(row_u[None, :]), sp.csc_matrix([[row_lam]])]], format="csc")
    sol = spsolve(A, np.r_[rhs_F, rhs_c])
    return sol[:-1], float(sol[-1])


def _correct(lam, u, weight, p, a_int, grid, constraint, max_iters=25, base_tol=RESIDUAL_TOL):
    """Newton on the extended system; ``constraint(u, lam)`` returns (value, row_u, row_lam)."""
    for it in range(1, max_iters + 1):
        F = fd_residual(lam, u, weight, p, a_int)
        c, row_u, row_lam = constraint(u, lam)
        res = max(float(np.max(np.abs(F))), abs(c))
        tol = max(base_tol, residual_floor(u, grid.h))
        if res <= tol:
            return u, lam, it - 1, True
        try:
            du, dlam = _bordered_solve(lam, u, weight, p, a_int, grid.h, row_u, row_lam, -F, -c)
        except RuntimeError:
            return u, lam, it, False
        if not (np.all(np.isfinite(du)) and math.isfinite(dlam)):
            return u, lam, it, False
        u = u.copy()
        u[1:-1] += du
        lam += dlam
        if np.max(np.abs(du)) <= 1e-13 * max(1.0, np.max(np.abs(u))) and abs(dlam) <= 1e-13 * max(1.0, abs(lam)):
            F = fd_residual(lam, u, weight, p, a_int)
            return u, lam, it, float(np.max(np.abs(F))) <= 10 * tol
    return u, lam, max_iters, False


def init_branch(weight, p, epsilon=1e-4, N=CONTINUATION_N) -> BranchPoint:
    """Seed point with ||u||_inf = epsilon next to the bifurcation point (Sigma1, 0)."""
    if not 1e-6 <= epsilon <= 1e-2:
        raise SpecError("epsilon must lie in [1e-6, 1e-2]")
    grid = Grid(N, weight.L)
    eig = Eigenpair(grid)
    phi = eig.phi
    j = int(np.argmax(phi))
    a_int = weight(grid.x[1:-1])
    row = np.zeros(N)
    row[j - 1] = 1.0

    def amplitude(u, lam):
        return u[j] - epsilon, row, 0.0

    # the residual scales with epsilon, so the tolerance does too
    u, lam, _, ok = _correct(eig.Sigma1, epsilon * phi, weight, p, a_int, grid, amplitude,
                             base_tol=RESIDUAL_TOL * epsilon)
    if not ok:
        raise SpecError(f"seed correction failed at epsilon={epsilon}: refine the grid")
    return BranchPoint(lam, make_profile(lam, u, weight, p, source="continuation"), 0.0)


def _distance(u0, l0, u1, l1, h):
    d = u1 - u0
    return math.sqrt(_inner(d, d, h) + (l1 - l0) ** 2)


def continue_branch(seed: BranchPoint, weight, p, step=1e-2, max_points=5000, R_cap=None,
                    lam_stop=None, targets=(), h_min=H_MIN, h_max=H_MAX) -> Branch:
    """Trace the branch through ``seed`` with a secant predictor.

    Stops after ``max_points``, when ||u||_inf exceeds 10*R_cap, when lambda
    drops below ``lam_stop``, or (TERMINATED) when the step falls below
    h_min.  For each lambda in ``targets`` crossed by the trace, a Newton
    solve at that exact lambda is stored in ``landings``.
    """
    if not h_min <= step <= h_max:
        raise SpecError(f"step must lie in [{h_min}, {h_max}]")
    grid = seed.profile.grid
    h = grid.h
    a_int = weight(grid.x[1:-1])
    branch = Branch([seed])
    pending = sorted({float(t) for t in targets}, reverse=True)

    # second point by a natural step in amplitude: the secant needs two points
    u0, lam0 = seed.profile.values, seed.lam
    j = int(np.argmax(u0))
    amp1 = u0[j] * 2.0
    row = np.zeros(grid.N)
    row[j - 1] = 1.0
    u1, lam1, _, ok = _correct(lam0, u0 * 2.0, weight, p, a_int, grid, lambda u, lam: (u[j] - amp1, row, 0.0))
    if not ok:
        branch.status = "TERMINATED"
        return branch
    branch.points.append(BranchPoint(lam1, make_profile(lam1, u1, weight, p, "continuation"),
                                     _distance(u0, lam0, u1, lam1, h)))
    hs = step
    while True:
        if len(branch.points) >= max_points:
            branch.status = "MAX_POINTS"
            break
        prev, cur = branch.points[-2], branch.points[-1]
        up, lp = prev.profile.values, prev.lam
        uc, lc = cur.profile.values, cur.lam
        d = _distance(up, lp, uc, lc, h)
        tu, tl = (uc - up) / d, (lc - lp) / d
        accepted = False
        while hs >= h_min:
            u_pred = uc + hs * tu
            l_pred = lc + hs * tl

            def arclength(u, lam, uc=uc, lc=lc, hs=hs, tu=tu, tl=tl):
                val = _inner(u - uc, tu, h) + (lam - lc) * tl - hs
                return val, h * tu[1:-1], tl

            un, ln, iters, ok = _correct(l_pred, u_pred, weight, p, a_int, grid, arclength)
            if ok and un[1:-1].min() >= -1e-10 and _distance(uc, lc, un, ln, h) <= h_max:
                accepted = True
                break
            hs *= 0.5
        if not accepted:
            branch.status = "TERMINATED"
            break
        new = BranchPoint(ln, make_profile(ln, un, weight, p, "continuation"),
                          cur.arclength + _distance(uc, lc, un, ln, h))
        branch.points.append(new)
        while pending and ln <= pending[0] < lc:
            t = pending.pop(0)
            w = (lc - t) / (lc - ln)
            guess = (1 - w) * uc + w * un
            landed = solve_at_lambda(t, guess, weight, p, source="continuation")
            if landed is not None:
                branch.landings[t] = landed
        if iters <= 3:
            hs = min(1.5 * hs, h_max)
        elif iters > 8:
            hs = max(0.7 * hs, h_min)
        if R_cap is not None and new.amplitude > 10 * R_cap:
            branch.status = "AMPLITUDE"
            break
        if lam_stop is not None and ln < lam_stop:
            branch.status = "LAMBDA_STOP"
            break
    branch.fold = detect_turning_point(branch)
    return branch


def detect_fold(s, lam):
    """Rightmost sign change of d(lambda)/ds, refined by a quadratic fit.

    Returns (lambda_t, index of the branch point nearest the fold) or None.
    """
    s = np.asarray(s, float)
    lam = np.asarray(lam, float)
    if len(s) < 3:
        raise ValueError("fold detection needs at least three points")
    dl = np.diff(lam) / np.diff(s)
    flips = [k for k in range(len(dl) - 1) if dl[k] * dl[k + 1] < 0]
    if not flips:
        return None
    # rightmost fold: largest lambda among the candidate vertices
    k = max(flips, key=lambda k: lam[k + 1])
    i0 = min(max(k, 0), len(s) - 3)
    c = np.polyfit(s[i0:i0 + 3] - s[i0 + 1], lam[i0:i0 + 3], 2)
    if c[0] == 0:
        return float(lam[k + 1]), k + 1
    s_v = -c[1] / (2 * c[0])
    lam_t = float(np.polyval(c, s_v))
    idx = i0 + int(np.argmin(np.abs(s[i0:i0 + 3] - s[i0 + 1] - s_v)))
    return lam_t, idx


def detect_turning_point(branch: Branch):
    if len(branch.points) < 3:
        return None
    return detect_fold(branch.arclength, branch.lambdas)


def audit(branch: Branch, weight, p):
    """Post-hoc residual of every point against max(1e-9, rounding floor); returns offending indices."""
    bad = []
    for k, pt in enumerate(branch.points):
        u = pt.profile.values
        r = float(np.max(np.abs(fd_residual(pt.lam, u, weight, p))))
        if r > max(RESIDUAL_TOL, residual_floor(u, pt.profile.grid.h)):
            bad.append(k)
    return bad
