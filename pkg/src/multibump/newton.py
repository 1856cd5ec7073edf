"""Damped Newton on the three-point discretisation of -u'' = lam*u+ + a*(u+)^p.

Working with the positive part means every limit is automatically a
non-negative solution; the kink of u+ is linearised with the subgradient 0,
so the Jacobian at u = 0 is the plain (positive definite) discrete Laplacian
shifted by -lam.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .boxes import ClassifierConfig, classify, r_lambda
from .errors import BandHit, SuiteFailure
from .greens import DEFAULT_N, Grid, GridProfile
from .indexset import IndexSet, all_index_sets
from .solutions import SolutionSet, is_duplicate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 100
    residual_tol: float = 1e-10
    backtrack: float = 0.5
    min_step: float = 2.0 ** -20
    dedup_tol: float = 1e-3
    # stagnation test: a full Newton step this small (relative to ||u||)
    # means the residual has hit its rounding floor
    step_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if min(self.residual_tol, self.min_step, self.dedup_tol) <= 0 or not 0 < self.backtrack < 1:
            raise ValueError("tolerances must be positive and the backtracking factor in (0, 1)")


def _interior_terms(lam, u, a_int, p):
    ui = u[1:-1]
    up = np.maximum(ui, 0.0)
    return lam * up + a_int * up ** p


def fd_residual(lam, u, weight, p, a_int=None):
    """Interior residual F_j = (-u_{j-1} + 2u_j - u_{j+1})/h^2 - lam*u_j+ - a_j*(u_j+)^p."""
    u = np.asarray(u, dtype=float)
    grid = Grid.for_values(u, weight.L)
    if a_int is None:
        a_int = weight(grid.x[1:-1])
    lap = (-u[:-2] + 2.0 * u[1:-1] - u[2:]) / grid.h ** 2
    return lap - _interior_terms(lam, u, a_int, p)


def _jac_bands(lam, u, a_int, p, h):
    ui = u[1:-1]
    active = ui > 0
    up = np.where(active, ui, 0.0)
    diag = 2.0 / h ** 2 - np.where(active, lam + p * a_int * up ** (p - 1.0), 0.0)
    N = len(ui)
    ab = np.empty((3, N))
    ab[0, :] = -1.0 / h ** 2
    ab[1, :] = diag
    ab[2, :] = -1.0 / h ** 2
    ab[0, 0] = 0.0
    ab[2, -1] = 0.0
    return ab


def fd_jacobian(lam, u, weight, p):
    """Tridiagonal Jacobian of fd_residual (sparse CSR, interior unknowns)."""
    u = np.asarray(u, dtype=float)
    grid = Grid.for_values(u, weight.L)
    ab = _jac_bands(lam, u, weight(grid.x[1:-1]), p, grid.h)
    return sp.diags([ab[2, :-1], ab[1], ab[0, 1:]], [-1, 0, 1], format="csr")


def jacobian_sign(lam, u, weight, p) -> int:
    """sign det J, via the three-term continuant of h^2 J (a discrete shooting sequence)."""
    u = np.asarray(u, dtype=float)
    grid = Grid.for_values(u, weight.L)
    ab = _jac_bands(lam, u, weight(grid.x[1:-1]), p, grid.h)
    d = ab[1] * grid.h ** 2
    prev, cur = 1.0, d[0]
    for k in range(1, len(d)):
        prev, cur = cur, d[k] * cur - prev
        scale = max(abs(prev), abs(cur))
        if scale > 1e100:
            prev, cur = prev / scale, cur / scale
    return int(np.sign(cur))


@dataclass
class NewtonResult:
    values: np.ndarray
    converged: bool
    iterations: int
    residual: float
    history: list


def newton_solve(lam, u0, weight, p, cfg: NewtonConfig = NewtonConfig()):
    """Damped Newton with halving line search on the max-norm of the residual."""
    u = np.array(u0, dtype=float)
    u[0] = u[-1] = 0.0
    grid = Grid.for_values(u, weight.L)
    a_int = weight(grid.x[1:-1])
    F = fd_residual(lam, u, weight, p, a_int)
    res = float(np.max(np.abs(F)))
    history = [res]
    for it in range(1, cfg.max_iters + 1):
        if res <= cfg.residual_tol:
            return NewtonResult(u, True, it - 1, res, history)
        ab = _jac_bands(lam, u, a_int, p, grid.h)
        try:
            delta = solve_banded((1, 1), ab, -F)
        except (np.linalg.LinAlgError, ValueError):
            return NewtonResult(u, False, it, res, history)
        if not np.all(np.isfinite(delta)):
            return NewtonResult(u, False, it, res, history)
        t = 1.0
        while True:
            trial = u.copy()
            trial[1:-1] += t * delta
            Ft = fd_residual(lam, trial, weight, p, a_int)
            rt = float(np.max(np.abs(Ft)))
            if np.isfinite(rt) and rt < res:
                break
            t *= cfg.backtrack
            if t < cfg.min_step:
                # no decrease possible: accept only if the step was already negligible
                small = np.max(np.abs(delta)) <= cfg.step_tol * max(1.0, np.max(np.abs(u)))
                return NewtonResult(u, bool(small), it, res, history)
        u, F, res = trial, Ft, rt
        history.append(res)
        if t == 1.0 and np.max(np.abs(delta)) <= cfg.step_tol * max(1.0, np.max(np.abs(u))):
            return NewtonResult(u, True, it, res, history)
    return NewtonResult(u, res <= cfg.residual_tol, cfg.max_iters, res, history)


def seed_profile(index_set: IndexSet, weight, lam, amplitude, grid: Grid):
    """Sum of sine bumps of height ``amplitude`` on the selected positivity intervals."""
    if len(index_set) == 0:
        raise ValueError("seed_profile needs a non-empty index set")
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    index_set.check_range(weight.n)
    x = grid.x
    out = np.zeros_like(x)
    for i in index_set:
        s, t = weight.pattern.sigma[i - 1], weight.pattern.tau[i - 1]
        mask = (x > s) & (x < t)
        out[mask] += amplitude * np.sin(np.pi * (x[mask] - s) / (t - s))
    return out


def default_amplitude(lam, weight, p):
    return 2.0 * r_lambda(lam, weight.sup_norm, p)


def make_profile(lam, values, weight, p, source="newton"):
    grid = Grid.for_values(values, weight.L)
    prof = GridProfile(grid, values, lam, source=source)
    prof.residual_norm = float(np.max(np.abs(fd_residual(lam, prof.values, weight, p))))
    return prof


AMPLITUDE_LADDER = (1.0, 0.75, 0.5, 0.25)


def richardson(lam, values, weight, p, cfg: NewtonConfig = NewtonConfig()):
    """Extrapolate a converged grid solution with its counterpart on the 2N+1 grid.

    The three-point scheme is second order, so (4 u_fine - u_coarse)/3 on
    the coarse nodes removes the leading h^2 term.  Returns None when the
    refined solve does not converge.
    """
    coarse = Grid.for_values(values, weight.L)
    fine = coarse.refine()
    res = newton_solve(lam, np.interp(fine.x, coarse.x, values), weight, p, cfg)
    if not res.converged:
        return None
    return (4.0 * res.values[::2] - values) / 3.0


def solve_all(lam, weight, p, cfg: NewtonConfig = NewtonConfig(), N: int = DEFAULT_N,
              classifier: ClassifierConfig | None = None, nonneg_tol: float = 1e-8,
              ladder=AMPLITUDE_LADDER, extrapolate: bool = False):
    """Run damped Newton from every bump seed and keep the distinct solutions.

    Seeds are tried in (|I|, lexicographic I) order.  For each index set
    the amplitude walks down ``ladder`` (fractions of A = 2 r_lambda) until
    Newton lands on a nontrivial limit.  The index of each kept solution is
    sign det J.  With ``extrapolate`` the kept profiles are replaced by their
    Richardson extrapolation (see ``richardson``); indices and boxes still
    come from the grid solution.
    """
    if not lam < 0:
        raise ValueError("solve_all needs lambda < 0")
    grid = Grid(N, weight.L)
    classifier = classifier or ClassifierConfig()
    A = default_amplitude(lam, weight, p)
    out = SolutionSet(lam, trivial_index=1)
    failures = []
    kept = []
    for iset in all_index_sets(weight.n, include_empty=False):
        for frac in ladder:
            amp = frac * A
            seed = seed_profile(iset, weight, lam, amp, grid)
            res = newton_solve(lam, seed, weight, p, cfg)
            if not res.converged:
                failures.append((iset, amp, res.residual))
                continue
            u = res.values
            if u.min() < -nonneg_tol or u.max() <= 1e-6:
                continue
            if not is_duplicate(u, kept, cfg.dedup_tol):
                kept.append(u)
                vals = u
                if extrapolate:
                    ext = richardson(lam, u, weight, p, cfg)
                    if ext is None:
                        log.info("refined solve failed for seed %s; keeping grid values", iset.label())
                    else:
                        vals = ext
                prof = make_profile(lam, vals, weight, p)
                prof.meta["extrapolated"] = vals is not u
                prof.meta["seed"] = iset.label()
                prof.meta["amplitude"] = amp
                try:
                    box = classify(make_profile(lam, u, weight, p), weight.pattern, classifier)
                except BandHit:
                    box = None
                out.add(prof, prof.slopes()[0], jacobian_sign(lam, u, weight, p), box)
            break
    out.meta["failures"] = [(f[0].label(), f[1], f[2]) for f in failures]
    if failures:
        log.info("%d Newton seeds did not converge at lambda=%g", len(failures), lam)
    if not out.profiles and lam < -10 * (np.pi / weight.L) ** 2:
        raise SuiteFailure(f"no nontrivial solution found at lambda={lam}")
    return out


def solve_at_lambda(lam, u0, weight, p, cfg: NewtonConfig = NewtonConfig(), source="newton"):
    res = newton_solve(lam, u0, weight, p, cfg)
    if not res.converged:
        return None
    return make_profile(lam, res.values, weight, p, source=source)


def manifest(solset: SolutionSet, weight) -> list[dict]:
    """Per-solution summary: index set, interval sups, residual, end slopes."""
    rows = []
    for prof, box, idx in zip(solset.profiles, solset.boxes, solset.indices):
        left, right = prof.slopes()
        rows.append({
            "index_set": None if box is None else list(box.members),
            "sup_norms": prof.interval_sups(weight.pattern),
            "residual": prof.residual_norm,
            "slope_0": left,
            "slope_L": right,
            "index": idx,
        })
    return rows
