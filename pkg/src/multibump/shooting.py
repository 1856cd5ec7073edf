"""Shooting from x = 0: S(s) = u(L; s) with u(0) = 0, u'(0) = s.

Zeros of S are exactly the non-negative solutions of the Dirichlet problem
written with u+ (a trajectory that dips below zero continues as a straight
line and can never come back).  Trajectories that leave [-U_cap, U_cap]
are reported as blow-up with S = +/-inf, which keeps sign changes meaningful
across blow-up windows.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _ivp
from .boxes import classify_sups, ClassifierConfig, r_lambda
from .errors import BandHit, IntegrationFault, MarginViolation, SpecError, Unresolved
from .greens import DEFAULT_N, Grid
from .indexset import IndexSet
from .newton import make_profile
from .solutions import SolutionSet, is_duplicate

log = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
U_CAP = 1e6
MAX_STEPS = 2_000_000
ZERO_TOL = 1e-10
DERIV_REL_STEP = 1e-6
DEGENERATE_SLOPE = 1e-8

_EMPTY = np.zeros(0)


@dataclass(frozen=True)
class ShootingField:
    """Right-hand side u'' = -(theta*(lam*u+ + a*(u+)^p) + mu*w)."""

    lam: float
    weight: object
    p: float
    theta: float = 1.0
    mu: float = 0.0
    bump: object = None  # BumpWeight, only used when mu != 0

    def __post_init__(self):
        if not self.p > 1:
            raise SpecError(f"p must exceed 1, got {self.p}")
        if not 0.0 <= self.theta <= 1.0:
            raise SpecError("theta must lie in [0, 1]")
        if self.mu < 0:
            raise SpecError("mu must be non-negative")
        if self.mu != 0 and self.bump is None:
            raise SpecError("mu != 0 needs a bump weight")

    def args(self):
        kind, par, xs, ys = self.weight.codes()
        if self.bump is not None and self.mu != 0:
            bs = np.asarray(self.bump.sigma, float)
            bt = np.asarray(self.bump.tau, float)
            bg = np.asarray(self.bump.gamma, float)
        else:
            bs = bt = bg = _EMPTY
        fp = np.array([self.lam, self.p, self.theta, self.mu])
        return fp, kind, par, xs, ys, bs, bt, bg

    @property
    def decay_rate(self) -> float:
        """sqrt(-theta*lam): growth rate of the linearised trajectory."""
        return math.sqrt(max(-self.theta * self.lam, 0.0))


@dataclass
class ShootingOutcome:
    s: float
    terminal: float
    blew_up: bool
    per_interval_sup: list
    x_stop: float = float("nan")
    u_min: float = float("nan")
    steps: int = 0
    trajectory: np.ndarray | None = field(default=None, repr=False)


def integrate_ivp(lam, s, weight, p=None, U_cap=U_CAP, X_end=None, x_out=None,
                  field_: ShootingField | None = None, rtol=RTOL, atol=ATOL):
    """Integrate the shooting IVP with slope ``s`` and report S(s).

    Either pass (lam, weight, p) or a prepared ShootingField as ``field_``.
    ``x_out`` (sorted, inside [0, L]) requests dense samples of u.
    """
    if field_ is None:
        field_ = ShootingField(lam, weight, p)
    L = field_.weight.L
    if X_end is not None and abs(X_end - L) > 1e-12 * L:
        raise SpecError("X_end must equal L")
    if U_cap < 1e3:
        raise SpecError("U_cap must be at least 1e3")
    if s < 0:
        raise SpecError("the initial slope must be non-negative")
    return _run(field_, float(s), U_cap, x_out, rtol, atol)


def _run(fld: ShootingField, s, U_cap=U_CAP, x_out=None, rtol=RTOL, atol=ATOL):
    pat = fld.weight.pattern
    fp, kind, par, xs, ys, bs, bt, bg = fld.args()
    xo = _EMPTY if x_out is None else np.asarray(x_out, dtype=float)
    # the linearised problem is homogeneous in s: scale atol so tiny shots keep rtol accuracy
    if 0.0 < s < 1.0:
        atol = atol * s
    status, x, u, v, uout, sups, umin, nsteps, _ = _ivp.integrate(
        0, 0.0, fld.weight.L, 0.0, s, fp, kind, par, xs, ys, bs, bt, bg,
        rtol, atol, U_cap, xo, np.asarray(pat.sigma, float), np.asarray(pat.tau, float),
        0.0, 0.0, MAX_STEPS)
    if status == _ivp.UNDERFLOW or status == _ivp.MAXSTEPS:
        raise IntegrationFault(f"integrator stalled at x={x:.6g} for s={s:.6g} (status {status})")
    blew = status in (_ivp.BLOWUP_POS, _ivp.BLOWUP_NEG)
    if status == _ivp.BLOWUP_POS:
        terminal = math.inf
    elif status == _ivp.BLOWUP_NEG:
        terminal = -math.inf
    else:
        terminal = u
    return ShootingOutcome(s, terminal, blew, list(sups), x, umin, nsteps,
                           None if x_out is None else uout)


def shooting_map(fld: ShootingField, s, U_cap=U_CAP) -> float:
    return _run(fld, s, U_cap).terminal


def default_s_max(fld: ShootingField) -> float:
    k = fld.decay_rate
    r = _r_for(fld)
    return 10.0 * r * math.cosh(k * fld.weight.L)


def default_s_min(fld: ShootingField) -> float:
    # linear regime: S ~ s*sinh(kL)/k > 0 well below any solution slope
    k = fld.decay_rate
    r = _r_for(fld)
    L = fld.weight.L
    gain = math.sinh(k * L) / k if k > 0 else L
    return 1e-3 * r / gain


def _r_for(fld: ShootingField) -> float:
    if fld.lam < 0:
        return r_lambda(fld.lam, fld.weight.sup_norm, fld.p)
    return 1.0


def scan_grid(s_lo, s_hi, per_decade=200, uniform=400):
    """Geometric points (``per_decade`` per decade) merged with a uniform grid."""
    decades = max(math.log10(s_hi / s_lo), 1e-3)
    geo = np.geomspace(s_lo, s_hi, int(math.ceil(decades * per_decade)) + 1)
    uni = np.linspace(0.0, s_hi, uniform + 1)[1:]
    return np.unique(np.concatenate([geo, uni[uni >= s_lo]]))


@dataclass
class ScanTable:
    s: np.ndarray
    S: np.ndarray
    blew_up: np.ndarray
    sups: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        n = self.sups.shape[1] if self.sups.ndim == 2 else 0
        wr.writerow(["s", "S", "blew_up"] + [f"sup_I{i + 1}" for i in range(n)])
        for k in range(len(self.s)):
            wr.writerow([f"{self.s[k]:.17g}", f"{self.S[k]:.17g}", int(self.blew_up[k])]
                        + [f"{v:.17g}" for v in self.sups[k]])
        return buf.getvalue()


def scan(fld: ShootingField, svals, U_cap=U_CAP) -> ScanTable:
    outs = [_run(fld, float(s), U_cap) for s in svals]
    return ScanTable(
        np.asarray(svals, float),
        np.array([o.terminal for o in outs]),
        np.array([o.blew_up for o in outs]),
        np.array([o.per_interval_sup for o in outs]).reshape(len(outs), -1),
    )


def refine_scan(fld: ShootingField, table: ScanTable, U_cap=U_CAP, rel=0.1,
                min_rel_width=1e-9, max_evals=50_000) -> ScanTable:
    """Bisect scan intervals where S is far from linear.

    Neighbouring zeros can be far closer than the base grid spacing (their
    distance shrinks exponentially as lambda decreases), leaving both ends of
    a bracket with the same sign.  An interval is split while its midpoint
    value departs from the chord by more than ``rel`` times the end values,
    down to a width of ``min_rel_width * s``.  Intervals touching a blow-up
    window are always split, which also pins the window edges; intervals
    inside a window are left alone.
    """
    s = list(table.s)
    S = list(table.S)
    blew = list(table.blew_up)
    sups = [list(r) for r in table.sups]
    stack = [(s[k], s[k + 1], S[k], S[k + 1]) for k in range(len(s) - 1)]
    evals = 0
    while stack:
        lo, hi, S_lo, S_hi = stack.pop()
        finite = math.isfinite(S_lo) + math.isfinite(S_hi)
        if finite == 0 or hi - lo <= min_rel_width * hi:
            continue
        if evals >= max_evals:
            raise Unresolved(f"scan refinement exceeded {max_evals} evaluations")
        mid = 0.5 * (lo + hi)
        out = _run(fld, mid, U_cap)
        evals += 1
        s.append(mid)
        S.append(out.terminal)
        blew.append(out.blew_up)
        sups.append(out.per_interval_sup)
        # next to a blow-up window the chord is meaningless: keep splitting
        curved = finite == 1 or abs(out.terminal - 0.5 * (S_lo + S_hi)) > rel * 0.5 * (abs(S_lo) + abs(S_hi)) + ZERO_TOL
        if curved:
            stack.append((lo, mid, S_lo, out.terminal))
            stack.append((mid, hi, out.terminal, S_hi))
    order = np.argsort(s, kind="stable")
    return ScanTable(np.asarray(s)[order], np.asarray(S)[order], np.asarray(blew)[order],
                     np.asarray(sups, float).reshape(len(s), -1)[order])


def _sign(v):
    return 0 if v == 0 else (1 if v > 0 else -1)


def _bisect(fld, lo, hi, S_lo, S_hi, U_cap):
    """Sign bisection; returns (s, S, is_zero)."""
    for _ in range(200):
        if hi - lo <= 4 * np.spacing(hi):
            break
        mid = 0.5 * (lo + hi)
        S_mid = shooting_map(fld, mid, U_cap)
        if abs(S_mid) <= ZERO_TOL:
            return mid, S_mid, True
        if _sign(S_mid) == _sign(S_lo):
            lo, S_lo = mid, S_mid
        else:
            hi, S_hi = mid, S_mid
    s, S = (lo, S_lo) if abs(S_lo) <= abs(S_hi) else (hi, S_hi)
    # collapsed bracket: a genuine (ill-conditioned) zero has both sides finite and small
    finite = math.isfinite(S_lo) and math.isfinite(S_hi)
    return s, S, finite and abs(S) <= 1e-6 * max(1.0, _r_for(fld))


def _sub_brackets(fld, lo, hi, S_lo, S_hi, U_cap, pieces=16):
    pts = np.linspace(lo, hi, pieces + 1)
    vals = [S_lo] + [shooting_map(fld, float(x), U_cap) for x in pts[1:-1]] + [S_hi]
    return [(pts[k], pts[k + 1], vals[k], vals[k + 1])
            for k in range(pieces) if _sign(vals[k]) * _sign(vals[k + 1]) < 0]


def find_zeros(fld: ShootingField, table: ScanTable, U_cap=U_CAP):
    """Refine every sign change of the scan into a zero of S.

    Each scan bracket is subdivided 16-fold (round 1) and every resulting
    sub-bracket 16-fold again (round 2).  If round 2 still splits a round-1
    bracket into several sign changes the zeros are closer than the refined
    resolution and Unresolved is raised.  Sign changes at a blow-up
    discontinuity collapse with |S| large and are dropped.
    """
    zeros = []
    s, S = table.s, table.S
    for k in range(len(s) - 1):
        if _sign(S[k]) * _sign(S[k + 1]) >= 0:
            continue
        round1 = _sub_brackets(fld, s[k], s[k + 1], S[k], S[k + 1], U_cap) or [
            (s[k], s[k + 1], S[k], S[k + 1])]
        brackets = []
        for br in round1:
            round2 = _sub_brackets(fld, *br, U_cap)
            if len(round2) > 1:
                raise Unresolved(f"several zeros of S inside [{br[0]:.9g}, {br[1]:.9g}]")
            brackets.extend(round2 or [br])
        for br in brackets:
            z, Sz, ok = _bisect(fld, *br, U_cap)
            if ok:
                zeros.append((z, Sz))
    return zeros


def slope_index(fld: ShootingField, s_star, U_cap=U_CAP):
    """Central-difference S'(s*) with step 1e-6*s*; returns (derivative, index or 0 if degenerate)."""
    ds = DERIV_REL_STEP * s_star
    Sp = (shooting_map(fld, s_star + ds, U_cap) - shooting_map(fld, s_star - ds, U_cap)) / (2 * ds)
    if not math.isfinite(Sp) or abs(Sp) < DEGENERATE_SLOPE:
        return Sp, 0
    return Sp, 1 if Sp > 0 else -1


def trivial_index(fld: ShootingField) -> int:
    """Index of u = 0: sign of S'(0) (forward difference, linear regime)."""
    ds = 1e-3 * default_s_min(fld)
    return 1 if shooting_map(fld, ds) > 0 else -1


def profile_from_slope(fld: ShootingField, s_star, grid: Grid, U_cap=U_CAP):
    out = _run(fld, s_star, U_cap, x_out=grid.x)
    vals = out.trajectory.copy()
    if np.any(np.isnan(vals)):
        raise IntegrationFault("trajectory did not reach every grid node")
    prof = make_profile(fld.lam, vals, fld.weight, fld.p, source="shooting")
    prof.meta["S"] = out.terminal
    prof.meta["s"] = s_star
    # the terminal node is pinned to zero; nonnegativity is judged on the rest
    prof.meta["u_min"] = float(np.min(vals[:-1]))
    return prof


def enumerate_field(fld: ShootingField, s_max=None, N=DEFAULT_N, per_decade=200, uniform=400,
                    U_cap=U_CAP, dedup_tol=1e-3, classifier: ClassifierConfig | None = None,
                    max_doublings=12, nonneg_tol=1e-8):
    """All zeros of S on (0, s_max] for an arbitrary shooting field.

    With ``s_max`` None the cap starts at 10 r cosh(kL) and doubles until one
    full doubling finds no new zero.
    """
    grid = Grid(N, fld.weight.L)
    s_lo = default_s_min(fld)
    adaptive = s_max is None
    s_hi = default_s_max(fld) if adaptive else float(s_max)
    svals = scan_grid(s_lo, s_hi, per_decade, uniform)
    if fld.mu > 0:
        # with a forcing term s = 0 is an ordinary shot, not the trivial solution
        svals = np.r_[0.0, svals]
    table = refine_scan(fld, scan(fld, svals, U_cap), U_cap)
    zeros = find_zeros(fld, table, U_cap)
    doublings = 0
    while adaptive and doublings < max_doublings:
        ext = np.geomspace(s_hi, 2 * s_hi, max(int(per_decade * math.log10(2)), 8) + 1)
        ext_table = refine_scan(fld, scan(fld, ext, U_cap), U_cap)
        new = find_zeros(fld, ext_table, U_cap)
        table = ScanTable(np.r_[table.s, ext_table.s[1:]], np.r_[table.S, ext_table.S[1:]],
                          np.r_[table.blew_up, ext_table.blew_up[1:]],
                          np.vstack([table.sups, ext_table.sups[1:]]))
        s_hi *= 2
        doublings += 1
        if not new:
            break
        zeros.extend(new)

    out = SolutionSet(fld.lam)
    out.meta.update(s_min=s_lo, s_max=s_hi, doublings=doublings, scan_points=len(table.s))
    out.meta["scan"] = table
    out.meta["degenerate"] = []
    out.trivial_index = trivial_index(fld)
    kept = []
    for z, Sz in sorted(zeros):
        prof = profile_from_slope(fld, z, grid, U_cap)
        if prof.meta["u_min"] < -nonneg_tol or prof.sup <= 0:
            continue
        if is_duplicate(prof.values, kept, dedup_tol):
            continue
        kept.append(prof.values)
        Sp, idx = slope_index(fld, z, U_cap)
        prof.meta["S_prime"] = Sp
        if idx == 0:
            log.warning("degenerate zero of S at s=%.6g (S'=%.3g); excluded from degree sums", z, Sp)
            out.meta["degenerate"].append(z)
        box = None
        if classifier is not None:
            try:
                box = classify_sups(prof.interval_sups(fld.weight.pattern), classifier)
            except BandHit:
                box = None
        out.add(prof, z, idx, box)
    return out


def enumerate_solutions(lam, weight, p, s_max=None, N=DEFAULT_N, classifier=None, **kw):
    """Every nontrivial non-negative solution the shooting scan can resolve at ``lam``."""
    if not lam < 0:
        raise SpecError("enumerate_solutions needs lambda < 0")
    classifier = classifier if classifier is not None else ClassifierConfig()
    return enumerate_field(ShootingField(lam, weight, p), s_max=s_max, N=N,
                           classifier=classifier, **kw)


def box_degree(solset: SolutionSet, index_set: IndexSet, rho, orientation, pattern) -> int:
    """Signed count orientation * sum of indices over the solutions in the box of ``index_set``.

    The trivial solution (index ``solset.trivial_index``) belongs to the box
    of the empty set.  Degenerate zeros (index 0) contribute nothing.
    """
    cfg = ClassifierConfig(rho=rho, margin=0.0)
    total = 0
    for prof in solset.profiles:
        for v in prof.interval_sups(pattern):
            if abs(v - rho) <= 1e-6:
                raise MarginViolation(f"a solution has interval sup {v:.9g} within 1e-6 of rho={rho}")
    for prof, idx in zip(solset.profiles, solset.indices):
        if classify_sups(prof.interval_sups(pattern), cfg) == index_set:
            total += idx
    if len(index_set) == 0:
        total += solset.trivial_index
    return orientation * total


def calibrate_orientation(solset: SolutionSet, rho, pattern) -> int:
    """Global sign that makes the box of the empty set carry degree 1."""
    raw = box_degree(solset, IndexSet(()), rho, 1, pattern)
    if raw == 0:
        raise MarginViolation("the empty box has zero signed count; orientation is undefined")
    return 1 if raw > 0 else -1


# --- Liouville-type escape check -------------------------------------------------

@dataclass(frozen=True)
class LiouvilleProblem:
    """-v'' = alpha*(x+kappa)^gamma*v^p + beta(x) with v(0) = 1, 0 <= v <= 1.

    ``beta`` is a non-negative constant or a callable on [-kappa, inf).
    """

    alpha: float
    gamma: float = 0.0
    kappa: float = 0.0
    beta: float | Callable = 0.0

    def __post_init__(self):
        if not self.alpha > 0 or self.gamma < 0 or self.kappa < 0:
            raise SpecError("need alpha > 0, gamma >= 0, kappa >= 0")
        if not callable(self.beta) and self.beta < 0:
            raise SpecError("beta must be non-negative")


@dataclass
class LiouvilleVerdict:
    slope: float
    verdict: str  # "EXITS" or "NO_EXIT"
    x_exit: float
    v1: float
    dv1: float
    bound: float
    bound_ok: bool


def liouville_check(prob: LiouvilleProblem, p, slope_grid, X_max, tol=1e-6):
    """Integrate from v(0) = 1, v'(0) = s and report when v leaves [0, 1].

    When v survives past x = 1 with v'(1) < 0, the exit point is compared
    with 1 + v(1)/(-v'(1)).
    """
    if X_max < 10 * (1 + prob.kappa):
        raise SpecError("X_max must be at least 10*(1 + kappa)")
    out = []
    for s in slope_grid:
        if s > 0:
            raise SpecError("Liouville slopes must be <= 0")
        out.append(_liouville_one(prob, p, float(s), float(X_max), tol))
    return out


def _liouville_one(prob, p, s, X_max, tol):
    if callable(prob.beta):
        x_exit, v1, dv1 = _liouville_scipy(prob, p, s, X_max)
    else:
        fp = np.array([prob.alpha, prob.gamma, prob.kappa, float(prob.beta), p])
        one = np.array([1.0])
        status, x, v, dv, uout, _, _, _, x_exit = _ivp.integrate(
            1, 0.0, X_max, 1.0, s, fp, 0, np.array([1.0, 1.0]), _EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY,
            RTOL, ATOL, 1e300, one, _EMPTY, _EMPTY, 0.0, 1.0 + 1e-9, MAX_STEPS)
        if status in (_ivp.UNDERFLOW, _ivp.MAXSTEPS):
            raise IntegrationFault(f"Liouville integration stalled at x={x:.6g}")
        if status != _ivp.EXITED:
            x_exit = math.nan
        v1 = float(uout[0])
        dv1 = _slope_at_one(prob, p, s) if math.isfinite(v1) else math.nan
    exits = math.isfinite(x_exit)
    if math.isfinite(v1) and dv1 < 0:
        bound = 1.0 + v1 / (-dv1)
        bound_ok = (not exits) or x_exit <= bound + tol
    else:
        bound = math.nan
        bound_ok = (not exits) or x_exit <= 1.0 + tol
    return LiouvilleVerdict(s, "EXITS" if exits else "NO_EXIT", x_exit, v1, dv1, bound, bound_ok)


def _slope_at_one(prob, p, s):
    fp = np.array([prob.alpha, prob.gamma, prob.kappa, float(prob.beta), p])
    status, x, v, dv, *_ = _ivp.integrate(
        1, 0.0, 1.0, 1.0, s, fp, 0, np.array([1.0, 1.0]), _EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY,
        RTOL, ATOL, 1e300, _EMPTY, _EMPTY, _EMPTY, 0.0, 0.0, MAX_STEPS)
    return float(dv)


def _liouville_scipy(prob, p, s, X_max):
    from scipy.integrate import solve_ivp

    def rhs(x, y):
        vp = max(y[0], 0.0)
        return [y[1], -(prob.alpha * (x + prob.kappa) ** prob.gamma * vp ** p + prob.beta(x))]

    def leave_low(x, y):
        return y[0]
    leave_low.terminal = True

    def leave_high(x, y):
        return y[0] - (1.0 + 1e-9)
    leave_high.terminal = True

    sol = solve_ivp(rhs, (0.0, X_max), [1.0, s], method="DOP853", rtol=RTOL, atol=ATOL,
                    events=(leave_low, leave_high), dense_output=True)
    hits = [t for ev in sol.t_events for t in ev]
    x_exit = min(hits) if hits else math.nan
    if (math.isnan(x_exit) or x_exit > 1.0):
        y1 = sol.sol(1.0)
        return x_exit, float(y1[0]), float(y1[1])
    return x_exit, math.nan, math.nan
