"""Verification suite for the a priori bounds and the box degree count.

Each check stores the raw measurements it was decided on; the verdict is a
pure function of that raw data (``VerificationReport.recheck``), so a
report read back from JSON can be re-judged without recomputing anything.

Thresholds such as lambda-hat(rho), lambda* and lambda_c are empirical:
the largest grid value of lambda at which a property holds there and at
every lower grid value.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .boxes import ClassifierConfig, r_lambda
from .errors import SpecError
from .greens import DEFAULT_N, Grid, build_bump_weight, trapezoid
from .indexset import IndexSet, all_index_sets
from .newton import NewtonConfig, solve_all
from .shooting import ShootingField, box_degree, calibrate_orientation, enumerate_field

log = logging.getLogger(__name__)

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


def mu_star(lam, R_cap, weight, w, p, L=None):
    """Forcing level above which the bump-forced problem has no non-negative solution below R_cap."""
    if not lam < 0:
        raise SpecError("mu_star needs lambda < 0")
    L = weight.L if L is None else L
    grid = w.grid
    phi = np.sin(np.pi * grid.x / L)
    integral = trapezoid(w.samples * phi, grid)
    if integral < 1e-14:
        raise SpecError(f"degenerate bump weight: integral of w*phi is {integral:.3g}")
    sigma1 = (np.pi / L) ** 2
    return ((sigma1 - lam) + weight.sup_norm * R_cap ** (p - 1)) * L * R_cap / integral


def _descending(lambda_grid):
    lams = [float(v) for v in lambda_grid]
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise SpecError("lambda grids must be strictly decreasing")
    return lams


def threshold(lams, ok):
    """Largest grid lambda at which ``ok`` holds there and at every lower grid value."""
    best = None
    for lam, good in zip(reversed(lams), reversed(ok)):
        if not good:
            break
        best = lam
    return best


# --- verdict rules (raw data -> status, margins, thresholds) ----------------------

def _rule_22(raw):
    r = raw["r_lambda"]
    sups = [v for vals in raw["theta"].values() for v in vals]
    margin = min((v - r for v in sups), default=math.inf)
    zero_ok = all(len(vals) == 0 for th, vals in raw["theta"].items() if float(th) == 0.0)
    status = PASS if margin > 0 and zero_ok else FAIL
    return status, {"min_norm_margin": margin, "solutions": len(sups)}, {}


def _rule_23(raw):
    n = len(raw["sups"])
    return (PASS if n == 0 else FAIL), {"solutions": n, "mu_over_mu_star": raw["mu"] / raw["mu_star"]}, {}


def _rule_24(raw):
    lams, maxima, delta = raw["lambdas"], raw["maxima"], raw["delta"]
    thr = threshold(lams, [m < delta for m in maxima])
    pos = [(lam, m) for lam, m in zip(lams, maxima) if m > 0]
    slope = math.nan
    if len(pos) >= 2:
        slope = float(np.polyfit(np.log([-lam for lam, _ in pos]), np.log([m for _, m in pos]), 1)[0])
    ratio = maxima[0] / maxima[-1] if maxima and maxima[-1] > 0 else math.inf
    status = PASS if thr is not None else INCONCLUSIVE
    return status, {"trend_slope": slope, "decay_ratio": ratio}, {"lambda_tilde": thr}


def _band_flags(raw):
    rho, margin = raw["rho"], raw["margin"]
    lo, hi = rho * (1 - margin), rho * (1 + margin)
    return [not any(lo <= v <= hi for v in sups) for sups in raw["sups"]]


def _rule_25(raw):
    lams = raw["lambdas"]
    flags = _band_flags(raw)
    thr = threshold(lams, flags)
    # below the threshold, interval sups should split into small and large clusters
    split = [all(v < raw["rho"] / 2 or v > r for v in sups) for sups, r in zip(raw["sups"], raw["r_lambda"])]
    cluster_ok = True
    gap = math.inf
    for lam, sups, ok in zip(lams, raw["sups"], split):
        if thr is None or lam > thr:
            continue
        gap = min([gap] + [abs(v - raw["rho"]) for v in sups])
        cluster_ok = cluster_ok and ok
    status = PASS if thr is not None else INCONCLUSIVE
    return (status, {"min_distance_to_rho": gap, "clustered": cluster_ok},
            {"lambda_hat": thr, "lambda_cluster": threshold(lams, split)})


def _rule_degree(raw):
    lam_deg = raw["lambda_degrees"]
    omega = raw["omega_degrees"]
    ok = all(d == (-1) ** len(IndexSet.parse(k)) for k, d in lam_deg.items())
    ok = ok and all(d == (1 if k == "{}" else 0) for k, d in omega.items())
    return (PASS if ok else FAIL), {"orientation": raw["orientation"]}, {}


RULES = {"2.2": _rule_22, "2.3": _rule_23, "2.4": _rule_24, "2.5": _rule_25, "3.3": _rule_degree}


@dataclass
class VerificationReport:
    lemma: str
    config: dict
    status: str
    margins: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @classmethod
    def judge(cls, lemma, config, raw) -> "VerificationReport":
        status, margins, thresholds = RULES[lemma](raw)
        return cls(lemma, config, status, margins, thresholds, raw)

    def recheck(self) -> str:
        return RULES[self.lemma](self.raw)[0]

    def to_dict(self) -> dict:
        return {"lemma": self.lemma, "config": self.config, "status": self.status,
                "margins": self.margins, "thresholds": self.thresholds, "raw": self.raw}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True)

    @classmethod
    def from_dict(cls, obj) -> "VerificationReport":
        return cls(obj["lemma"], obj["config"], obj["status"], obj.get("margins", {}),
                   obj.get("thresholds", {}), obj.get("raw", {}))

    @classmethod
    def from_json(cls, text) -> "VerificationReport":
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    # infinities are not valid JSON; store them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def summary_csv(reports) -> str:
    """One row per report: lambda (or lambda range), lemma, pass flag, headline margin."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["lambda", "lemma", "pass", "margin"])
    for rep in reports:
        lam = rep.config.get("lambda", rep.config.get("lambda_grid"))
        if isinstance(lam, list):
            lam = f"{lam[0]:.17g}..{lam[-1]:.17g}"
        elif lam is not None:
            lam = f"{lam:.17g}"
        key = next(iter(rep.margins), None)
        val = rep.margins.get(key) if key else ""
        wr.writerow([lam, rep.lemma, rep.status, f"{key}={val}" if key else ""])
    return buf.getvalue()


# --- shared enumeration cache --------------------------------------------------

class Enumerator:
    """Memoised shooting enumeration for one weight and exponent."""

    def __init__(self, weight, p, N=DEFAULT_N, classifier: ClassifierConfig | None = None):
        self.weight, self.p, self.N = weight, p, N
        self.classifier = classifier or ClassifierConfig()
        self._cache = {}

    def field(self, lam, theta=1.0) -> ShootingField:
        return ShootingField(lam, self.weight, self.p, theta=theta)

    def at(self, lam, theta=1.0):
        key = (float(lam), float(theta))
        if key not in self._cache:
            self._cache[key] = enumerate_field(self.field(lam, theta), N=self.N,
                                               classifier=self.classifier)
        return self._cache[key]


def estimate_R_cap(solsets, factor=1.5) -> float:
    """Empirical a priori radius: ``factor`` times the largest sup observed."""
    sups = [pr.sup for ss in solsets for pr in ss.profiles]
    if not sups:
        raise SpecError("no solutions to estimate R_cap from")
    return factor * max(sups)


# --- the checks ----------------------------------------------------------------

def verify_lemma22(lam, theta_grid, weight, p, enum: Enumerator | None = None) -> VerificationReport:
    """Every nontrivial solution of the theta-scaled problem has sup above r_lambda."""
    enum = enum or Enumerator(weight, p)
    if not lam < 0:
        raise SpecError("verify_lemma22 needs lambda < 0")
    raw = {"r_lambda": r_lambda(lam, weight.sup_norm, p), "theta": {}}
    for th in theta_grid:
        th = float(th)
        if not 0.0 <= th <= 1.0:
            raise SpecError("theta must lie in [0, 1]")
        raw["theta"][repr(th)] = [pr.sup for pr in enum.at(lam, th).profiles]
    return VerificationReport.judge("2.2", {"lambda": lam, "p": p, "theta": list(map(float, theta_grid))}, raw)


def verify_lemma23(lam, index_set: IndexSet, weight, p, R_cap, factor=1.05, N=DEFAULT_N):
    """With mu = factor*mu*, the bump-forced problem has no non-negative solution."""
    grid = Grid(N, weight.L)
    bump = build_bump_weight(index_set, weight, grid)
    ms = mu_star(lam, R_cap, weight, bump, p)
    fld = ShootingField(lam, weight, p, mu=factor * ms, bump=bump)
    found = enumerate_field(fld, N=N)
    raw = {"mu_star": ms, "mu": factor * ms, "R_cap": R_cap,
           "sups": [pr.sup for pr in found.profiles], "s_max": found.meta["s_max"]}
    cfg = {"lambda": lam, "p": p, "index_set": index_set.label(), "factor": factor}
    return VerificationReport.judge("2.3", cfg, raw)


def default_K(weight, i=1):
    """Middle 20% of the i-th interior negativity interval."""
    s, t = weight.pattern.interior_negative_intervals()[i - 1]
    mid, half = 0.5 * (s + t), 0.1 * (t - s)
    return (mid - half, mid + half)


def verify_lemma24(lambda_grid, weight, p, K=None, delta=0.1, enum: Enumerator | None = None):
    """Solutions decay on compacts inside the negativity intervals as lambda decreases."""
    enum = enum or Enumerator(weight, p)
    lams = _descending(lambda_grid)
    K = default_K(weight) if K is None else tuple(map(float, K))
    inside = [(s, t) for s, t in weight.pattern.negative_intervals()
              if K[0] >= s + 0.05 * (t - s) and K[1] <= t - 0.05 * (t - s)]
    if not inside:
        raise SpecError(f"K = {K} is not strictly inside a negativity interval")
    maxima, counts = [], []
    for lam in lams:
        sols = enum.at(lam)
        maxima.append(max((pr.sup_on(*K) for pr in sols.profiles), default=0.0))
        counts.append(len(sols))
    raw = {"lambdas": lams, "maxima": maxima, "counts": counts, "delta": delta, "K": list(K)}
    return VerificationReport.judge("2.4", {"lambda_grid": lams, "p": p, "K": list(K), "delta": delta}, raw)


def verify_lemma25(rho, lambda_grid, weight, p, margin=1e-3, enum: Enumerator | None = None):
    """Below some lambda no interval sup comes near rho."""
    if not rho > 0:
        raise SpecError("rho must be positive")
    enum = enum or Enumerator(weight, p)
    lams = _descending(lambda_grid)
    sups = [[v for pr in enum.at(lam).profiles for v in pr.interval_sups(weight.pattern)] for lam in lams]
    raw = {"lambdas": lams, "sups": sups, "rho": rho, "margin": margin,
           "r_lambda": [r_lambda(lam, weight.sup_norm, p) for lam in lams]}
    return VerificationReport.judge("2.5", {"lambda_grid": lams, "p": p, "rho": rho}, raw)


def lambda_star(rep25: VerificationReport):
    """Largest grid lambda below which rho < r_lambda and the dead band stays empty."""
    raw = rep25.raw
    ok = [f and raw["rho"] < r for f, r in zip(_band_flags(raw), raw["r_lambda"])]
    return threshold(raw["lambdas"], ok)


@dataclass
class DegreeTable:
    lam: float
    orientation: int
    boxes: dict  # IndexSet -> degree of Lambda^I
    omegas: dict  # IndexSet -> degree of Omega^I

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["index_set", "degree"])
        for k in sorted(self.boxes, key=IndexSet.sort_key):
            wr.writerow([k.label(), self.boxes[k]])
        return buf.getvalue()

    def omega_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["index_set", "degree"])
        for k in sorted(self.omegas, key=IndexSet.sort_key):
            wr.writerow([k.label(), self.omegas[k]])
        return buf.getvalue()

    def report(self, p, rho) -> VerificationReport:
        raw = {"lambda_degrees": {k.label(): d for k, d in self.boxes.items()},
               "omega_degrees": {k.label(): d for k, d in self.omegas.items()},
               "orientation": self.orientation}
        return VerificationReport.judge("3.3", {"lambda": self.lam, "p": p, "rho": rho}, raw)


def degree_table(lam, weight, p, rho=1.0, solset=None, enum: Enumerator | None = None) -> DegreeTable:
    """Calibrated shooting degree of every box and of every union Omega^I."""
    r = r_lambda(lam, weight.sup_norm, p)
    if not rho < r:
        raise SpecError(f"degree table needs rho < r_lambda = {r:.6g}")
    if solset is None:
        solset = (enum or Enumerator(weight, p)).at(lam)
    pat = weight.pattern
    orient = calibrate_orientation(solset, rho, pat)
    boxes = {I: box_degree(solset, I, rho, orient, pat) for I in all_index_sets(weight.n)}
    omegas = {I: sum(boxes[J] for J in I.subsets()) for I in all_index_sets(weight.n)}
    return DegreeTable(lam, orient, boxes, omegas)


# --- multiplicity sweep ----------------------------------------------------------

@dataclass
class SweepRow:
    lam: float
    solutions: int
    occupied: list
    complete: bool


def multiplicity_sweep(lambda_grid, weight, p, N=DEFAULT_N, cfg: NewtonConfig = NewtonConfig()):
    """solve_all over a decreasing lambda grid; returns (rows, solution sets, lambda_c)."""
    lams = _descending(lambda_grid)
    target = {I for I in all_index_sets(weight.n, include_empty=False)}
    rows, sets = [], []
    for lam in lams:
        ss = solve_all(lam, weight, p, cfg, N=N)
        occ = ss.occupied()
        rows.append(SweepRow(lam, len(ss), [I.label() for I in occ], target <= set(occ)))
        sets.append(ss)
    lam_c = threshold(lams, [r.complete for r in rows])
    return rows, sets, lam_c


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["lambda", "solutions", "occupied", "complete"])
    for r in rows:
        wr.writerow([f"{r.lam:.17g}", r.solutions, " ".join(r.occupied), int(r.complete)])
    return buf.getvalue()
