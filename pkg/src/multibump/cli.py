"""Batch driver: one JSON problem spec in, deterministic CSV/JSON artifacts out.

    multibump <command> --spec problem.json --out results/ [--threads k] [--grid-N N] [--seed s]

Exit codes: 0 success, 1 verification failure, 2 spec error, 3 numerical
fault.  Errors are also written to stderr as a one-line JSON object.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boxes import ClassifierConfig, classify, r_lambda
from .continuation import continue_branch, init_branch
from .errors import BandHit, MultibumpError, SpecError
from .greens import DEFAULT_N
from .indexset import IndexSet, all_index_sets
from .newton import NewtonConfig, fd_jacobian, fd_residual, manifest, solve_all
from .shooting import LiouvilleProblem, ShootingField, enumerate_field, enumerate_solutions, liouville_check
from .solutions import SolutionSet
from .verify import (Enumerator, SweepRow, degree_table, estimate_R_cap, lambda_star, multiplicity_sweep,
                     summary_csv, sweep_csv, verify_lemma22, verify_lemma23, verify_lemma24,
                     threshold, verify_lemma25)
from .weight import WeightSpec, build_weight

log = logging.getLogger("multibump")

COMMANDS = ("solve", "count", "classify", "sweep", "continue", "verify", "liouville", "degree-table")

LIOUVILLE_GRID = {"alpha": [0.5, 1.0, 2.0], "gamma": [0.0, 1.0, 2.0], "kappa": [0.0, 1.0],
                  "beta": [0.0, 0.5], "slopes": [0.0, -0.1, -1.0]}


@dataclass
class ProblemSpec:
    weight: WeightSpec
    p: float
    L: float
    lam: float | None = None
    lambda_grid: list = field(default_factory=list)
    N: int = DEFAULT_N
    seed: int = 0
    newton: dict = field(default_factory=dict)
    classifier: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    continuation: dict = field(default_factory=dict)
    liouville: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj) -> "ProblemSpec":
        obj = dict(obj)
        if "weight" not in obj or "p" not in obj:
            raise SpecError("a problem spec needs 'weight' and 'p'")
        weight = WeightSpec.from_dict(obj.pop("weight"))
        p = float(obj.pop("p"))
        if not p > 1:
            raise SpecError(f"p must satisfy p > 1, got p = {p}")
        L = float(obj.pop("L", weight.L))
        if not L > 0:
            raise SpecError(f"L must satisfy L > 0, got L = {L}")
        if abs(L - weight.L) > 1e-12 * L:
            raise SpecError(f"L = {L} disagrees with the weight's domain length {weight.L}")
        lam = obj.pop("lambda", None)
        grid = [float(v) for v in obj.pop("lambda_grid", [])]
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise SpecError("lambda_grid must be strictly decreasing")
        N = int(obj.pop("N", DEFAULT_N))
        if N < 3:
            raise SpecError("grid N must be at least 3")
        out = cls(weight, p, L, None if lam is None else float(lam), grid, N, int(obj.pop("seed", 0)))
        for key in ("newton", "classifier", "verify", "continuation", "liouville"):
            setattr(out, key, dict(obj.pop(key, {})))
        if obj:
            raise SpecError(f"unexpected spec fields: {sorted(obj)}")
        return out

    def to_dict(self) -> dict:
        out = {"weight": self.weight.to_dict(), "p": self.p, "L": self.L, "N": self.N, "seed": self.seed}
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.lambda_grid:
            out["lambda_grid"] = list(self.lambda_grid)
        for key in ("newton", "classifier", "verify", "continuation", "liouville"):
            if getattr(self, key):
                out[key] = getattr(self, key)
        return out

    def need_lambda(self) -> float:
        if self.lam is None:
            raise SpecError("this command needs 'lambda' in the spec")
        if not self.lam < 0:
            raise SpecError(f"lambda must be negative, got {self.lam}")
        return self.lam

    def need_grid(self) -> list:
        if not self.lambda_grid:
            raise SpecError("this command needs 'lambda_grid' in the spec")
        return self.lambda_grid

    def newton_config(self) -> NewtonConfig:
        try:
            return NewtonConfig(**{k: v for k, v in self.newton.items() if k != "extrapolate"})
        except (TypeError, ValueError) as exc:
            raise SpecError(f"bad newton overrides: {exc}") from None

    def classifier_config(self) -> ClassifierConfig:
        try:
            return ClassifierConfig(**self.classifier)
        except TypeError as exc:
            raise SpecError(f"bad classifier overrides: {exc}") from None


def load_spec(path) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}") from None
    return ProblemSpec.from_dict(obj)


def _dump(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


class Writer:
    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def text(self, name, text):
        (self.root / name).write_text(text)
        self.files.append(name)

    def json(self, name, obj):
        self.text(name, _dump(obj))


# --- commands --------------------------------------------------------------------

def cmd_solve(spec, weight, out, threads):
    lam = spec.need_lambda()
    ss = solve_all(lam, weight, spec.p, spec.newton_config(), N=spec.N,
                   classifier=spec.classifier_config(), extrapolate=bool(spec.newton.get("extrapolate", False)))
    out.json("manifest.json", {"lambda": lam, "solutions": manifest(ss, weight),
                               "failures": ss.meta.get("failures", [])})
    out.text("solutions.json", ss.to_json() + "\n")
    return 0


def _count_report(ss: SolutionSet, weight, p):
    return {
        "lambda": ss.lam,
        "count": len(ss),
        "r_lambda": r_lambda(ss.lam, weight.sup_norm, p),
        "trivial_index": ss.trivial_index,
        "s_min": ss.meta.get("s_min"),
        "s_max": ss.meta.get("s_max"),
        "solutions": [{"slope": s, "index": i, "sup": pr.sup,
                       "index_set": None if b is None else list(b.members),
                       "interval_sups": pr.interval_sups(weight.pattern)}
                      for pr, s, i, b in zip(ss.profiles, ss.slopes, ss.indices, ss.boxes)],
    }


def cmd_count(spec, weight, out, threads):
    lam = spec.need_lambda()
    ss = enumerate_solutions(lam, weight, spec.p, N=spec.N, classifier=spec.classifier_config())
    out.json("count.json", _count_report(ss, weight, spec.p))
    out.text("scan.csv", ss.meta["scan"].to_csv())
    return 0


def cmd_classify(spec, weight, out, threads, source=None):
    cfg = spec.classifier_config()
    if source:
        ss = SolutionSet.from_json(Path(source).read_text())
    else:
        ss = enumerate_solutions(spec.need_lambda(), weight, spec.p, N=spec.N, classifier=cfg)
    rows = []
    for pr in ss.profiles:
        try:
            label = classify(pr, weight.pattern, cfg).label()
        except BandHit:
            label = "BAND_HIT"
        rows.append({"sup": pr.sup, "interval_sups": pr.interval_sups(weight.pattern), "box": label})
    out.json("classify.json", {"lambda": ss.lam, "rho": cfg.rho, "margin": cfg.margin, "solutions": rows})
    return 0


def _solve_one(args):
    lam, wspec, p, N, newton = args
    w = build_weight(wspec)
    cfg = NewtonConfig(**{k: v for k, v in newton.items() if k != "extrapolate"})
    return solve_all(lam, w, p, cfg, N=N)


def cmd_sweep(spec, weight, out, threads):
    lams = spec.need_grid()
    if threads > 1:
        jobs = [(lam, spec.weight, spec.p, spec.N, spec.newton) for lam in lams]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            sets = list(pool.map(_solve_one, jobs))
        target = set(all_index_sets(weight.n, include_empty=False))
        rows = [SweepRow(ss.lam, len(ss), [I.label() for I in ss.occupied()], target <= set(ss.occupied()))
                for ss in sets]
        lam_c = threshold(lams, [r.complete for r in rows])
    else:
        rows, sets, lam_c = multiplicity_sweep(lams, weight, spec.p, spec.N, spec.newton_config())
    out.text("sweep.csv", sweep_csv(rows))
    out.json("sweep.json", {"lambda_grid": lams, "lambda_c": lam_c,
                            "rows": [{"lambda": r.lam, "solutions": r.solutions, "occupied": r.occupied,
                                      "complete": r.complete} for r in rows]})
    return 0


def cmd_continue(spec, weight, out, threads):
    c = spec.continuation
    N = int(c.get("N", spec.N))
    seed = init_branch(weight, spec.p, float(c.get("epsilon", 1e-4)), N=N)
    targets = [spec.lam] if spec.lam is not None else []
    br = continue_branch(seed, weight, spec.p, step=float(c.get("step", 1e-2)),
                         max_points=int(c.get("max_points", 5000)), R_cap=c.get("R_cap"),
                         lam_stop=c.get("lambda_stop"), targets=targets)
    out.text("branch.csv", br.to_csv())
    out.text("branch_profiles.json", br.profiles_json(int(c.get("dump_every", 50))) + "\n")
    out.json("branch.json", {"status": br.status, "points": len(br.points),
                             "seed_lambda": seed.lam, "projection": list(br.projection()),
                             "fold": None if br.fold is None else {"lambda_t": br.fold[0], "index": br.fold[1]},
                             "landings": {repr(k): v.sup for k, v in br.landings.items()}})
    return 0


def jacobian_check(weight, p, lam, N, cases, seed):
    """Directional-derivative check of the tridiagonal Jacobian; returns the worst relative error."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        u = np.r_[0.0, 0.1 + 5.0 * rng.random(N), 0.0]
        d = np.r_[0.0, rng.standard_normal(N), 0.0]
        J = fd_jacobian(lam, u, weight, p)
        t = 1e-6
        fd = (fd_residual(lam, u + t * d, weight, p) - fd_residual(lam, u - t * d, weight, p)) / (2 * t)
        jd = J @ d[1:-1]
        worst = max(worst, float(np.max(np.abs(fd - jd)) / np.max(np.abs(jd))))
    return worst


def _prefetch(enum: Enumerator, keys, threads):
    if threads <= 1:
        for lam, th in keys:
            enum.at(lam, th)
        return
    todo = [k for k in keys if k not in enum._cache]
    jobs = [(lam, th, enum.weight.spec, enum.p, enum.N, enum.classifier) for lam, th in todo]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for key, res in zip(todo, pool.map(_enum_one, jobs)):
            enum._cache[(float(key[0]), float(key[1]))] = res


def _enum_one(args):
    lam, th, wspec, p, N, cfg = args
    return enumerate_field(ShootingField(lam, build_weight(wspec), p, theta=th), N=N, classifier=cfg)


def cmd_verify(spec, weight, out, threads):
    lam = spec.need_lambda()
    v = spec.verify
    cfg = spec.classifier_config()
    thetas = [float(t) for t in v.get("theta", [0.0, 0.25, 0.5, 0.75, 1.0])]
    grid = [float(t) for t in v.get("lambda_grid", spec.lambda_grid or [-10, -20, -40, -80, -160, -320, -400])]
    enum = Enumerator(weight, spec.p, spec.N, cfg)
    _prefetch(enum, [(lam, th) for th in thetas] + [(g, 1.0) for g in grid], threads)
    reports = [verify_lemma22(lam, thetas, weight, spec.p, enum=enum)]
    R_cap = estimate_R_cap([enum.at(g) for g in grid] + [enum.at(lam)])
    first = IndexSet.parse(v.get("index_set", "{1}"))
    reports.append(verify_lemma23(lam, first, weight, spec.p, R_cap, N=spec.N))
    K = v.get("K")
    reports.append(verify_lemma24(grid, weight, spec.p, K=K, delta=float(v.get("delta", 0.1)), enum=enum))
    rep25 = verify_lemma25(cfg.rho, grid, weight, spec.p, margin=cfg.margin, enum=enum)
    reports.append(rep25)
    dt = degree_table(lam, weight, spec.p, cfg.rho, enum=enum)
    reports.append(dt.report(spec.p, cfg.rho))
    jac = jacobian_check(weight, spec.p, lam, min(spec.N, 257), int(v.get("jacobian_cases", 100)), spec.seed)
    thresholds = {"lambda_star": lambda_star(rep25), "lambda_hat": rep25.thresholds.get("lambda_hat"),
                  "lambda_tilde": reports[2].thresholds.get("lambda_tilde"), "R_cap": R_cap}
    out.json("reports.json", {"reports": [r.to_dict() for r in reports], "thresholds": thresholds,
                              "jacobian_max_rel_error": jac})
    out.text("summary.csv", summary_csv(reports))
    out.text("degree_table.csv", dt.to_csv())
    failed = any(r.status == "FAIL" for r in reports) or jac > 1e-6
    return 1 if failed else 0


def cmd_liouville(spec, weight, out, threads):
    grid = {**LIOUVILLE_GRID, **spec.liouville}
    X_factor = float(grid.pop("X_factor", 20.0))
    rows = []
    bad = 0
    for alpha, gamma, kappa, beta in itertools.product(grid["alpha"], grid["gamma"], grid["kappa"], grid["beta"]):
        prob = LiouvilleProblem(float(alpha), float(gamma), float(kappa), float(beta))
        for vd in liouville_check(prob, spec.p, grid["slopes"], X_factor * (1 + kappa)):
            rows.append({"alpha": alpha, "gamma": gamma, "kappa": kappa, "beta": beta, "slope": vd.slope,
                         "verdict": vd.verdict, "x_exit": vd.x_exit, "v1": vd.v1, "dv1": vd.dv1,
                         "bound": vd.bound, "bound_ok": vd.bound_ok})
            bad += vd.verdict != "EXITS" or not vd.bound_ok
    lines = ["alpha,gamma,kappa,beta,slope,verdict,x_exit,bound,bound_ok"]
    for r in rows:
        lines.append(",".join([f"{r['alpha']:.17g}", f"{r['gamma']:.17g}", f"{r['kappa']:.17g}",
                               f"{r['beta']:.17g}", f"{r['slope']:.17g}", r["verdict"],
                               f"{r['x_exit']:.17g}", f"{r['bound']:.17g}", str(int(r["bound_ok"]))]))
    out.text("liouville.csv", "\n".join(lines) + "\n")
    out.json("liouville.json", {"p": spec.p, "configurations": len(rows), "failures": bad, "rows": rows})
    return 1 if bad else 0


def cmd_degree_table(spec, weight, out, threads):
    lam = spec.need_lambda()
    cfg = spec.classifier_config()
    ss = enumerate_solutions(lam, weight, spec.p, N=spec.N, classifier=cfg)
    dt = degree_table(lam, weight, spec.p, cfg.rho, solset=ss)
    rep = dt.report(spec.p, cfg.rho)
    out.text("degree_table.csv", dt.to_csv())
    out.text("omega_table.csv", dt.omega_csv())
    out.json("degree.json", rep.to_dict())
    return 0 if rep.passed else 1


HANDLERS = {"solve": cmd_solve, "count": cmd_count, "classify": cmd_classify, "sweep": cmd_sweep,
            "continue": cmd_continue, "verify": cmd_verify, "liouville": cmd_liouville,
            "degree-table": cmd_degree_table}


def build_parser():
    ap = argparse.ArgumentParser(prog="multibump", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--spec", required=True, help="JSON problem spec")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--grid-N", type=int, default=None, help="override the spec's grid N")
    ap.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    ap.add_argument("--input", default=None, help="solutions JSON for classify")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = load_spec(args.spec)
        if args.grid_N is not None:
            if args.grid_N < 3:
                raise SpecError("--grid-N must be at least 3")
            spec.N = args.grid_N
        if args.seed is not None:
            spec.seed = args.seed
        if args.threads < 1:
            raise SpecError("--threads must be at least 1")
        weight = build_weight(spec.weight)
        out = Writer(args.out)
        out.json("spec.json", spec.to_dict())
        if args.command == "classify":
            return cmd_classify(spec, weight, out, args.threads, args.input)
        return HANDLERS[args.command](spec, weight, out, args.threads)
    except SpecError as exc:
        return _fail(2, exc)
    except (MultibumpError, FloatingPointError) as exc:
        return _fail(3, exc)


def main():
    sys.exit(run())
