"""Three positive solutions for a weight with two humps, seven for three.

Run:  python demos/multiplicity.py
"""
import time

import numpy as np

from multibump import enumerate_solutions, r_lambda, sin_weight, solve_all
from multibump.solutions import match_profiles
from multibump.verify import multiplicity_sweep

lam, p = -80.0, 3.0
w = sin_weight(3)
print(f"a(x) = sin(3 pi x), p = {p}, lambda = {lam};  r_lambda = {r_lambda(lam, 1.0, p):.4f}")

t0 = time.perf_counter()
newton = solve_all(lam, w, p)
shoot = enumerate_solutions(lam, w, p)
print(f"Newton multistart: {len(newton)} solutions, shooting scan: {len(shoot)}  "
      f"({time.perf_counter() - t0:.1f}s)")

print("\n  box      sup      sup on I1  sup on I2  index  u'(0)")
for pr, box, idx, s in zip(shoot.profiles, shoot.boxes, shoot.indices, shoot.slopes):
    a, b = pr.interval_sups(w.pattern)
    print(f"  {box.label():7s} {pr.sup:8.4f} {a:10.4f} {b:10.4f} {idx:+5d}  {s:.6g}")

# the two solvers discretise differently; they agree to O(h^2)
for i, j, d in match_profiles(newton, shoot):
    print(f"  Newton #{i} vs shooting #{j}: sup difference {d:.2e}")

# with three humps every nonempty index set shows up once lambda is negative enough
print("\na(x) = sin(5 pi x): Newton sweep")
rows, sets, lam_c = multiplicity_sweep([-40.0, -80.0, -160.0, -320.0], sin_weight(5), p)
for r in rows:
    print(f"  lambda = {r.lam:7.1f}: {r.solutions} solutions in boxes {' '.join(r.occupied)}")
print(f"  all 7 boxes occupied from lambda_c = {lam_c}")
print(f"  smallest sup over all sweep solutions / r_lambda: "
      f"{min(ss.min_sup() / r_lambda(ss.lam, 1.0, p) for ss in sets):.3f}")
