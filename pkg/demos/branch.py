"""The branch of positive solutions bifurcating from (pi^2, 0).

Starting from a tiny multiple of sin(pi x), pseudo-arclength continuation
follows the branch to the right, around the turning point, and then off to
lambda -> -infinity, where the amplitude grows like r_lambda.

Run:  python demos/branch.py [N]
"""
import math
import sys

from multibump import r_lambda, sin_weight
from multibump.continuation import audit, continue_branch, init_branch

N = int(sys.argv[1]) if len(sys.argv) > 1 else 257
w = sin_weight(3)
seed = init_branch(w, 3.0, epsilon=1e-4, N=N)
print(f"seed: lambda = {seed.lam:.8f} (pi^2 = {math.pi ** 2:.8f}), sup = {seed.amplitude:.1e}")

br = continue_branch(seed, w, 3.0, max_points=20_000, lam_stop=-320.0, targets=(-80.0, -160.0, -320.0))
lo, hi = br.projection()
print(f"{len(br.points)} points, status {br.status}, lambda range [{lo:.2f}, {hi:.5f}]")
if br.fold is not None:
    lam_t, k = br.fold
    print(f"turning point lambda_t = {lam_t:.6f} at point {k}, sup there {br.points[k].amplitude:.4f}")

for lam, prof in sorted(br.landings.items(), reverse=True):
    r = r_lambda(lam, 1.0, 3.0)
    a, b = prof.interval_sups(w.pattern)
    print(f"  lambda = {lam:7.1f}: sup {prof.sup:8.4f}  (r_lambda {r:7.4f})  humps {a:.3f} / {b:.3f}")

bad = audit(br, w, 3.0)
print("every stored point satisfies the residual tolerance" if not bad else f"{len(bad)} points fail the audit")
