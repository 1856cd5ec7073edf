"""No bounded solution of the whole-line limit problem.

Blowing up around a point where the weight vanishes like dist^gamma gives
-v'' = alpha (x + kappa)^gamma v^p + beta on a half line.  A solution
starting at v(0) = 1 with v'(0) <= 0 must leave [0, 1] in finite time;
once v'(1) < 0 it leaves before the tangent line at x = 1 does.

Run:  python demos/liouville_escape.py
"""
import itertools

from multibump.cli import LIOUVILLE_GRID
from multibump.shooting import LiouvilleProblem, liouville_check

g = LIOUVILLE_GRID
worst = None
count = 0
for alpha, gamma, kappa, beta in itertools.product(g["alpha"], g["gamma"], g["kappa"], g["beta"]):
    prob = LiouvilleProblem(alpha, gamma, kappa, beta)
    for v in liouville_check(prob, 3.0, g["slopes"], 20.0 * (1 + kappa)):
        count += 1
        assert v.verdict == "EXITS" and v.bound_ok
        if v.dv1 < 0 and v.x_exit > 1:
            slack = v.bound - v.x_exit
            if worst is None or slack < worst[0]:
                worst = (slack, alpha, gamma, kappa, beta, v)

print(f"{count} configurations, all leave [0, 1]")
slack, alpha, gamma, kappa, beta, v = worst
print(f"tightest tangent bound among exits past x = 1: alpha={alpha} gamma={gamma} kappa={kappa} beta={beta} s={v.slope}")
print(f"  exit at x = {v.x_exit:.6f}, bound 1 + v(1)/(-v'(1)) = {v.bound:.6f}")
