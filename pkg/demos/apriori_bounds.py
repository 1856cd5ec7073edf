"""Measured versions of the a priori estimates behind the degree count.

  * every nontrivial solution has sup above r_lambda = (-lambda/|a|)^(1/(p-1)),
    also along the theta-scaled family;
  * a large multiple of a bump forcing kills all non-negative solutions;
  * solutions become small on compacts inside the negativity interval;
  * interval sups avoid a band around rho once lambda is negative enough.

Run:  python demos/apriori_bounds.py
"""
from multibump import IndexSet, sin_weight
from multibump.verify import (Enumerator, estimate_R_cap, lambda_star, verify_lemma22, verify_lemma23,
                              verify_lemma24, verify_lemma25)

w = sin_weight(3)
enum = Enumerator(w, 3.0)
grid = [-10.0, -20.0, -40.0, -80.0, -160.0, -320.0, -400.0]

rep = verify_lemma22(-80.0, [0.25, 0.5, 0.75, 1.0], w, 3.0, enum)
print(f"lower bound at lambda=-80: {rep.status}, smallest sup - r_lambda = {rep.margins['min_norm_margin']:.4f}")

R_cap = estimate_R_cap([enum.at(lam) for lam in grid])
rep = verify_lemma23(-80.0, IndexSet.of(1), w, 3.0, R_cap)
print(f"forced problem, mu = 1.05 mu* = {rep.raw['mu']:.4g} (R_cap {R_cap:.3g}): "
      f"{rep.margins['solutions']} solutions -> {rep.status}")

rep = verify_lemma24(grid, w, 3.0, K=(0.4, 0.6), delta=0.1, enum=enum)
print("max over K = [0.4, 0.6]:")
for lam, m in zip(grid, rep.raw["maxima"]):
    print(f"  lambda = {lam:7.1f}: {m:.4f}")
print(f"  log-log slope {rep.margins['trend_slope']:.3f}; threshold for delta = 0.1: "
      f"{rep.thresholds['lambda_tilde']} ({rep.status})")

rep = verify_lemma25(1.0, grid, w, 3.0, enum=enum)
print(f"dead band [0.999, 1.001] empty from lambda_hat = {rep.thresholds['lambda_hat']}; "
      f"sups split into < 1/2 and > r_lambda from {rep.thresholds['lambda_cluster']}; "
      f"lambda* = {lambda_star(rep)}")
