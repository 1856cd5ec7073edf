"""Leray-Schauder degrees of the boxes, counted from shooting indices.

Each nontrivial zero s* of the shooting map carries the index sign S'(s*);
summing these per box (plus the trivial solution in the empty box) gives
the degree table.  The empty box is normalised to +1.

Run:  python demos/degree_count.py
"""
from multibump import sin_weight
from multibump.indexset import all_index_sets
from multibump.verify import Enumerator, degree_table

for m, lam in ((3, -80.0), (5, -320.0)):
    w = sin_weight(m)
    dt = degree_table(lam, w, 3.0, rho=1.0, enum=Enumerator(w, 3.0))
    print(f"a(x) = sin({m} pi x), lambda = {lam}, orientation {dt.orientation:+d}")
    print("  I          deg Lambda^I   deg Omega^I   (-1)^|I|")
    for I in all_index_sets(w.n):
        print(f"  {I.label():10s} {dt.boxes[I]:+13d} {dt.omegas[I]:+13d} {(-1) ** len(I):+10d}")
    print(f"  verdict: {dt.report(3.0, 1.0).status}\n")

# Omega^I is the union of the boxes Lambda^J with J inside I; its degree
# vanishes for I nonempty because a nonempty set has as many even subsets as odd ones
I = all_index_sets(3)[-1]
print(f"subsets of {I.label()} by parity:",
      sum(len(J) % 2 == 0 for J in I.subsets()), "even,", sum(len(J) % 2 for J in I.subsets()), "odd")
