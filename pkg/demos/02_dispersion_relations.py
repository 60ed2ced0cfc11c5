"""Three ways to move, one formula for the speed.

Each dispersal mechanism has a dispersion relation mu -> lambda(mu):
the growth rate of the exponential mode exp(-mu x).  The spreading
speed is the smallest ratio lambda(mu)/mu.  We print the three curves
and their minimizers side by side.
"""

import numpy as np

import kpplab as K
from kpplab import DispersionRelation, minimize_speed

r0 = 1.0
kernel = K.Kernel.from_profile("triangle", 1.0, 0.05, 1)
weights = K.LatticeWeights.symmetric(1, 1.0)

relations = {
    "random   (Laplacian)": DispersionRelation.closed_form("random", 1.0, r0),
    "nonlocal (triangle) ": DispersionRelation.closed_form("nonlocal", 1.0, r0, kernel=kernel),
    "discrete (lattice)  ": DispersionRelation.closed_form("discrete", 1.0, r0, weights=weights),
}

mus = np.array([0.25, 0.5, 1.0, 2.0, 4.0])
print("lambda(mu)/mu at sample points:")
print("  mu        " + "   ".join(f"{m:7.2f}" for m in mus))
for name, rel in relations.items():
    vals = np.asarray(rel(mus)) / mus
    print(f"  {name} " + "   ".join(f"{v:7.3f}" for v in vals))

print("\nminimized speeds:")
for name, rel in relations.items():
    res = minimize_speed(rel)
    print(f"  {name}  c* = {res.c_star:.6f} at mu* = {res.mu_star:.4f} "
          f"({res.evaluations} evaluations)")

print("\nthe Laplacian case has the closed form c* = 2 sqrt(r0) =",
      2.0 * np.sqrt(r0))
