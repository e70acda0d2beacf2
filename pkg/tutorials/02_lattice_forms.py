"""Lattice weights, their class norms, and what a multiplier sees of them.

1. Estimate the B-norm of a small weight two ways (alternating
   maximization and the brute-force grid oracle).
2. Watch the truncated Hilbert weight creep up with the radius, next to a
   seeded l^2 weight that settles immediately.
3. Build the modulated bump pair for lattice data ``A, B`` and check that
   the bilinear multiplier reproduces ``bilinear_image(V, A, B)`` exactly.
"""

import math

import numpy as np

from bilinlab import engine, lattice

V = lattice.LatticeWeight(1, [[0, 0], [1, 0], [0, 1]], [1.0, 1.0, 1.0])
est = lattice.b_norm_lower_altmax(V, 2, 2, 2)
value, upper = lattice.bruteforce_bracket(V, 2, 2, 2)
print(f"three-point weight: altmax {est.lower:.6f}, grid oracle {value:.6f} (certified <= {upper:.4f})")
print(f"  closed form 2/sqrt(3) = {2 / math.sqrt(3):.6f}")

print("\nbform(2, 2, inf) under truncation")
for R in (16, 64, 256):
    h = lattice.bform_norm(lattice.weight_hilbert(1, R), 2, 2, math.inf).lower
    w = lattice.bform_norm(lattice.random_l2_weight(7, R), 2, 2, math.inf).lower
    print(f"  R={R:>3}  hilbert {h:.4f}  seeded l2 {w:.4f}")
print("  (the Hilbert values approach 2*pi, but only logarithmically)")

rng = np.random.default_rng(1)
V = lattice.random_small_weight(rng, radius=2)
A = lattice.LatticeVector(1, [[-1], [0], [2]], [1.0, 0.4, 0.7])
B = lattice.LatticeVector(1, [[0], [1]], [0.5, 1.0])
grid = engine.default_test_grid(1, 6, 2.0)
err = engine.bridge_identity_error(V, A, B, 2.0, grid)
print(f"\nbridge identity on modulated bumps: relative error {err:.1e}")
print("image coefficients:", lattice.bilinear_image(V, A, B).to_dict())
