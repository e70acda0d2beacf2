"""Derivatives from a handful of samples, and an interpolation inequality.

The Vandermonde coefficients ``P`` turn ``N`` samples ``f(y + lam k + z)``
into the Taylor part of ``f^(gamma)(y)``.  Exact for polynomials of degree
below ``N``; for smooth functions the error shrinks like ``lam^(N - gamma)``.
"""

import math
from fractions import Fraction

import numpy as np

from bilinlab import appendix

t = appendix.vandermonde_coeffs(4, Fraction(1, 2), Fraction(1, 3))
print("N=4, lam=1/2, z=1/3 (exact):")
for row in t.P:
    print("  ", [str(v) for v in row])
print("  reproduction residual:", t.residual)

f = lambda p: np.exp(-p[:, 0] ** 2)
y = 0.3
exact = -2 * y * math.exp(-y * y)
print("\nfirst derivative of exp(-x^2) at 0.3, N = 3")
for lam in (1 / 8, 1 / 16, 1 / 32, 1 / 64):
    got = appendix.reconstruct_derivative(f, [y], [1], 3, lam, 0.0)
    print(f"  lam={lam:<8} error {abs(got - exact):.2e}")

grid = appendix.gn_grids(1)[0]
print("\ninterpolation ratios (K=1, q=2, qt=1, r=inf) on the seeded family:")
for g in appendix.gaussian_family(count=4):
    rep = appendix.gn_interpolation_check(g, grid, 1, 2, 1, math.inf)
    print(f"  ratio {rep.ratio:.3f}  pointwise {rep.pointwise_ratio:.3f}")
