"""Print calibration values for the frozen appendix constants.

Run from the repository root::

    python tools/calibrate_appendix.py

Each constant is the largest ratio seen on the seeded oracle family
(interpolation ratios over all grid refinements, pointwise ratios on the
refined grids, and lambda-tradeoff ratios) times the safety factor, rounded up to one decimal.
The printed values are pasted into ``bilinlab/appendix.py``.
"""

import math

from bilinlab import appendix as ap


def main():
    gn = pw = 0.0
    for level, grid in enumerate(ap.gn_grids()):
        for f in ap.gaussian_family():
            for K, q, qt, r in ap.GN_CASES:
                rep = ap.gn_interpolation_check(f, grid, K, q, qt, r)
                gn = max(gn, rep.ratio)
                # the coarsest grid does not resolve the bump edge pointwise
                if level > 0:
                    pw = max(pw, rep.pointwise_ratio)
        print(f"M={grid.M}: gn {gn:.4f} pointwise {pw:.4f}")
    tr = 0.0
    grid = ap.tradeoff_grid()
    for f in ap.gaussian_family(n=0, d=1):
        for eps, N, gamma in ap.tradeoff_cases():
            tr = max(tr, ap.lambda_tradeoff_check(f, grid, gamma, N, eps=eps)["max_ratio"])
    print(f"tradeoff {tr:.4f}")
    up = lambda v: math.ceil(10 * ap.CALIBRATION_SAFETY * v) / 10
    print(f"GN_C_MAX = {up(gn)}\nPOINTWISE_C_MAX = {up(pw)}\nTRADEOFF_C = {up(tr)}")


if __name__ == "__main__":
    main()
