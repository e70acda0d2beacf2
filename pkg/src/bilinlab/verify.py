"""Deterministic invariant suites behind ``bilinlab verify``.

Every invariant reports a measured residual (or violation count) and the
tolerance it is compared against; an invariant passes when
``measured <= tolerance``.  Tolerances can be overridden by name, e.g.
``{"appendix.vandermonde_identity": 0.0}``, which is how a tampered run is
simulated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import appendix, engine, exponents, grid, lattice
from ._util import derive_seeds

SUITES = ("exponents", "lattice", "grid", "engine", "appendix")


@dataclass
class Invariant:
    suite: str
    name: str
    measured: float
    tolerance: float

    @property
    def key(self) -> str:
        return f"{self.suite}.{self.name}"

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.tolerance)

    def to_json_obj(self) -> dict:
        return {"name": self.key, "measured": float(self.measured), "tolerance": float(self.tolerance),
                "pass": self.passed}


# ---------------------------------------------------------------------------
# exponents


def _recips(step: int):
    return [Fraction(i, step) for i in range(step + 1)]


def check_exponents(seed: int):
    out = []
    known = {(Fraction(1, 2), Fraction(1, 2)): 4, (1, 1): 1, (0, 0): 2, (0, 1): 2, (Fraction(1, 4), Fraction(1, 4)): 4}
    bad = 0
    for (a, b), q in known.items():
        bad += exponents.holder_sharp_q(exponents.from_reciprocal(a), exponents.from_reciprocal(b)).q != q
    out.append(("remark_examples", bad, 0))
    sym = rng_bad = direct_bad = crit_bad = 0
    grid_r = _recips(32)
    for a, b in itertools.product(grid_r, repeat=2):
        r1 = exponents.triple_from_reciprocals(a, b, a + b)
        r2 = exponents.triple_from_reciprocals(b, a, a + b)
        s1, s2 = exponents.sharp_q(r1), exponents.sharp_q(r2)
        sym += s1.q != s2.q
        rng_bad += not (1 <= s1.q <= 4)
        direct_bad += exponents.holder_direct_inv_q(a, b) != s1.inv_q
        if a < 1 and b < 1 and 0 < a + b < Fraction(3, 2):
            for n in (1, 2):
                crit_bad += exponents.critical_order(r1, n) != -2 * n * s1.inv_q
    out += [("permutation_symmetry", sym, 0), ("q_range", rng_bad, 0),
            ("holder_direct_agreement", direct_bad, 0), ("critical_order_identity", crit_bad, 0)]
    t = exponents.make_triple(1, 1, Fraction(1, 2))
    out.append(("critical_order_11half", abs(exponents.critical_order(t, 1) + Fraction(3, 2)), 0))
    return out


# ---------------------------------------------------------------------------
# lattice


def check_lattice(seed: int):
    out = []
    V = lattice.LatticeWeight.delta([0], [0])
    out.append(("point_weight_lower", abs(lattice.b_norm_lower_altmax(V, 2, 2, 2, seed=seed).lower - 1), 1e-6))
    gap = dual = 0.0
    chain = 0
    triples = [(2.0, 2.0, 2.0), (1.0, 2.0, math.inf), (2.0, math.inf, 1.0), (math.inf, math.inf, 1.0)]
    for V in lattice.small_weight_family(seed, 6):
        for q1, q2, q in triples:
            lo = lattice.b_norm_lower_altmax(V, q1, q2, q, seed=seed).lower
            value, upper = lattice.bruteforce_bracket(V, q1, q2, q, grid_steps=16)
            gap = max(gap, abs(lo - value) / max(value, 1e-300))
            chain += lo > upper * (1 + 1e-9)
            if q >= 1:
                f = lattice.bform_norm(V, q1, q2, 1.0 / (1.0 - 1.0 / q) if q > 1 else math.inf, seed=seed).lower
                dual = max(dual, abs(f - lo) / max(lo, 1e-300))
            bl = lattice.brascamp_lieb_upper(V, q1, q2, 1.0 / (1.0 - 1.0 / q) if q > 1 else math.inf)
            if bl is not None and value > bl * (1 + 1e-9):
                chain += 1
    out += [("altmax_vs_bruteforce", gap, 0.05), ("duality", dual, 0.05), ("ordering_chain", chain, 0)]
    W = lattice.random_l2_weight(seed, 8)
    f = lattice.bform_norm(W, 2, 2, math.inf, seed=seed).lower
    out.append(("l2_cauchy_schwarz", max(0.0, f / W.norm(2) - 1), 1e-6))
    return out


# ---------------------------------------------------------------------------
# grid


def check_grid(seed: int):
    rng = np.random.default_rng(derive_seeds(seed, 1)[0])
    g = grid.TorusGrid(1, 2 * math.pi * 10, 512)
    c = np.zeros(g.shape, dtype=complex)
    band = np.abs(g.freq_axis()) < 4
    c[band] = rng.normal(size=band.sum()) + 1j * rng.normal(size=band.sum())
    f = grid.GridFunction.from_coefficients(g, c)
    l2 = grid.lp_norm(f, 2)
    pars = abs(l2 ** 2 - np.sum(np.abs(f.coefficients) ** 2) / g.L ** g.n) / l2 ** 2
    w22 = abs(grid.wiener_amalgam_norm(f, 2, 2) - l2) / l2
    kappa = grid.make_square_partition_window()
    K = grid.band_limit_radius(f)
    energy = sum(np.sum(np.abs(p) ** 2) * g.h for _, p in grid.band_pieces(f, kappa, K))
    band_res = abs(energy - l2 ** 2) / l2 ** 2
    back = abs(grid.GridFunction(g, f.values).coefficients - f.coefficients).max() / abs(c).max()
    const = grid.GridFunction(g, np.full(g.shape, 3.0))
    bmo = abs(grid.bmo_norm(const) - 3.0)
    return [("parseval", pars, 1e-10), ("w22_equals_l2", w22, 1e-10), ("band_energy", band_res, 1e-10),
            ("dft_roundtrip", back, 1e-12), ("bmo_constant", bmo, 1e-12)]


# ---------------------------------------------------------------------------
# engine


def check_engine(seed: int):
    g = grid.TorusGrid.with_resolution(1, 4, 128)
    seeds = derive_seeds(seed, 4)
    rng = np.random.default_rng(seeds[0])
    pts = g.freq_points()[:, 0]
    m = np.abs(pts) < 3
    cs = []
    for _ in range(2):
        c = np.zeros(g.shape, dtype=complex)
        c[m] = rng.normal(size=m.sum()) + 1j * rng.normal(size=m.sum())
        cs.append(grid.GridFunction.from_coefficients(g, c))
    f1, f2 = cs
    one = engine.apply(engine.Multiplier.constant(1.0), f1, f2)
    prod = np.abs(one.values - f1.values * f2.values).max() / np.abs(f1.values * f2.values).max()
    E = [(0, 1), (1, -1), (2, 0), (-1, -1)]
    s = engine.lattice_bump_symbol(E, engine.BumpProfile(radius=0.45, shape="box"), [1, 2, 0.5, 1])
    a, b = engine.apply(s, f1, f2), engine.apply(s, f1, f2, fast=False)
    fast = np.abs(a.values - b.values).max() / np.abs(b.values).max()
    bridge = 0.0
    tg = engine.default_test_grid(1, 6)
    for sd in seeds[1:]:
        r = np.random.default_rng(sd)
        V = lattice.random_small_weight(r, radius=2)
        A = lattice.LatticeVector(1, np.arange(-2, 3).reshape(-1, 1), r.uniform(0.1, 1, 5))
        B = lattice.LatticeVector(1, np.arange(-2, 3).reshape(-1, 1), r.uniform(0.1, 1, 5))
        bridge = max(bridge, engine.bridge_identity_error(V, A, B, float(r.choice([1, 2])), tg))
    return [("apply_constant_is_product", prod, 1e-10), ("fast_path_matches_slices", fast, 1e-10),
            ("bridge_identity", bridge, 1e-8)]


# ---------------------------------------------------------------------------
# appendix


def check_appendix(seed: int):
    out = []
    t = appendix.vandermonde_coeffs(2, 1, 0)
    ex = sum(abs(t.P[k, j] - v) for (k, j), v in {(0, 0): 1, (1, 0): 0, (0, 1): -1, (1, 1): 1}.items())
    out.append(("vandermonde_example", float(ex), 0.0))
    rng = np.random.default_rng(derive_seeds(seed, 1)[0])
    res = bound = 0.0
    for N in range(2, 7):
        for _ in range(4):
            lam = float(rng.uniform(0.5, 2)) * float(rng.choice([-1, 1]))
            z = float(rng.uniform(-1, 1))
            tab = appendix.vandermonde_coeffs(N, lam, z)
            res = max(res, tab.residual)
            bound = max(bound, tab.bound_ratio / tab.bound_constant)
    out.append(("vandermonde_identity", res, 1e-9))
    out.append(("vandermonde_size_bound", bound, 1.0))
    exact = appendix.vandermonde_coeffs(5, Fraction(3, 7), Fraction(-2, 5)).residual
    out.append(("vandermonde_rational_exact", exact, 0.0))
    tres = 0.0
    for _ in range(3):
        tres = max(tres, appendix.tensor_coeffs(3, float(rng.uniform(0.5, 2)), tuple(rng.uniform(-1, 1, 2))).residual)
    out.append(("tensor_identity", tres, 1e-9))
    poly = 0.0
    for N in range(2, 7):
        coef = rng.normal(size=N)
        f = lambda p, coef=coef: np.polynomial.polynomial.polyval(p[:, 0], coef)
        y = float(rng.uniform(-1, 1))
        for gam in range(N):
            exact_d = np.polynomial.polynomial.polyval(y, np.polynomial.polynomial.polyder(coef, gam))
            got = appendix.reconstruct_derivative(f, [y], [gam], N, 0.7, 0.1)
            poly = max(poly, abs(got - exact_d) / max(1.0, abs(exact_d)))
    out.append(("polynomial_exactness", poly, 1e-8))
    g = grid.TorusGrid(1, 20.0, 256)
    cst = grid.GridFunction(g, np.full(g.shape, -2.5))
    out.append(("maximal_constant", float(np.abs(appendix.maximal_function(cst, 0.5).values - 2.5).max()), 1e-12))
    fam = appendix.gaussian_family(seed=appendix.APPENDIX_FAMILY_SEED, count=3, n=0, d=1)
    tg = appendix.tradeoff_grid()
    worst = 0.0
    for f in fam:
        worst = max(worst, appendix.lambda_tradeoff_check(f, tg, (1,), 2)["max_ratio"])
    out.append(("lambda_tradeoff", worst, appendix.TRADEOFF_C))
    return out


CHECKS = {"exponents": check_exponents, "lattice": check_lattice, "grid": check_grid,
          "engine": check_engine, "appendix": check_appendix}


def run_suite(name: str, seed: int = 0, tolerances: dict | None = None) -> list[Invariant]:
    """Run one suite (or ``"all"``) and return its invariants in a fixed order.

    Raises
    ------
    KeyError
        For an unknown suite name.
    """
    names = SUITES if name == "all" else (name,)
    for n in names:
        if n not in CHECKS:
            raise KeyError(n)
    tolerances = tolerances or {}
    out = []
    for n in names:
        for inv_name, measured, tol in CHECKS[n](seed):
            inv = Invariant(n, inv_name, float(measured), float(tol))
            if inv.key in tolerances:
                inv.tolerance = float(tolerances[inv.key])
            out.append(inv)
    return out
