"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Oracles are either independent closed forms written out here or values
frozen in the library (with their provenance documented next to them).
Criteria whose targets are not reachable at desk scale are still run at the
stated tolerance and are expected to fail.
"""

import itertools
import json
import math
import subprocess
import sys
import time
from fractions import Fraction as F

import numpy as np
import pytest

from bilinlab import appendix as ap
from bilinlab import engine, exponents, lattice
from bilinlab import grid as G

INF = math.inf
ACCEPT_SEED = 42


@pytest.fixture
def report(capsys):
    """Yield a recorder; prints ``CRITERION k: PASS|FAIL (...)`` at the end."""
    state = {}
    t0 = time.perf_counter()

    def record(k, ok, detail, budget):
        state.update(k=k, ok=bool(ok), detail=detail, budget=budget)

    yield record
    wall = time.perf_counter() - t0
    if state:
        ok = state["ok"] and wall < state["budget"]
        with capsys.disabled():
            print(f"\nCRITERION {state['k']}: {'PASS' if ok else 'FAIL'} "
                  f"({state['detail']}; {wall:.1f}s of {state['budget']}s)")


def _finish(ok, msg):
    assert ok, msg


# ---------------------------------------------------------------------------
# 1-2: exponents


def region_formulas(a, b):
    """Every region-diagram formula applicable at ``(1/p1, 1/p2) = (a, b)``."""
    half = F(1, 2)
    out = []
    if a <= half and b <= half and a + b >= half:
        out.append(F(1, 4))
    if a + b <= half:
        out.append((1 - a - b) / 2)
    if a <= half <= b and b > 0:
        out.append(b / 2)              # q = 2 p2
    if b <= half <= a and a > 0:
        out.append(a / 2)              # q = 2 p1
    if a >= half and b >= half and a + b <= F(3, 2):
        out.append((a + b - half) / 2)
    if a >= half and b >= half and a + b >= F(3, 2):
        out.append(a + b - 1)
    return out


def test_criterion_1_exponent_taxonomy(report):
    axis = [F(i, 32) for i in range(33)]
    mismatches = disagree = sym = rng = 0
    for a, b in itertools.product(axis, repeat=2):
        res = exponents.sharp_q(exponents.triple_from_reciprocals(a, b, a + b))
        forms = region_formulas(a, b)
        disagree += len(set(forms)) > 1
        mismatches += res.inv_q != forms[0]
        other = exponents.sharp_q(exponents.triple_from_reciprocals(b, a, a + b))
        sym += other.q != res.q
        rng += not (1 <= res.q <= 4)
    ok = mismatches == disagree == sym == rng == 0
    report(1, ok, f"mismatch={mismatches} boundary={disagree} symmetry={sym} range={rng}", 1.0)
    _finish(ok, "exponent taxonomy")


def test_criterion_2_critical_order(report):
    axis = [F(i, 32) for i in range(32)]
    bad = 0
    for a, b in itertools.product(axis, repeat=2):
        if not 0 < a + b < F(3, 2):
            continue
        t = exponents.triple_from_reciprocals(a, b, a + b)
        q = exponents.sharp_q(t).q
        for n in (1, 2, 3):
            bad += exponents.critical_order(t, n) != -2 * n / q
    t = exponents.make_triple(1, 1, F(1, 2))
    corner = all(exponents.critical_order(t, n) == F(-3 * n, 2) for n in (1, 2, 3))
    ok = bad == 0 and corner
    report(2, ok, f"violations={bad} m(1,1,1/2)=-3n/2:{corner}", 1.0)
    _finish(ok, "critical order")


# ---------------------------------------------------------------------------
# 3-4: lattice oracles

EXPS = (1.0, 2.0, INF)


def conj(q):
    return INF if q == 1 else (1.0 if math.isinf(q) else q / (q - 1))


@pytest.fixture(scope="module")
def oracle_table():
    fam = lattice.small_weight_family(ACCEPT_SEED, 50)
    rows = []
    for V in fam:
        for q1, q2, q in itertools.product(EXPS, repeat=3):
            est = lattice.b_norm_lower_altmax(V, q1, q2, q, seed=ACCEPT_SEED)
            value, upper = lattice.bruteforce_bracket(V, q1, q2, q, grid_steps=16)
            rows.append((V, (q1, q2, q), est.lower, value, upper))
    return rows


def test_criterion_3_bnorm_oracle(report, oracle_table):
    worst = dual = 0.0
    support = max(max(len(np.unique(V.nu1, axis=0)), len(np.unique(V.nu2, axis=0))) for V, *_ in oracle_table)
    for V, (q1, q2, q), lo, value, _ in oracle_table:
        worst = max(worst, abs(lo - value) / value)
        direct = lattice.bform_norm(V, q1, q2, conj(q), seed=ACCEPT_SEED).details["direct"]
        dual = max(dual, abs(direct - lo) / lo)
    ok = worst < 0.05 and dual < 0.05 and support <= 3
    # the oracle fixture is shared with criterion 4; its cost counts here
    report(3, ok, f"max altmax/brute gap={worst:.2e} duality gap={dual:.2e} "
                  f"instances={len(oracle_table)}", 120)
    _finish(ok, "b-norm oracle")


def test_criterion_4_ordering_chain(report, oracle_table):
    viol = checked = 0
    for V, (q1, q2, q), lo, value, upper in oracle_table:
        bl = lattice.brascamp_lieb_upper(V, q1, q2, conj(q))
        if math.isinf(bl):
            continue
        checked += 1
        viol += lo > upper * (1 + 1e-9)
        viol += value > bl * (1 + 1e-9)
    ok = viol == 0 and checked > 0
    report(4, ok, f"violations={viol} over {checked} scaling-valid instances", 60)
    _finish(ok, "ordering chain")


# ---------------------------------------------------------------------------
# 5: exact identities


def _band_limited(g, seed, K):
    rng = np.random.default_rng(seed)
    c = np.zeros(g.shape, dtype=complex)
    m = np.max(np.abs(np.stack(g.freq_mesh())), axis=0) < K
    c[m] = rng.normal(size=m.sum()) + 1j * rng.normal(size=m.sum())
    return G.GridFunction.from_coefficients(g, c)


def test_criterion_5_exact_identities(report):
    errs = {}
    kappa = G.make_square_partition_window()
    for n, M in ((1, 512), (2, 64)):
        g = G.TorusGrid.with_resolution(n, 4, M)
        f = _band_limited(g, ACCEPT_SEED + n, 3)
        l2 = G.lp_norm(f, 2)
        errs[f"w22_n{n}"] = abs(G.wiener_amalgam_norm(f, 2, 2, kappa) - l2) / l2
        errs[f"parseval_n{n}"] = abs(l2 ** 2 - np.sum(np.abs(f.coefficients) ** 2) / g.L ** n) / l2 ** 2
        K = G.band_limit_radius(f)
        energy = sum(np.sum(np.abs(p) ** 2) * g.h ** n for _, p in G.band_pieces(f, kappa, K))
        errs[f"band_energy_n{n}"] = abs(energy - l2 ** 2) / l2 ** 2
        f2 = _band_limited(g, ACCEPT_SEED + 10 + n, 3)
        T = engine.apply(engine.Multiplier.constant(1.0, n), f, f2)
        prod = f.values * f2.values
        errs[f"apply_one_n{n}"] = np.abs(T.values - prod).max() / np.abs(prod).max()
    rng = np.random.default_rng(ACCEPT_SEED)
    van = rat = tens = 0.0
    for N in range(2, 7):
        for _ in range(5):
            lam = float(rng.uniform(0.25, 2)) * float(rng.choice([-1, 1]))
            van = max(van, ap.vandermonde_coeffs(N, lam, float(rng.uniform(-1, 1))).residual)
            rat = max(rat, ap.vandermonde_coeffs(N, F(int(rng.integers(1, 9)), int(rng.integers(1, 9))),
                                                 F(int(rng.integers(-5, 6)), 7)).residual)
    for N in (2, 3, 4):
        tens = max(tens, ap.tensor_coeffs(N, float(rng.uniform(0.5, 2)), tuple(rng.uniform(-1, 1, 2))).residual)
    errs["vandermonde"], errs["tensor"] = van, tens
    poly = 0.0
    for N in range(2, 7):
        for d in (1, 2):
            coef = rng.normal(size=(N,) * d)
            if d == 1:
                f = lambda p, c=coef: np.polynomial.polynomial.polyval(p[:, 0], c)
            else:
                f = lambda p, c=coef: np.polynomial.polynomial.polyval2d(p[:, 0], p[:, 1], c)
            y = rng.uniform(-1, 1, d)
            for gam in itertools.product(range(N), repeat=d):
                if sum(gam) >= N:
                    continue
                c = coef
                for ax, k in enumerate(gam):
                    c = np.polynomial.polynomial.polyder(c, k, axis=ax)
                exact = (np.polynomial.polynomial.polyval(y[0], c) if d == 1
                         else np.polynomial.polynomial.polyval2d(y[0], y[1], c))
                got = ap.reconstruct_derivative(f, y, gam, N, float(rng.uniform(0.3, 1)),
                                                tuple(rng.uniform(-0.5, 0.5, d)))
                poly = max(poly, abs(got - exact) / max(1.0, abs(exact)))
    ok = (max(v for k, v in errs.items() if k not in ("vandermonde", "tensor")) < 1e-10
          and van < 1e-9 and tens < 1e-9 and rat == 0 and poly < 1e-8)
    worst_exact = max(v for k, v in errs.items() if k not in ("vandermonde", "tensor"))
    report(5, ok, f"fourier/apply max={worst_exact:.1e} vandermonde={van:.1e} tensor={tens:.1e} "
                  f"rational={rat} poly={poly:.1e}", 60)
    _finish(ok, json.dumps({k: float(v) for k, v in errs.items()}))


# ---------------------------------------------------------------------------
# 6: bridge identity and W-norm scaling


def test_criterion_6_bridge_and_wnorm(report):
    rng = np.random.default_rng(ACCEPT_SEED)
    bridge = 0.0
    for i in range(20):
        V = lattice.random_small_weight(rng, radius=2)
        k = int(rng.integers(2, 6))
        A = lattice.LatticeVector(1, rng.choice(np.arange(-3, 4), k, replace=False).reshape(-1, 1),
                                  rng.uniform(0.1, 1, k))
        B = lattice.LatticeVector(1, rng.choice(np.arange(-3, 4), k, replace=False).reshape(-1, 1),
                                  rng.uniform(0.1, 1, k))
        lam = float(rng.choice([1.0, 2.0, 4.0]))
        bridge = max(bridge, engine.bridge_identity_error(V, A, B, lam, engine.default_test_grid(1, 8, lam)))
    dev = 0.0
    for lam in (1.0, 2.0, 4.0):
        A = lattice.LatticeVector(1, [[-2], [0], [3]], rng.uniform(0.2, 1.0, 3))
        for p in (1.0, 2.0, INF):
            for q in (1.0, 2.0):
                r = engine.wnorm_scaling_ratio(A, lam, p, q)
                dev = max(dev, abs(r / engine.PHI_NORMS[p] - 1))
    ok = bridge < 1e-8 and dev < engine.WNORM_BAND
    report(6, ok, f"bridge rel err={bridge:.1e} wnorm band deviation={dev:.2%} (band {engine.WNORM_BAND:.0%})", 120)
    _finish(ok, "bridge / wnorm")


# ---------------------------------------------------------------------------
# 7: card E scaling


def test_criterion_7_card_e_scaling(report):
    a = engine.card_e_scaling(2, 2, 1, (2, 4, 8, 16), "full", ACCEPT_SEED)
    b = engine.card_e_scaling(1, 1, 0.5, (2, 4, 8, 16), "full", ACCEPT_SEED)
    in_band = 0.20 <= a.slope <= 0.30 and abs(b.slope - 1) <= 0.15
    upper = a.slope <= a.target + 0.05 and b.slope <= b.target + 0.05
    ok = in_band and upper
    report(7, ok, f"slope(2,2,1)={a.slope:.3f} want [0.20,0.30]; slope(1,1,1/2)={b.slope:.3f} want 1+-0.15; "
                  f"upper-consistent={upper}", 300)
    _finish(ok, "card-E slopes outside the stated bands")


# ---------------------------------------------------------------------------
# 8: divergence witness

DIVERGENCE_MARGIN = math.log(2)   # log log 10^4 - log log 10^2


def test_criterion_8_divergence(report):
    radii = (100, 1000, 10000)
    lines, ok = [], True
    for p1, p2 in ((1, 1), (1.25, 1.25), (1.1, 1.25)):
        prof = lattice.counterexample_profile(p1, p2, radii)
        forms = [r["form_value"] for r in prof]
        grows = all(y > x for x, y in zip(forms, forms[1:])) and forms[-1] - forms[0] > DIVERGENCE_MARGIN
        drift = max(abs(prof[-1][k] - prof[0][k]) / prof[0][k] for k in ("normA", "normB", "normC"))
        ok &= grows and drift < 0.01
        lines.append(f"({p1},{p2}) growth={forms[-1] - forms[0]:.2f} norm drift={drift:.1%}")
    report(8, ok, "; ".join(lines), 120)
    _finish(ok, "norms of the divergent configuration are not stable at these radii")


# ---------------------------------------------------------------------------
# 9: plateaus


def test_criterion_9_plateaus(report):
    radii = (16, 64, 256)

    def changes(make):
        vals = [lattice.bform_norm(make(R), 2, 2, INF, seed=ACCEPT_SEED).lower for R in radii]
        return vals, [abs(y - x) / x for x, y in zip(vals, vals[1:])]

    hv, hc = changes(lambda R: lattice.weight_hilbert(1, R))
    lv, lc = changes(lambda R: lattice.random_l2_weight(ACCEPT_SEED, R))
    mv, mc = changes(lambda R: lattice.weight_hormander(-0.5, 1, R))
    ok = max(hc) < 0.10 and max(lc) < 0.10 and min(mc) > 0.10
    report(9, ok, f"hilbert {['%.3f' % v for v in hv]} changes {['%.0f%%' % (100 * c) for c in hc]}; "
                  f"l2 changes {['%.1f%%' % (100 * c) for c in lc]}; critical-regime changes "
                  f"{['%.0f%%' % (100 * c) for c in mc]}", 180)
    _finish(ok, "plateau criterion")


# ---------------------------------------------------------------------------
# 10: appendix interpolation


def test_criterion_10_interpolation(report):
    grids = ap.gn_grids(3)
    worst = drift = 0.0
    for f in ap.gaussian_family():
        for K, q, qt, r in ap.GN_CASES:
            ratios = [ap.gn_interpolation_check(f, g, K, q, qt, r).ratio for g in grids]
            worst = max(worst, max(ratios))
            drift = max(drift, abs(ratios[-1] - ratios[0]) / ratios[0])
    tg = ap.tradeoff_grid()
    trade, trade_ok = 0.0, True
    for f in ap.gaussian_family(n=0, d=1):
        for eps, N, gamma in ap.tradeoff_cases():
            rep = ap.lambda_tradeoff_check(f, tg, gamma, N, eps=eps)
            trade = max(trade, rep["max_ratio"])
            trade_ok &= rep["pass"]
    ok = worst <= ap.GN_C_MAX and drift < 0.10 and trade_ok
    report(10, ok, f"max GN ratio={worst:.3f} (c_max {ap.GN_C_MAX}) refinement drift={drift:.2%} "
                   f"max tradeoff ratio={trade:.3f} (c {ap.TRADEOFF_C})", 120)
    _finish(ok, "interpolation")


# ---------------------------------------------------------------------------
# 11: determinism


def test_criterion_11_determinism(report):
    cmd = [sys.executable, "-m", "bilinlab", "verify", "all", "--seed", "42"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    ok = a.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    report(11, ok, f"exit={a.returncode} bytes={len(a.stdout)} identical={a.stdout == b.stdout}", 120)
    _finish(ok, a.stderr.decode())
