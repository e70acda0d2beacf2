import math

import numpy as np
import pytest

from bilinlab import engine as E
from bilinlab import grid as G
from bilinlab import lattice as L


def band_limited(g, seed, K=3):
    rng = np.random.default_rng(seed)
    c = np.zeros(g.shape, dtype=complex)
    m = np.max(np.abs(np.stack(g.freq_mesh())), axis=0) < K
    c[m] = rng.normal(size=m.sum()) + 1j * rng.normal(size=m.sum())
    return G.GridFunction.from_coefficients(g, c)


@pytest.fixture
def pair():
    g = G.TorusGrid.with_resolution(1, 4, 128)
    return band_limited(g, 1), band_limited(g, 2)


def test_constant_symbol_is_product(pair):
    f1, f2 = pair
    T = E.apply(E.Multiplier.constant(1.0), f1, f2)
    assert np.abs(T.values - f1.values * f2.values).max() < 1e-10 * np.abs(f1.values * f2.values).max()


def test_exponential_symbol_translates(pair):
    f1, f2 = pair
    g = f1.grid
    k1, k2 = 8, -3  # multiples of the sample spacing
    s1, s2 = int(round(k1 / g.h)), int(round(k2 / g.h))
    k1, k2 = s1 * g.h, s2 * g.h
    T = E.apply(E.Multiplier.exponential([k1], [k2]), f1, f2)
    ref = np.roll(f1.values, -s1) * np.roll(f2.values, -s2)
    assert np.abs(T.values - ref).max() < 1e-9 * np.abs(ref).max()


def test_separable_factorizes(pair):
    f1, f2 = pair
    a = lambda xi: np.exp(-xi[:, 0] ** 2)
    b = lambda xi: 1 / (1 + xi[:, 0] ** 2)
    T = E.apply(E.Separable(a, b), f1, f2)
    xi = f1.grid.freq_points()
    g1 = G.GridFunction.from_coefficients(f1.grid, f1.coefficients * a(xi).reshape(f1.grid.shape))
    g2 = G.GridFunction.from_coefficients(f2.grid, f2.coefficients * b(xi).reshape(f2.grid.shape))
    ref = g1.values * g2.values
    assert np.abs(T.values - ref).max() < 1e-10 * np.abs(ref).max()


def test_lattice_bump_fast_path(pair):
    f1, f2 = pair
    s = E.lattice_bump_symbol([(0, 1), (1, -1), (2, 0)], E.BumpProfile(radius=0.4, shape="box"), [1, 2, 0.5])
    a, b = E.apply(s, f1, f2), E.apply(s, f1, f2, fast=False)
    assert np.abs(a.values - b.values).max() < 1e-10 * np.abs(b.values).max()


def test_single_bump_symbol():
    prof = E.BumpProfile()
    s = E.lattice_bump_symbol([(0, 0)], prof)
    xi = np.array([[0.0], [0.01], [0.2]])
    assert np.allclose(s.matrix(xi, xi), np.multiply.outer(prof.half(xi), prof.half(xi)))
    with pytest.raises(ValueError):
        E.lattice_bump_symbol([(0, 0)], E.BumpProfile(radius=0.9, shape="box"))


def test_modulated_bump_single_delta():
    A = L.LatticeVector.delta([3])
    g = E.default_test_grid(1, 5)
    f1, _ = E.modulated_bump_pair(A, A, 1.0, g)
    env = E.bump_envelope(g, 1.0).values
    x = g.axis()
    assert np.abs(f1.values - np.exp(3j * x) * env).max() < 1e-12 * np.abs(env).max()


def test_bridge_identity():
    rng = np.random.default_rng(7)
    V = L.random_small_weight(rng, radius=2)
    A = L.LatticeVector(1, np.arange(-2, 3).reshape(-1, 1), rng.uniform(0.1, 1, 5))
    assert E.bridge_identity_error(V, A, A, 2.0, E.default_test_grid(1, 6, 2.0)) < 1e-8


def test_wnorm_scaling_band():
    A = L.LatticeVector(1, [[0], [2], [-3]], [1.0, 0.5, 2.0])
    for p in (1, 2, math.inf):
        r = E.wnorm_scaling_ratio(A, 1.0, p, 2)
        assert abs(r / E.PHI_NORMS[float(p)] - 1) < E.WNORM_BAND


def test_opnorm_constant_symbol_near_holder():
    rep = E.opnorm_lower(E.Multiplier.constant(1.0), 2, 2, 1, trials=2)
    assert 0.9 < rep.lower < 1.1


def test_cell_decomposition_of_one():
    d = E.symbol_cell_decompose(E.Multiplier.constant(1.0))
    assert d.partition_error < 1e-12 and d.reconstruction_error < 1e-12


def test_cell_fourier_convergence_and_shift():
    pf = lambda e: np.prod(E.partition_1d(e), axis=-1)
    res = [E.cell_fourier_coefficients(pf, (0, 0), M=2, K_t=K) for K in (24, 48)]
    assert res[1].reconstruction_residual < res[0].reconstruction_residual < 1e-3
    assert all(r.decay_ok for r in res)
    rep = E.cell_fourier_coefficients(lambda e: np.exp(2j * e[..., 0]) * pf(e), (0, 0), K_t=24)
    c = np.abs(rep.coefficients)
    assert tuple(np.array(np.unravel_index(c.argmax(), c.shape)) - 24) == (2, 0)


def test_sobolev_majorant_dominates_constant():
    s = E.sobolev_majorant(E.Multiplier.constant(1.0))
    assert s.dominated and np.all(s.W > 0)


def test_card_e_sets():
    assert len(E.card_e_set(4)) == 16
    assert len(E.card_e_set(4, "diagonal")) == 4
    assert np.array_equal(E.card_e_set(8, "random-sign", 3), E.card_e_set(8, "random-sign", 3))
    with pytest.raises(ValueError):
        E.card_e_scaling(2, 2, 1, sizes=(4, 2))
