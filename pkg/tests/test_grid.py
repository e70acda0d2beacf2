import math

import numpy as np
import pytest

from bilinlab import grid as G


def band_limited(g, seed=0, K=4):
    rng = np.random.default_rng(seed)
    c = np.zeros(g.shape, dtype=complex)
    m = np.max(np.abs(np.stack(g.freq_mesh())), axis=0) < K
    c[m] = rng.normal(size=m.sum()) + 1j * rng.normal(size=m.sum())
    return G.GridFunction.from_coefficients(g, c)


def test_grid_validation():
    with pytest.raises(ValueError):
        G.TorusGrid(1, 10.0, 31)
    g = G.TorusGrid.with_resolution(1, 10, 64)
    assert g.L == pytest.approx(20 * math.pi)
    assert g.dxi == pytest.approx(0.1)


def test_coefficients_of_constant_and_exponential():
    g = G.TorusGrid.with_resolution(1, 2, 64)
    one = G.GridFunction(g, np.ones(g.shape))
    c = one.coefficients
    k0 = g.integer_index([0])
    assert c[k0] == pytest.approx(g.L)
    assert np.abs(c).sum() == pytest.approx(g.L)
    e = G.GridFunction.from_function(g, lambda x: np.exp(3j * x))
    idx = g.integer_index([3])
    assert e.coefficients[idx] == pytest.approx(g.L)


@pytest.mark.parametrize("n", [1, 2])
def test_parseval(n):
    g = G.TorusGrid.with_resolution(n, 3, 64 if n == 1 else 32)
    f = band_limited(g, K=2)
    lhs = G.lp_norm(f, 2) ** 2
    rhs = np.sum(np.abs(f.coefficients) ** 2) / g.L ** n
    assert abs(lhs - rhs) / lhs < 1e-12


def test_band_piece_support():
    g = G.TorusGrid.with_resolution(1, 8, 256)
    kappa = G.make_square_partition_window()
    f = G.GridFunction.from_function(g, lambda x: np.exp(2j * x))
    assert np.allclose(G.band_piece(f, [2], kappa).values, f.values)
    for k in (0, 4, -2):
        assert np.abs(G.band_piece(f, [k], kappa).values).max() < 1e-12


@pytest.mark.parametrize("n", [1, 2])
def test_w22_equals_l2(n):
    g = G.TorusGrid.with_resolution(n, 4, 256 if n == 1 else 64)
    f = band_limited(g, seed=n, K=3)
    w = G.wiener_amalgam_norm(f, 2, 2)
    assert abs(w - G.lp_norm(f, 2)) / w < 1e-10


def test_lp_norm_examples():
    g = G.TorusGrid.with_resolution(1, 2, 64)
    one = G.GridFunction(g, np.ones(g.shape))
    assert G.lp_norm(one, 2) == pytest.approx(math.sqrt(g.L))
    e = G.GridFunction.from_function(g, lambda x: np.exp(1j * x))
    assert G.lp_norm(e, math.inf) == pytest.approx(1)


def test_wnorm_rejects_uncovered_spectrum():
    g = G.TorusGrid.with_resolution(1, 4, 256)
    f = band_limited(g, K=5)
    with pytest.raises(ValueError):
        G.wiener_amalgam_norm(f, 2, 2, window_box_radius=1)


def test_hardy_quasinorm_dominates():
    g = G.TorusGrid.with_resolution(1, 4, 512)
    f = G.GridFunction.from_function(g, lambda x: np.exp(-x * x))
    assert G.local_hardy_quasinorm(f, 1) >= 0.99 * G.lp_norm(f, 1)


def test_bmo_constant_and_refinement():
    g = G.TorusGrid(1, 16.0, 512)
    assert G.bmo_norm(G.GridFunction(g, np.full(g.shape, -3.0))) == pytest.approx(3)
    saw = lambda x: (x % 2.0) - 1.0
    a = G.bmo_norm(G.GridFunction.from_function(g, saw))
    g2 = G.TorusGrid(1, 16.0, 1024)
    b = G.bmo_norm(G.GridFunction.from_function(g2, saw))
    assert abs(a - b) / b < 0.05


def test_save_load_roundtrip(tmp_path):
    g = G.TorusGrid.with_resolution(1, 2, 32)
    f = band_limited(g, K=2)
    path = f.save(tmp_path / "f.json")
    h = G.GridFunction.load(path)
    assert np.allclose(h.values, f.values) and h.grid == g
