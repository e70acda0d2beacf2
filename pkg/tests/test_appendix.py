import math
from fractions import Fraction as F

import numpy as np
import pytest

from bilinlab import appendix as A
from bilinlab import grid as G


def test_vandermonde_example():
    t = A.vandermonde_coeffs(2, 1, 0)
    assert t.exact
    assert [[int(v) for v in row] for row in t.P] == [[1, -1], [0, 1]]
    assert t.residual == 0


@pytest.mark.parametrize("N", range(2, 7))
def test_vandermonde_rational_is_exact(N):
    t = A.vandermonde_coeffs(N, F(3, 7), F(-2, 5))
    assert t.residual == 0
    assert t.bound_ratio <= t.bound_constant


@pytest.mark.parametrize("N,lam,z", [(3, 0.5, 0.2), (5, 1.7, -0.9), (6, -1.3, 0.4)])
def test_vandermonde_float(N, lam, z):
    t = A.vandermonde_coeffs(N, lam, z)
    assert t.residual < 1e-9
    assert t.bound_ratio <= t.bound_constant


def test_vandermonde_rejects_bad_params():
    with pytest.raises(ValueError):
        A.vandermonde_coeffs(1, 1)
    with pytest.raises(ValueError):
        A.vandermonde_coeffs(3, 0)


def test_tensor_identity():
    assert A.tensor_coeffs(3, F(1, 2), (F(1, 3), F(-1, 4))).residual == 0
    assert A.tensor_coeffs(3, 0.8, (0.1, -0.6)).residual < 1e-9


def test_reconstruct_polynomials():
    sq = lambda p: p[:, 0] ** 2
    assert A.reconstruct_derivative(sq, [0.7], [2], 3, 0.4, 0.1) == pytest.approx(2, abs=1e-10)
    assert A.reconstruct_derivative(lambda p: p[:, 0], [0.2], [1], 2, 1.0, 0.0) == pytest.approx(1, abs=1e-12)
    mixed = lambda p: p[:, 0] ** 2 * p[:, 1]
    assert A.reconstruct_derivative(mixed, [0.5, -1.0], [1, 1], 3, 0.5) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("N", [2, 3])
def test_reconstruct_remainder_rate(N):
    f = lambda p: np.exp(-p[:, 0] ** 2)
    y = 0.3
    exact = -2 * y * math.exp(-y * y)
    lams = [1 / 16, 1 / 32, 1 / 64]
    errs = [abs(A.reconstruct_derivative(f, [y], [1], N, lam, 0.0) - exact) for lam in lams]
    slope = np.polyfit(np.log(lams), np.log(errs), 1)[0]
    assert slope > N - 1 - 0.15


def test_maximal_function():
    g = G.TorusGrid(1, 20.0, 256)
    c = G.GridFunction(g, np.full(g.shape, -1.5))
    assert np.allclose(A.maximal_function(c, 0.5).values, 1.5)
    rng = np.random.default_rng(0)
    f = G.GridFunction(g, rng.normal(size=g.shape))
    assert np.all(A.maximal_function(f, 1.0).values.real >= np.abs(f.values) - 1e-12)


def test_spectral_derivative():
    g = A.ModelGrid(0, 1, 20.0, 256)
    x = g.axis()
    d = A.spectral_derivative(np.exp(-x ** 2), g.h, (1,))
    assert np.abs(d - (-2 * x * np.exp(-x ** 2))).max() < 1e-10


def test_gn_theta():
    assert A.gn_theta(2, 1, math.inf) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        A.gn_theta(1, 2, 4)


def test_gn_check_on_family():
    grid = A.gn_grids(1)[0]
    for f in A.gaussian_family(count=3):
        rep = A.gn_interpolation_check(f, grid, 1, 2, 1, math.inf)
        assert rep.passed and rep.ratio > 0
        obj = rep.to_json_obj()
        assert set(obj) == {"operation", "params", "residuals", "ratios", "pass"}


def test_lambda_tradeoff():
    g = A.tradeoff_grid()
    f = A.gaussian_family(count=1, n=0, d=1)[0]
    rep = A.lambda_tradeoff_check(f, g, (1,), 2)
    assert rep["pass"] and len(rep["ratios"]) == 9
    with pytest.raises(ValueError):
        A.lambda_tradeoff_check(f, g, (2,), 2)
