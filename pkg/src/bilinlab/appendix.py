"""Derivative reconstruction from samples and interpolation inequalities.

The Vandermonde matrix ``A[j, k] = (lam k + z)^j`` factors as
``S(z) diag(lam^i) K`` with ``K[i, k] = k^i`` and ``S(z)[j, i] = C(j, i) z^{j-i}``,
so the normalized cofactors ``P = lam^{N(N-1)/2} A^{-1}`` are

    P[k, j] = sum_{i >= j} Kinv[k, i] C(i, j) (-z)^{i-j} lam^{N(N-1)/2 - i}.

Each ``P[k, j]`` is a homogeneous polynomial of degree ``N(N-1)/2 - j`` in
``(z, lam)``, and the sum of the absolute values of its coefficients gives
the size-bound constant.  With rational ``(lam, z)`` everything is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.ndimage import uniform_filter1d

from ._util import derive_seeds
from .grid import GridFunction

# Frozen calibration constants (tools/calibrate_appendix.py).  Each is the
# largest ratio seen on the seeded oracle family times a safety factor 2.
GN_C_MAX = 2.3
POINTWISE_C_MAX = 3.0
TRADEOFF_C = 1.6
CALIBRATION_SAFETY = 2.0
APPENDIX_FAMILY_SEED = 20240612
APPENDIX_FAMILY_SIZE = 9

# (K, q, q~, r) combinations exercised by the calibration and the checks
GN_CASES = ((1, 2.0, 1.0, math.inf), (1, 3.0, 2.0, math.inf), (2, 2.0, 1.0, 4.0))


# ---------------------------------------------------------------------------
# Vandermonde tables


def _exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


@lru_cache(maxsize=None)
def _kinv(N: int):
    """Exact inverse of ``K[i, k] = k^i`` as nested tuples of Fractions."""
    a = [[Fraction(k) ** i for k in range(N)] + [Fraction(int(i == r)) for r in range(N)] for i in range(N)]
    for col in range(N):
        piv = next(r for r in range(col, N) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(N):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    # rows of a now hold K^{-1}; K^{-1}[k, i] is row k
    return tuple(tuple(row[N:]) for row in a)


@lru_cache(maxsize=None)
def size_bound_constants(N: int) -> tuple:
    """``c[k][j]`` = sum of |coefficients| of ``P_{k,j}`` as a polynomial in ``(z, lam)``."""
    Ki = _kinv(N)
    return tuple(
        tuple(sum(abs(Ki[k][i]) * math.comb(i, j) for i in range(j, N)) for j in range(N))
        for k in range(N)
    )


@dataclass(frozen=True)
class VandermondeTable:
    """Normalized cofactor coefficients ``P_{k,j}`` or tensor ``P~_{beta,gamma}``.

    Attributes
    ----------
    N, lam, z, d
        Parameters; ``z`` is a tuple of length ``d``.
    P : ndarray or list
        ``d = 1``: ``(N, N)`` array indexed ``[k, j]``.  Tensor: array of
        shape ``(N,)*d + (N,)*d`` indexed ``[beta, gamma]``.  Object dtype
        (Fractions) in the rational path.
    exact : bool
        True when computed in rational arithmetic.
    residual : float
        Max deviation of the reproduction identity from the Kronecker delta.
    bound_constant : float
        ``c`` such that ``|P| <= c (|z| + |lam|)^{N(N-1)d/2 - |gamma|}``.
    bound_ratio : float
        Largest observed ``|P| / (|z| + |lam|)^{...}``.
    """

    N: int
    lam: object
    z: tuple
    d: int
    P: np.ndarray
    exact: bool
    residual: float
    bound_constant: float
    bound_ratio: float = field(default=0.0)

    @property
    def degree(self) -> int:
        return self.N * (self.N - 1) // 2


def _check_params(N, lam):
    if N < 2:
        raise ValueError("need N >= 2")
    if lam == 0:
        raise ValueError("lam must be nonzero")


def _table_1d(N: int, lam, z):
    Ki = _kinv(N)
    D = N * (N - 1) // 2
    exact = _exact(lam) and _exact(z)
    if exact:
        lam, z = Fraction(lam), Fraction(z)
        P = np.empty((N, N), dtype=object)
        for k in range(N):
            for j in range(N):
                P[k, j] = sum((Ki[k][i] * math.comb(i, j) * (-z) ** (i - j) * lam ** (D - i) for i in range(j, N)), Fraction(0))
    else:
        # exact arithmetic on the binary values, rounded once at the end
        Pe, _ = _table_1d(N, Fraction(float(lam)), Fraction(float(z)))
        P = Pe.astype(float)
    return P, exact


def _identity_matrix_1d(P, N, lam, z, exact):
    """``lam^{-D} sum_k (lam k + z)^{j'} P[k, j]`` evaluated exactly on the stored ``P``."""
    D = N * (N - 1) // 2
    lam = Fraction(lam) if exact else Fraction(float(lam))
    z = Fraction(z) if exact else Fraction(float(z))
    Pq = P if exact else np.vectorize(lambda v: Fraction(float(v)), otypes=[object])(P)
    R = np.empty((N, N), dtype=object)
    for jp in range(N):
        for j in range(N):
            R[jp, j] = sum(((lam * k + z) ** jp * Pq[k, j] for k in range(N)), Fraction(0)) / lam ** D
    return R


def _residual(R) -> float:
    n = R.shape[0]
    return float(max(abs(R[i, j] - int(i == j)) for i in range(n) for j in range(n)))


def vandermonde_coeffs(N: int, lam, z=0) -> VandermondeTable:
    """``P_{k,j}`` with ``lam^{-N(N-1)/2} sum_k (lam k + z)^{j'} P_{k,j} = [j = j']``.

    Ints and Fractions take the exact rational path.

    Examples
    --------
    >>> t = vandermonde_coeffs(2, 1, 0)
    >>> [[int(v) for v in row] for row in t.P]
    [[1, -1], [0, 1]]
    """
    _check_params(N, lam)
    P, exact = _table_1d(N, lam, z)
    res = _residual(_identity_matrix_1d(P, N, lam, z, exact))
    cs = size_bound_constants(N)
    base = abs(float(z)) + abs(float(lam))
    D = N * (N - 1) // 2
    ratio = max(abs(float(P[k, j])) / base ** (D - j) for k in range(N) for j in range(N))
    c = float(max(max(row) for row in cs))
    return VandermondeTable(N, lam, (z,), 1, P, exact, res, c, ratio)


def tensor_coeffs(N: int, lam, z, d: int | None = None) -> VandermondeTable:
    """Tensor coefficients ``P~_{beta,gamma} = prod_j P_{beta_j, gamma_j}(z_j)``.

    The reproduction identity ``lam^{-N(N-1)d/2} sum_beta (lam beta + z)^alpha
    P~_{beta,gamma} = [alpha = gamma]`` is verified for all multi-indices.
    """
    z = tuple(np.atleast_1d(z).tolist()) if not isinstance(z, (tuple, list)) else tuple(z)
    d = len(z) if d is None else d
    if len(z) != d:
        raise ValueError("z must have d components")
    _check_params(N, lam)
    if d == 1:
        return vandermonde_coeffs(N, lam, z[0])
    tabs = [_table_1d(N, lam, zj) for zj in z]
    exact = all(t[1] for t in tabs)
    P = tabs[0][0]
    for t, _ in tabs[1:]:
        P = np.multiply.outer(P, t)
    # axes are (b1, g1, b2, g2, ...) -> (b1..bd, g1..gd)
    order = [2 * i for i in range(d)] + [2 * i + 1 for i in range(d)]
    P = np.transpose(P, order)
    D = N * (N - 1) // 2
    # the sum over beta factorizes into 1-D identities, each evaluated exactly
    R = _identity_matrix_1d(tabs[0][0], N, lam, z[0], tabs[0][1])
    for (t, ex), zj in zip(tabs[1:], z[1:]):
        R = np.kron(R, _identity_matrix_1d(t, N, lam, zj, ex))
    worst = _residual(R)
    idx = list(itertools.product(range(N), repeat=d))
    Pf = P.reshape(N ** d, N ** d)
    cs = size_bound_constants(N)
    c = float(max(max(row) for row in cs)) ** d
    base = math.sqrt(sum(float(v) ** 2 for v in z)) + abs(float(lam))
    ratio = max(
        abs(float(Pf[b_i, g_i])) / base ** (D * d - sum(gamma))
        for b_i in range(N ** d) for g_i, gamma in enumerate(idx)
    )
    return VandermondeTable(N, lam, z, d, P, exact, worst, c, ratio)


def reconstruct_derivative(f, y, gamma, N: int, lam, z=None) -> float:
    """Taylor-polynomial part of ``d^gamma f(y)`` from ``N^d`` samples.

    Returns ``gamma! lam^{-N(N-1)d/2} sum_beta f(y + lam beta + z) P~_{beta,gamma}``,
    which is exact for polynomials of degree at most ``N - 1`` in each variable.

    Parameters
    ----------
    f : callable
        Evaluated on an array of points of shape ``(N^d, d)``.
    y : array_like, shape (d,)
    gamma : sequence of int
        Multi-index with ``|gamma| < N``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    gamma = tuple(int(g) for g in np.atleast_1d(gamma))
    d = len(gamma)
    if sum(gamma) >= N:
        raise ValueError("need |gamma| < N")
    z = (0.0,) * d if z is None else tuple(float(v) for v in np.atleast_1d(z))
    tab = tensor_coeffs(N, float(lam), z, d)
    P = np.asarray(tab.P, dtype=float)
    betas = np.array(list(itertools.product(range(N), repeat=d)), dtype=float)
    pts = y[None, :] + float(lam) * betas + np.asarray(z)[None, :]
    vals = np.asarray(f(pts), dtype=float).reshape(-1)
    col = P.reshape(N ** d, N ** d)[:, np.ravel_multi_index(gamma, (N,) * d)]
    D = N * (N - 1) // 2
    return float(math.prod(math.factorial(g) for g in gamma) * (vals @ col) / float(lam) ** (D * d))


# ---------------------------------------------------------------------------
# maximal functions


def dyadic_radii(M: int) -> list:
    """Half-widths ``0, 1, 2, 4, ...`` (in grid points) below ``M/2``."""
    out = [0]
    r = 1
    while 2 * r + 1 <= M:
        out.append(r)
        r *= 2
    return out


def maximal_array(a, eps: float = 1.0, axes=None) -> np.ndarray:
    """``M_eps`` of a sampled array over centered dyadic cubes (periodic)."""
    if eps <= 0:
        raise ValueError("need eps > 0")
    a = np.abs(np.asarray(a)) ** eps
    axes = tuple(range(a.ndim)) if axes is None else tuple(axes)
    M = min(a.shape[ax] for ax in axes)
    best = a.copy()
    for r in dyadic_radii(M)[1:]:
        m = a
        for ax in axes:
            m = uniform_filter1d(m, 2 * r + 1, axis=ax, mode="wrap")
        np.maximum(best, m, out=best)
    return best ** (1.0 / eps)


def maximal_function(f: GridFunction, eps: float = 1.0) -> GridFunction:
    """``M_eps f = M_1(|f|^eps)^{1/eps}`` with centered dyadic cubes on the grid."""
    return GridFunction(f.grid, maximal_array(f.values, eps))


# ---------------------------------------------------------------------------
# interpolation checks


@dataclass(frozen=True)
class ModelGrid:
    """Periodic model grid for ``R^n x R^d`` (``n`` x-axes first, then ``d`` y-axes)."""

    n: int = 1
    d: int = 1
    L: float = 40.0
    M: int = 256

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def ndim(self) -> int:
        return self.n + self.d

    def axis(self):
        return -self.L / 2 + self.h * np.arange(self.M)

    def mesh(self):
        return np.meshgrid(*([self.axis()] * self.ndim), indexing="ij")

    def refined(self, times: int = 1) -> "ModelGrid":
        return ModelGrid(self.n, self.d, self.L, self.M * 2 ** times)

    def sample(self, func) -> np.ndarray:
        return np.asarray(func(*self.mesh()), dtype=float)


def multi_indices(dim: int, order: int, exact: bool = False):
    """Multi-indices of length ``dim`` with ``|alpha| <= order`` (or ``== order``)."""
    for a in itertools.product(range(order + 1), repeat=dim):
        s = sum(a)
        if (s == order) if exact else (s <= order):
            yield a


def spectral_derivative(values, h: float, alpha) -> np.ndarray:
    """``d^alpha`` of periodic samples by FFT differentiation."""
    c = np.fft.fftn(values)
    for ax, k in enumerate(alpha):
        if k:
            w = 2 * math.pi * np.fft.fftfreq(values.shape[ax], h)
            shape = [1] * values.ndim
            shape[ax] = -1
            fac = (1j * w) ** k
            if k % 2 == 1 and values.shape[ax] % 2 == 0:
                fac[values.shape[ax] // 2] = 0.0
            c = c * fac.reshape(shape)
    return np.real(np.fft.ifftn(c))


def _lq(values, q, h, d):
    v = np.abs(values)
    if math.isinf(q):
        return float(v.max())
    return float((np.sum(v ** q) * h ** d) ** (1.0 / q))


def gn_theta(q, qt, r) -> float:
    """``theta`` from ``1/q = (1 - theta)/qt + theta/r``."""
    q, qt, r = float(q), float(qt), float(r)
    if not (0 < qt < q < r and r > 1):
        raise ValueError("need 0 < qt < q < r and r > 1")
    return (1 / qt - 1 / q) / (1 / qt - 1 / r)


@dataclass
class GNReport:
    """Outcome of :func:`gn_interpolation_check` (JSON-ready via ``to_json_obj``)."""

    K: int
    N: int
    theta: float
    eps: float
    lhs: float
    sup_factor: float
    deriv_factor: float
    rhs: float
    ratio: float
    c_max: float
    passed: bool
    pointwise_ratio: float
    pointwise_c: float
    pointwise_passed: bool
    grid: dict

    def to_json_obj(self) -> dict:
        return {
            "operation": "gn_interpolation_check",
            "params": {"K": self.K, "N": self.N, "theta": self.theta, "eps": self.eps, "grid": self.grid,
                       "maximal": "centered dyadic cubes"},
            "residuals": {},
            "ratios": {"gn": self.ratio, "pointwise": self.pointwise_ratio},
            "pass": bool(self.passed and self.pointwise_passed),
        }


def gn_interpolation_check(f, grid: ModelGrid, K: int, q, qt, r, c_max: float = GN_C_MAX,
                           pointwise_c: float = POINTWISE_C_MAX, N: int | None = None,
                           eps: float | None = None) -> GNReport:
    """Check the interpolation inequality on a sampled function.

    ``LHS = || sum_{|alpha|<=K} sup_x |d^alpha f| ||_{L^q_y}`` against
    ``||sup_x |f| ||_{L^qt}^{1-theta} || sum_{|alpha|<=N} sup_x |d^alpha f| ||_{L^r}^theta``
    with ``N = ceil(K / theta)``.  Derivatives are spectral on the periodic
    model grid.  Also reports the largest pointwise ratio
    ``|d^gamma f| / ([M_eps f]^{1-|gamma|/N} [sum_{|alpha|=N} M_1 d^alpha f]^{|gamma|/N})``
    over ``0 < |gamma| <= K`` and grid points where the denominator is not
    negligible.

    Parameters
    ----------
    f : callable or ndarray
        ``f(x..., y...)`` on ``grid.mesh()``, or its samples.
    """
    theta = gn_theta(q, qt, r)
    q, qt, r = float(q), float(qt), float(r)
    N = N or max(K + 1, math.ceil(K / theta - 1e-12))
    eps = eps or min(1.0, qt / 2)
    vals = f if isinstance(f, np.ndarray) else grid.sample(f)
    h, dim = grid.h, grid.ndim
    xaxes = tuple(range(grid.n))
    derivs = {}

    def D(alpha):
        if alpha not in derivs:
            derivs[alpha] = vals if not any(alpha) else spectral_derivative(vals, h, alpha)
        return derivs[alpha]

    def supx(a):
        return np.max(np.abs(a), axis=xaxes)

    lhs_f = sum(supx(D(a)) for a in multi_indices(dim, K))
    lhs = _lq(lhs_f, q, h, grid.d)
    sup_factor = _lq(supx(vals), qt, h, grid.d)
    deriv_factor = _lq(sum(supx(D(a)) for a in multi_indices(dim, N)), r, h, grid.d)
    rhs = sup_factor ** (1 - theta) * deriv_factor ** theta
    ratio = lhs / rhs
    # pointwise log-convexity bound
    Meps = maximal_array(vals, eps)
    Mtop = sum(maximal_array(D(a), 1.0) for a in multi_indices(dim, N, exact=True))
    pw = 0.0
    for g in multi_indices(dim, K):
        s = sum(g)
        if s == 0:
            continue
        den = Meps ** (1 - s / N) * Mtop ** (s / N)
        mask = den > 1e-8 * den.max()
        pw = max(pw, float(np.max(np.abs(D(g))[mask] / den[mask])))
    return GNReport(K, N, theta, eps, lhs, sup_factor, deriv_factor, rhs, ratio, c_max, ratio <= c_max,
                    pw, pointwise_c, pw <= pointwise_c,
                    {"n": grid.n, "d": grid.d, "L": grid.L, "M": grid.M})


def lambda_tradeoff_check(f, grid: ModelGrid, gamma, N: int, eps: float = 1.0,
                          lambdas=None, c: float = TRADEOFF_C) -> dict:
    """Check ``|d^gamma f| <= c (lam^{-|gamma|} M_eps f + lam^{N-|gamma|} sum_{|alpha|=N} M_1 d^alpha f)``.

    Returns per-``lam`` maximal ratios and the overall pass flag.
    """
    gamma = tuple(gamma)
    s = sum(gamma)
    if not 0 < s < N:
        raise ValueError("need 0 < |gamma| < N")
    lambdas = [2.0 ** k for k in range(-4, 5)] if lambdas is None else list(lambdas)
    vals = f if isinstance(f, np.ndarray) else grid.sample(f)
    lhs = np.abs(spectral_derivative(vals, grid.h, gamma))
    Meps = maximal_array(vals, eps)
    Mtop = sum(maximal_array(spectral_derivative(vals, grid.h, a), 1.0)
               for a in multi_indices(grid.ndim, N, exact=True))
    ratios = {}
    for lam in lambdas:
        rhs = lam ** (-s) * Meps + lam ** (N - s) * Mtop
        ratios[lam] = float(np.max(lhs / rhs))
    worst = max(ratios.values())
    return {"operation": "lambda_tradeoff", "params": {"gamma": list(gamma), "N": N, "eps": eps, "c": c},
            "ratios": {repr(k): v for k, v in ratios.items()}, "max_ratio": worst, "pass": worst <= c}


def gaussian_family(seed: int = APPENDIX_FAMILY_SEED, count: int = APPENDIX_FAMILY_SIZE, n: int = 1, d: int = 1):
    """Seeded Gaussian sums and smooth bumps on ``R^n x R^d`` (callables)."""
    fams = []
    for i, s in enumerate(derive_seeds(seed, count)):
        rng = np.random.default_rng(s)
        if i % 3 == 2:
            cen = rng.uniform(-3, 3, size=n + d)
            rad = rng.uniform(3, 6)

            def bump(*xs, cen=cen, rad=rad):
                r2 = sum((x - c) ** 2 for x, c in zip(xs, cen)) / rad ** 2
                return np.clip(1 - r2, 0, None) ** 6
            fams.append(bump)
        else:
            k = int(rng.integers(1, 4))
            amps = rng.uniform(0.5, 2.0, size=k) * rng.choice([-1, 1], size=k)
            cens = rng.uniform(-4, 4, size=(k, n + d))
            widths = rng.uniform(0.8, 2.0, size=k)

            def gsum(*xs, amps=amps, cens=cens, widths=widths):
                out = 0.0
                for a, c, w in zip(amps, cens, widths):
                    out = out + a * np.exp(-sum((x - cc) ** 2 for x, cc in zip(xs, c)) / (2 * w * w))
                return out
            fams.append(gsum)
    return fams


def gn_grids(levels: int = 3) -> list:
    """Base model grid for interpolation checks and its dyadic refinements."""
    base = ModelGrid(1, 1, 40.0, 256)
    return [base.refined(k) for k in range(levels)]


def tradeoff_grid() -> ModelGrid:
    """1-D grid fine enough that centered cubes resolve ``lam = 2^-4``."""
    return ModelGrid(0, 1, 24.0, 4096)


def tradeoff_cases():
    """``(eps, N, gamma)`` combinations for the lambda-tradeoff check."""
    return [(eps, N, (g,)) for eps in (1.0, 0.5) for N in (2, 3) for g in range(1, N)]
