"""Bilinear Fourier multipliers on torus grids.

The torus analog of ``T_sigma(f1, f2)(x) = (2 pi)^{-2n} iint sigma(xi1, xi2)
F f1(xi1) F f2(xi2) e^{i x (xi1 + xi2)} dxi1 dxi2`` is

    T(x_j) = L^{-2n} sum_{xi1, xi2} sigma(xi1, xi2) c_{f1}(xi1) c_{f2}(xi2) e^{i x_j (xi1 + xi2)}

which :func:`apply` evaluates exactly at the grid points.  The module also
builds lattice-bump multipliers, the modulated test functions used in
sharpness arguments, empirical operator-norm lower bounds, and the symbol
decompositions (cells, Fourier coefficients, Sobolev majorant) that appear
in boundedness proofs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import lattice
from ._util import as_exponent, derive_seeds, lq_norm
from .grid import (
    GridFunction,
    TorusGrid,
    local_hardy_quasinorm,
    lp_norm,
    smoothstep,
)

# ---------------------------------------------------------------------------
# profiles


def smooth_bump_1d(t, half_width: float) -> np.ndarray:
    """``C^inf`` bump ``exp(1 - 1/(1 - (t/w)^2))`` on ``|t| < w``, value 1 at 0."""
    u = np.asarray(t, dtype=float) / half_width
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - u[m] ** 2))
    return out


def plateau_1d(t, inner: float = 0.25, outer: float = 0.5, order: int = 6) -> np.ndarray:
    """1 on ``|t| <= inner``, 0 for ``|t| >= outer``, smoothstep in between."""
    t = np.abs(np.asarray(t, dtype=float))
    return smoothstep((outer - t) / (outer - inner), order)


def partition_1d(t, order: int = 4) -> np.ndarray:
    """``S(1 - |t|)``; integer translates sum to 1 and ``supp`` is ``[-1, 1]``."""
    t = np.abs(np.asarray(t, dtype=float))
    return smoothstep(1.0 - t, order)


@dataclass(frozen=True)
class BumpProfile:
    """Tensor smoothstep bump ``Phi`` on ``R^{2n}``.

    Each coordinate factor is ``S_N(1 - (t/w)^2)`` on ``|t| < w``.  With
    ``shape="euclidean"`` the per-axis half-width is ``radius/sqrt(2n)`` so
    that the support lies in the Euclidean ball of the given radius; with
    ``shape="box"`` it is ``radius`` itself.

    Parameters
    ----------
    n : int
        Dimension of each frequency variable.
    radius : float
        Support radius (default 1/20).
    order : int
        Smoothstep order; the profile is ``C^order``.
    shape : {"euclidean", "box"}
    """

    n: int = 1
    radius: float = 0.05
    order: int = 4
    shape: str = "euclidean"

    @property
    def half_width(self) -> float:
        if self.shape == "euclidean":
            return self.radius / math.sqrt(2 * self.n)
        if self.shape == "box":
            return self.radius
        raise ValueError(f"unknown shape {self.shape!r}")

    def factor(self, t) -> np.ndarray:
        """One coordinate factor."""
        u = np.asarray(t, dtype=float) / self.half_width
        return np.where(np.abs(u) < 1, smoothstep(1.0 - u ** 2, self.order), 0.0)

    def half(self, xi) -> np.ndarray:
        """Product of the factors over the last axis (one frequency variable)."""
        return np.prod(self.factor(xi), axis=-1)

    def __call__(self, zeta) -> np.ndarray:
        return self.half(zeta)


# ---------------------------------------------------------------------------
# symbols


class Symbol:
    """x-independent bilinear multiplier ``sigma(xi1, xi2)``."""

    n: int = 1

    def matrix(self, xi1, xi2) -> np.ndarray:
        """Values on the product of point sets ``xi1`` (k1, n) and ``xi2`` (k2, n)."""
        raise NotImplementedError

    def __call__(self, xi1, xi2):
        xi1 = np.atleast_2d(np.asarray(xi1, dtype=float))
        xi2 = np.atleast_2d(np.asarray(xi2, dtype=float))
        return self.matrix(xi1, xi2)

    def __add__(self, other):
        return SumSymbol([self, other])

    def to_json_obj(self) -> dict:
        raise NotImplementedError


class Multiplier(Symbol):
    """Dense multiplier given by a vectorized callable ``func(xi1, xi2)``.

    ``func`` receives broadcastable arrays of shape ``(k1, 1, n)`` and
    ``(1, k2, n)`` and returns ``(k1, k2)`` values.  Use
    :meth:`from_samples` for a multiplier tabulated on a grid's product
    frequency lattice.
    """

    def __init__(self, func, n: int = 1, samples=None, grid: TorusGrid | None = None):
        self.func = func
        self.n = n
        self.samples = samples
        self.grid = grid

    @classmethod
    def from_samples(cls, grid: TorusGrid, samples) -> "Multiplier":
        samples = np.asarray(samples, dtype=complex).reshape(grid.M ** grid.n, grid.M ** grid.n)
        return cls(None, grid.n, samples, grid)

    @classmethod
    def constant(cls, value: complex = 1.0, n: int = 1) -> "Multiplier":
        return cls(lambda a, b: np.full(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]), value, dtype=complex), n)

    @classmethod
    def exponential(cls, k1, k2, n: int = 1) -> "Multiplier":
        """``exp(i (k1 . xi1 + k2 . xi2))``."""
        k1 = np.atleast_1d(np.asarray(k1, dtype=float))
        k2 = np.atleast_1d(np.asarray(k2, dtype=float))
        return cls(lambda a, b: np.exp(1j * (a @ k1 + b @ k2)), n)

    def matrix(self, xi1, xi2):
        if self.samples is not None:
            raise TypeError("tabulated multipliers are evaluated through apply")
        return np.asarray(self.func(xi1[:, None, :], xi2[None, :, :]), dtype=complex)

    def to_json_obj(self) -> dict:
        return {"kind": "multiplier", "n": self.n, "tabulated": self.samples is not None}


class Separable(Symbol):
    """``sigma(xi1, xi2) = a(xi1) b(xi2)`` with callables on ``(k, n)`` arrays."""

    def __init__(self, a, b, n: int = 1):
        self.a, self.b, self.n = a, b, n

    def matrix(self, xi1, xi2):
        return np.multiply.outer(np.asarray(self.a(xi1), dtype=complex), np.asarray(self.b(xi2), dtype=complex))

    def to_json_obj(self) -> dict:
        return {"kind": "separable", "n": self.n}


class LatticeBump(Symbol):
    """``m(xi1, xi2) = sum_{(nu1,nu2) in E} M(nu) Phi(xi1 - nu1, xi2 - nu2)``.

    ``Phi`` is a tensor profile (any object with ``half`` and ``half_width``
    such as :class:`BumpProfile` or :class:`PlateauProfile`).
    """

    def __init__(self, E, profile, coefficients=None):
        E = np.asarray(E, dtype=np.int64)
        if E.ndim == 1:
            E = E.reshape(1, -1)
        self.n = E.shape[1] // 2
        self.E = E
        self.profile = profile
        self.coefficients = np.ones(len(E)) if coefficients is None else np.asarray(coefficients, dtype=float)
        if len(self.coefficients) != len(E):
            raise ValueError("one coefficient per element of E is required")
        if profile.half_width > 0.5 + 1e-12:
            raise ValueError("cells overlap: profile half-width exceeds 1/2")

    @property
    def nu1(self):
        return self.E[:, : self.n]

    @property
    def nu2(self):
        return self.E[:, self.n:]

    def matrix(self, xi1, xi2):
        out = np.zeros((len(xi1), len(xi2)), dtype=complex)
        for (e1, e2), m in zip(zip(self.nu1, self.nu2), self.coefficients):
            out += m * np.multiply.outer(self.profile.half(xi1 - e1), self.profile.half(xi2 - e2))
        return out

    def weight(self) -> lattice.LatticeWeight:
        return lattice.LatticeWeight(self.n, self.E, np.abs(self.coefficients))

    def to_json_obj(self) -> dict:
        return {
            "kind": "lattice_bump",
            "n": self.n,
            "E": self.E.tolist(),
            "profile": {k: getattr(self.profile, k) for k in ("n", "radius", "order", "shape") if hasattr(self.profile, k)},
            "coefficients": [repr(float(c)) for c in self.coefficients],
        }


class SumSymbol(Symbol):
    def __init__(self, parts):
        self.parts = list(parts)
        self.n = self.parts[0].n

    def matrix(self, xi1, xi2):
        return sum(p.matrix(xi1, xi2) for p in self.parts)


@dataclass(frozen=True)
class PlateauProfile:
    """Tensor plateau ``phi~``: 1 on ``[-1/4, 1/4]^n``, zero outside ``[-1/2, 1/2]^n``."""

    n: int = 1
    order: int = 6
    half_width: float = 0.5

    def half(self, xi):
        return np.prod(plateau_1d(xi, 0.25, self.half_width, self.order), axis=-1)


def lattice_bump_symbol(E, profile: BumpProfile | None = None, coefficients=None) -> LatticeBump:
    """Lattice-bump multiplier ``m_{E,Phi}`` (optionally with coefficients)."""
    E = np.asarray(E, dtype=np.int64)
    n = E.shape[-1] // 2 if E.ndim > 1 else len(E) // 2
    return LatticeBump(E, profile or BumpProfile(n=n), coefficients)


def weight_symbol(V: lattice.LatticeWeight, profile=None) -> LatticeBump:
    """``sum_nu V(nu) phi~(xi1 - nu1) phi~(xi2 - nu2)`` with the plateau ``phi~``."""
    return LatticeBump(V.points, profile or PlateauProfile(V.dim), V.values)


def piecewise_constant_symbol(V: lattice.LatticeWeight) -> Multiplier:
    """``V~(xi1, xi2) = V(nu1, nu2)`` for ``xi_j in nu_j + [-1/2, 1/2)^n``."""
    n = V.dim

    def func(a, b):
        k1 = np.floor(a + 0.5).astype(np.int64)
        k2 = np.floor(b + 0.5).astype(np.int64)
        shape = np.broadcast_shapes(k1.shape[:-1], k2.shape[:-1])
        pts = np.concatenate([np.broadcast_to(k1, shape + (n,)), np.broadcast_to(k2, shape + (n,))], axis=-1)
        return V.lookup(pts.reshape(-1, 2 * n)).reshape(shape)

    return Multiplier(func, n)


# ---------------------------------------------------------------------------
# application


def _active(c, rel=0.0):
    a = np.abs(c).ravel()
    thr = rel * a.max() if a.size and a.max() > 0 else 0.0
    return np.nonzero(a > thr)[0]


def _phase_sum(grid, coeffs_rows, freq_rows, G):
    """``sum_r coeffs_r e^{i x xi_r} G_r(x)`` on the grid."""
    xs = [g.ravel() for g in grid.mesh()]
    x = np.stack(xs, axis=1)
    out = np.zeros(x.shape[0], dtype=complex)
    for start in range(0, len(coeffs_rows), 64):
        sl = slice(start, start + 64)
        ph = np.exp(1j * (freq_rows[sl] @ x.T))
        out += np.sum(coeffs_rows[sl, None] * ph * G[sl], axis=0)
    return out


def apply(sigma: Symbol, f1: GridFunction, f2: GridFunction, fast: bool = True) -> GridFunction:
    """Apply the bilinear multiplier ``sigma`` to ``(f1, f2)``.

    Slice algorithm: for each ``xi1`` in the spectrum of ``f1`` one inverse
    transform of ``sigma(xi1, .) c_{f2}`` is accumulated with the phase
    ``e^{i x xi1}``.  Lattice bumps with tensor profiles take the fast path
    (one band-limited product per element of ``E``), separable symbols a
    single product.  Accumulation order is fixed, so results are bitwise
    reproducible.
    """
    if f1.grid != f2.grid:
        raise ValueError("f1 and f2 live on different grids")
    grid = f1.grid
    if sigma.n != grid.n:
        raise ValueError("symbol dimension does not match the grid")
    if fast and isinstance(sigma, LatticeBump):
        return _apply_lattice_bump(sigma, f1, f2)
    if fast and isinstance(sigma, Separable):
        pts = grid.freq_points()
        a = np.asarray(sigma.a(pts)).reshape(grid.shape)
        b = np.asarray(sigma.b(pts)).reshape(grid.shape)
        g1 = GridFunction.from_coefficients(grid, a * f1.coefficients)
        g2 = GridFunction.from_coefficients(grid, b * f2.coefficients)
        return g1 * g2
    c1 = f1.coefficients.ravel()
    c2 = f2.coefficients.ravel()
    i1, i2 = _active(c1), _active(c2)
    pts = grid.freq_points()
    scale = grid.M ** grid.n / grid.L ** grid.n
    out = np.zeros(grid.M ** grid.n, dtype=complex)
    sign = grid._sign()
    for start in range(0, len(i1), 64):
        rows = i1[start:start + 64]
        if isinstance(sigma, Multiplier) and sigma.samples is not None:
            if sigma.grid != grid:
                raise ValueError("tabulated multiplier lives on another grid")
            S = sigma.samples[np.ix_(rows, i2)]
        else:
            S = sigma.matrix(pts[rows], pts[i2])
        H = np.zeros((len(rows), grid.M ** grid.n), dtype=complex)
        H[:, i2] = S * c2[i2]
        H = H.reshape((len(rows),) + grid.shape) * sign
        G = np.fft.ifftn(H, axes=tuple(range(1, grid.n + 1))).reshape(len(rows), -1) * scale
        out += _phase_sum(grid, c1[rows], pts[rows], G) / grid.L ** grid.n
    return GridFunction(grid, out.reshape(grid.shape))


def _apply_lattice_bump(sigma: LatticeBump, f1: GridFunction, f2: GridFunction) -> GridFunction:
    grid = f1.grid
    pts = grid.freq_points()
    cache1, cache2 = {}, {}

    def piece(cache, f, nu):
        key = tuple(int(v) for v in nu)
        if key not in cache:
            w = sigma.profile.half(pts - np.asarray(nu, dtype=float)).reshape(grid.shape)
            cache[key] = GridFunction.from_coefficients(grid, w * f.coefficients).values
        return cache[key]

    out = np.zeros(grid.shape, dtype=complex)
    for e1, e2, m in zip(sigma.nu1, sigma.nu2, sigma.coefficients):
        out += m * piece(cache1, f1, e1) * piece(cache2, f2, e2)
    return GridFunction(grid, out)


# ---------------------------------------------------------------------------
# modulated test functions


def default_phi(n: int = 1):
    """Smooth profile with ``supp phi`` in ``[-1/8, 1/8]^n`` and ``phi(0) = 1``."""
    return lambda xi: np.prod(smooth_bump_1d(xi, 0.125), axis=-1)


def bump_coefficients(grid: TorusGrid, lam: float, phi=None, center=None) -> np.ndarray:
    """Samples of ``lam^n phi(lam (xi - center))`` on the frequency lattice."""
    phi = phi or default_phi(grid.n)
    pts = grid.freq_points()
    if center is not None:
        pts = pts - np.asarray(center, dtype=float)
    return (lam ** grid.n * phi(lam * pts)).reshape(grid.shape)


def bump_envelope(grid: TorusGrid, lam: float, phi=None) -> GridFunction:
    """Torus version of ``(F^{-1} phi)(x / lam)`` (periodized)."""
    return GridFunction.from_coefficients(grid, bump_coefficients(grid, lam, phi))


def modulated_bump_pair(A: lattice.LatticeVector, B: lattice.LatticeVector, lam: float,
                        grid: TorusGrid, phi=None):
    """Test functions ``f_j(x) = sum_nu A(nu) e^{i nu x} (F^{-1} phi)(x / lam)``.

    Built on the Fourier side as ``c_{f1}(xi) = sum A(nu) lam^n phi(lam (xi - nu))``.

    Raises
    ------
    ValueError
        If ``lam < 1``, if integer frequencies are not on the lattice, or if
        a modulation lies outside the grid band.
    """
    if lam < 1:
        raise ValueError("need lam >= 1")
    out = []
    base = bump_coefficients(grid, lam, phi)
    band = grid.dxi * (grid.M // 2) - 0.125 / lam
    for vec in (A, B):
        c = np.zeros(grid.shape, dtype=complex)
        for nu, a in zip(vec.points, vec.values):
            if np.any(np.abs(nu) >= band):
                raise ValueError(f"modulation {nu} outside the grid band")
            idx = grid.integer_index(nu)
            c += a * np.roll(base, idx, axis=tuple(range(grid.n)))
        out.append(GridFunction.from_coefficients(grid, c))
    return tuple(out)


def bridge_identity_error(V: lattice.LatticeWeight, A: lattice.LatticeVector, B: lattice.LatticeVector,
                          lam: float, grid: TorusGrid, phi=None) -> float:
    """Relative error of ``T(f1, f2) = sum_k d_k e^{ikx} G(x)^2``, ``d = image(V, A, B)``."""
    f1, f2 = modulated_bump_pair(A, B, lam, grid, phi)
    T = apply(weight_symbol(V), f1, f2)
    d = lattice.bilinear_image(V, A, B)
    G = bump_envelope(grid, lam, phi).values
    x = np.stack([g.ravel() for g in grid.mesh()], axis=1)
    trig = np.exp(1j * (x @ d.points.T.astype(float))) @ d.values if len(d) else np.zeros(len(x))
    ref = trig.reshape(grid.shape) * G ** 2
    return float(np.max(np.abs(T.values - ref)) / max(np.max(np.abs(ref)), 1e-300))


# ---------------------------------------------------------------------------
# operator-norm lower bounds


@dataclass
class OpNormReport:
    """Best ratio ``||T(f1,f2)|| / (||f1|| ||f2||)`` found and its witnesses."""

    lower: float
    witnesses: tuple
    descriptor: dict
    strategy: str
    trials: int
    seed: int
    output_norm: str
    candidates: list = field(default_factory=list)


def _out_norm(T: GridFunction, p: float) -> float:
    if p <= 1:
        return local_hardy_quasinorm(T, p)
    return lp_norm(T, p)


def ratio(sigma: Symbol, f1: GridFunction, f2: GridFunction, p1, p2, p) -> float:
    """``||T_sigma(f1, f2)|| / (||f1||_{p1} ||f2||_{p2})`` (h^p-approx for p <= 1)."""
    p1, p2, p = as_exponent(p1), as_exponent(p2), as_exponent(p)
    den = lp_norm(f1, p1) * lp_norm(f2, p2)
    return _out_norm(apply(sigma, f1, f2), p) / den if den > 0 else 0.0


def default_test_grid(n: int = 1, extent: int = 16, lam: float = 1.0) -> TorusGrid:
    """Grid covering integer modulations ``|nu| < extent``.

    The frequency step is ``1/(64 lam)`` (at least ``1/64``), so that the
    bump ``phi(lam .)`` is resolved by about 16 samples per axis.
    """
    per_unit = 64 * max(1, int(math.ceil(lam)))
    M = 1 << int(math.ceil(math.log2(2 * per_unit * (extent + 1))))
    return TorusGrid.with_resolution(n, per_unit, M)


def opnorm_lower(sigma: Symbol, p1, p2, p, strategy: str = "both", trials: int = 4, seed: int = 0,
                 grid: TorusGrid | None = None, lam: float = 2.0) -> OpNormReport:
    """Empirical lower bound for ``||T_sigma||_{L^{p1} x L^{p2} -> L^p}``.

    Strategies
    ----------
    structured
        Modulated bump pairs whose lattice coefficients are the uniform
        vectors on the projections of the symbol's support, and alternating
        maximization witnesses of the induced lattice form.
    random
        Seeded complex Gaussian fields band-limited to the symbol's cells.

    The output norm is ``h^p``-approx for ``p <= 1`` and ``L^p`` otherwise.
    """
    p1, p2, p = as_exponent(p1), as_exponent(p2), as_exponent(p)
    if strategy not in ("structured", "random", "both"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if isinstance(sigma, LatticeBump):
        V = sigma.weight()
    else:
        V = lattice.LatticeWeight.delta(np.zeros(sigma.n, int), np.zeros(sigma.n, int))
    if len(V) == 0:
        raise ValueError("degenerate symbol")
    extent = int(np.abs(V.points).max()) + 1
    grid = grid or default_test_grid(sigma.n, extent)
    cands = []
    if strategy in ("structured", "both"):
        P1 = np.unique(V.nu1, axis=0)
        P2 = np.unique(V.nu2, axis=0)
        pairs = [("uniform", lattice.LatticeVector.ones(P1), lattice.LatticeVector.ones(P2))]
        for qs in ((2, 2, 2), (p1, p2, max(p, 1.0))):
            est = lattice.b_norm_lower_altmax(V, *qs, restarts=4, seed=seed, max_iters=100)
            pairs.append((f"altmax{qs}", est.witnesses[0], est.witnesses[1]))
        for name, A, B in pairs:
            f1, f2 = modulated_bump_pair(A, B, lam, grid)
            cands.append((ratio(sigma, f1, f2, p1, p2, p), (f1, f2), {"kind": "structured", "name": name, "lam": lam}))
    if strategy in ("random", "both"):
        pts = grid.freq_points()
        hw = getattr(getattr(sigma, "profile", None), "half_width", 0.5)
        P = [np.unique(V.nu1, axis=0), np.unique(V.nu2, axis=0)]
        masks = []
        for Pj in P:
            d = np.min(np.max(np.abs(pts[:, None, :] - Pj[None, :, :].astype(float)), axis=2), axis=1)
            masks.append((d <= hw).reshape(grid.shape))
        for t, s in enumerate(derive_seeds(seed, trials)):
            rng = np.random.default_rng(s)
            fs = []
            for m in masks:
                c = (rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)) * m
                fs.append(GridFunction.from_coefficients(grid, c))
            cands.append((ratio(sigma, fs[0], fs[1], p1, p2, p), tuple(fs), {"kind": "random", "trial": t, "seed": s}))
    best = max(range(len(cands)), key=lambda i: (cands[i][0], -i))
    val, wit, desc = cands[best]
    return OpNormReport(float(val), wit, desc, strategy, trials, seed,
                        "h^p-approx" if p <= 1 else "L^p", [c[0] for c in cands])


# ---------------------------------------------------------------------------
# symbol decomposition


@dataclass
class CellDecomposition:
    """Cell pieces ``sigma_nu = sigma phi(xi1 - nu1) phi(xi2 - nu2)`` on a frequency grid.

    Attributes
    ----------
    axis : ndarray
        1-D frequency sample axis (shared by all ``2n`` coordinates).
    pieces : dict
        ``nu -> samples`` on the full sample box (``(len(axis),)*2n`` arrays).
    partition_error : float
        Max deviation of ``sum_l phi(. - l)`` from 1 on the box.
    reconstruction_error : float
        Max of ``|sum_nu sigma_nu - sigma|``.
    sup_norms : dict
        ``nu -> sup |sigma_nu|``.
    """

    axis: np.ndarray
    pieces: dict
    partition_error: float
    reconstruction_error: float
    sup_norms: dict
    weight_ratio: float | None = None


def _sample_box(sigma, n, axis, x=None):
    pts1 = np.stack([g.ravel() for g in np.meshgrid(*([axis] * n), indexing="ij")], axis=1)
    if x is None:
        vals = sigma(pts1, pts1) if isinstance(sigma, Symbol) else sigma(pts1[:, None, :], pts1[None, :, :])
    else:
        vals = sigma(x, pts1[:, None, :], pts1[None, :, :])
    return np.asarray(vals, dtype=complex).reshape((len(axis),) * (2 * n))


def symbol_cell_decompose(sigma, n: int = 1, box: int = 3, step: float = 1 / 16, phi=None,
                          x=None, V: lattice.LatticeWeight | None = None) -> CellDecomposition:
    """Split ``sigma`` into cell pieces with a partition of unity.

    Parameters
    ----------
    sigma : Symbol or callable
        x-independent symbol, or ``sigma(x, xi1, xi2)`` together with ``x``.
    box : int
        Frequencies are sampled on ``[-box, box]^{2n}``.
    step : float
        Sample spacing (``1/step`` must be an integer).
    phi : callable, optional
        1-D partition profile with ``sum_l phi(t - l) = 1`` and support in
        ``[-1, 1]`` (default smoothstep partition).
    V : LatticeWeight, optional
        When given, the report contains ``max sup|sigma_nu| / V(nu)``.
    """
    phi = phi or partition_1d
    per = int(round(1 / step))
    axis = np.arange(-box * per, box * per + 1) / per
    S = _sample_box(sigma, n, axis, x)
    cells = range(-box, box + 1)
    part = sum(phi(axis - l) for l in range(-box - 1, box + 2))
    perr = float(np.max(np.abs(part - 1)))
    if perr > 1e-10:
        raise ValueError(f"partition of unity violated by {perr:.2e}")
    f1d = {l: phi(axis - l) for l in cells}
    pieces, sups = {}, {}
    total = np.zeros_like(S)
    for nu in itertools.product(cells, repeat=2 * n):
        w = f1d[nu[0]]
        for l in nu[1:]:
            w = np.multiply.outer(w, f1d[l])
        piece = S * w
        if not np.any(piece):
            continue
        pieces[nu] = piece
        sups[nu] = float(np.max(np.abs(piece)))
        total += piece
    # the outermost cells are cut by the sample box, compare in its interior
    inner = tuple(slice(per, -per) for _ in range(2 * n))
    rerr = float(np.max(np.abs(total[inner] - S[inner])))
    ratio_v = None
    if V is not None:
        vals = V.lookup(np.array(list(sups.keys())))
        r = [s / v for s, v in zip(sups.values(), vals) if v > 0]
        ratio_v = float(max(r)) if r else None
    return CellDecomposition(axis, pieces, perr, rerr, sups, ratio_v)


@dataclass
class CellFourierReport:
    """Fourier coefficients ``P_{nu,k}`` of one periodized cell symbol."""

    nu: tuple
    coefficients: np.ndarray
    K_t: int
    reconstruction_residual: float
    decay_slope: float
    slope_bound: float
    decay_ok: bool


def cell_fourier_coefficients(piece_func, nu, n: int = 1, M: int = 2, K_t: int = 24,
                              samples: int = 256) -> CellFourierReport:
    """Fourier coefficients of a cell symbol over ``nu + [-pi, pi]^{2n}``.

    ``P_{nu,k} = (2 pi)^{-2n} int e^{-i k . eta} sigma_nu(eta) d eta`` is
    computed with an FFT of ``samples`` points per axis (``eta`` relative to
    ``nu``).  The report gives the reconstruction residual of the truncated
    series ``|k|_inf <= K_t`` on the cell and the fitted slope of
    ``log max_{|k|_inf = r} |P_{nu,k}|`` against ``log r``, compared with the
    integration-by-parts bound ``-2M + 0.5``.

    Parameters
    ----------
    piece_func : callable
        ``piece_func(eta)`` with ``eta`` of shape ``(..., 2n)`` in cell
        coordinates (relative to ``nu``); must vanish outside ``[-1, 1]^{2n}``.
    """
    d = 2 * n
    h = 2 * math.pi / samples
    ax = -math.pi + h * np.arange(samples)
    mesh = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
    vals = np.asarray(piece_func(mesh), dtype=complex)
    outside = np.any(np.abs(mesh) > 1 + 1e-12, axis=-1)
    if np.any(np.abs(vals[outside]) > 1e-12):
        raise ValueError("cell symbol is not supported in its cell")
    sign = (-1.0) ** np.arange(samples)
    sgn = sign
    for _ in range(d - 1):
        sgn = np.multiply.outer(sgn, sign)
    P = np.fft.fftn(vals) * sgn * (h / (2 * math.pi)) ** d
    P = np.fft.fftshift(P)
    c = samples // 2
    sl = tuple(slice(c - K_t, c + K_t + 1) for _ in range(d))
    Pk = P[sl]
    kax = np.arange(-K_t, K_t + 1)
    kmesh = np.stack(np.meshgrid(*([kax] * d), indexing="ij"), axis=-1)
    # reconstruction on a coarse sample of the cell
    test_ax = np.linspace(-1, 1, 9)
    tmesh = np.stack(np.meshgrid(*([test_ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    phase = np.exp(1j * tmesh @ kmesh.reshape(-1, d).T)
    rec = phase @ Pk.ravel()
    ref = np.asarray(piece_func(tmesh.reshape((9,) * d + (d,))), dtype=complex).ravel()
    resid = float(np.max(np.abs(rec - ref)))
    shell = np.max(np.abs(kmesh), axis=-1)
    rs = np.arange(2, K_t + 1)
    mags = np.array([np.max(np.abs(Pk[shell == r])) for r in rs])
    good = mags > 1e-15 * np.max(np.abs(Pk))
    if good.sum() >= 2:
        slope = float(np.polyfit(np.log(rs[good]), np.log(mags[good]), 1)[0])
    else:
        slope = -math.inf
    bound = -2 * M + 0.5
    return CellFourierReport(tuple(int(v) for v in np.atleast_1d(nu)), Pk, K_t, resid, slope, bound, slope <= bound)


# ---------------------------------------------------------------------------
# Sobolev majorant


@dataclass
class SobolevMajorant:
    """Lattice majorant ``W`` and its domination report."""

    lattice_points: np.ndarray
    W: np.ndarray
    constant: float
    domination_ratio: float
    dominated: bool
    minkowski_lhs: float | None = None
    minkowski_rhs: float | None = None


def _derivative_sups(S, step, order, d):
    """``sum_{|beta| <= order} |d^beta S|`` by iterated centered differences.

    ``S`` has shape ``(nx, m, ..., m)`` (x samples first); the sup over x is
    taken after differentiation.
    """
    total = np.zeros(S.shape[1:])
    per_beta = []
    for beta in itertools.product(range(order + 1), repeat=d):
        if sum(beta) > order:
            continue
        D = S
        for ax, b in enumerate(beta):
            for _ in range(b):
                D = np.gradient(D, step, axis=ax + 1)
        sup = np.max(np.abs(D), axis=0)
        per_beta.append(sup)
        total += sup
    return total, per_beta


def sobolev_majorant(sigma, n: int = 1, box: int = 4, step: float = 1 / 8, x=None,
                     order_extra: int = 0, constant: float = 1.0, q=None) -> SobolevMajorant:
    """Sobolev-type majorant ``W = c sum_{|beta|<=2n+K'} sup_x|d^beta sigma| * <.>^{-2n-1}``.

    Derivatives are centered finite differences on the frequency grid of
    spacing ``step`` over ``[-box, box]^{2n}``; ``x`` is an optional list of
    physical points for x-dependent ``sigma(x, xi1, xi2)``.  ``W`` is
    evaluated on the integer lattice points of the box, and domination
    ``sum_{|alpha|<=K'} sup_x|d^alpha sigma|(nu) <= W(nu)`` is checked there.

    Raises
    ------
    ValueError
        If the grid is too coarse for the difference stencil.
    """
    d = 2 * n
    order = d + order_extra
    per = int(round(1 / step))
    if per < 2 * (order + 1):
        raise ValueError("grid too coarse for the difference stencil")
    axis = np.arange(-box * per, box * per + 1) / per
    xs = [None] if x is None else list(x)
    S = np.stack([_sample_box(sigma, n, axis, xv) for xv in xs])
    dsum, per_beta = _derivative_sups(S, step, order, d)
    low, _ = _derivative_sups(S, step, order_extra, d)
    # convolution with <.>^{-2n-1} evaluated on lattice points
    lat = np.arange(-box, box + 1)
    lat_pts = np.stack([g.ravel() for g in np.meshgrid(*([lat] * d), indexing="ij")], axis=1)
    grid_pts = np.stack([g.ravel() for g in np.meshgrid(*([axis] * d), indexing="ij")], axis=1)
    dv = dsum.ravel() * step ** d
    W = np.zeros(len(lat_pts))
    for start in range(0, len(lat_pts), 64):
        lp_ = lat_pts[start:start + 64].astype(float)
        r2 = np.sum((lp_[:, None, :] - grid_pts[None, :, :]) ** 2, axis=2)
        W[start:start + 64] = (1 + r2) ** (-(d + 1) / 2.0) @ dv
    W *= constant
    idx = tuple(((lat_pts[:, k] + box) * per).astype(int) for k in range(d))
    lhs = low[idx]
    ratio_ = float(np.max(lhs / np.maximum(W, 1e-300)))
    rep = SobolevMajorant(lat_pts, W, constant, ratio_, ratio_ <= 1 + 1e-12)
    if q is not None:
        qq = as_exponent(q)
        kern = float(np.sum((1 + np.sum(grid_pts ** 2, axis=1)) ** (-(d + 1) / 2.0)) * step ** d)
        rep.minkowski_lhs = lq_norm(W, qq)
        rep.minkowski_rhs = constant * kern * sum(lq_norm(s[idx], qq) for s in per_beta)
    return rep


# ---------------------------------------------------------------------------
# scaling experiments

# ||F^{-1} phi||_{L^p(R)} for the default profile, from an independent
# quadrature oracle; the modulated test functions satisfy
# ||f||_{W^{p,q}} = ||A||_{l^q} lam^{n/p} ||F^{-1} phi||_p^n up to grid effects.
PHI_NORMS = {1.0: 1.22863, 2.0: 0.139870, math.inf: 0.024011}
WNORM_BAND = 0.02
CARD_E_CAP = 256
CARD_E_PROFILES = ("full", "random-sign", "diagonal")


def wnorm_scaling_ratio(A: lattice.LatticeVector, lam: float, p, q, grid: TorusGrid | None = None) -> float:
    """``||f||_{W^{p,q}} / (||A||_{l^q} lam^{n/p})`` for the modulated bump ``f`` built from ``A``."""
    from .grid import wiener_amalgam_norm

    p, q = as_exponent(p), as_exponent(q)
    extent = int(np.abs(A.points).max()) + 2
    grid = grid or default_test_grid(A.dim, extent, lam)
    f, _ = modulated_bump_pair(A, A, lam, grid)
    scale = 1.0 if math.isinf(p) else lam ** (A.dim / p)
    return wiener_amalgam_norm(f, p, q) / (A.norm(q) * scale)


def card_e_set(N: int, profile: str = "full", seed: int = 0) -> np.ndarray:
    """Finite set ``E`` in ``Z x Z`` built from ``{0..N-1}^2``.

    ``full`` is the whole square; ``random-sign`` keeps ``(j, k)`` when a
    seeded sign ``eps_{j+k}`` is positive (sums of random signs make the
    output of the uniform test pair spread out, which drives growth);
    ``diagonal`` is ``{(j, -j)}``.
    """
    if profile == "full":
        pts = [(j, k) for j in range(N) for k in range(N)]
    elif profile == "random-sign":
        rng = np.random.default_rng(derive_seeds(seed, 1)[0])
        eps = rng.integers(0, 2, size=2 * N - 1)
        pts = [(j, k) for j in range(N) for k in range(N) if eps[j + k]]
        if not pts:
            pts = [(0, 0)]
    elif profile == "diagonal":
        pts = [(j, -j) for j in range(N)]
    else:
        raise ValueError(f"unknown profile {profile!r}")
    return np.array(pts, dtype=np.int64)


@dataclass
class ScalingResult:
    """Outcome of :func:`card_e_scaling`."""

    p1: float
    p2: float
    p: float
    profile: str
    sizes: list
    cards: list
    lowers: list
    slope: float
    target: float
    seed: int


def card_e_scaling(p1, p2, p, sizes=(2, 4, 8, 16), profile: str = "full", seed: int = 0,
                   trials: int = 2) -> ScalingResult:
    """Least-squares slope of ``log(lower bound)`` against ``log(card E)``.

    Runs :func:`opnorm_lower` on ``m_{E,Phi}`` for each size and compares the
    slope with ``1/q(p1, p2, p)``.

    Raises
    ------
    ValueError
        If sizes are not increasing or ``card E`` exceeds the desk-scale cap.
    """
    from .exponents import make_triple, sharp_q

    sizes = [int(s) for s in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be increasing")
    sets = [card_e_set(N, profile, seed) for N in sizes]
    if max(len(E) for E in sets) > CARD_E_CAP:
        raise ValueError(f"card E exceeds the cap {CARD_E_CAP}")
    lowers = []
    for E in sets:
        rep = opnorm_lower(lattice_bump_symbol(E), p1, p2, p, trials=trials, seed=seed)
        lowers.append(rep.lower)
    cards = [len(E) for E in sets]
    slope = float(np.polyfit(np.log(cards), np.log(lowers), 1)[0]) if len(set(cards)) > 1 else 0.0
    target = float(sharp_q(make_triple(p1, p2, p)).inv_q)
    return ScalingResult(float(p1), float(p2), float(p), profile, sizes, cards, lowers, slope, target, seed)
