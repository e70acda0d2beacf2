"""Periodic grid functions and the function-space norms used by the lab.

``R^n`` is modeled by the torus of period ``L`` sampled at ``M`` points per
axis, ``x_j = -L/2 + j h`` with ``h = L/M``.  Fourier coefficients follow the
integral convention ``F f(xi) = int e^{-i xi x} f(x) dx``::

    c_f(xi_m) = h^n sum_j f(x_j) exp(-i xi_m . x_j),   xi_m = (2 pi / L) m
    f(x_j)    = L^{-n} sum_m c_f(xi_m) exp(i xi_m . x_j)

The default period is ``L = 2 pi P`` with ``P`` samples of the frequency
lattice per unit, so that integer frequencies (and the modulations
``e^{i nu x}``) are exactly representable.
"""

from __future__ import annotations

import itertools
import json
import math
import pathlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import comb

from ._util import as_exponent, lq_norm


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus ``[-L/2, L/2)^n``.

    Parameters
    ----------
    n : int
        Dimension.
    L : float
        Period.
    M : int
        Samples per axis (even).
    """

    n: int = 1
    L: float = 2 * math.pi * 10
    M: int = 1024

    def __post_init__(self):
        if self.M % 2:
            raise ValueError("samples per axis must be even")
        if self.L <= 0 or self.n < 1:
            raise ValueError("invalid grid")

    @classmethod
    def with_resolution(cls, n: int = 1, per_unit: int = 10, M: int = 1024) -> "TorusGrid":
        """Grid with period ``2 pi per_unit`` (frequency step ``1/per_unit``)."""
        return cls(n, 2 * math.pi * per_unit, M)

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def dxi(self) -> float:
        return 2 * math.pi / self.L

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.n

    def axis(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.M)

    def freq_axis(self) -> np.ndarray:
        """Frequencies in FFT order."""
        return self.dxi * np.fft.fftfreq(self.M, 1.0 / self.M)

    def mesh(self):
        return np.meshgrid(*([self.axis()] * self.n), indexing="ij")

    def freq_mesh(self):
        return np.meshgrid(*([self.freq_axis()] * self.n), indexing="ij")

    def freq_points(self) -> np.ndarray:
        """All frequency points, shape ``(M^n, n)`` in C order of the FFT array."""
        return np.stack([g.ravel() for g in self.freq_mesh()], axis=1)

    def _sign(self) -> np.ndarray:
        m = np.fft.fftfreq(self.M, 1.0 / self.M).astype(np.int64)
        s = np.where(m % 2 == 0, 1.0, -1.0)
        out = s
        for _ in range(self.n - 1):
            out = np.multiply.outer(out, s)
        return out

    def integer_index(self, nu) -> tuple:
        """FFT index of the integer frequency ``nu`` (needs ``L/(2 pi)`` integral)."""
        per_unit = self.L / (2 * math.pi)
        if abs(per_unit - round(per_unit)) > 1e-9:
            raise ValueError("integer frequencies are not on this lattice")
        idx = []
        for v in np.atleast_1d(nu):
            m = int(round(v * per_unit))
            if not -self.M // 2 <= m < self.M // 2:
                raise ValueError(f"frequency {v} outside the grid band")
            idx.append(m % self.M)
        return tuple(idx)

    def to_json_obj(self) -> dict:
        return {"dim": self.n, "L": repr(float(self.L)), "M": self.M}


class GridFunction:
    """Complex samples on a :class:`TorusGrid` with lazy Fourier access."""

    def __init__(self, grid: TorusGrid, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.shape:
            values = values.reshape(grid.shape)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid: TorusGrid, func):
        return cls(grid, func(*grid.mesh()))

    @classmethod
    def from_coefficients(cls, grid: TorusGrid, coeffs) -> "GridFunction":
        coeffs = np.asarray(coeffs, dtype=complex).reshape(grid.shape)
        vals = np.fft.ifftn(coeffs * grid._sign()) * (grid.M ** grid.n / grid.L ** grid.n)
        f = cls(grid, vals)
        c = coeffs.copy()
        c.setflags(write=False)
        f.__dict__["coefficients"] = c
        return f

    @cached_property
    def coefficients(self) -> np.ndarray:
        """``c_f`` on the frequency lattice in FFT order."""
        c = np.fft.fftn(self.values) * self.grid._sign() * self.grid.h ** self.grid.n
        c.setflags(write=False)
        return c

    def __add__(self, other):
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            return GridFunction(self.grid, self.values * c.values)
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def real(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.real)

    # -- serialization -------------------------------------------------------

    def save(self, path) -> pathlib.Path:
        """Write a JSON header at ``path`` and a binary sidecar ``path.bin``."""
        path = pathlib.Path(path)
        payload = path.with_suffix(path.suffix + ".bin")
        header = {
            **self.grid.to_json_obj(),
            "layout": "row-major",
            "scalar": "complex-f64-interleaved",
            "endianness": "little",
            "payload": payload.name,
        }
        path.write_text(json.dumps(header, indent=2) + "\n")
        np.ascontiguousarray(self.values, dtype="<c16").tofile(payload)
        return path

    @classmethod
    def load(cls, path) -> "GridFunction":
        path = pathlib.Path(path)
        header = json.loads(path.read_text())
        if header.get("scalar") != "complex-f64-interleaved" or header.get("endianness") != "little":
            raise ValueError("unsupported payload encoding")
        grid = TorusGrid(int(header["dim"]), float(header["L"]), int(header["M"]))
        data = np.fromfile(path.parent / header["payload"], dtype="<c16")
        return cls(grid, data.reshape(grid.shape))


def dft(f: GridFunction) -> np.ndarray:
    """Fourier coefficients ``c_f`` (FFT order)."""
    return f.coefficients


def idft(grid: TorusGrid, coeffs) -> GridFunction:
    """Inverse of :func:`dft`."""
    return GridFunction.from_coefficients(grid, coeffs)


# ---------------------------------------------------------------------------
# windows


def smoothstep(x, order: int) -> np.ndarray:
    """Polynomial smoothstep ``S_N``: 0 for ``x <= 0``, 1 for ``x >= 1``, C^N."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    N = int(order)
    out = np.zeros_like(x)
    for k in range(N + 1):
        out += comb(N + k, k) * comb(2 * N + 1, N - k) * (-x) ** k
    return out * x ** (N + 1)


@dataclass(frozen=True)
class FreqWindow:
    """Square partition-of-unity window ``kappa`` (tensor of 1-D profiles).

    ``chi`` equals 1 on ``[-1/4, 1/4]``, vanishes outside ``[-3/4, 3/4]``
    with a smoothstep transition, and ``kappa = chi / sqrt(sum_k chi(.-k)^2)``
    so that ``sum_k kappa(xi - k)^2 = 1``.
    """

    order: int = 3

    def chi(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        return smoothstep((0.75 - t) / 0.5, self.order)

    def profile(self, t) -> np.ndarray:
        """1-D ``kappa``."""
        t = np.asarray(t, dtype=float)
        c = self.chi(t)
        r = t - np.round(t)
        denom = sum(self.chi(r + j) ** 2 for j in (-1, 0, 1))
        return c / np.sqrt(denom)

    def __call__(self, xi) -> np.ndarray:
        """``kappa(xi)`` for points of shape ``(..., n)``."""
        xi = np.asarray(xi, dtype=float)
        return np.prod(self.profile(xi), axis=-1)

    def on_grid(self, grid: TorusGrid, k) -> np.ndarray:
        """``kappa(xi - k)`` on the frequency lattice (FFT-shaped array)."""
        k = np.broadcast_to(np.atleast_1d(np.asarray(k, dtype=float)), (grid.n,))
        ax = grid.freq_axis()
        out = self.profile(ax - k[0])
        for i in range(1, grid.n):
            out = np.multiply.outer(out, self.profile(ax - k[i]))
        return out


def make_square_partition_window(transition_sharpness: int = 3) -> FreqWindow:
    """Build the square partition-of-unity window of the given smoothstep order."""
    if transition_sharpness < 1:
        raise ValueError("transition order must be positive")
    return FreqWindow(int(transition_sharpness))


def band_piece(f: GridFunction, k, kappa: FreqWindow) -> GridFunction:
    """``kappa(D - k) f``."""
    return GridFunction.from_coefficients(f.grid, kappa.on_grid(f.grid, k) * f.coefficients)


# ---------------------------------------------------------------------------
# norms


def lp_norm(f: GridFunction, p) -> float:
    """``(h^n sum |f|^p)^{1/p}``; maximum for ``p = inf``."""
    p = as_exponent(p)
    v = np.abs(f.values)
    if math.isinf(p):
        return float(v.max())
    return lq_norm(v, p) * f.grid.h ** (f.grid.n / p)


def _window_centers(n: int, K: int):
    return list(itertools.product(range(-K, K + 1), repeat=n))


def band_limit_radius(f: GridFunction, rel: float = 1e-14) -> int:
    """Smallest ``K`` whose windows carry all but ``rel`` of the energy."""
    c2 = np.abs(f.coefficients) ** 2
    tot = c2.sum()
    if tot == 0:
        return 0
    grid = f.grid
    reach = np.max(np.abs(np.stack(grid.freq_mesh(), axis=0)), axis=0)
    order = np.argsort(reach.ravel())
    cum = np.cumsum(c2.ravel()[order])
    idx = np.searchsorted(cum, tot * (1 - rel))
    r = reach.ravel()[order][min(idx, len(order) - 1)]
    return int(math.ceil(r + 0.75))


def band_residual(f: GridFunction, kappa: FreqWindow, K: int) -> float:
    """Relative Fourier energy outside the windows ``|k|_inf <= K``."""
    grid = f.grid
    ax = grid.freq_axis()
    cov1 = sum(kappa.profile(ax - k) ** 2 for k in range(-K, K + 1))
    cover = cov1
    for _ in range(1, grid.n):
        cover = np.multiply.outer(cover, cov1)
    c2 = np.abs(f.coefficients) ** 2
    tot = c2.sum()
    return float(np.sum(c2 * (1 - cover)) / tot) if tot > 0 else 0.0


def band_pieces(f: GridFunction, kappa: FreqWindow, K: int):
    """Yield ``(k, kappa(D-k) f values)`` for windows meeting the spectrum."""
    grid = f.grid
    c = f.coefficients
    for k in _window_centers(grid.n, K):
        w = kappa.on_grid(grid, k)
        prod = w * c
        if not np.any(prod):
            continue
        yield k, np.fft.ifftn(prod * grid._sign()) * (grid.M ** grid.n / grid.L ** grid.n)


def wiener_amalgam_norm(f: GridFunction, p, q, kappa: FreqWindow | None = None,
                        window_box_radius: int | None = None, residual_tol: float = 1e-10) -> float:
    """``|| || kappa(D-k) f(x) ||_{l^q_k} ||_{L^p_x}``.

    Raises
    ------
    ValueError
        If more than ``residual_tol`` of the Fourier energy lies outside the
        windows ``|k|_inf <= window_box_radius``.
    """
    p, q = as_exponent(p), as_exponent(q)
    kappa = kappa or make_square_partition_window()
    K = band_limit_radius(f) if window_box_radius is None else int(window_box_radius)
    res = band_residual(f, kappa, K)
    if res > residual_tol:
        raise ValueError(f"band-limit residual {res:.3e} exceeds {residual_tol:.1e}; enlarge the window box")
    acc = np.zeros(f.grid.shape)
    for _, piece in band_pieces(f, kappa, K):
        a = np.abs(piece)
        if math.isinf(q):
            acc = np.maximum(acc, a)
        else:
            acc += a ** q
    if not math.isinf(q):
        acc = acc ** (1.0 / q)
    return lp_norm(GridFunction(f.grid, acc), p)


def gaussian_smoothing(f: GridFunction, t: float) -> GridFunction:
    """``phi_t * f`` for the unit Gaussian ``phi``."""
    xi2 = sum(g ** 2 for g in f.grid.freq_mesh())
    return GridFunction.from_coefficients(f.grid, f.coefficients * np.exp(-0.5 * t * t * xi2))


def hardy_maximal(f: GridFunction, scales: int) -> np.ndarray:
    """``max_{t = 2^{-j}, j=0..J} |phi_t * f|`` as an array."""
    if scales < 1:
        raise ValueError("need at least one scale")
    out = np.zeros(f.grid.shape)
    for j in range(scales + 1):
        out = np.maximum(out, np.abs(gaussian_smoothing(f, 2.0 ** (-j)).values))
    return out


def local_hardy_quasinorm(f: GridFunction, p, scales: int = 8) -> float:
    """Approximate ``h^p`` quasinorm via dyadic Gaussian scales ``t = 2^{-j}``."""
    return lp_norm(GridFunction(f.grid, hardy_maximal(f, scales)), p)


def _block_means(arr, w):
    """Means over the cubes of ``w`` consecutive samples per axis (periodic)."""
    n = arr.ndim
    M = arr.shape[0]
    nb = -(-M // w)
    pad = nb * w - M
    if pad:
        arr = np.pad(arr, [(0, pad)] * n, mode="wrap")
    shape = []
    for _ in range(n):
        shape += [nb, w]
    blocks = arr.reshape(shape)
    axes = tuple(range(1, 2 * n, 2))
    return blocks, blocks.mean(axis=axes, keepdims=True), axes


def bmo_norm(f: GridFunction) -> float:
    """Local bmo norm by dyadic cubes on the grid.

    ``max( sup_{|R|<=1} mean |f - f_R|, sup_{|R|>=1} mean |f| )`` with ``R``
    ranging over grid-aligned cubes of dyadic side length.
    """
    if np.max(np.abs(f.values.imag)) > 0:
        raise ValueError("bmo norm needs a real-valued function")
    vals = f.values.real
    grid = f.grid
    best_osc = 0.0
    j = 0
    while True:
        side = 2.0 ** (-j)
        w = int(round(side / grid.h))
        if w < 1:
            break
        blocks, means, axes = _block_means(vals, w)
        osc = np.abs(blocks - means).mean(axis=axes)
        best_osc = max(best_osc, float(osc.max()))
        if w == 1:
            break
        j += 1
    best_avg = 0.0
    side = 1.0
    while True:
        w = min(grid.M, int(round(side / grid.h)))
        blocks, _, axes = _block_means(np.abs(vals), w)
        best_avg = max(best_avg, float(blocks.mean(axis=axes).max()))
        if w >= grid.M:
            break
        side *= 2
    return max(best_osc, best_avg)
