"""Lattice weights and the trilinear-form norms of the classes B and B^form.

A weight ``V`` lives on ``Z^n x Z^n``; vectors ``A, B, C`` live on ``Z^n``.
The two quantities of interest are

    ||V||_{B_{q1,q2,q}}    = sup || sum_{nu1+nu2=nu} V(nu1,nu2) A(nu1) B(nu2) ||_{l^q_nu}
    ||V||_{B^form_{q1,q2,q3}} = sup sum V(nu1,nu2) A(nu1) B(nu2) C(nu1+nu2)

with the suprema over nonnegative unit vectors.  Neither is computable in
general; this module provides alternating-maximization lower bounds, a
brute-force grid oracle for tiny supports, and Brascamp-Lieb type upper
bounds with a calibrated constant.
"""

from __future__ import annotations

import functools
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ._util import as_exponent, conjugate, derive_seeds, lq_norm, ordered_map

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# value types


def _canonical(points, values, width):
    points = np.asarray(points, dtype=np.int64).reshape(-1, width)
    values = np.asarray(values, dtype=float).reshape(-1)
    if points.shape[0] != values.shape[0]:
        raise ValueError("points and values have different lengths")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValueError("entries must be finite and nonnegative")
    if points.shape[0] == 0:
        return points, values
    uniq, inv = np.unique(points, axis=0, return_inverse=True)
    summed = np.zeros(uniq.shape[0])
    np.add.at(summed, inv.reshape(-1), values)
    keep = summed > 0
    return uniq[keep], summed[keep]


class _LatticeFunction:
    _width_factor = 1

    def __init__(self, dim: int, points, values):
        self.dim = int(dim)
        p, v = _canonical(points, values, self.dim * self._width_factor)
        p.setflags(write=False)
        v.setflags(write=False)
        self.points = p
        self.values = v

    @classmethod
    def from_dict(cls, dim: int, entries: dict):
        """Build from ``{coords_tuple: value}``."""
        pts = [tuple(np.atleast_1d(k)) for k in entries]
        return cls(dim, np.array(pts, dtype=np.int64).reshape(len(pts), -1), list(entries.values()))

    def to_dict(self) -> dict:
        return {tuple(int(c) for c in p): float(v) for p, v in zip(self.points, self.values)}

    def __len__(self):
        return self.values.shape[0]

    def __call__(self, point) -> float:
        return self.lookup(np.asarray(point, dtype=np.int64).reshape(1, -1))[0]

    def lookup(self, pts) -> np.ndarray:
        """Values at the rows of ``pts`` (zero off the support)."""
        pts = np.asarray(pts, dtype=np.int64).reshape(-1, self.points.shape[1])
        if len(self) == 0 or pts.shape[0] == 0:
            return np.zeros(pts.shape[0])
        both = np.concatenate([self.points, pts])
        _, inv = np.unique(both, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        table = np.zeros(inv.max() + 1)
        table[inv[: len(self)]] = self.values
        return table[inv[len(self):]]

    def norm(self, q) -> float:
        return lq_norm(self.values, as_exponent(q))

    def scaled(self, c: float):
        return type(self)(self.dim, self.points, c * self.values)

    def translated(self, shift):
        shift = np.asarray(shift, dtype=np.int64).reshape(1, -1)
        return type(self)(self.dim, self.points + shift, self.values)

    def to_json_obj(self) -> dict:
        return {
            "dim": self.dim,
            "entries": [[[int(c) for c in p], repr(float(v))] for p, v in zip(self.points, self.values)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict):
        entries = obj["entries"]
        dim = int(obj["dim"])
        width = dim * cls._width_factor
        pts = np.array([e[0] for e in entries], dtype=np.int64).reshape(len(entries), width)
        vals = [float(e[1]) for e in entries]
        return cls(dim, pts, vals)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_json_obj(json.loads(text))

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.dim == other.dim
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, support={len(self)})"


class LatticeVector(_LatticeFunction):
    """Finitely supported nonnegative function on ``Z^n``.

    Parameters
    ----------
    dim : int
        Lattice dimension ``n``.
    points : array_like, shape (k, n)
        Support points; duplicates are summed, zero entries dropped.
    values : array_like, shape (k,)
        Nonnegative values.
    """

    _width_factor = 1

    @classmethod
    def delta(cls, point):
        point = np.atleast_1d(np.asarray(point, dtype=np.int64))
        return cls(point.size, point.reshape(1, -1), [1.0])

    @classmethod
    def ones(cls, points):
        points = np.asarray(points, dtype=np.int64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        return cls(points.shape[1], points, np.ones(points.shape[0]))


class LatticeWeight(_LatticeFunction):
    """Finitely supported nonnegative function on ``Z^n x Z^n``.

    Points are stored as rows ``(nu1, nu2)`` of length ``2n``.
    """

    _width_factor = 2

    @classmethod
    def delta(cls, nu1, nu2, value: float = 1.0):
        nu1 = np.atleast_1d(np.asarray(nu1, dtype=np.int64))
        nu2 = np.atleast_1d(np.asarray(nu2, dtype=np.int64))
        return cls(nu1.size, np.concatenate([nu1, nu2]).reshape(1, -1), [value])

    @property
    def nu1(self) -> np.ndarray:
        return self.points[:, : self.dim]

    @property
    def nu2(self) -> np.ndarray:
        return self.points[:, self.dim:]

    def translated2(self, mu1, mu2):
        return self.translated(np.concatenate([np.atleast_1d(mu1), np.atleast_1d(mu2)]))


def _check_dims(*objs):
    dims = {o.dim for o in objs}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")


# ---------------------------------------------------------------------------
# forms


def trilinear_form(V: LatticeWeight, A: LatticeVector, B: LatticeVector, C: LatticeVector) -> float:
    """``sum V(nu1,nu2) A(nu1) B(nu2) C(nu1+nu2)`` over ``supp V``."""
    _check_dims(V, A, B, C)
    if len(V) == 0:
        return 0.0
    a = A.lookup(V.nu1)
    b = B.lookup(V.nu2)
    c = C.lookup(V.nu1 + V.nu2)
    return float(np.sum(V.values * a * b * c))


def bilinear_image(V: LatticeWeight, A: LatticeVector, B: LatticeVector) -> LatticeVector:
    """``nu -> sum_{nu1+nu2=nu} V(nu1,nu2) A(nu1) B(nu2)``."""
    _check_dims(V, A, B)
    if len(V) == 0:
        return LatticeVector(V.dim, np.zeros((0, V.dim)), [])
    vals = V.values * A.lookup(V.nu1) * B.lookup(V.nu2)
    return LatticeVector(V.dim, V.nu1 + V.nu2, vals)


@dataclass
class NormEstimate:
    """Result of a class-norm estimation.

    Attributes
    ----------
    lower : float
        Achieved value (a certified lower bound up to rounding).
    upper : float
        Upper bound, ``inf`` when none is available.
    witnesses : tuple or None
        ``(A, B, C)`` achieving ``lower``; ``C`` is ``None`` for ``q < 1``.
    iterations : int
        Total alternating sweeps over all restarts.
    converged : bool
        Whether the best restart met the tolerance.
    degenerate : bool
        Set when ``V`` vanishes identically.
    """

    lower: float
    upper: float = math.inf
    witnesses: tuple | None = None
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False
    details: dict = field(default_factory=dict)


class _Problem:
    """Index structure of ``supp V`` for fast form evaluation."""

    def __init__(self, V: LatticeWeight):
        n = V.dim
        self.dim = n
        self.w = np.asarray(V.values, dtype=float)
        self.P1, i1 = np.unique(V.nu1, axis=0, return_inverse=True)
        self.P2, i2 = np.unique(V.nu2, axis=0, return_inverse=True)
        self.P3, i3 = np.unique(V.nu1 + V.nu2, axis=0, return_inverse=True)
        self.i1, self.i2, self.i3 = i1.reshape(-1), i2.reshape(-1), i3.reshape(-1)
        self.sizes = (len(self.P1), len(self.P2), len(self.P3))

    def image(self, a, b):
        return np.bincount(self.i3, self.w * a[self.i1] * b[self.i2], self.sizes[2])

    def form(self, a, b, c):
        return float(np.sum(self.w * a[self.i1] * b[self.i2] * c[self.i3]))

    def grad(self, block, a, b, c):
        """Coefficient vector of the form as a linear function of one block."""
        if block == 0:
            return np.bincount(self.i1, self.w * b[self.i2] * c[self.i3], self.sizes[0])
        if block == 1:
            return np.bincount(self.i2, self.w * a[self.i1] * c[self.i3], self.sizes[1])
        return np.bincount(self.i3, self.w * a[self.i1] * b[self.i2], self.sizes[2])

    def vectors(self, a, b, c=None):
        A = LatticeVector(self.dim, self.P1, a)
        B = LatticeVector(self.dim, self.P2, b)
        C = None if c is None else LatticeVector(self.dim, self.P3, c)
        return A, B, C


def _unit(x, q):
    nrm = lq_norm(x, q)
    return x / nrm if nrm > 0 else x


def dual_maximizer(g: np.ndarray, q: float) -> np.ndarray:
    """Nonnegative unit ``x`` in ``l^q`` maximizing ``<g, x>`` for ``g >= 0``.

    For ``q <= 1`` the maximizer is a point mass at the first argmax
    (lexicographic order of the support); for ``q = inf`` it is the
    all-ones vector; otherwise ``x = g^{q'-1} / ||g||_{q'}^{q'-1}``.
    """
    g = np.asarray(g, dtype=float)
    if g.size == 0:
        return g.copy()
    if math.isinf(q):
        return np.ones_like(g)
    if q <= 1 or not np.any(g > 0):
        x = np.zeros_like(g)
        x[int(np.argmax(g))] = 1.0
        return x
    x = (g / g.max()) ** (1.0 / (q - 1.0))
    return _unit(x, q)


def _random_start(rng, size, q):
    return _unit(rng.uniform(0.05, 1.0, size), q)


def _ascent_form(prob, q1, q2, q3, start, max_iters, tol):
    a, b, c = start
    val = prob.form(a, b, c)
    it = 0
    converged = False
    for it in range(1, max_iters + 1):
        a = dual_maximizer(prob.grad(0, a, b, c), q1)
        b = dual_maximizer(prob.grad(1, a, b, c), q2)
        c = dual_maximizer(prob.grad(2, a, b, c), q3)
        new = prob.form(a, b, c)
        gain = new - val
        val = max(val, new)
        if gain <= tol * max(abs(val), 1e-300):
            converged = True
            break
    return val, (a, b, c), it, converged


def _image_quasinorm_ascent(prob, block, a, b, q1, q2, q, max_iters_inner=30):
    """Multiplicative ascent of ``||image(a,b)||_q`` in one block, ``q < 1``."""
    x, qx = (a, q1) if block == 0 else (b, q2)
    if math.isinf(qx):
        x = np.ones_like(x)
        return (x, b) if block == 0 else (a, x)

    def objective(y):
        return lq_norm(prob.image(y, b) if block == 0 else prob.image(a, y), q)

    cur = objective(x)
    eta = 1.0
    for _ in range(max_iters_inner):
        d = prob.image(x, b) if block == 0 else prob.image(a, x)
        dm = d.max()
        if dm <= 0:
            break
        ds = np.maximum(d / dm, 1e-12) ** (q - 1.0)
        if block == 0:
            g = np.bincount(prob.i1, prob.w * b[prob.i2] * ds[prob.i3], prob.sizes[0])
        else:
            g = np.bincount(prob.i2, prob.w * a[prob.i1] * ds[prob.i3], prob.sizes[1])
        xs = np.maximum(x, 1e-300)
        ratio = g / xs ** (qx - 1.0) if qx > 1 else g
        ratio = ratio / ratio.max() if ratio.max() > 0 else ratio
        improved = False
        while eta > 1e-6:
            y = _unit(np.where(x > 0, x * np.maximum(ratio, 1e-300) ** eta, 0.0), qx)
            val = objective(y)
            if val > cur * (1 + 1e-14):
                x, cur, improved = y, val, True
                break
            eta /= 2
        if not improved:
            break
        eta = min(1.0, eta * 2)
    return (x, b) if block == 0 else (a, x)


def _ascent_image_small_q(prob, q1, q2, q, start, max_iters, tol):
    a, b = start
    val = lq_norm(prob.image(a, b), q)
    it = 0
    converged = False
    for it in range(1, max_iters + 1):
        a, b = _image_quasinorm_ascent(prob, 0, a, b, q1, q2, q)
        a, b = _image_quasinorm_ascent(prob, 1, a, b, q1, q2, q)
        new = lq_norm(prob.image(a, b), q)
        gain = new - val
        val = max(val, new)
        if gain <= tol * max(val, 1e-300):
            converged = True
            break
    return val, (a, b), it, converged


def _starts(prob, qs, restarts, seed):
    seeds = derive_seeds(seed, restarts)
    out = []
    for r, s in enumerate(seeds):
        rng = np.random.default_rng(s)
        if r == 0:
            out.append(tuple(_unit(np.ones(k), q) for k, q in zip(prob.sizes, qs)))
        else:
            out.append(tuple(_random_start(rng, k, q) for k, q in zip(prob.sizes, qs)))
    return out


VERTEX_START_CAP = 64


def _vertex_starts(prob, qs):
    """Deterministic starts ``B = delta_j, C = delta_l`` for small problems.

    The first sweep updates ``A`` from ``(B, C)``, so the ``A`` entry of a
    start is irrelevant.  Point masses are blended with a small uniform
    floor so that multiplicative updates can still move every entry.
    """
    k1, k2, k3 = prob.sizes
    if k2 * k3 > VERTEX_START_CAP:
        return []
    out = []
    for j in range(k2):
        for l in range(k3):
            b = np.full(k2, 1e-3)
            b[j] = 1.0
            c = np.full(k3, 1e-3)
            c[l] = 1.0
            out.append((_unit(np.ones(k1), qs[0]), _unit(b, qs[1]), _unit(c, qs[2])))
    return out


def _best(results):
    # max value, ties broken by restart index
    best = 0
    for i, r in enumerate(results):
        if r[0] > results[best][0]:
            best = i
    return results[best]


def b_norm_lower_altmax(V: LatticeWeight, q1, q2, q, max_iters: int = 500, tol: float = 1e-8,
                        restarts: int = 8, seed: int = 0) -> NormEstimate:
    """Alternating-maximization lower bound for ``||V||_{B_{q1,q2,q}}``.

    For ``q >= 1`` the image norm is written through duality as a trilinear
    form with third exponent ``q'`` and each block is updated by its exact
    Hölder-dual maximizer, which makes every sweep monotone.  For ``q < 1``
    the blocks are updated by normalized multiplicative ascent with step
    halving.

    Parameters
    ----------
    V : LatticeWeight
    q1, q2, q : exponent
        Exponents in ``(0, inf]``.
    max_iters, tol : int, float
        Per-restart sweep cap and relative-gain stopping threshold.
    restarts, seed : int
        Number of starts and the seed they are derived from (restart 0 is
        the uniform start).

    Returns
    -------
    NormEstimate
    """
    q1, q2, q = as_exponent(q1), as_exponent(q2), as_exponent(q)
    if len(V) == 0:
        return NormEstimate(0.0, 0.0, None, 0, True, degenerate=True)
    prob = _Problem(V)
    if q >= 1:
        q3 = conjugate(q)
        starts = _starts(prob, (q1, q2, q3), restarts, seed) + _vertex_starts(prob, (q1, q2, q3))
        res = ordered_map(lambda st: _ascent_form(prob, q1, q2, q3, st, max_iters, tol), starts)
        _, (a, b, _), _, conv = _best(res)
        d = prob.image(a, b)
        lower = lq_norm(d, q)
        c = dual_maximizer(d, q3)
        wit = prob.vectors(a, b, c)
    else:
        starts = [st[:2] for st in _starts(prob, (q1, q2, 1.0), restarts, seed)]
        if prob.sizes[1] <= VERTEX_START_CAP:
            for j in range(prob.sizes[1]):
                b = np.full(prob.sizes[1], 1e-3)
                b[j] = 1.0
                starts.append((_unit(np.ones(prob.sizes[0]), q1), _unit(b, q2)))
        res = ordered_map(lambda st: _ascent_image_small_q(prob, q1, q2, q, st, max_iters, tol), starts)
        _, (a, b), _, conv = _best(res)
        lower = lq_norm(prob.image(a, b), q)
        wit = prob.vectors(a, b, None)
    iters = int(sum(r[2] for r in res))
    upper = math.inf
    if q >= 1:
        upper = brascamp_lieb_upper(V, q1, q2, conjugate(q), allow_compute=False)
        upper = max(upper, lower)
    return NormEstimate(lower, upper, wit, iters, bool(conv))


def bform_norm(V: LatticeWeight, q1, q2, q3, max_iters: int = 500, tol: float = 1e-8,
               restarts: int = 8, seed: int = 0) -> NormEstimate:
    """Estimate ``||V||_{B^form_{q1,q2,q3}}`` (all exponents in ``[1, inf]``).

    The three-vector form is maximized directly; the result is cross-checked
    against :func:`b_norm_lower_altmax` at ``q = q3'`` and the larger lower
    bound is returned.
    """
    q1, q2, q3 = as_exponent(q1), as_exponent(q2), as_exponent(q3)
    if min(q1, q2, q3) < 1:
        raise ValueError("B^form is defined for exponents in [1, inf]")
    if len(V) == 0:
        return NormEstimate(0.0, 0.0, None, 0, True, degenerate=True)
    prob = _Problem(V)
    starts = _starts(prob, (q1, q2, q3), restarts, derive_seeds(seed, 1)[0]) + _vertex_starts(prob, (q1, q2, q3))
    res = ordered_map(lambda st: _ascent_form(prob, q1, q2, q3, st, max_iters, tol), starts)
    val, (a, b, c), _, conv = _best(res)
    direct = NormEstimate(val, math.inf, prob.vectors(a, b, c), int(sum(r[2] for r in res)), bool(conv))
    dual = b_norm_lower_altmax(V, q1, q2, conjugate(q3), max_iters, tol, restarts, seed)
    best = dual if dual.lower >= direct.lower else direct
    upper = max(brascamp_lieb_upper(V, q1, q2, q3, allow_compute=False), best.lower)
    best.upper = upper
    best.iterations = direct.iterations + dual.iterations
    best.details = {"direct": direct.lower, "dual": dual.lower}
    return best


# ---------------------------------------------------------------------------
# brute-force oracle


def sphere_grid(k: int, q: float, steps: int) -> np.ndarray:
    """Directions of the nonnegative unit ``l^q`` sphere in ``R^k``.

    Uses all integer vectors in ``{0..steps}^k`` whose largest entry equals
    ``steps`` (the faces of the cube), normalized to unit ``l^q`` norm.  The
    coordinate vertices and the all-ones direction are always included.
    """
    if k == 1:
        return np.ones((1, 1))
    axes = [np.arange(steps + 1)] * k
    pts = np.array(list(itertools.product(*axes)), dtype=float)
    pts = pts[pts.max(axis=1) == steps]
    if math.isinf(q):
        return pts / steps
    norms = np.sum((pts / steps) ** q, axis=1) ** (1.0 / q)
    return (pts / steps) / norms[:, None]


def _grid_slack(k: int, q: float, steps: int) -> float:
    """Relative covering slack ``eps`` of :func:`sphere_grid` (see bracket)."""
    if k == 1 or math.isinf(q) or q <= 1:
        return 0.0
    return k ** (1.0 / q) / (2.0 * steps)


def _rowwise_q(x, q, axis):
    if math.isinf(q):
        return np.max(x, axis=axis)
    m = np.max(x, axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((x / safe) ** q, axis=axis) ** (1.0 / q)
    return np.squeeze(m, axis=axis) * s


def _inner_exact(K, q2, q):
    """``sup_B ||K B||_q`` over nonnegative unit ``B`` in ``l^{q2}``, or None."""
    # K has shape (batch, n3, k2)
    if math.isinf(q2):
        return _rowwise_q(K.sum(axis=2), q, axis=1)
    if q2 <= 1 and q >= 1:
        return np.max(_rowwise_q(K, q, axis=1), axis=1)
    if q == 1:
        return _rowwise_q(K.sum(axis=1), conjugate(q2), axis=1)
    if math.isinf(q):
        return np.max(_rowwise_q(K, conjugate(q2), axis=2), axis=1)
    if q2 == 2 and q == 2:
        return np.linalg.norm(K, ord=2, axis=(1, 2))
    return None


def bruteforce_bracket(V: LatticeWeight, q1, q2, q, grid_steps: int = 32,
                       max_support: int = 4) -> tuple[float, float]:
    """Grid oracle for ``||V||_{B_{q1,q2,q}}`` on tiny supports.

    ``A`` ranges over :func:`sphere_grid` on the projection of ``supp V`` to
    the first factor.  For each ``A`` the supremum over ``B`` is taken in
    closed form whenever the exponents allow it (``q2`` in ``{<=1, inf}``,
    ``q`` in ``{1, inf}`` or ``q2 = q = 2``) and over a second grid otherwise.

    Returns
    -------
    value : float
        Best value over the grid (attained, hence a lower bound).
    upper : float
        Certified upper bound for ``q >= 1``, using that the objective is
        1-homogeneous, monotone and subadditive: with grid slack ``eps``,
        ``sup <= value (1+eps)/(1-eps)`` per gridded block.  ``inf`` when no
        certificate is available (``q < 1``).
    """
    q1, q2, q = as_exponent(q1), as_exponent(q2), as_exponent(q)
    if grid_steps > 64 or grid_steps < 1:
        raise ValueError("grid_steps must lie in [1, 64]")
    if len(V) == 0:
        return 0.0, 0.0
    prob = _Problem(V)
    k1, k2, n3 = prob.sizes
    if k1 > max_support or k2 > max_support:
        raise ValueError(f"search supports {k1}x{k2} exceed the cap {max_support}")
    agrid = sphere_grid(k1, q1, grid_steps)
    # one-hot scatter of support terms into (n3, k2) cells
    S = len(prob.w)
    scatter = np.zeros((S, n3 * k2))
    scatter[np.arange(S), prob.i3 * k2 + prob.i2] = prob.w
    K = (agrid[:, prob.i1] @ scatter).reshape(-1, n3, k2)
    vals = _inner_exact(K, q2, q)
    inner_slack = 0.0
    if vals is None:
        bgrid = sphere_grid(k2, q2, grid_steps)
        vals = np.empty(K.shape[0])
        for start in range(0, K.shape[0], 256):
            blk = np.einsum("aij,bj->abi", K[start:start + 256], bgrid)
            vals[start:start + 256] = np.max(_rowwise_q(blk, q, axis=2), axis=1)
        inner_slack = _grid_slack(k2, q2, grid_steps)
    value = float(np.max(vals))
    if q < 1:
        return value, math.inf
    factor = 1.0
    for eps in (_grid_slack(k1, q1, grid_steps), inner_slack):
        factor *= (1 + eps) / (1 - eps)
    return value, value * factor


def b_norm_bruteforce(V: LatticeWeight, q1, q2, q, grid_steps: int = 32) -> float:
    """Deterministic grid-search value of ``||V||_{B_{q1,q2,q}}`` (see
    :func:`bruteforce_bracket`)."""
    return bruteforce_bracket(V, q1, q2, q, grid_steps)[0]


# ---------------------------------------------------------------------------
# Brascamp-Lieb upper bound


def bl_q0_reciprocal(q1, q2, q3) -> float | None:
    """``1/q0`` from ``2/q0 + 1/q1 + 1/q2 + 1/q3 = 2`` if the bound applies.

    Returns None when the scaling identity has no solution with
    ``q0 >= 1`` or when ``0 <= 1/q_i <= 1 - 1/q0`` fails.
    """
    s = [1.0 / as_exponent(x) for x in (q1, q2, q3)]
    r0 = (2.0 - sum(s)) / 2.0
    if r0 < -1e-15 or r0 > 1 + 1e-15:
        return None
    r0 = min(max(r0, 0.0), 1.0)
    if any(si > 1 - r0 + 1e-15 for si in s):
        return None
    return r0


def _bl_key(q1, q2, q3) -> str:
    from .exponents import format_exponent, reciprocal

    return ",".join(format_exponent(reciprocal(x)) for x in (q1, q2, q3))


@functools.lru_cache(maxsize=1)
def _calibration_table() -> dict:
    with resources.files("bilinlab.data").joinpath("bl_calibration.json").open() as fh:
        return json.load(fh)


CALIBRATION_FAMILY_SEED = 20240611
CALIBRATION_FAMILY_SIZE = 200
CALIBRATION_SAFETY = 1.5


def random_small_weight(rng: np.random.Generator, radius: int = 1, density: float = 0.6) -> LatticeWeight:
    """Random ``n = 1`` weight supported in ``[-radius, radius]^2``."""
    r = np.arange(-radius, radius + 1)
    pts = np.array(list(itertools.product(r, r)))
    mask = rng.random(len(pts)) < density
    if not mask.any():
        mask[rng.integers(len(pts))] = True
    vals = rng.uniform(0.05, 1.0, len(pts))
    return LatticeWeight(1, pts[mask], vals[mask])


def small_weight_family(seed: int, count: int, radius: int = 1) -> list[LatticeWeight]:
    return [random_small_weight(np.random.default_rng(s), radius) for s in derive_seeds(seed, count)]


@functools.lru_cache(maxsize=None)
def _computed_constant(key: str) -> float:
    from fractions import Fraction

    s = [Fraction(x) for x in key.split(",")]
    qs = [math.inf if x == 0 else float(1 / x) for x in s]
    return calibrate_bl_constant(*qs)


def calibrate_bl_constant(q1, q2, q3, seed: int = CALIBRATION_FAMILY_SEED,
                          count: int = CALIBRATION_FAMILY_SIZE,
                          safety: float = CALIBRATION_SAFETY) -> float:
    """Calibrate the constant of the lattice Brascamp-Lieb bound.

    Maximum of ``lower / ||V||_{l^{q0}}`` over a seeded family of small
    weights, times ``safety``.
    """
    r0 = bl_q0_reciprocal(q1, q2, q3)
    if r0 is None:
        raise ValueError("Brascamp-Lieb scaling conditions fail")
    q0 = math.inf if r0 == 0 else 1.0 / r0
    worst = 0.0
    for V in small_weight_family(seed, count):
        est = bform_norm_uncalibrated(V, q1, q2, q3)
        worst = max(worst, est / V.norm(q0))
    return safety * worst


def bform_norm_uncalibrated(V, q1, q2, q3) -> float:
    """Form lower bound without touching the calibration table."""
    prob = _Problem(V)
    q1, q2, q3 = as_exponent(q1), as_exponent(q2), as_exponent(q3)
    starts = _starts(prob, (q1, q2, q3), 8, 0) + _vertex_starts(prob, (q1, q2, q3))
    return max(_ascent_form(prob, q1, q2, q3, st, 500, 1e-8)[0] for st in starts)


def brascamp_lieb_upper(V: LatticeWeight, q1, q2, q3, allow_compute: bool = True) -> float:
    """Calibrated Brascamp-Lieb bound ``c_cal ||V||_{l^{q0}}`` on the form.

    Returns ``inf`` when the scaling conditions fail, or when no frozen
    constant exists and ``allow_compute`` is False.
    """
    r0 = bl_q0_reciprocal(q1, q2, q3)
    if r0 is None:
        return math.inf
    q0 = math.inf if r0 == 0 else 1.0 / r0
    key = _bl_key(q1, q2, q3)
    table = _calibration_table()["constants"]
    if key in table:
        c = table[key]["c_cal"]
    elif allow_compute:
        logger.warning("no frozen Brascamp-Lieb constant for %s; calibrating now", key)
        c = _computed_constant(key)
    else:
        return math.inf
    return c * V.norm(q0)


# ---------------------------------------------------------------------------
# special weights


def _box(n: int, R: int) -> np.ndarray:
    r = np.arange(-R, R + 1)
    grids = np.meshgrid(*([r] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _box_pairs(n: int, R: int) -> np.ndarray:
    return _box(2 * n, R)


def weight_hormander(m, n: int, R: int) -> LatticeWeight:
    """``(1 + |nu1| + |nu2|)^m`` on the box ``max(|nu1|_inf, |nu2|_inf) <= R``."""
    if R < 0:
        raise ValueError("radius must be nonnegative")
    pts = _box_pairs(n, R)
    a = np.linalg.norm(pts[:, :n], axis=1)
    b = np.linalg.norm(pts[:, n:], axis=1)
    return LatticeWeight(n, pts, (1.0 + a + b) ** float(m))


def weight_hilbert(n: int, R: int) -> LatticeWeight:
    """``prod_k (1 + |nu1_k| + |nu2_k|)^{-1}`` on the truncation box."""
    pts = _box_pairs(n, R)
    vals = np.prod(1.0 / (1.0 + np.abs(pts[:, :n]) + np.abs(pts[:, n:])), axis=1)
    return LatticeWeight(n, pts, vals)


def random_l2_weight(seed: int, R: int, n: int = 1, decay: float = 1.5) -> LatticeWeight:
    """Seeded weight ``u(nu) (1 + |nu|)^{-decay}`` truncated to the box of radius ``R``.

    ``u`` is uniform on ``[1/2, 3/2]`` and depends only on ``(seed, nu)``, so
    truncations at different radii are restrictions of one weight.  For
    ``decay > n`` the untruncated weight lies in ``l^2``.
    """
    pts = _box_pairs(n, R)
    key = np.abs(pts).max(axis=1)
    vals = np.empty(len(pts))
    # shells are generated in order so every radius sees the same values
    for r in range(R + 1):
        sel = np.nonzero(key == r)[0]
        rng = np.random.default_rng([int(seed) % (1 << 64), r])
        u = rng.uniform(0.5, 1.5, size=len(sel))
        vals[sel] = u * (1.0 + np.linalg.norm(pts[sel], axis=1)) ** (-float(decay))
    return LatticeWeight(n, pts, vals)


ARRANGEMENTS = ("nu1,nu2", "nu1,nu1+nu2", "nu1+nu2,nu2")


def weight_product(f1: LatticeVector, f2: LatticeVector, arrangement: str = "nu1,nu2") -> LatticeWeight:
    """Arranged tensor product of two lattice vectors.

    ``arrangement`` is one of ``"nu1,nu2"`` (``f1(nu1) f2(nu2)``),
    ``"nu1,nu1+nu2"`` (``f1(nu1) f2(nu1+nu2)``) and ``"nu1+nu2,nu2"``
    (``f1(nu1+nu2) f2(nu2)``).
    """
    _check_dims(f1, f2)
    arrangement = arrangement.replace(" ", "").replace("(", "").replace(")", "")
    if arrangement not in ARRANGEMENTS:
        raise ValueError(f"unknown arrangement {arrangement!r}")
    i, j = np.meshgrid(np.arange(len(f1)), np.arange(len(f2)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    x, y = f1.points[i], f2.points[j]
    if arrangement == "nu1,nu2":
        nu1, nu2 = x, y
    elif arrangement == "nu1,nu1+nu2":
        nu1, nu2 = x, y - x
    else:
        nu1, nu2 = x - y, y
    return LatticeWeight(f1.dim, np.concatenate([nu1, nu2], axis=1), f1.values[i] * f2.values[j])


def power_law_vector(n: int, R: int, exponent: float) -> LatticeVector:
    """``(1 + |nu|)^{-exponent}`` on ``|nu|_inf <= R``."""
    pts = _box(n, R)
    return LatticeVector(n, pts, (1.0 + np.linalg.norm(pts, axis=1)) ** (-float(exponent)))


@dataclass
class ModerateMajorant:
    """Evaluable moderate-class majorant ``V*`` of a lattice weight."""

    V: LatticeWeight
    M: int

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float).reshape(-1, 2 * self.V.dim)
        out = np.zeros(xi.shape[0])
        pts = self.V.points.astype(float)
        for start in range(0, len(pts), 4096):
            p = pts[start:start + 4096]
            d2 = np.sum((xi[:, None, :] - p[None, :, :]) ** 2, axis=2)
            out += np.sum(self.V.values[start:start + 4096] * (1.0 + d2) ** (-self.M / 2.0), axis=1)
        return out

    def restrict(self, R: int) -> LatticeWeight:
        """Lattice samples of ``V*`` on the box of radius ``R``."""
        pts = _box_pairs(self.V.dim, R)
        return LatticeWeight(self.V.dim, pts, self(pts))


def moderate_majorant(V: LatticeWeight, M: int, q=None, sample_radius: int = 4,
                      seed: int = 0, samples: int = 400):
    """Moderate majorant ``V*(xi) = sum_mu V(mu) <xi - mu>^{-M}``.

    Parameters
    ----------
    V : LatticeWeight
    M : int
        Kernel decay order; should exceed ``2n / min(1, q)`` for the
        intended ``q`` (checked and reported when ``q`` is given).
    sample_radius, seed, samples : int
        Control the random sample pairs ``(xi, eta)`` of the moderate-class
        check.

    Returns
    -------
    majorant : ModerateMajorant
    report : dict
        ``dominates`` (``V <= V*`` on ``supp V``), the measured moderate
        constant ``C`` in ``F(xi+eta) <= C F(xi) <eta>^M`` and the Peetre
        bound ``2^{M/2}`` it must not exceed.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    F = ModerateMajorant(V, int(M))
    dom = F(V.points) >= V.values * (1 - 1e-12)
    rng = np.random.default_rng(seed)
    n2 = 2 * V.dim
    center = V.points.mean(axis=0) if len(V) else np.zeros(n2)
    xi = center + rng.uniform(-sample_radius, sample_radius, (samples, n2))
    eta = rng.uniform(-sample_radius, sample_radius, (samples, n2))
    ratio = F(xi + eta) / (F(xi) * (1 + np.sum(eta ** 2, axis=1)) ** (M / 2.0))
    report = {
        "M": int(M),
        "dominates": bool(np.all(dom)),
        "moderate_constant": float(ratio.max()),
        "peetre_bound": 2.0 ** (M / 2.0),
        "moderate_ok": bool(ratio.max() <= 2.0 ** (M / 2.0) * (1 + 1e-9)),
    }
    if q is not None:
        qq = as_exponent(q)
        report["M_threshold"] = 2 * V.dim / min(1.0, qq)
        report["M_admissible"] = bool(M > report["M_threshold"])
    return F, report


# ---------------------------------------------------------------------------
# counterexample


def counterexample_parameters(p1, p2, n: int = 1) -> dict:
    """Exponents of the explicit divergent configuration.

    Requires ``1 <= p1, p2 < 2`` and ``1/p1 + 1/p2 > 3/2``.
    """
    p1, p2 = as_exponent(p1), as_exponent(p2)
    r1, r2 = 1.0 / p1, 1.0 / p2
    if not (0.5 < r1 <= 1 and 0.5 < r2 <= 1 and r1 + r2 > 1.5):
        raise ValueError("need 1 <= p1, p2 < 2 and 1/p1 + 1/p2 > 3/2")
    s1, s2 = 1 - r1, 1 - r2   # 1/p1', 1/p2'
    alpha = s1 + s2 + 0.5
    inv_q = 0.5 * (r1 + r2 - 0.5)
    return {"p1": p1, "p2": p2, "n": n, "alpha": alpha, "inv_q": inv_q,
            "weight_exponent": -2 * n * inv_q, "s1": s1, "s2": s2}


def _profile(x_abs, n, s, alpha):
    """``|x|^{-n s} (log|x|)^{-s/alpha}`` (``s = 1/p'``)."""
    return x_abs ** (-n * s) * np.log(x_abs) ** (-s / alpha)


def counterexample_profile(p1, p2, radii, n: int = 1) -> list[dict]:
    """Form value and vector norms of the divergent configuration per radius.

    ``A, B, C`` are sampled on ``Z^n`` intersected with
    ``{10 <= |x| <= R}`` and the weight is ``(1 + |nu1| + |nu2|)^{-2n/q}``.
    Only ``n = 1`` is supported at scale; the form is accumulated for all
    radii in a single pass over pairs ``(nu1, nu2)`` ordered by
    ``max(|nu1|, |nu2|, |nu1 + nu2|)``.
    """
    prm = counterexample_parameters(p1, p2, n)
    if n != 1:
        raise NotImplementedError("counterexample profile is implemented for n = 1")
    radii = sorted(int(R) for R in radii)
    Rmax = radii[-1]
    alpha, s1, s2 = prm["alpha"], prm["s1"], prm["s2"]
    x = np.concatenate([-np.arange(Rmax, 9, -1), np.arange(10, Rmax + 1)])
    ax = np.abs(x).astype(float)
    A = _profile(ax, n, s1, alpha)
    B = _profile(ax, n, s2, alpha)
    Cfull = np.zeros(2 * Rmax + 1)   # C on [-Rmax, Rmax]
    mask = np.abs(np.arange(-Rmax, Rmax + 1)) >= 10
    cx = np.abs(np.arange(-Rmax, Rmax + 1))[mask].astype(float)
    Cfull[mask] = _profile(cx, n, 0.5, alpha)
    wexp = prm["weight_exponent"]
    hist = np.zeros(Rmax + 1)
    for i in range(len(x)):
        s = x[i] + x
        ok = np.abs(s) <= Rmax
        xs, ss = x[ok], s[ok]
        terms = (1.0 + ax[i] + np.abs(xs)) ** wexp * A[i] * B[ok] * Cfull[ss + Rmax]
        r = np.maximum(np.maximum(ax[i], np.abs(xs)), np.abs(ss)).astype(np.int64)
        hist += np.bincount(r, terms, Rmax + 1)
    cum = np.cumsum(hist)
    out = []
    for R in radii:
        sel = ax <= R
        csel = np.abs(np.arange(-Rmax, Rmax + 1)) <= R
        out.append({
            "R": R,
            "form_value": float(cum[R]),
            "normA": lq_norm(A[sel], 1.0 / s1 if s1 > 0 else math.inf),
            "normB": lq_norm(B[sel], 1.0 / s2 if s2 > 0 else math.inf),
            "normC": lq_norm(Cfull[csel], 2.0),
        })
    return out


def counterexample_witness(p1, p2, R: int, n: int = 1) -> dict:
    """Form value and norms of the divergent configuration at radius ``R``."""
    return counterexample_profile(p1, p2, [R], n)[0]
