"""Exact exponent formulas for S_{0,0}-type bilinear multipliers.

All exponents are handled through their reciprocals as ``fractions.Fraction``
values, so that case boundaries such as ``1/2`` or ``3/2`` are decided
exactly.  ``math.inf`` (or the string ``"inf"``) stands for an infinite
exponent and maps to the reciprocal ``0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

HALF = Fraction(1, 2)
ONE = Fraction(1)
ZERO = Fraction(0)

CASE_ORDER = ("I", "II", "III-1", "III-2", "IV-1", "IV-2")


def reciprocal(p) -> Fraction:
    """Return ``1/p`` exactly; ``inf`` maps to 0.

    Accepts ints, ``Fraction``, decimal strings such as ``"2/3"``, floats
    (converted through their shortest decimal representation) and
    ``math.inf`` / ``"inf"``.
    """
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "oo", "∞"):
            return ZERO
        p = Fraction(s)
    elif isinstance(p, float):
        if math.isinf(p):
            if p < 0:
                raise ValueError("negative infinite exponent")
            return ZERO
        p = Fraction(repr(p))
    else:
        p = Fraction(p)
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    return 1 / p


def from_reciprocal(r: Fraction):
    """Inverse of :func:`reciprocal`: 0 maps to ``math.inf``."""
    r = Fraction(r)
    return math.inf if r == 0 else 1 / r


def format_exponent(p) -> str:
    """Render an exponent (Fraction or inf) as a short string."""
    if p == math.inf:
        return "inf"
    p = Fraction(p)
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


@dataclass(frozen=True)
class ExponentTriple:
    """Reciprocal representation of ``(p1, p2, p)`` and the derived ``p3``.

    Attributes
    ----------
    r1, r2 : Fraction
        ``1/p1`` and ``1/p2``, both in ``[0, 1]``.
    rp : Fraction
        ``1/p`` in ``[0, inf)``.
    r3 : Fraction
        ``1/p3 = max(0, 1 - rp)``: ``p3 = inf`` for ``p <= 1`` and ``p'``
        otherwise.
    """

    r1: Fraction
    r2: Fraction
    rp: Fraction
    r3: Fraction

    @property
    def reciprocals(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.r1, self.r2, self.r3)

    @property
    def exponents(self):
        """``(p1, p2, p, p3)`` with ``math.inf`` for infinite entries."""
        return tuple(from_reciprocal(r) for r in (self.r1, self.r2, self.rp, self.r3))

    def is_holder_admissible(self) -> bool:
        return self.rp <= self.r1 + self.r2


def make_triple(p1, p2, p) -> ExponentTriple:
    """Normalize ``(p1, p2, p)`` into an :class:`ExponentTriple`.

    Raises
    ------
    ValueError
        If ``p1`` or ``p2`` is below 1 or ``p`` is not positive.
    """
    r1, r2, rp = reciprocal(p1), reciprocal(p2), reciprocal(p)
    if r1 > 1 or r2 > 1:
        raise ValueError("p1 and p2 must lie in [1, inf]")
    return ExponentTriple(r1, r2, rp, max(ZERO, 1 - rp))


def triple_from_reciprocals(r1, r2, rp) -> ExponentTriple:
    r1, r2, rp = Fraction(r1), Fraction(r2), Fraction(rp)
    if not (0 <= r1 <= 1 and 0 <= r2 <= 1) or rp < 0:
        raise ValueError("reciprocals out of range")
    return ExponentTriple(r1, r2, rp, max(ZERO, 1 - rp))


def critical_order(t: ExponentTriple, n: int) -> Fraction:
    """Critical Hörmander order ``m(p1, p2, p)`` in dimension ``n``.

    ``m = min(n/2, n/p) - max(n/2, n/p1) - max(n/2, n/p2)``.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    h = Fraction(n, 2)
    return min(h, n * t.rp) - max(h, n * t.r1) - max(h, n * t.r2)


@dataclass(frozen=True)
class SharpQResult:
    """Sharp weight exponent with its case label.

    Attributes
    ----------
    q : Fraction
        The exponent ``q(p1, p2, p)``, always in ``[1, 4]``.
    case_label : str
        One of ``I, II, III-1, III-2, IV-1, IV-2``.
    weak_type : bool
        True when the weak-type inclusion ``l^{q,inf}`` also holds, i.e.
        in the starred cases.
    perm : tuple of int
        The permutation ``(i, j, k)`` (0-based) selecting the case roles.
    """

    q: Fraction
    case_label: str
    weak_type: bool
    perm: tuple = (0, 1, 2)

    @property
    def inv_q(self) -> Fraction:
        return 1 / self.q


def _case_candidates(r):
    """Yield ``(label, perm, 1/q)`` for every case condition met by ``r``."""
    perms = sorted(itertools.permutations(range(3)))
    if all(x <= HALF for x in r):
        yield "I", (0, 1, 2), Fraction(1, 4)
    for i, j, k in perms:
        if i < j and r[i] <= HALF and r[j] <= HALF and HALF <= r[k]:
            yield "II", (i, j, k), r[k] / 2
    for i, j, k in perms:
        if j < k and r[i] <= HALF <= r[j] and HALF <= r[k]:
            s = r[j] + r[k]
            if s <= Fraction(3, 2):
                yield "III-1", (i, j, k), (s - HALF) / 2
            if s >= Fraction(3, 2):
                yield "III-2", (i, j, k), s - 1
    if all(x >= HALF for x in r):
        a, b, c = r
        if a + b <= 1 + c and b + c <= 1 + a and c + a <= 1 + b:
            yield "IV-1", (0, 1, 2), (a + b + c - 1) / 2
        for i, j, k in perms:
            if i < j and r[i] + r[j] >= 1 + r[k]:
                yield "IV-2", (i, j, k), r[i] + r[j] - 1


def _weak_type(r) -> bool:
    if all(x <= HALF for x in r):
        return True
    for i, j, k in itertools.permutations(range(3)):
        if r[i] <= HALF and r[j] <= HALF and HALF <= r[k] < 1:
            return True
        if r[i] <= HALF <= r[j] and HALF <= r[k] and r[j] + r[k] < Fraction(3, 2):
            return True
    if all(x >= HALF for x in r):
        a, b, c = r
        if a + b < 1 + c and b + c < 1 + a and c + a < 1 + b and a + b + c <= 2:
            return True
    return False


def sharp_q_from_reciprocals(r) -> SharpQResult:
    """Evaluate the six-case formula on ``(1/p1, 1/p2, 1/p3)``."""
    r = tuple(Fraction(x) for x in r)
    cands = list(_case_candidates(r))
    if not cands:
        raise AssertionError(f"no case applies to {r}")
    values = {c[2] for c in cands}
    if len(values) != 1:
        raise AssertionError(f"case formulas disagree at {r}: {cands}")
    label, perm, inv_q = min(cands, key=lambda c: CASE_ORDER.index(c[0]))
    return SharpQResult(1 / inv_q, label, _weak_type(r), perm)


def sharp_q(t: ExponentTriple) -> SharpQResult:
    """Sharp exponent ``q(p1, p2, p)`` with case taxonomy and weak flag.

    On points shared by several cases all applicable formulas are checked to
    agree and the label of highest priority (I > II > III-1 > III-2 > IV-1 >
    IV-2) is reported, with the lexicographically smallest permutation.
    """
    return sharp_q_from_reciprocals(t.reciprocals)


def holder_direct_inv_q(r1: Fraction, r2: Fraction) -> Fraction:
    """Six-branch direct formula for ``1/q`` when ``1/p = 1/p1 + 1/p2``."""
    s = r1 + r2
    if r1 <= HALF and r2 <= HALF and HALF <= s:
        return Fraction(1, 4)
    if s <= HALF:
        return (1 - s) / 2
    if r1 <= HALF <= r2:
        return r2 / 2
    if r2 <= HALF <= r1:
        return r1 / 2
    if s <= Fraction(3, 2):
        return (s - HALF) / 2
    return s - 1


def holder_sharp_q(p1, p2) -> SharpQResult:
    """Sharp exponent on the Hölder line ``1/p = 1/p1 + 1/p2``.

    The result of :func:`sharp_q` is cross-checked against the direct
    six-branch formula.
    """
    r1, r2 = reciprocal(p1), reciprocal(p2)
    t = triple_from_reciprocals(r1, r2, r1 + r2)
    res = sharp_q(t)
    direct = holder_direct_inv_q(r1, r2)
    if direct != res.inv_q:
        raise AssertionError(f"direct formula {direct} != taxonomy {res.inv_q}")
    return res


def best_reciprocal_triple(t: ExponentTriple) -> tuple[Fraction, Fraction, Fraction]:
    """Reciprocals ``(1/q1, 1/q2, 1/q3)`` of the optimal exponent triple."""
    r = t.reciprocals
    res = sharp_q(t)
    i, j, k = res.perm
    s = [ZERO, ZERO, ZERO]
    if res.case_label == "I":
        s = [HALF, HALF, HALF]
    elif res.case_label == "II":
        s[i], s[j], s[k] = HALF, HALF, 1 - r[k]
    elif res.case_label == "III-1":
        s[i], s[j], s[k] = HALF, 1 - r[j], 1 - r[k]
    elif res.case_label == "III-2":
        s[i], s[j], s[k] = (1 - r[j]) + (1 - r[k]), 1 - r[j], 1 - r[k]
    elif res.case_label == "IV-1":
        s = [1 - x for x in r]
    else:
        s[i], s[j], s[k] = 1 - r[i], 1 - r[j], (1 - r[i]) + (1 - r[j])
    if 1 - sum(s) / 2 != res.inv_q:
        raise AssertionError("best triple violates the scaling identity")
    return tuple(s)


def best_exponent_triple(t: ExponentTriple):
    """Optimal ``(q1, q2, q3)`` realizing ``1/q = 1 - (1/q1+1/q2+1/q3)/2``.

    Infinite entries are returned as ``math.inf``.
    """
    return tuple(from_reciprocal(s) for s in best_reciprocal_triple(t))


def check_best_constraints(t: ExponentTriple, s) -> bool:
    """Check ``1/q_l <= 1 - max(1/2, 1/p_l)`` for the returned triple."""
    return all(0 <= s_l <= 1 - max(HALF, r_l) for s_l, r_l in zip(s, t.reciprocals))


def check_triangle(s) -> bool:
    """Check that each ``1/q_l`` is at most the sum of the other two."""
    a, b, c = s
    return min(s) >= 0 and a <= b + c and b <= c + a and c <= a + b
