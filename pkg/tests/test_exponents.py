import math
import random
from fractions import Fraction as F

import pytest

from bilinlab.exponents import (
    best_exponent_triple,
    best_reciprocal_triple,
    check_best_constraints,
    check_triangle,
    critical_order,
    holder_sharp_q,
    make_triple,
    sharp_q,
    sharp_q_from_reciprocals,
    triple_from_reciprocals,
)


def test_make_triple_examples():
    t = make_triple(2, 2, 1)
    assert (t.r1, t.r2, t.rp, t.r3) == (F(1, 2), F(1, 2), 1, 0)
    t = make_triple(math.inf, "inf", math.inf)
    assert (t.r1, t.r2, t.rp, t.r3) == (0, 0, 0, 1)
    t = make_triple(4, 4, 2)
    assert (t.r1, t.r2, t.rp, t.r3) == (F(1, 4), F(1, 4), F(1, 2), F(1, 2))


@pytest.mark.parametrize("args", [(F(1, 2), 2, 1), (2, 0, 1), (2, 2, 0), (2, 2, -1)])
def test_make_triple_rejects(args):
    with pytest.raises(ValueError):
        make_triple(*args)


def test_critical_order_examples():
    assert critical_order(make_triple(2, 2, 1), 1) == F(-1, 2)
    assert critical_order(make_triple(1, 1, F(1, 2)), 1) == F(-3, 2)
    assert critical_order(make_triple("inf", "inf", "inf"), 2) == -2


def test_sharp_q_examples():
    r = sharp_q(make_triple(2, 2, 1))
    assert (r.q, r.case_label, r.weak_type) == (4, "I", True)
    r = sharp_q(make_triple(1, 1, F(1, 2)))
    assert r.q == 1 and not r.weak_type
    # (1/p1, 1/p2, 1/p3) = (1, 1, 0): only case III-2 applies
    assert r.case_label == "III-2"
    r = sharp_q(make_triple(1, 2, F(2, 3)))
    assert (r.q, r.case_label, r.weak_type) == (2, "II", False)
    r = sharp_q(make_triple("inf", "inf", "inf"))
    assert (r.q, r.case_label) == (2, "II")
    # 1/p3 = 1 excludes the starred case II*
    assert r.weak_type is False


def test_holder_examples():
    assert holder_sharp_q(4, 4).q == 4
    assert holder_sharp_q(1, 1).q == 1
    assert holder_sharp_q(2, 2).q == 4
    assert holder_sharp_q(1, 4).q == 2
    assert holder_sharp_q(F(4, 3), 4).q == F(8, 3)


def test_best_triple_examples():
    assert best_exponent_triple(make_triple(2, 2, 1)) == (2, 2, 2)
    assert best_exponent_triple(make_triple(1, 2, F(2, 3))) == (math.inf, 2, 2)


def _grid(step):
    return [F(i, step) for i in range(step + 1)]


def test_taxonomy_on_grid():
    rng = random.Random(3)
    perms = [(0, 1, 2), (1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1)]
    for r1 in _grid(16):
        for r2 in _grid(16):
            for r3 in _grid(16):
                res = sharp_q_from_reciprocals((r1, r2, r3))
                assert 1 <= res.q <= 4
                if res.weak_type:
                    assert 2 <= res.q
                r = (r1, r2, r3)
                p = rng.choice(perms)
                assert sharp_q_from_reciprocals(tuple(r[i] for i in p)).q == res.q


def test_best_triple_random():
    rng = random.Random(11)
    for _ in range(1000):
        r1 = F(rng.randint(0, 60), 60)
        r2 = F(rng.randint(0, 60), 60)
        rp = F(rng.randint(0, 120), 60)
        t = triple_from_reciprocals(r1, r2, rp)
        s = best_reciprocal_triple(t)
        assert 1 / sharp_q(t).q == 1 - sum(s) / 2
        assert check_best_constraints(t, s)
        assert check_triangle(s)


def test_critical_order_monotone_in_rp():
    for r1 in _grid(8):
        for r2 in _grid(8):
            ms = [critical_order(triple_from_reciprocals(r1, r2, rp), 3) for rp in _grid(8)]
            assert ms == sorted(ms)


def test_hoelder_critical_identity():
    for r1 in _grid(24)[:-1]:
        for r2 in _grid(24)[:-1]:
            if 0 < r1 + r2 < F(3, 2):
                t = triple_from_reciprocals(r1, r2, r1 + r2)
                for n in (1, 2, 3):
                    assert critical_order(t, n) == -2 * n / sharp_q(t).q
