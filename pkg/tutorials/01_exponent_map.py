"""Walk the sharp exponent map along the Hoelder line.

For ``1/p = 1/p1 + 1/p2`` the weight exponent ``q`` takes one of six
closed forms depending on where ``(1/p1, 1/p2)`` sits in the unit square.
This prints a coarse map of ``q`` and the matching critical order.
"""

from fractions import Fraction

from bilinlab.exponents import critical_order, format_exponent, sharp_q, triple_from_reciprocals

STEP = Fraction(1, 8)

axis = [i * STEP for i in range(9)]
print("rows: 1/p2 from 1 down to 0, columns: 1/p1 from 0 to 1")
for b in reversed(axis):
    cells = []
    for a in axis:
        res = sharp_q(triple_from_reciprocals(a, b, a + b))
        cells.append(f"{format_exponent(res.q):>6}")
    print(f"{str(b):>4} |" + "".join(cells))

# the critical order is -2n/q inside the open region
t = triple_from_reciprocals(Fraction(1, 2), Fraction(1, 2), Fraction(1))
print("\n(2, 2, 1): q =", sharp_q(t).q, " m =", critical_order(t, 1))
t = triple_from_reciprocals(Fraction(1), Fraction(1), Fraction(2))
print("(1, 1, 1/2): q =", sharp_q(t).q, " m =", critical_order(t, 1), "(case", sharp_q(t).case_label + ")")
