import math

import numpy as np
import pytest

from bilinlab import lattice as L

INF = math.inf


def tri():
    return L.LatticeWeight(1, [[0, 0], [1, 0], [0, 1]], [1, 1, 1])


def test_trilinear_form_examples():
    d = L.LatticeWeight.delta([0], [0])
    one = L.LatticeVector.delta([0])
    assert L.trilinear_form(d, one, one, one) == 1
    assert L.trilinear_form(d, one, one, L.LatticeVector.delta([3])) == 0
    ab = L.LatticeVector.ones([0, 1])
    assert L.trilinear_form(tri(), ab, ab, ab) == 3


def test_bilinear_image_examples():
    A = L.LatticeVector(1, [[0], [1]], [1.0, 2.0])
    B = L.LatticeVector(1, [[0], [2]], [3.0, 1.0])
    V = L.weight_product(L.LatticeVector.ones([0, 1]), L.LatticeVector.ones([0, 2]))
    img = L.bilinear_image(V, A, B)
    conv = np.convolve([1.0, 2.0, 0.0], [3.0, 0.0, 1.0])
    for k, v in enumerate(conv):
        assert img.lookup(np.array([[k]]))[0] == pytest.approx(v)
    img = L.bilinear_image(L.LatticeWeight.delta([2], [-1]), L.LatticeVector.delta([2]).scaled(2),
                           L.LatticeVector.delta([-1]).scaled(3))
    assert img.to_dict() == {(1,): 6.0}


def test_hormander_image_at_origin():
    V = L.weight_hormander(-1, 1, 2)
    d = L.LatticeVector.delta([0])
    img = L.bilinear_image(V, d, d)
    assert img.to_dict() == {(0,): 1.0}


@pytest.mark.parametrize("qs", [(2, 2, 2), (1, 2, INF), (INF, INF, 1), (1, 1, 0.5), (2, INF, 1)])
def test_point_weight_norm_is_one(qs):
    est = L.b_norm_lower_altmax(L.LatticeWeight.delta([0], [0]), *qs)
    assert est.lower == pytest.approx(1, abs=1e-6)
    est = L.b_norm_lower_altmax(L.LatticeWeight.delta([3], [-2]), *qs)
    assert est.lower == pytest.approx(1, abs=1e-6)


def test_altmax_matches_bruteforce_on_three_points():
    lo = L.b_norm_lower_altmax(tri(), 2, 2, 2).lower
    value, upper = L.bruteforce_bracket(tri(), 2, 2, 2)
    assert abs(lo - value) / value < 0.05
    assert lo <= upper
    assert lo == pytest.approx(2 / math.sqrt(3), rel=1e-6)


def test_bruteforce_homogeneity_and_regression():
    d = L.LatticeWeight.delta([0], [0])
    assert L.bruteforce_bracket(d, 2, 2, 2)[0] == pytest.approx(1)
    assert L.bruteforce_bracket(d.scaled(2), 2, 2, 2)[0] == pytest.approx(2)
    V = L.LatticeWeight(1, [[0, 0], [1, 1]], [1, 1])
    # frozen regression value of the grid oracle
    assert L.bruteforce_bracket(V, 2, 2, 2)[0] == pytest.approx(1.0, abs=1e-12)


def test_bform_duality_and_hilbert_small():
    V = tri()
    f = L.bform_norm(V, 2, 2, 2).lower
    b = L.b_norm_lower_altmax(V, 2, 2, 2).lower
    assert f == pytest.approx(b, rel=1e-6)
    assert L.bform_norm(L.LatticeWeight.delta([0], [0]), 2, 2, INF).lower == pytest.approx(1)


def test_hilbert_matches_singular_value():
    R = 16
    v = np.arange(-R, R + 1)
    M = 1.0 / (1 + np.abs(v)[:, None] + np.abs(v)[None, :])
    est = L.bform_norm(L.weight_hilbert(1, R), 2, 2, INF).lower
    assert est == pytest.approx(np.linalg.norm(M, 2), rel=1e-6)


def test_brascamp_lieb_scaling():
    assert L.bl_q0_reciprocal(2, 2, 2) == pytest.approx(0.25)
    assert L.bl_q0_reciprocal(1, 1, 1) is None
    assert L.brascamp_lieb_upper(tri(), 1, 1, 1) == INF
    d = L.LatticeWeight.delta([0], [0])
    assert L.brascamp_lieb_upper(d, 2, 2, 2) >= 1


def test_weights():
    assert np.all(L.weight_hormander(0, 1, 3).values == 1)
    V = L.weight_hormander(-1.5, 1, 2)
    assert V.lookup(np.array([[1, 1]]))[0] == pytest.approx(3 ** -1.5)
    H = L.weight_hilbert(1, 4)
    assert H.lookup(np.array([[0, 0]]))[0] == 1
    assert H.lookup(np.array([[3, -4]]))[0] == pytest.approx(1 / 8)


def test_random_l2_truncations_nest():
    small, big = L.random_l2_weight(5, 4), L.random_l2_weight(5, 8)
    assert np.allclose(big.lookup(small.points), small.values)


def test_weight_product_arrangements():
    d0 = L.LatticeVector.delta([0])
    assert L.weight_product(d0, d0).to_dict() == {(0, 0): 1.0}
    W = L.weight_product(L.LatticeVector.delta([1]), L.LatticeVector.delta([2]), "nu1,nu1+nu2")
    assert W.to_dict() == {(1, 1): 1.0}
    with pytest.raises(ValueError):
        L.weight_product(d0, d0, "nu2,nu1")


def test_moderate_majorant_point():
    F, rep = L.moderate_majorant(L.LatticeWeight.delta([0], [0]), 4)
    assert F([0, 0])[0] == pytest.approx(1)
    assert rep["dominates"] and rep["moderate_ok"]


def test_counterexample_parameters_and_growth():
    prm = L.counterexample_parameters(1, 1)
    assert prm["weight_exponent"] == pytest.approx(-1.5)
    with pytest.raises(ValueError):
        L.counterexample_parameters(2, 2)
    prof = L.counterexample_profile(1, 1, [50, 200])
    assert prof[1]["form_value"] > prof[0]["form_value"]
    assert prof[0]["normA"] == 1.0


def test_json_roundtrip():
    V = L.random_l2_weight(1, 2)
    W = L.LatticeWeight.from_json(V.to_json())
    assert np.array_equal(V.points, W.points) and np.allclose(V.values, W.values)
