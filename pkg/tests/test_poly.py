import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypocrit.errors import InputError
from hypocrit.poly import (Polynomial, ball_samples, ellipticity_check, eval_poly, homogeneous_decompose,
                           sphere_samples)

coef = st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
exps2 = st.tuples(st.integers(0, 4), st.integers(0, 4))
poly2 = st.dictionaries(exps2, coef, max_size=6).map(lambda d: Polynomial(2, d))
points2 = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).map(np.array)


def test_duplicates_merge_and_zeros_drop():
    p = Polynomial(2, [((1, 0), 2.0), ((1, 0), -2.0), ((0, 1), 1.5)])
    assert p.terms == {(0, 1): 1.5}
    assert Polynomial(1, [((2,), 1.0), ((2,), 3.0)]).terms == {(2,): 4.0}


def test_eval_and_degree():
    p = Polynomial(2, {(2, 0): 1.0, (1, 1): -3.0, (0, 0): 2.0})
    assert eval_poly(p, [1.0, 2.0]) == pytest.approx(1 - 6 + 2)
    assert p.degree() == 2
    assert Polynomial.zero(3).degree() == -1
    assert not p.is_homogeneous()


def test_vectorized_eval():
    p = Polynomial(2, {(1, 2): 1.0})
    x = np.array([[1.0, 2.0], [3.0, -1.0], [0.0, 5.0]])
    np.testing.assert_allclose(p.eval(x), [4.0, 3.0, 0.0])


def test_decompose_parts():
    p = Polynomial(1, {(4,): 1.0, (2,): -2.0, (0,): 7.0})
    dec = homogeneous_decompose(p)
    assert dec.top_degree == 4
    assert dec.part(4) == Polynomial(1, {(4,): 1.0})
    assert dec.part(3).is_zero()
    assert dec.part(0) == Polynomial.constant(1, 7.0)


def test_record_roundtrip_and_malformed():
    p = Polynomial(2, {(2, 0): 1.0, (1, 1): 0.5})
    assert Polynomial.from_record(p.to_record()) == p
    with pytest.raises(InputError):
        Polynomial.from_record({"terms": []})


def test_ellipticity_disk_and_degenerate():
    r2 = Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0})
    ell = ellipticity_check(r2, Polynomial.zero(2))
    assert ell.satisfied and ell.margin == pytest.approx(1.0, abs=1e-6)
    # P_m = x1^2 - x2^2 with Q_m = 0 vanishes on the diagonal
    bad = ellipticity_check(Polynomial(2, {(2, 0): 1.0, (0, 2): -1.0}), Polynomial.zero(2))
    assert not bad.satisfied
    assert abs(abs(bad.witness[0]) - abs(bad.witness[1])) < 1e-3


def test_samplers():
    s = sphere_samples(3, 500)
    np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0)
    b = ball_samples(2, 10.0, 400)
    assert np.all(np.linalg.norm(b, axis=1) <= 10.0 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(poly2, poly2, points2)
def test_ring_homomorphism(p, q, x):
    scale = 1 + abs(p.eval(x)) * abs(q.eval(x)) + abs(p.eval(x)) + abs(q.eval(x))
    assert (p + q).eval(x) == pytest.approx(p.eval(x) + q.eval(x), abs=1e-9 * scale)
    assert (p * q).eval(x) == pytest.approx(p.eval(x) * q.eval(x), abs=1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(poly2, points2)
def test_decomposition_reconstructs(p, x):
    dec = homogeneous_decompose(p)
    assert dec.reconstruct() == p
    total = sum(dec.part(j).eval(x) for j in range(max(dec.top_degree, 0) + 1))
    assert total == pytest.approx(p.eval(x), abs=1e-9 * (1 + abs(p.eval(x))))


@settings(max_examples=40, deadline=None)
@given(poly2, st.floats(0.1, 3.0), points2)
def test_parts_are_homogeneous(p, t, x):
    dec = homogeneous_decompose(p)
    for j in range(max(dec.top_degree, 0) + 1):
        pj = dec.part(j)
        assert pj.eval(t * x) == pytest.approx(t**j * pj.eval(x), abs=1e-8 * (1 + t**j) * 1e3)
