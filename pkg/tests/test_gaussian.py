import random

import pytest
import sympy
from gmpy2 import mpq
from hypothesis import given, strategies as st

from fermirg.algebra import GrassmannElement, Signature
from fermirg.gaussian import (Covariance, gaussian_derivative_jet, generating_identity_check, integral_bound_check,
                              integrate, integration_by_parts, minimal_integral_bound, moment_wick_pair, unwick,
                              wick, wick_by_substitution)
from fermirg.instances import random_element
from fermirg.pfaffian import determinant, pfaffian
from fermirg.scalars import QQi, random_rational

from conftest import matching_pfaffian, mono

seeds = st.integers(0, 2**32)


def rand_antisym(rng, n, complex_entries=False):
    m = [[mpq(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = random_rational(rng)
            if complex_entries:
                x = QQi.make(x, random_rational(rng))
            m[i][j], m[j][i] = x, -x
    return m


def test_pfaffian_small_cases():
    c = mpq(5, 3)
    assert pfaffian([[0, c], [-c, 0]]) == c
    assert pfaffian(rand_antisym(random.Random(1), 3)) == 0
    a, b, cc, d, e, f = (mpq(k) for k in (2, 3, 5, 7, 11, 13))
    m = [[0, a, b, cc], [-a, 0, d, e], [-b, -d, 0, f], [-cc, -e, -f, 0]]
    assert pfaffian(m) == a * f - b * e + cc * d
    assert pfaffian([]) == 1


@pytest.mark.parametrize("n", range(0, 9))
def test_pfaffian_matches_matching_sum(n):
    rng = random.Random(n)
    for complex_entries in (False, True):
        m = rand_antisym(rng, n, complex_entries)
        assert pfaffian(m) == matching_pfaffian(m)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_pfaffian_squared_is_sympy_determinant(n):
    m = rand_antisym(random.Random(10 + n), n)
    det = sympy.Matrix([[sympy.Rational(int(x.numerator), int(x.denominator)) for x in r] for r in m]).det()
    p = pfaffian(m)
    assert sympy.Rational(int((p * p).numerator), int((p * p).denominator)) == det
    assert determinant(m) == p * p


def test_covariance_validation():
    with pytest.raises(ValueError):
        Covariance([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        Covariance([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        Covariance.from_json({"dim": 2, "upper": [[1, 0, "1", "0"]]})
    with pytest.raises(ValueError):
        Covariance.from_json({"dim": 2, "upper": [[0, 0, "1", "0"]]})
    with pytest.raises(ValueError):
        Covariance.from_json({"matrix": [["0", "1"], ["1", "0"]]})
    C = Covariance.from_json({"dim": 3, "upper": [[0, 2, "1/2", "1"]]})
    assert C.m[2][0] == -QQi.make(mpq(1, 2), mpq(1))
    assert Covariance.from_json(C.to_json()) == C


def test_integral_examples(sig4):
    C = Covariance.random(random.Random(2), 4)
    one = GrassmannElement.one(sig4)
    assert integrate(one, C).z_part() == 1
    assert integrate(mono(sig4, 0, 1), C).z_part() == C.m[0][1]
    m = C.m
    want = m[0][1] * m[2][3] - m[0][2] * m[1][3] + m[0][3] * m[1][2]
    assert integrate(mono(sig4, 0, 1, 2, 3), C).z_part() == want


def test_integral_over_one_copy_keeps_others():
    sig = Signature(1, 2, 2)
    C = Covariance.from_upper(2, {(0, 1): mpq(3)})
    f = mono(sig, (0, 0), (1, 0), (1, 1), a=[0])
    got = integrate(f, C, 1)
    assert got.sig == Signature(1, 2, 1)
    assert got == mono(Signature(1, 2, 1), (0, 0), a=[0]).scale(mpq(3))


def test_wick_examples(sig4):
    C = Covariance.random(random.Random(3), 4)
    assert wick(mono(sig4, 0), C) == mono(sig4, 0)
    got = wick(mono(sig4, 0, 1), C)
    assert got == mono(sig4, 0, 1) - GrassmannElement.scalar(sig4, C.m[0][1])


@given(seeds)
def test_wick_roundtrip(s):
    rng = random.Random(s)
    sig = Signature(1, 4, 2)
    f = random_element(rng, sig, 8)
    C = Covariance.random(rng, 4)
    assert unwick(wick(f, C, (0,)), C, (0,)) == f
    assert wick(unwick(f, C, (1,)), C, (1,)) == f
    assert wick(f, C, (0,)) == wick_by_substitution(f, C, 0)
    assert wick(wick(f, C, (0,)), C, (1,)) == wick(wick(f, C, (1,)), C, (0,)) == wick(f, C, (0, 1))


def test_moment_wick_pair_examples():
    C = Covariance.random(random.Random(4), 5)
    val, det = moment_wick_pair([0], [1], C)
    assert val == det == C.m[0][1]
    val, det = moment_wick_pair([0], [1, 2, 3], C)
    assert val == 0 and det is None
    val, det = moment_wick_pair([0, 1], [2, 3], C)
    m = C.m
    assert val == det == m[0][2] * m[1][3] - m[0][3] * m[1][2]


@pytest.mark.parametrize("D", [0, 2, 3, 4])
def test_generating_identities(D):
    C = Covariance.random(random.Random(5 + D), D)
    rep = generating_identity_check(C, D)
    assert rep["integral"][2] and rep["wick"][2]


@given(seeds)
def test_integration_by_parts(s):
    rng = random.Random(s)
    C = Covariance.random(rng, 4)
    g = random_element(rng, Signature(2, 4, 1), 8)
    lhs, rhs = integration_by_parts(rng.randrange(4), g, C)
    assert lhs == rhs


def test_jet_derivative_examples(sig4):
    C0 = Covariance.random(random.Random(6), 4)
    C1 = Covariance.random(random.Random(7), 4)
    d, formula = gaussian_derivative_jet(mono(sig4, 0, 1), C0, C1)
    assert d.z_part() == formula.z_part() == C1.m[0][1]
    d, formula = gaussian_derivative_jet(GrassmannElement.one(sig4), C0, C1)
    assert d.is_zero() and formula.is_zero()
    d, formula = gaussian_derivative_jet(mono(sig4, 0, 1, 2, 3), C0, C1)
    a, b = C0.m, C1.m
    product_rule = (b[0][1] * a[2][3] + a[0][1] * b[2][3] - b[0][2] * a[1][3] - a[0][2] * b[1][3]
                    + b[0][3] * a[1][2] + a[0][3] * b[1][2])
    assert d.z_part() == formula.z_part() == product_rule


def test_integral_bound_examples():
    assert integral_bound_check(Covariance.zeros(3), 0.5)["holds"]
    C = Covariance.random(random.Random(8), 5)
    b = minimal_integral_bound(C)
    assert integral_bound_check(C, b)["holds"]
    assert not integral_bound_check(C, 0.9 * b)["holds"]
    lam = mpq(9, 4)
    assert minimal_integral_bound(C.scale(lam)) == pytest.approx(1.5 * b, rel=1e-12)
