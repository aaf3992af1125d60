import random
import warnings

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from fermirg.algebra import GrassmannElement, Signature
from fermirg.contraction import (DegenerateContractionWarning, TensorElement, cont, cont_wick_commutes,
                                 contraction_under_integral, from_tensor, random_tensor, to_tensor)
from fermirg.gaussian import Covariance
from fermirg.instances import random_element

from conftest import mono

seeds = st.integers(0, 2**32)
half = mpq(1, 2)


def t(*entries, rank=2):
    return TensorElement(rank, {(0, idx): mpq(c) for idx, c in entries})


def test_ant_examples():
    assert t(((0, 1), 1)).ant() == TensorElement(2, {(0, (0, 1)): half, (0, (1, 0)): -half})
    assert t(((0, 0), 1)).ant().is_zero()
    x = random_tensor(random.Random(1), 3, 4).ant()
    assert x.ant() == x


def test_ant_blocks_validated():
    with pytest.raises(ValueError):
        t(((0, 1), 1)).ant((3,))


def test_con_sign_table():
    C = Covariance.random(random.Random(2), 3)
    k, l = 0, 2
    f = t(((k, l), 1))
    assert f.contract(1, 2, C) == TensorElement(0, {(0, ()): C.m[k][l]})
    assert f.contract(2, 1, C) == TensorElement(0, {(0, ()): -C.m[l][k]})


def test_con_same_slot_is_zero_with_warning():
    C = Covariance.random(random.Random(3), 3)
    with pytest.warns(DegenerateContractionWarning):
        assert t(((0, 1), 1)).contract(1, 1, C).is_zero()


@given(seeds)
def test_con_linear_in_covariance(s):
    rng = random.Random(s)
    f = random_tensor(rng, 4, 3)
    C1, C2 = Covariance.random(rng, 3), Covariance.random(rng, 3)
    l1, l2 = mpq(rng.randint(-3, 3)), mpq(1, rng.randint(1, 4))
    i, j = rng.sample(range(1, 5), 2)
    lhs = f.contract(i, j, C1.scale(l1) + C2.scale(l2))
    assert lhs == f.contract(i, j, C1).scale(l1) + f.contract(i, j, C2).scale(l2)


@given(seeds)
def test_tensor_roundtrip(s):
    rng = random.Random(s)
    sig = Signature(1, 4, 2)
    f = random_element(rng, sig, 5, degrees=(2, 1), a_degree=rng.randint(0, 1))
    tens, blocks = to_tensor(f)
    assert from_tensor(tens, sig, blocks) == f


def test_cont_examples():
    sig = Signature(0, 4, 2)
    C = Covariance.random(random.Random(4), 4)
    j, k, l, m = 0, 1, 2, 3
    one = GrassmannElement.one(sig)
    assert cont(mono(sig, (0, k), (1, l)), 0, 1, C) == one.scale(C.m[k][l])
    want = mono(sig, (1, m)).scale(C.m[k][l]) - mono(sig, (1, l)).scale(C.m[k][m])
    assert cont(mono(sig, (0, k), (1, l), (1, m)), 0, 1, C) == want
    want = (mono(sig, (0, j)).scale(C.m[k][l]) - mono(sig, (0, k)).scale(C.m[j][l])).scale(half)
    for route in ("tensor", "derivative"):
        assert cont(mono(sig, (0, j), (0, k), (1, l)), 0, 1, C, route) == want


def test_cont_needs_two_copies():
    with pytest.raises(ValueError):
        cont(GrassmannElement.zero(Signature(0, 2, 2)), 1, 1, Covariance.zeros(2))


@given(seeds)
def test_cont_routes_agree(s):
    rng = random.Random(s)
    sig = Signature(rng.choice([0, 2]), 4, 3)
    C = Covariance.random(rng, 4)
    f = random_element(rng, sig, 6)
    k, l = rng.sample(range(3), 2)
    assert cont(f, k, l, C, "tensor") == cont(f, k, l, C, "derivative")


@given(seeds)
def test_cont_commutes_with_wick_in_target(s):
    rng = random.Random(s)
    f = random_element(rng, Signature(0, 4, 2), 6)
    lhs, rhs = cont_wick_commutes(f, Covariance.random(rng, 4), Covariance.random(rng, 4))
    assert lhs == rhs


def test_contraction_under_integral_examples():
    sig = Signature(0, 3, 3)
    C = Covariance.random(random.Random(5), 3)
    lhs, rhs = contraction_under_integral(mono(sig, (1, 0), (2, 1)), C)
    assert lhs == rhs
    lhs, rhs = contraction_under_integral(mono(sig, (0, 2), (1, 0), (1, 1)), C)
    assert lhs == rhs
    rng = random.Random(6)
    for _ in range(20):
        f = random_element(rng, sig, 8, degrees=(1, 1, 1)) + random_element(rng, sig, 4, degrees=(0, 2, 1))
        lhs, rhs = contraction_under_integral(f, C)
        assert lhs == rhs


def test_contraction_under_integral_rejects_constant_middle():
    sig = Signature(0, 3, 3)
    with pytest.raises(ValueError):
        contraction_under_integral(mono(sig, (0, 0), (2, 1)), Covariance.zeros(3))


def test_l1_linf_symmetric_under_slot_permutations():
    rng = random.Random(7)
    for _ in range(20):
        x = random_tensor(rng, 3, 4, 8)
        perm = rng.sample(range(3), 3)
        assert x.permute(perm).l1_linf() == pytest.approx(x.l1_linf())
