import itertools
import random

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from fermirg.algebra import GrassmannElement, NormalizationError, NotEvenError, Signature, permutation_sign
from fermirg.instances import random_element
from fermirg.scalars import QQi

from conftest import mono


def elements(sig, parity=None, nterms=6):
    return st.integers(0, 2**32).map(lambda s: random_element(random.Random(s), sig, nterms, parity=parity))


S1 = Signature(0, 4, 1)
S2 = Signature(2, 3, 2)


def test_generators_anticommute(sig4):
    x1, x2 = mono(sig4, 0), mono(sig4, 1)
    assert x1 * x2 == mono(sig4, 0, 1)
    assert x2 * x1 == -mono(sig4, 0, 1)
    assert (x1 * x1).is_zero()


def test_coefficient_generator_sign():
    sig = Signature(1, 1, 1)
    a1 = GrassmannElement.a_generator(sig, 0)
    x1 = GrassmannElement.generator(sig, 0)
    assert a1 * x1 == -(x1 * a1)
    assert not (a1 * x1).is_zero()


def test_canonical_form_of_permuted_factors():
    sig = Signature(0, 5, 1)
    for perm in itertools.permutations([0, 2, 3, 4]):
        el = GrassmannElement.monomial(sig, [(0, i) for i in perm])
        (mask, c), = el.terms.items()
        assert mask == 0b11101
        assert c == permutation_sign(perm)


@given(elements(S2), elements(S2), elements(S2))
def test_ring_axioms(f, g, h):
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert (f + g) * h == f * h + g * h


@given(elements(S2, parity=0), elements(S2))
def test_even_elements_are_central(e, f):
    assert e * f == f * e


@given(elements(S2, parity=1), elements(S2, parity=1))
def test_odd_elements_anticommute(f, g):
    assert f * g == -(g * f)


def test_degree_components(sig4):
    f = GrassmannElement.one(sig4) + mono(sig4, 0, 1)
    assert f.component(0, (2,)) == mono(sig4, 0, 1)
    assert f.component(0, (0,)) == GrassmannElement.one(sig4)


@given(elements(S2, nterms=10))
def test_components_recombine(f):
    total = GrassmannElement.zero(f.sig)
    for comp in f.components().values():
        total = total + comp
    assert total == f


def test_substitute_sum():
    sig = Signature(0, 2, 2)
    x = lambda i: mono(sig, (0, i))
    y = lambda i: mono(sig, (1, i))
    assert x(0).substitute(0, [0, 1]) == x(0) + y(0)
    want = x(0) * x(1) + x(0) * y(1) - x(1) * y(0) + y(0) * y(1)
    assert (x(0) * x(1)).substitute(0, [0, 1]) == want
    one = GrassmannElement.one(sig)
    assert (one + x(0)).substitute(0, []) == one


def test_substitute_with_scale():
    sig = Signature(0, 2, 2)
    i = QQi(0, 1)
    f = mono(sig, (0, 0), (0, 1))
    got = f.substitute(0, [(1, i)])
    assert got == mono(sig, (1, 0), (1, 1)).scale(i * i)


def test_diagonal():
    sig = Signature(0, 2, 2)
    assert mono(sig, (0, 0), (1, 1)).diagonal(0, 1) == mono(Signature(0, 2, 1), 0, 1)
    assert mono(sig, (0, 0), (1, 0)).diagonal(0, 1).is_zero()


@given(elements(Signature(1, 3, 2), nterms=8))
def test_diagonal_matches_substitution(f):
    assert f.diagonal(0, 1) == f.substitute(1, [0]).drop_copy(1)


def test_z_part(sig4):
    assert (GrassmannElement.scalar(sig4, mpq(3)) + mono(sig4, 0, 1)).z_part() == 3
    assert mono(sig4, 0).z_part() == 0
    assert mono(sig4, 0, 1).exp().z_part() == 1


def test_log_normalized_examples(sig4):
    one = GrassmannElement.one(sig4)
    assert GrassmannElement.scalar(sig4, mpq(2)).log_normalized().is_zero()
    assert (one + mono(sig4, 0, 1)).log_normalized() == mono(sig4, 0, 1)
    f = one + mono(sig4, 0, 1) + mono(sig4, 2, 3) + mono(sig4, 0, 1, 2, 3)
    assert f.log_normalized() == mono(sig4, 0, 1) + mono(sig4, 2, 3)


def test_log_normalized_needs_constant(sig4):
    with pytest.raises(NormalizationError):
        mono(sig4, 0, 1).log_normalized()


def test_exp_rejects_odd(sig4):
    with pytest.raises(NotEvenError):
        mono(sig4, 0).exp()


@given(elements(Signature(2, 4, 1), parity=0), st.integers(1, 5))
def test_exp_log_roundtrip(w, z):
    w = w - w.z_part()
    assert (w.exp().scale(mpq(z))).log_normalized() == w
    assert w.exp().log_normalized().exp() == w.exp()


def test_signature_mismatch(sig4):
    with pytest.raises(ValueError):
        mono(sig4, 0) * mono(Signature(0, 3, 1), 0)


def test_zero_is_legal(sig4):
    z = GrassmannElement.zero(sig4)
    assert (z * mono(sig4, 0)).is_zero()
    assert z.exp() == GrassmannElement.one(sig4)


@given(elements(S2, nterms=8))
def test_json_roundtrip(f):
    assert GrassmannElement.from_json(f.to_json()) == f


def test_json_rejects_unsorted_masks():
    data = {"signature": {"a": 0, "v": 2, "copies": 1},
            "terms": [{"a_mask": [], "v_masks": [[1, 0]], "re": "1", "im": "0"}]}
    with pytest.raises(ValueError):
        GrassmannElement.from_json(data)


def test_gmpy_float_promotions_count_as_floats():
    from gmpy2 import mpc, mpq

    from fermirg.scalars import is_exact, scalar_to_json

    x = mpq(1, 2) * complex(1, 2)
    assert isinstance(x, mpc) and not is_exact(x)
    assert scalar_to_json(x) == ("0.5", "1.0")
