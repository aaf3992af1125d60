import itertools
import math
import random
from math import comb, factorial

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from fermirg.algebra import GrassmannElement, Signature, permutation_sign
from fermirg.gaussian import Covariance
from fermirg.instances import random_element
from fermirg.norms import (INF, NormElement, NormParams, SeminormFamily, big_n, check_record, contraction_bound,
                           inverse_one_minus, multi_indices)

from conftest import mono

seeds = st.integers(0, 2**32)
FAM = SeminormFamily()


def phi_table_norm(f):
    """l1_linf from the explicit antisymmetric coefficient table of a homogeneous element."""
    sig = f.sig
    (m_deg, ns), = f.components().keys()
    tables = {}
    vm = (1 << sig.v) - 1
    for mask, c in f.terms.items():
        blocks = [[i for i in range(sig.v) if (mask >> (sig.a + k * sig.v)) >> i & 1] for k in range(sig.copies)]
        tab = tables.setdefault(mask & sig.a_mask, {})
        for perms in itertools.product(*(itertools.permutations(b) for b in blocks)):
            sign = math.prod(permutation_sign(p) for p in perms)
            idx = tuple(i for p in perms for i in p)
            tab[idx] = tab.get(idx, 0) + sign * abs(complex(c)) / math.prod(factorial(n) for n in ns)
    total = 0.0
    for a, tab in tables.items():
        n = sum(ns)
        if n == 0:
            total += sum(abs(v) for v in tab.values()) if a else 0.0
            continue
        best = 0.0
        for k in range(n):
            sums = {}
            for idx, v in tab.items():
                sums[idx[k]] = sums.get(idx[k], 0.0) + abs(v)
            best = max(best, max(sums.values()))
        total += best
    return total


def test_seminorm_examples(sig4):
    assert FAM.norm(mono(sig4, 0, 1)).const == pytest.approx(0.5)
    assert phi_table_norm(mono(sig4, 0, 1)) == pytest.approx(0.5)
    assert FAM.norm(GrassmannElement.zero(sig4)).const == 0
    assert FAM.norm(mono(sig4, 2, coeff=mpq(-7, 3))).const == pytest.approx(7 / 3)


@given(seeds)
def test_seminorm_matches_phi_table(s):
    rng = random.Random(s)
    sig = Signature(rng.choice([0, 2]), 4, rng.choice([1, 2]))
    f = random_element(rng, sig, 10)
    for (m, ns), comp in f.components().items():
        assert FAM.component_norm(comp, ns).const == pytest.approx(phi_table_norm(comp), rel=1e-12)


def test_norm_vanishes_on_constants(sig4):
    assert FAM.norm(GrassmannElement.scalar(sig4, mpq(5))).const == 0
    sig = Signature(2, 2, 1)
    a = GrassmannElement.monomial(sig, a=[0, 1], coeff=mpq(3))
    assert FAM.norm(a).const == 3


def test_norm_arithmetic_examples():
    x = NormElement(1, {(0,): 1.0, (1,): 1.0})
    inv = inverse_one_minus(2.0, x)
    assert [inv[(k,)] for k in range(inv.max_degree + 1)] == pytest.approx([1.0] * (inv.max_degree + 1))
    y = x + NormElement(1, {(1,): INF})
    assert y[(1,)] == INF and y[(0,)] == 1.0
    z = NormElement.constant(0.0) * NormElement.constant(INF)
    assert z.const == INF
    with pytest.raises(ValueError):
        inverse_one_minus(1.0, x)
    with pytest.raises(ValueError):
        NormElement(0, {(): -1.0})


def random_norm_element(rng, d, max_degree=4, p_inf=0.05):
    coeffs = {}
    for k in multi_indices(d, max_degree):
        r = rng.random()
        if r < p_inf:
            coeffs[k] = INF
        elif r < 0.4:
            coeffs[k] = 0.0
        else:
            coeffs[k] = rng.uniform(0, 2)
    return NormElement(d, coeffs, max_degree)


def one_minus_times_inverse(a, x):
    """Coefficients of (a - X) * (a - X)^{-1}, in plain float arithmetic."""
    inv = inverse_one_minus(a, x)
    out = {}
    for b, u in x.c.items():
        lhs = (a if not any(b) else 0.0) - u
        for g, v in inv.c.items():
            if sum(b) + sum(g) <= x.max_degree:
                k = tuple(p + q for p, q in zip(b, g))
                out[k] = out.get(k, 0.0) + lhs * v
    return out


@given(seeds, st.integers(0, 3))
def test_inverse_multiplies_back(s, d):
    rng = random.Random(s)
    x = random_norm_element(rng, d, p_inf=0)
    a = x.const + rng.uniform(0.1, 3)
    prod = one_minus_times_inverse(a, x)
    for k, v in prod.items():
        assert v == pytest.approx(1.0 if not any(k) else 0.0, abs=1e-9 * max(1.0, a))


def close(x, y, rel=1e-12):
    return x.le(y, rel=rel) and y.le(x, rel=rel)


@given(seeds, st.integers(0, 3))
def test_norm_domain_laws(s, d):
    rng = random.Random(s)
    x, y, z = (random_norm_element(rng, d) for _ in range(3))
    assert close((x + y) + z, x + (y + z))
    assert close(x + y, y + x)
    assert close(x * y, y * x)
    bump = random_norm_element(rng, d)
    assert x <= x + bump
    assert x * z <= (x + bump) * z
    assert x + z <= (x + bump) + z


@given(seeds, st.integers(0, 3))
def test_inverse_is_monotone(s, d):
    rng = random.Random(s)
    x = random_norm_element(rng, d, p_inf=0)
    bump = random_norm_element(rng, d, p_inf=0)
    bump.c[(0,) * d] = 0.0
    a = x.const + 1.0
    assert inverse_one_minus(a, x).le(inverse_one_minus(a, x + bump), rel=1e-12)


def test_contraction_bound_examples():
    assert contraction_bound(Covariance([[0, 1], [-1, 0]])) == 1
    assert contraction_bound(Covariance.zeros(3)) == 0
    C = Covariance.from_upper(3, {(0, 1): mpq(1, 2), (0, 2): mpq(-3), (1, 2): mpq(1, 4)})
    assert contraction_bound(C) == pytest.approx(3.5)


def params(alpha=2.0, b=1.5, c=0.75):
    return NormParams(alpha, b, c)


def test_big_n_examples(sig4):
    p = params()
    f = mono(sig4, 0, 1)
    w = FAM.norm(f).const
    assert big_n(f, p).const == pytest.approx(0.75 * 2.0 ** 2 * w)
    assert big_n(GrassmannElement.one(sig4), p).const == 0


@given(seeds)
def test_big_n_monotone_in_alpha(s):
    rng = random.Random(s)
    f = random_element(rng, Signature(2, 4, 1), 8)
    p = params()
    assert big_n(f, p, 2.0).le(big_n(f, p, 2.0 * rng.uniform(1, 3)), rel=1e-12)


@given(seeds)
def test_triangle_and_homogeneity(s):
    rng = random.Random(s)
    sig = Signature(1, 4, 2)
    degs = (rng.randint(0, 2), rng.randint(0, 2))
    f = random_element(rng, sig, 6, degrees=degs, a_degree=1)
    g = random_element(rng, sig, 6, degrees=degs, a_degree=1)
    lam = mpq(rng.randint(-5, 5), rng.randint(1, 3))
    assert FAM.norm(f + g).const <= FAM.norm(f).const + FAM.norm(g).const + 1e-12
    assert FAM.norm(f.scale(lam)).const == pytest.approx(abs(float(lam)) * FAM.norm(f).const)


@given(seeds)
def test_diagonal_bound(s):
    rng = random.Random(s)
    sig = Signature(rng.choice([0, 2]), 4, 2)
    f = random_element(rng, sig, 8, degrees=(rng.randint(1, 2), rng.randint(1, 2)), a_degree=0)
    assert FAM.norm(f.diagonal(0, 1)).const <= FAM.norm(f).const * (1 + 1e-12)


@given(seeds)
def test_binomial_splitting(s):
    rng = random.Random(s)
    n = rng.randint(1, 3)
    sig = Signature(0, 4, 2)
    f = random_element(rng, Signature(0, 4, 1), 6, degrees=(n,)).extend(2)
    split = f.shift(0, [1])
    for k in range(n + 1):
        fk = split.filter(lambda m: sig.degrees(m)[1][1] == k)
        assert FAM.norm(fk).const <= comb(n, k) * FAM.norm(f).const * (1 + 1e-12)


@given(seeds)
def test_shifted_argument_bound(s):
    rng = random.Random(s)
    f = random_element(rng, Signature(2, 4, 1), 8)
    p = params(alpha=rng.choice([1.0, 2.0, 4.0]))
    shifted = f.extend(2).shift(0, [1])
    assert big_n(shifted, p).le(big_n(f.extend(2), p, 2 * p.alpha), rel=1e-12)


@given(seeds)
def test_primed_norm_agrees(s):
    rng = random.Random(s)
    f = random_element(rng, Signature(2, 3, 2), 8)
    p = params()
    assert big_n(f, p, psi_copy=1) == big_n(f, p)
    assert big_n(f, p, psi_copy=0, psi_alpha=p.alpha) == big_n(f, p)


def test_weighted_family():
    sig = Signature(0, 3, 1)
    fam = SeminormFamily("weighted_l1_linf", d=2, weights=[(1, 0), (0, 1), (1, 1)])
    f = mono(sig, 0, 1) + mono(sig, 2, coeff=3)
    nv = fam.norm(f)
    assert nv[(1, 1)] == pytest.approx(0.5 + 3)
    assert nv[(0, 0)] == 0
    p = NormParams(2.0, 1.0, fam.constant(1.0), fam)
    assert big_n(f, p).d == 2
    with pytest.raises(ValueError):
        SeminormFamily("weighted_l1_linf", d=2)
    with pytest.raises(ValueError):
        SeminormFamily("l2")


def test_check_record_fields():
    rec = check_record("x", 1.0, 2.0)
    assert set(rec) == {"name", "lhs", "rhs", "holds", "margin"}
    assert rec["holds"] and rec["margin"] == 1.0
    assert not check_record("x", 2.0, 1.0)["holds"]


def test_max_degree_from_environment(monkeypatch):
    monkeypatch.setenv("FRG_MAX_DEGREE", "2")
    assert NormElement(1).max_degree == 2
