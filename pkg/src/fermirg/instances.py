"""Seeded random instances for identity suites and bound campaigns.

Coefficients are small rationals (numerators in [-3, 3], denominators in
{1, 2, 4}).  Interactions are shrunk by powers of two until a gate holds;
the exponent used is reported alongside the instance.
"""

from __future__ import annotations

import random

from .algebra import GrassmannElement, Signature, _bits
from .gaussian import Covariance
from .scalars import ONE, random_rational


def rng_for(seed: int, *labels) -> random.Random:
    """Independent stream for (seed, label...), stable across runs."""
    return random.Random("/".join([str(seed)] + [str(x) for x in labels]))


def random_mask(rng: random.Random, sig: Signature, degrees=None, a_degree=None, parity=None) -> int:
    """Random monomial, optionally with prescribed per-copy and A-degrees."""
    if degrees is None:
        m = rng.getrandbits(sig.n_gens) if sig.n_gens else 0
        if a_degree is not None:
            m &= ~sig.a_mask
            m |= _choose(rng, range(sig.a), a_degree)
    else:
        m = 0
        for k, n in enumerate(degrees):
            for i in rng.sample(range(sig.v), n):
                m |= sig.bit(k, i)
        if a_degree is None:
            m |= rng.getrandbits(sig.a) if sig.a else 0
        else:
            m |= _choose(rng, range(sig.a), a_degree)
    if parity is not None and m.bit_count() % 2 != parity:
        if degrees is None and sig.n_gens:
            m ^= 1 << rng.randrange(sig.n_gens)
        elif sig.a and a_degree is None:
            m ^= 1 << rng.randrange(sig.a)
    return m


def _choose(rng, pool, k) -> int:
    pool = list(pool)
    if k > len(pool):
        return 0
    m = 0
    for j in rng.sample(pool, k):
        m |= 1 << j
    return m


def random_element(rng: random.Random, sig: Signature, nterms: int = 6, parity=None,
                   degrees=None, a_degree=None, allow_constant: bool = True,
                   max_copy_degree: int | None = None) -> GrassmannElement:
    """Sum of ``nterms`` random monomials with small rational coefficients.

    ``max_copy_degree`` draws each term's degree in every copy from
    0..max_copy_degree instead of taking uniformly random masks.
    """
    terms: dict = {}
    for _ in range(nterms):
        degs = degrees
        if degs is None and max_copy_degree is not None:
            degs = tuple(rng.randint(0, min(max_copy_degree, sig.v)) for _ in range(sig.copies))
        m = random_mask(rng, sig, degs, a_degree, parity)
        if parity is not None and m.bit_count() % 2 != parity:
            continue
        if not allow_constant and m == 0:
            continue
        terms[m] = terms.get(m, 0) + random_rational(rng, nonzero=True)
    return GrassmannElement(sig, terms)


def random_covariance(rng: random.Random, dim: int, density: float = 0.8) -> Covariance:
    return Covariance.random(rng, dim, density)


def random_nonzero_covariance(rng: random.Random, dim: int, density: float = 0.8) -> Covariance:
    for _ in range(100):
        C = Covariance.random(rng, dim, density)
        if dim < 2 or any(C.m[i][j] != 0 for i in range(dim) for j in range(dim)):
            return C
    return C


def random_interaction(rng: random.Random, sig: Signature, copy: int = 0, nterms: int = 6,
                       field_degrees=(2, 4), with_a: bool = True) -> GrassmannElement:
    """Even element of copy ``copy`` without constant term.

    Field degrees are drawn from ``field_degrees``; when the signature has
    coefficient generators, some terms carry an even number of them.
    """
    terms: dict = {}
    for _ in range(nterms):
        n = rng.choice([d for d in field_degrees if d <= sig.v] or [0])
        if n == 0:
            continue
        m = 0
        for i in rng.sample(range(sig.v), n):
            m |= sig.bit(copy, i)
        if with_a and sig.a >= 2 and rng.random() < 0.4:
            m |= _choose(rng, range(sig.a), 2 * rng.randint(1, sig.a // 2))
        terms[m] = terms.get(m, 0) + random_rational(rng, nonzero=True)
    return GrassmannElement(sig, terms)


def anneal(el: GrassmannElement, gate, max_halvings: int = 200):
    """Halve ``el`` until ``gate(el)`` holds; returns (element, halvings)."""
    k = 0
    while not gate(el):
        if k >= max_halvings:
            raise RuntimeError("gate could not be satisfied by rescaling")
        el = el.scale(ONE / 2)
        k += 1
    return el, k


__all__ = [
    "rng_for", "random_mask", "random_element", "random_covariance", "random_nonzero_covariance",
    "random_interaction", "anneal",
]
