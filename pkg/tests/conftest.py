import itertools
import os
import sys

import pytest
from gmpy2 import mpq
from hypothesis import settings

from fermirg.algebra import GrassmannElement, Signature
from fermirg.instances import rng_for

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")


def q(p, r=1):
    return mpq(p, r)


def mono(sig, *fields, a=(), coeff=1):
    """Monomial from (copy, index) pairs, or bare indices meaning copy 0."""
    fs = [f if isinstance(f, tuple) else (0, f) for f in fields]
    return GrassmannElement.monomial(sig, fs, a=a, coeff=mpq(coeff))


def matching_pfaffian(m):
    """Signed sum over perfect matchings; independent of the library's row expansion."""
    n = len(m)
    if n % 2:
        return 0
    total = 0

    def rec(rest, acc):
        nonlocal total
        if not rest:
            pairs = acc
            order = [x for p in pairs for x in p]
            inv = sum(1 for i, j in itertools.combinations(range(n), 2) if order[i] > order[j])
            prod = 1
            for i, j in pairs:
                prod = prod * m[i][j]
            total = total + (-prod if inv % 2 else prod)
            return
        i = rest[0]
        for j in rest[1:]:
            rec([x for x in rest if x not in (i, j)], acc + [(i, j)])

    rec(list(range(n)), [])
    return total


@pytest.fixture
def rng(request):
    return rng_for(0, request.node.name)


@pytest.fixture
def sig4():
    return Signature(0, 4, 1)
