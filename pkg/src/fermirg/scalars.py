"""Scalar types used as coefficients.

Three kinds of coefficient live side by side:

* exact reals, ``gmpy2.mpq``
* exact complex numbers, :class:`QQi` (collapses to ``mpq`` when the
  imaginary part vanishes)
* floats, always stored as Python ``complex``

:class:`Jet` carries a value and a first derivative and works over any of
the above, which is how derivatives along linear families are computed.
"""

from __future__ import annotations

import random
from fractions import Fraction

from gmpy2 import mpc, mpfr, mpq

# gmpy2 promotes mpq * complex to mpc; those count as floats too
FLOAT_TYPES = (complex, float, mpc, mpfr)

ZERO = mpq(0)
ONE = mpq(1)


class QQi:
    """Exact Gaussian rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = mpq(re)
        self.im = mpq(im)

    @staticmethod
    def make(re, im):
        if im == 0:
            return mpq(re)
        return QQi(re, im)

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"

    def __add__(self, o):
        if isinstance(o, QQi):
            return QQi.make(self.re + o.re, self.im + o.im)
        if isinstance(o, FLOAT_TYPES):
            return complex(self) + o
        if isinstance(o, Jet):
            return NotImplemented
        return QQi.make(self.re + o, self.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, QQi):
            return QQi.make(self.re * o.re - self.im * o.im,
                            self.re * o.im + self.im * o.re)
        if isinstance(o, FLOAT_TYPES):
            return complex(self) * o
        if isinstance(o, Jet):
            return NotImplemented
        return QQi.make(self.re * o, self.im * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, QQi):
            n = o.re * o.re + o.im * o.im
            return self * QQi(o.re / n, -o.im / n)
        if isinstance(o, FLOAT_TYPES):
            return complex(self) / o
        return QQi.make(self.re / o, self.im / o)

    def __rtruediv__(self, o):
        n = self.re * self.re + self.im * self.im
        return QQi(self.re / n, -self.im / n) * o

    def conjugate(self):
        return QQi(self.re, -self.im)

    def __eq__(self, o):
        if isinstance(o, QQi):
            return self.re == o.re and self.im == o.im
        if isinstance(o, complex):
            return complex(self) == o
        return self.im == 0 and self.re == o

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))


class Jet:
    """First-order jet ``value + eps*deriv`` with ``eps**2 = 0``."""

    __slots__ = ("value", "deriv")

    def __init__(self, value, deriv=ZERO):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"Jet({self.value!r}, {self.deriv!r})"

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(self.value + o.value, self.deriv + o.deriv)
        return Jet(self.value + o, self.deriv)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.deriv)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Jet):
            return Jet(self.value * o.value,
                       self.value * o.deriv + self.deriv * o.value)
        return Jet(self.value * o, self.deriv * o)

    def __rmul__(self, o):
        return Jet(o * self.value, o * self.deriv)

    def __truediv__(self, o):
        if isinstance(o, Jet):
            inv = 1 / o.value
            return Jet(self.value * inv,
                       (self.deriv - self.value * o.deriv * inv) * inv)
        return Jet(self.value / o, self.deriv / o)

    def __rtruediv__(self, o):
        inv = 1 / self.value
        return Jet(o * inv, -o * self.deriv * inv * inv)

    def conjugate(self):
        return Jet(conj(self.value), conj(self.deriv))

    def __eq__(self, o):
        if isinstance(o, Jet):
            return self.value == o.value and self.deriv == o.deriv
        return self.value == o and self.deriv == 0

    def __hash__(self):
        return hash((self.value, self.deriv))

    def __bool__(self):
        return bool(self.value) or bool(self.deriv)


def conj(x):
    if isinstance(x, (QQi, Jet, complex)):
        return x.conjugate()
    return x


def is_exact(x) -> bool:
    if isinstance(x, Jet):
        return is_exact(x.value) and is_exact(x.deriv)
    return not isinstance(x, FLOAT_TYPES)


def to_complex(x) -> complex:
    if isinstance(x, Jet):
        raise TypeError("cannot convert a jet to a float scalar")
    return complex(x)


def to_exact(x):
    """Convert ints, Fractions, strings or exact scalars to mpq/QQi."""
    if isinstance(x, (QQi, Jet)):
        return x
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, FLOAT_TYPES):
        raise TypeError(f"refusing to treat float {x!r} as exact")
    return mpq(x)


def parse_rational(s: str):
    s = s.strip()
    if "/" in s:
        p, q = s.split("/")
        if int(q) == 0:
            raise ValueError(f"zero denominator in {s!r}")
        return mpq(int(p), int(q))
    return mpq(int(s))


def format_rational(x) -> str:
    x = mpq(x)
    return f"{x.numerator}/{x.denominator}"


def scalar_to_json(x) -> tuple:
    """Return a (re, im) pair of strings for exact values or floats otherwise."""
    if isinstance(x, QQi):
        return format_rational(x.re), format_rational(x.im)
    if isinstance(x, (complex, mpc)):
        x = complex(x)
        return repr(x.real), repr(x.imag)
    if isinstance(x, (float, mpfr)):
        return repr(float(x)), "0.0"
    return format_rational(x), "0/1"


def scalar_from_json(re, im):
    def one(s):
        if isinstance(s, (int,)):
            return mpq(s)
        if isinstance(s, float):
            return s
        if "." in s or "e" in s.lower() or "inf" in s.lower() or "nan" in s.lower():
            return float(s)
        return parse_rational(s)

    r, i = one(re), one(im)
    if isinstance(r, float) or isinstance(i, float):
        return complex(float(r), float(i))
    return QQi.make(r, i)


def magnitude(x) -> float:
    if isinstance(x, Jet):
        raise TypeError("magnitude of a jet is undefined")
    return float(abs(complex(x)))


def random_rational(rng: random.Random, num_range=3, dens=(1, 2, 4), nonzero=False):
    while True:
        p = rng.randint(-num_range, num_range)
        if p or not nonzero:
            return mpq(p, rng.choice(dens))


def approx_equal(x, y, rel=1e-9, abs_tol=1e-12) -> bool:
    if is_exact(x) and is_exact(y) and not isinstance(x, Jet):
        return x == y
    cx, cy = complex(x), complex(y)
    return abs(cx - cy) <= abs_tol + rel * max(abs(cx), abs(cy))
