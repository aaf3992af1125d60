"""Grassmann algebras with several copies of the field space.

An element lives in the algebra generated by ``a`` odd coefficient
generators followed by ``copies`` blocks of ``v`` odd field generators.
Generators are numbered in that canonical order and a monomial is stored
as an integer bitmask, the product being taken in increasing bit order.
Coefficients are any scalars from :mod:`fermirg.scalars`.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Iterable

from .scalars import ONE, QQi, Jet, is_exact, scalar_from_json, scalar_to_json


class NotEvenError(ValueError):
    pass


class NormalizationError(ZeroDivisionError):
    """Raised when the constant part of an element vanishes but must be inverted."""


@dataclass(frozen=True)
class Signature:
    a: int
    v: int
    copies: int = 1

    def __post_init__(self):
        if self.a < 0 or self.v < 0 or self.copies < 0:
            raise ValueError(f"invalid signature {self}")

    @property
    def n_gens(self) -> int:
        return self.a + self.v * self.copies

    @property
    def a_mask(self) -> int:
        return (1 << self.a) - 1

    def offset(self, copy: int) -> int:
        if not 0 <= copy < self.copies:
            raise IndexError(f"copy {copy} out of range for {self}")
        return self.a + copy * self.v

    def copy_mask(self, copy: int) -> int:
        return ((1 << self.v) - 1) << self.offset(copy)

    def bit(self, copy: int, i: int) -> int:
        if not 0 <= i < self.v:
            raise IndexError(f"field index {i} out of range")
        return 1 << (self.offset(copy) + i)

    def with_copies(self, copies: int) -> "Signature":
        return Signature(self.a, self.v, copies)

    def degrees(self, mask: int) -> tuple:
        """(A-degree, (degree in copy 0, copy 1, ...)) of a monomial."""
        m = (mask & self.a_mask).bit_count()
        vm = (1 << self.v) - 1
        ns = tuple(((mask >> (self.a + k * self.v)) & vm).bit_count()
                   for k in range(self.copies))
        return m, ns


def prefix_parity(mask: int, width: int) -> int:
    """Bits x for which an odd number of bits of ``mask`` lie strictly below x."""
    q = mask << 1
    s = 1
    while s <= width:
        q ^= q << s
        s <<= 1
    return q


def merge_sign(m1: int, m2: int) -> int:
    """Sign of reordering the product of monomial m1 then m2 into canonical order."""
    if not m2:
        return 1
    p = prefix_parity(m2, m1.bit_length() + 1)
    return -1 if (m1 & p).bit_count() & 1 else 1


def mul_terms(t1: dict, t2: dict, width: int) -> dict:
    out: dict = {}
    get = out.get
    for m2, c2 in t2.items():
        p = prefix_parity(m2, width)
        for m1, c1 in t1.items():
            if m1 & m2:
                continue
            c = c1 * c2
            if (m1 & p).bit_count() & 1:
                c = -c
            m = m1 | m2
            out[m] = get(m, 0) + c
    return {m: c for m, c in out.items() if c != 0}


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    s = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                s = -s
    return s


class GrassmannElement:
    """Sparse element of a multi-copy Grassmann algebra.

    ``terms`` maps canonical monomial bitmasks to nonzero coefficients.
    """

    __slots__ = ("sig", "terms")

    def __init__(self, sig: Signature, terms: dict | None = None):
        self.sig = sig
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def _raw(cls, sig, terms):
        el = cls.__new__(cls)
        el.sig = sig
        el.terms = terms
        return el

    # construction

    @classmethod
    def zero(cls, sig):
        return cls._raw(sig, {})

    @classmethod
    def scalar(cls, sig, c=ONE):
        return cls(sig, {0: c})

    @classmethod
    def one(cls, sig):
        return cls.scalar(sig, ONE)

    @classmethod
    def generator(cls, sig, i, copy=0, coeff=ONE):
        return cls(sig, {sig.bit(copy, i): coeff})

    @classmethod
    def a_generator(cls, sig, j, coeff=ONE):
        if not 0 <= j < sig.a:
            raise IndexError(f"coefficient generator {j} out of range")
        return cls(sig, {1 << j: coeff})

    @classmethod
    def monomial(cls, sig, fields: Iterable = (), a: Iterable = (), coeff=ONE):
        """Product a_{j1}...a_{jp} xi^{(c1)}_{i1} ... in the order given.

        ``fields`` is a sequence of ``(copy, index)`` pairs; repeated
        generators give zero.
        """
        bits = [j for j in a]
        for j in bits:
            if not 0 <= j < sig.a:
                raise IndexError(f"coefficient generator {j} out of range")
        bits += [sig.offset(c) + i for c, i in fields]
        for c, i in fields:
            sig.bit(c, i)
        if len(set(bits)) < len(bits):
            return cls.zero(sig)
        mask = 0
        for b in bits:
            mask |= 1 << b
        return cls(sig, {mask: coeff * permutation_sign(bits)})

    # basic protocol

    def copy(self):
        return GrassmannElement._raw(self.sig, dict(self.terms))

    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, GrassmannElement):
            return self.sig == other.sig and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    __hash__ = None

    def _check(self, other):
        if other.sig != self.sig:
            raise ValueError(f"signature mismatch: {self.sig} vs {other.sig}")

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            other = GrassmannElement.scalar(self.sig, other)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s != 0:
                out[m] = s
            else:
                out.pop(m, None)
        return GrassmannElement._raw(self.sig, out)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannElement._raw(self.sig, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, GrassmannElement):
            other = GrassmannElement.scalar(self.sig, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            self._check(other)
            return GrassmannElement._raw(
                self.sig, mul_terms(self.terms, other.terms, self.sig.n_gens + 1))
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c):
        if c == 0:
            return GrassmannElement.zero(self.sig)
        return GrassmannElement(self.sig, {m: c * x for m, x in self.terms.items()})

    def __truediv__(self, c):
        if isinstance(c, GrassmannElement):
            return self * c.inverse()
        return GrassmannElement(self.sig, {m: x / c for m, x in self.terms.items()})

    def __pow__(self, n: int):
        out = GrassmannElement.one(self.sig)
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c}){self._name(m)}" for m, c in sorted(self.terms.items()))

    def _name(self, mask):
        names = []
        sig = self.sig
        for b in _bits(mask):
            if b < sig.a:
                names.append(f"a{b}")
            else:
                k, i = divmod(b - sig.a, sig.v)
                names.append(f"x{k}_{i}")
        return "*".join(names) if names else "1"

    # grading

    def degrees(self, mask):
        return self.sig.degrees(mask)

    def components(self) -> dict:
        """Split into homogeneous pieces keyed by (A-degree, copy degrees)."""
        out: dict = {}
        for m, c in self.terms.items():
            out.setdefault(self.sig.degrees(m), {})[m] = c
        return {k: GrassmannElement._raw(self.sig, t) for k, t in out.items()}

    def component(self, m: int, ns) -> GrassmannElement:
        key = (m, tuple(ns))
        return GrassmannElement._raw(
            self.sig, {k: c for k, c in self.terms.items() if self.sig.degrees(k) == key})

    def parity_of(self, mask):
        return mask.bit_count() & 1

    def is_even(self) -> bool:
        return all(not (m.bit_count() & 1) for m in self.terms)

    def is_odd(self) -> bool:
        return all(m.bit_count() & 1 for m in self.terms)

    def even_part(self):
        return GrassmannElement._raw(self.sig, {m: c for m, c in self.terms.items()
                                                if not m.bit_count() & 1})

    def odd_part(self):
        return GrassmannElement._raw(self.sig, {m: c for m, c in self.terms.items()
                                                if m.bit_count() & 1})

    def z_part(self):
        """Coefficient of the empty monomial."""
        return self.terms.get(0, 0)

    def depends_on_copy(self, copy) -> bool:
        cm = self.sig.copy_mask(copy)
        return any(m & cm for m in self.terms)

    def filter(self, pred):
        return GrassmannElement._raw(self.sig, {m: c for m, c in self.terms.items() if pred(m)})

    def map_coefficients(self, fn):
        return GrassmannElement(self.sig, {m: fn(c) for m, c in self.terms.items()})

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    def to_float(self):
        return self.map_coefficients(complex)

    # signature changes

    def extend(self, copies: int):
        """Same element viewed in a signature with more copies appended."""
        if copies < self.sig.copies:
            raise ValueError("extend can only add copies")
        return GrassmannElement._raw(self.sig.with_copies(copies), dict(self.terms))

    def drop_copy(self, copy: int):
        """Remove a copy on which the element does not depend."""
        sig = self.sig
        off = sig.offset(copy)
        cm = sig.copy_mask(copy)
        low = (1 << off) - 1
        out = {}
        for m, c in self.terms.items():
            if m & cm:
                raise ValueError(f"element depends on copy {copy}")
            out[(m & low) | ((m >> (off + sig.v)) << off)] = c
        return GrassmannElement._raw(sig.with_copies(sig.copies - 1), out)

    def embed(self, sig: Signature, copy_map, a_map=None):
        """Relabel generators into ``sig``.

        ``copy_map[k]`` is the copy of ``sig`` receiving copy ``k``; ``a_map``
        does the same for coefficient generators (identity by default).
        """
        old = self.sig
        if sig.v != old.v:
            raise ValueError("field dimension must agree")
        if a_map is None:
            a_map = list(range(old.a))
        pos = list(a_map)
        for k in range(old.copies):
            base = sig.offset(copy_map[k])
            pos.extend(base + i for i in range(old.v))
        if max(pos, default=-1) >= sig.n_gens or len(set(pos)) != len(pos):
            raise ValueError("invalid relabelling")
        out = {}
        for m, c in self.terms.items():
            new = [pos[b] for b in _bits(m)]
            nm = 0
            for b in new:
                nm |= 1 << b
            out[nm] = c if permutation_sign(new) > 0 else -c
        return GrassmannElement._raw(sig, out)

    # substitution

    def substitute(self, target: int, sources, keep_signature=True):
        """Replace xi^{(target)} by sum_j s_j xi^{(src_j)}.

        ``sources`` is a list of ``(copy, scale)`` pairs (a bare copy index
        means scale 1).  All source copies must exist in the signature.
        """
        sig = self.sig
        srcs = [(s, ONE) if isinstance(s, int) else (s[0], s[1]) for s in sources]
        for s, _ in srcs:
            sig.offset(s)
        off = sig.offset(target)
        vmask = (1 << sig.v) - 1
        width = sig.n_gens + 1
        cache: dict = {}

        def image(S):
            got = cache.get(S)
            if got is None:
                got = {0: ONE}
                for i in _bits(S):
                    lin = {}
                    for s, sc in srcs:
                        b = 1 << (sig.offset(s) + i)
                        lin[b] = lin.get(b, 0) + sc
                    got = mul_terms(got, {m: c for m, c in lin.items() if c != 0}, width)
                cache[S] = got
            return got

        cm = vmask << off
        low = (1 << off) - 1
        out: dict = {}
        for m, c in self.terms.items():
            S = (m >> off) & vmask
            if not S:
                out[m] = out.get(m, 0) + c
                continue
            pre = m & low
            post = m & ~(cm | low)
            for mi, ci in image(S).items():
                if mi & (pre | post):
                    continue
                sgn = merge_sign(pre, mi) * merge_sign(pre | mi, post)
                nm = pre | mi | post
                val = c * ci
                out[nm] = out.get(nm, 0) + (val if sgn > 0 else -val)
        return GrassmannElement(sig, out)

    def shift(self, target: int, sources):
        """f(..., xi + sum_j s_j xi^{(j)}, ...): keeps ``target`` and adds sources."""
        srcs = [(s, ONE) if isinstance(s, int) else s for s in sources]
        return self.substitute(target, [(target, ONE)] + srcs)

    def set_zero(self, copy: int):
        cm = self.sig.copy_mask(copy)
        return self.filter(lambda m: not m & cm)

    def diagonal(self, keep: int, drop: int):
        """Identify copy ``drop`` with copy ``keep`` and remove ``drop``."""
        if keep == drop:
            raise ValueError("copies must differ")
        return self.substitute(drop, [(keep, ONE)]).drop_copy(drop)

    def scale_copy(self, copy: int, s):
        return self.substitute(copy, [(copy, s)])

    def set_a_zero(self):
        """Image under the map sending every coefficient generator to zero."""
        am = self.sig.a_mask
        return self.filter(lambda m: not m & am)

    # calculus

    def derivative(self, i: int, copy: int = 0):
        """Left derivative with respect to xi^{(copy)}_i."""
        b = self.sig.bit(copy, i)
        below = b - 1
        out = {}
        for m, c in self.terms.items():
            if m & b:
                out[m ^ b] = -c if (m & below).bit_count() & 1 else c
        return GrassmannElement._raw(self.sig, out)

    def a_derivative(self, j: int):
        b = 1 << j
        out = {}
        for m, c in self.terms.items():
            if m & b:
                out[m ^ b] = -c if (m & (b - 1)).bit_count() & 1 else c
        return GrassmannElement._raw(self.sig, out)

    # series

    def _nilpotent_series(self, x, coeffs):
        """sum_n coeffs(n) x^n until the powers vanish."""
        out = GrassmannElement.scalar(self.sig, coeffs(0))
        power = GrassmannElement.one(self.sig)
        n = 0
        while True:
            n += 1
            power = power * x
            if power.is_zero():
                return out
            if n > self.sig.n_gens + 1:
                raise RuntimeError("series failed to terminate")
            out = out + power.scale(coeffs(n))

    def exp(self):
        """Exponential of an even element.

        Exact elements must have zero constant part; a float constant part is
        factored out with ``cmath.exp``.
        """
        if not self.is_even():
            raise NotEvenError("exp requires an even element")
        z = self.z_part()
        x = self - z if z != 0 else self
        fact = [ONE]

        def coeff(n):
            while len(fact) <= n:
                fact.append(fact[-1] * len(fact))
            return ONE / fact[n]

        out = self._nilpotent_series(x, coeff)
        if z != 0:
            if isinstance(z, Jet) and z.value == 0:
                out = out.scale(Jet(ONE, z.deriv))
            elif is_exact(z):
                raise ValueError("exact exp needs a vanishing constant part")
            else:
                out = out.scale(cmath.exp(complex(z)))
        return out

    def log_normalized(self):
        """log(f / Z(f)) as a nilpotent series."""
        z = self.z_part()
        if z == 0:
            raise NormalizationError("constant part vanishes")
        x = self / z - ONE
        return self._nilpotent_series(x, lambda n: 0 if n == 0 else ONE * (-1) ** (n - 1) / n)

    def inverse(self):
        z = self.z_part()
        if z == 0:
            raise NormalizationError("constant part vanishes")
        x = self / z - ONE
        return self._nilpotent_series(x, lambda n: ONE * (-1) ** n) / z

    # serialization

    def to_json(self) -> dict:
        sig = self.sig
        vm = (1 << sig.v) - 1
        terms = []
        for m in sorted(self.terms):
            re, im = scalar_to_json(self.terms[m])
            terms.append({
                "a_mask": list(_bits(m & sig.a_mask)),
                "v_masks": [list(_bits((m >> (sig.a + k * sig.v)) & vm)) for k in range(sig.copies)],
                "re": re,
                "im": im,
            })
        return {"signature": {"a": sig.a, "v": sig.v, "copies": sig.copies}, "terms": terms}

    @classmethod
    def from_json(cls, data: dict):
        s = data["signature"]
        sig = Signature(int(s["a"]), int(s["v"]), int(s["copies"]))
        out: dict = {}
        for t in data["terms"]:
            a_idx = [int(i) for i in t["a_mask"]]
            v_idx = [[int(i) for i in vs] for vs in t["v_masks"]]
            if len(v_idx) != sig.copies:
                raise ValueError(f"monomial has {len(v_idx)} copies, expected {sig.copies}: {t}")
            for idx in [a_idx] + v_idx:
                if idx != sorted(set(idx)):
                    raise ValueError(f"index lists must be strictly increasing: {t}")
            if any(not 0 <= i < sig.a for i in a_idx) or any(not 0 <= i < sig.v for vs in v_idx for i in vs):
                raise ValueError(f"monomial outside signature: {t}")
            m = sum(1 << i for i in a_idx)
            for k, vs in enumerate(v_idx):
                for i in vs:
                    m |= sig.bit(k, i)
            out[m] = out.get(m, 0) + scalar_from_json(t["re"], t.get("im", "0"))
        return cls(sig, out)


def jet_parts(f: GrassmannElement):
    """Split an element with jet coefficients into (value, derivative)."""
    val, der = {}, {}
    for m, c in f.terms.items():
        if isinstance(c, Jet):
            val[m], der[m] = c.value, c.deriv
        else:
            val[m] = c
    return GrassmannElement(f.sig, val), GrassmannElement(f.sig, der)


def make_jet(value: GrassmannElement, deriv: GrassmannElement | None = None):
    out = {m: Jet(c, 0) for m, c in value.terms.items()}
    if deriv is not None:
        for m, c in deriv.terms.items():
            j = out.get(m)
            out[m] = Jet(j.value if j else 0, c)
    return GrassmannElement(value.sig, out)


def add_many(sig, items) -> GrassmannElement:
    out: dict = {}
    for el in items:
        for m, c in el.terms.items():
            out[m] = out.get(m, 0) + c
    return GrassmannElement(sig, out)


__all__ = [
    "Signature", "GrassmannElement", "NotEvenError", "NormalizationError",
    "merge_sign", "prefix_parity", "permutation_sign", "jet_parts", "make_jet",
    "add_many", "QQi",
]
