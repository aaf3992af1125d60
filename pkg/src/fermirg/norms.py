"""Truncated power-series norm values and seminorms on Grassmann elements.

A :class:`NormElement` is a polynomial in ``d`` formal variables with
coefficients in [0, inf], truncated above total degree ``max_degree``.
Products follow the convention 0 * inf = inf.
"""

from __future__ import annotations

import itertools
import math
import os

from .algebra import GrassmannElement, _bits
from .gaussian import Covariance

INF = math.inf


def default_max_degree() -> int:
    return int(os.environ.get("FRG_MAX_DEGREE", "4"))


def _mul(x: float, y: float) -> float:
    if x == INF or y == INF:
        return INF
    return x * y


def multi_indices(d: int, max_degree: int):
    out = []
    for total in range(max_degree + 1):
        for c in itertools.combinations_with_replacement(range(d), total):
            idx = [0] * d
            for k in c:
                idx[k] += 1
            out.append(tuple(idx))
    return out


class NormElement:
    """Element of the truncated norm domain."""

    __slots__ = ("d", "max_degree", "c")

    def __init__(self, d: int = 0, coeffs: dict | None = None, max_degree: int | None = None):
        self.d = d
        self.max_degree = default_max_degree() if max_degree is None else max_degree
        self.c = {k: 0.0 for k in multi_indices(d, self.max_degree)}
        for k, v in (coeffs or {}).items():
            k = tuple(k)
            if len(k) != d:
                raise ValueError("multi-index has wrong length")
            if v < 0 or v != v:
                raise ValueError(f"coefficients must lie in [0, inf], got {v}")
            if sum(k) <= self.max_degree:
                self.c[k] = float(v)

    @classmethod
    def constant(cls, x: float, d: int = 0, max_degree: int | None = None):
        return cls(d, {(0,) * d: x}, max_degree)

    def like(self, coeffs):
        out = NormElement.__new__(NormElement)
        out.d, out.max_degree, out.c = self.d, self.max_degree, coeffs
        return out

    def _coerce(self, other):
        if isinstance(other, NormElement):
            if (other.d, other.max_degree) != (self.d, self.max_degree):
                raise ValueError("norm elements live in different domains")
            return other
        return NormElement.constant(float(other), self.d, self.max_degree)

    @property
    def const(self) -> float:
        return self.c[(0,) * self.d]

    def __getitem__(self, k):
        return self.c[tuple(k)]

    def __repr__(self):
        nz = {k: v for k, v in self.c.items() if v}
        return f"NormElement(d={self.d}, {nz})"

    def __add__(self, other):
        o = self._coerce(other)
        return self.like({k: v + o.c[k] for k, v in self.c.items()})

    __radd__ = __add__

    def __mul__(self, other):
        o = self._coerce(other)
        out = {k: 0.0 for k in self.c}
        for b, x in self.c.items():
            sb = sum(b)
            for g, y in o.c.items():
                if sb + sum(g) > self.max_degree:
                    continue
                k = tuple(p + q for p, q in zip(b, g))
                out[k] += _mul(x, y)
        return self.like(out)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self.like({k: v / s for k, v in self.c.items()})

    def __pow__(self, n: int):
        out = NormElement.constant(1.0, self.d, self.max_degree)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, NormElement) and self.c == other.c

    __hash__ = None

    def le(self, other, rel: float = 0.0, abs_tol: float = 0.0) -> bool:
        o = self._coerce(other)
        return all(v <= o.c[k] * (1 + rel) + abs_tol for k, v in self.c.items())

    def __le__(self, other):
        return self.le(other)

    def is_finite(self) -> bool:
        return all(v < INF for v in self.c.values())

    def margin(self, other) -> float:
        """min over coefficients of other - self (inf - inf counts as 0)."""
        o = self._coerce(other)
        best = INF
        for k, v in self.c.items():
            w = o.c[k]
            m = 0.0 if (v == INF and w == INF) else w - v
            best = min(best, m)
        return best

    def to_json(self):
        if self.d == 0:
            return self.const
        return {",".join(map(str, k)): v for k, v in self.c.items() if v}


def inverse_one_minus(a: float, x: NormElement) -> NormElement:
    """(a - X)^{-1} = 1/(a - X_0) sum_n ((X - X_0)/(a - X_0))^n, for X_0 < a."""
    x0 = x.const
    if not x0 < a:
        raise ValueError(f"inverse needs X_0 < a (X_0={x0}, a={a})")
    s = a - x0
    y = x.like(dict(x.c))
    y.c[(0,) * x.d] = 0.0
    y = y / s
    out = NormElement.constant(1.0, x.d, x.max_degree)
    p = out
    for _ in range(x.max_degree + 1):
        p = p * y
        out = out + p
    return out / s


class SeminormFamily:
    """Symmetric seminorms on the homogeneous pieces of Grassmann elements.

    ``kind="l1_linf"`` is the max-over-slots, sup-over-one-index,
    sum-over-the-rest norm of the antisymmetric coefficient tensor, summed
    over coefficient monomials.  ``kind="weighted_l1_linf"`` attaches a
    multi-degree ``weights[i]`` to each field index and sorts the
    coefficients by total weight into the variables of the norm domain.
    """

    def __init__(self, kind: str = "l1_linf", d: int = 0, weights=None, max_degree: int | None = None):
        if kind not in ("l1_linf", "weighted_l1_linf"):
            raise ValueError(f"unknown seminorm family {kind!r}")
        if kind == "weighted_l1_linf" and weights is None:
            raise ValueError("weighted family needs weights")
        if kind == "l1_linf" and d != 0:
            raise ValueError("the plain family takes values in d = 0")
        self.kind = kind
        self.d = d
        self.weights = [tuple(w) for w in weights] if weights is not None else None
        self.max_degree = default_max_degree() if max_degree is None else max_degree

    def zero(self):
        return NormElement(self.d, None, self.max_degree)

    def constant(self, x):
        return NormElement.constant(x, self.d, self.max_degree)

    def _l1_linf_terms(self, sig, terms: dict, ns) -> float:
        """Norm of a homogeneous piece given as {mask: coeff}."""
        n = sum(ns)
        by_a: dict = {}
        for m, c in terms.items():
            by_a.setdefault(m & sig.a_mask, []).append((m, abs(complex(c))))
        if n == 0:
            return sum(v for a, ms in by_a.items() if a for _, v in ms)
        vm = (1 << sig.v) - 1
        total = 0.0
        for ms in by_a.values():
            best = 0.0
            for k, nk in enumerate(ns):
                if nk == 0:
                    continue
                off = sig.offset(k)
                sums = [0.0] * sig.v
                for m, v in ms:
                    for i in _bits((m >> off) & vm):
                        sums[i] += v
                best = max(best, max(sums) / nk)
            total += best
        return total

    def component_norm(self, comp: GrassmannElement, ns) -> NormElement:
        sig = comp.sig
        if self.kind == "l1_linf":
            return self.constant(self._l1_linf_terms(sig, comp.terms, ns))
        buckets: dict = {}
        vm = (1 << sig.v) - 1
        for m, c in comp.terms.items():
            w = [0] * self.d
            for k in range(sig.copies):
                for i in _bits((m >> sig.offset(k)) & vm):
                    w = [p + q for p, q in zip(w, self.weights[i])]
            if sum(w) <= self.max_degree:
                buckets.setdefault(tuple(w), {})[m] = c
        return NormElement(self.d, {w: self._l1_linf_terms(sig, t, ns) for w, t in buckets.items()},
                           self.max_degree)

    def norm(self, f: GrassmannElement) -> NormElement:
        """Sum of the norms of the homogeneous pieces (for homogeneous f, its norm)."""
        out = self.zero()
        for (m, ns), comp in f.components().items():
            out = out + self.component_norm(comp, ns)
        return out


class NormParams:
    """alpha, b, contraction bound c and the seminorm family defining N."""

    def __init__(self, alpha: float, b: float, c, family: SeminormFamily | None = None):
        self.family = family or SeminormFamily()
        self.alpha = float(alpha)
        self.b = float(b)
        self.c = c if isinstance(c, NormElement) else self.family.constant(float(c))
        if self.b <= 0:
            raise ValueError("b must be positive")

    def with_alpha(self, alpha):
        return NormParams(alpha, self.b, self.c, self.family)

    def to_json(self):
        return {"alpha": self.alpha, "b": self.b, "c": self.c.to_json(), "family": self.family.kind}


def big_n(f: GrassmannElement, params: NormParams, alpha: float | None = None,
          psi_copy: int | None = None, psi_alpha: float | None = None) -> NormElement:
    """N(f; alpha) = c/b^2 sum_{m,n} alpha^|n| b^|n| ||f_{m;n}||.

    With ``psi_copy`` that copy is treated as part of the coefficient
    algebra, its degree weighted by ``(psi_alpha * b)`` inside the seminorm.
    """
    a = params.alpha if alpha is None else float(alpha)
    b = params.b
    fam = params.family
    total = fam.zero()
    for (m, ns), comp in f.components().items():
        if psi_copy is None:
            n = sum(ns)
            w = (a * b) ** n
        else:
            n = sum(ns) - ns[psi_copy]
            pa = a if psi_alpha is None else float(psi_alpha)
            w = (a * b) ** n * (pa * b) ** ns[psi_copy]
        if m == 0 and sum(ns) == 0:
            continue
        total = total + fam.component_norm(comp, ns) * w
    return params.c * total / (b * b)


def contraction_bound(cov: Covariance) -> float:
    """max_i sum_j |C_ij|, a contraction bound for the l1_linf family."""
    return cov.l1_linf()


def check_record(name: str, lhs, rhs, rel: float = 1e-9, abs_tol: float = 1e-12, **extra) -> dict:
    """Report record for the inequality lhs <= rhs."""
    if not isinstance(lhs, NormElement) and not isinstance(rhs, NormElement):
        lhs = NormElement.constant(float(lhs), 0, 0)
        rhs = NormElement.constant(float(rhs), 0, 0)
    elif not isinstance(lhs, NormElement):
        lhs = NormElement.constant(float(lhs), rhs.d, rhs.max_degree)
    elif not isinstance(rhs, NormElement):
        rhs = NormElement.constant(float(rhs), lhs.d, lhs.max_degree)
    holds = lhs.le(rhs, rel, abs_tol)
    rec = {"name": name, "lhs": lhs.to_json(), "rhs": rhs.to_json(), "holds": bool(holds),
           "margin": lhs.margin(rhs)}
    rec.update(extra)
    return rec
