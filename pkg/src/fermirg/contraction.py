"""Tensor representatives, antisymmetrization and contractions.

A :class:`TensorElement` is an element of A (x) V^{(x) n}: a map from
(coefficient monomial, index tuple) to scalars.  Homogeneous Grassmann
elements embed as their block-antisymmetric representatives.
"""

from __future__ import annotations

import itertools
import math
import warnings

from .algebra import GrassmannElement, Signature, _bits, permutation_sign
from .gaussian import Covariance, integrate, wick
from .scalars import ONE


class DegenerateContractionWarning(UserWarning):
    """Contraction of a slot with itself; the result is zero by convention."""


class TensorElement:
    """Sparse tensor with keys ``(a_mask, (i_1, ..., i_n))``."""

    __slots__ = ("rank", "coeffs")

    def __init__(self, rank: int, coeffs: dict | None = None):
        self.rank = rank
        self.coeffs = {k: c for k, c in (coeffs or {}).items() if c != 0}
        for _, idx in self.coeffs:
            if len(idx) != rank:
                raise ValueError("index tuple length must equal rank")

    def __eq__(self, other):
        return isinstance(other, TensorElement) and self.rank == other.rank and self.coeffs == other.coeffs

    __hash__ = None

    def __repr__(self):
        return f"TensorElement(rank={self.rank}, {self.coeffs})"

    def __add__(self, other):
        if other.rank != self.rank:
            raise ValueError("rank mismatch")
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return TensorElement(self.rank, out)

    def __neg__(self):
        return TensorElement(self.rank, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return TensorElement(self.rank, {k: c * x for k, x in self.coeffs.items()})

    __rmul__ = scale

    def is_zero(self):
        return not self.coeffs

    def permute(self, perm):
        """f^pi: slot k of the result holds what slot perm[k] held."""
        out = {}
        for (a, idx), c in self.coeffs.items():
            new = tuple(idx[p] for p in perm)
            key = (a, new)
            out[key] = out.get(key, 0) + c
        return TensorElement(self.rank, out)

    def ant(self, blocks=None):
        """Antisymmetrize within consecutive blocks of slots."""
        if blocks is None:
            blocks = (self.rank,)
        if sum(blocks) != self.rank:
            raise ValueError("blocks must partition the slots")
        perms = [[]]
        start = 0
        for n in blocks:
            new = []
            for head in perms:
                for p in itertools.permutations(range(start, start + n)):
                    new.append(head + list(p))
            perms = new
            start += n
        norm = ONE / math.prod(math.factorial(n) for n in blocks)
        out = {}
        for p in perms:
            s = permutation_sign(p)
            for (a, idx), c in self.coeffs.items():
                key = (a, tuple(idx[j] for j in p))
                out[key] = out.get(key, 0) + (c if s > 0 else -c)
        return TensorElement(self.rank, {k: c * norm for k, c in out.items()})

    def contract(self, i: int, j: int, cov: Covariance):
        """Con_{i -> j}: pair slot i with slot j (1-based) through cov."""
        n = self.rank
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexError("slot out of range")
        if i == j:
            warnings.warn("contraction of a slot with itself is zero", DegenerateContractionWarning)
            return TensorElement(n - 2)
        eps = (-1) ** (j - i + 1) if j > i else (-1) ** (i - j)
        out = {}
        for (a, idx), c in self.coeffs.items():
            w = cov.m[idx[i - 1]][idx[j - 1]]
            if w == 0:
                continue
            rest = tuple(x for k, x in enumerate(idx) if k not in (i - 1, j - 1))
            key = (a, rest)
            v = c * w
            out[key] = out.get(key, 0) + (v if eps > 0 else -v)
        return TensorElement(n - 2, out)

    def l1_linf(self) -> float:
        """sum over coefficient monomials of max_k sup_{i_k} sum_{other i} |phi|."""
        by_a: dict = {}
        for (a, idx), c in self.coeffs.items():
            by_a.setdefault(a, []).append((idx, abs(complex(c))))
        total = 0.0
        for entries in by_a.values():
            if self.rank == 0:
                total += sum(v for _, v in entries)
                continue
            best = 0.0
            for k in range(self.rank):
                sums: dict = {}
                for idx, v in entries:
                    sums[idx[k]] = sums.get(idx[k], 0.0) + v
                best = max(best, max(sums.values()))
            total += best
        return total


def to_tensor(f: GrassmannElement) -> tuple:
    """Block-antisymmetric tensor of a homogeneous element.

    Returns ``(tensor, blocks)``.  Slots are ordered copy by copy.
    """
    comps = f.components()
    if len(comps) > 1:
        raise ValueError("element is not homogeneous")
    sig = f.sig
    if not comps:
        return TensorElement(0), tuple([0] * sig.copies)
    (m, ns), = comps.keys()
    vm = (1 << sig.v) - 1
    raw = {}
    for mask, c in f.terms.items():
        idx = []
        for k in range(sig.copies):
            idx.extend(_bits((mask >> sig.offset(k)) & vm))
        raw[(mask & sig.a_mask, tuple(idx))] = c
    return TensorElement(sum(ns), raw).ant(ns), ns


def from_tensor(t: TensorElement, sig: Signature, blocks) -> GrassmannElement:
    """Grassmann element obtained by multiplying out every basis tensor."""
    if sum(blocks) != t.rank or len(blocks) != sig.copies:
        raise ValueError("blocks do not match the signature")
    copies = []
    for k, n in enumerate(blocks):
        copies.extend([k] * n)
    out: dict = {}
    for (a, idx), c in t.coeffs.items():
        fields = list(zip(copies, idx))
        mono = GrassmannElement.monomial(sig, fields, a=list(_bits(a)), coeff=c)
        for mk, v in mono.terms.items():
            out[mk] = out.get(mk, 0) + v
    return GrassmannElement(sig, out)


def cont(f: GrassmannElement, k: int, l: int, cov: Covariance, route: str = "tensor") -> GrassmannElement:
    """Contraction of copy k into copy l through cov.

    ``route="tensor"`` contracts the first slots of the two blocks of the
    antisymmetric representative and multiplies by the degree in copy l.
    ``route="derivative"`` uses -(1/n_k) sum d/dxi^(k)_i C_ij d/dxi^(l)_j.
    """
    if k == l:
        raise ValueError("contraction needs two distinct copies")
    sig = f.sig
    out = GrassmannElement.zero(sig)
    for (m, ns), comp in f.components().items():
        nk, nl = ns[k], ns[l]
        if nk == 0 or nl == 0:
            continue
        if route == "tensor":
            t, blocks = to_tensor(comp)
            mu = sum(blocks[:k]) + 1
            nu = sum(blocks[:l]) + 1
            ct = t.contract(mu, nu, cov).scale(nl)
            nb = list(blocks)
            nb[k] -= 1
            nb[l] -= 1
            out = out + from_tensor(ct, sig, nb)
        elif route == "derivative":
            acc = GrassmannElement.zero(sig)
            for j in range(sig.v):
                dj = comp.derivative(j, l)
                if dj.is_zero():
                    continue
                for i in range(sig.v):
                    c = cov.m[i][j]
                    if c != 0:
                        acc = acc + dj.derivative(i, k).scale(c)
            out = out - acc.scale(ONE / nk)
        else:
            raise ValueError(f"unknown route {route!r}")
    return out


def cont_wick_commutes(f: GrassmannElement, cov: Covariance, wick_cov: Covariance, k: int = 0, l: int = 1):
    """Both sides of cont_{k->l} :f:_{copy l} = :cont_{k->l} f:_{copy l}.

    Wick ordering the source copy instead changes n_k and does not commute.
    """
    lhs = cont(wick(f, wick_cov, l), k, l, cov)
    rhs = wick(cont(f, k, l, cov), wick_cov, l)
    return lhs, rhs


def contraction_under_integral(f: GrassmannElement, cov: Covariance):
    """Both sides of the contraction identity for f(xi, xi', xi'').

    f lives on three copies and must have positive degree in copy 1 in
    every term.  Returns (int [:f(xi,xi,xi''):_xi]_{xi''=xi},
    int [:(cont_{xi'->xi''} f)(xi,xi,xi''):_xi]_{xi''=xi}).
    """
    sig = f.sig
    if sig.copies != 3:
        raise ValueError("expected three copies")
    cm = sig.copy_mask(1)
    if any(not m & cm for m in f.terms):
        raise ValueError("every term must contain a generator of the middle copy")

    def side(g):
        g = g.diagonal(0, 1)
        g = wick(g, cov, 0)
        g = g.diagonal(0, 1)
        return integrate(g, cov, 0)

    return side(f), side(cont(f, 1, 2, cov))


def tensor_product(f: TensorElement, g: TensorElement) -> TensorElement:
    """f (x) g for tensors without coefficient generators."""
    out = {}
    for (a, i), c in f.coeffs.items():
        for (b, j), d in g.coeffs.items():
            if a or b:
                raise ValueError("tensor_product supports scalar coefficients only")
            out[(0, i + j)] = c * d
    return TensorElement(f.rank + g.rank, out)


def integrate_leading_slots(f: TensorElement, k: int, cov: Covariance) -> TensorElement:
    """int Ant_k(f) d mu_C: the first k slots become a Grassmann monomial and are integrated."""
    from .pfaffian import pfaffian_of_indices

    if not 0 <= k <= f.rank:
        raise ValueError("k out of range")
    out = {}
    for (a, idx), c in f.coeffs.items():
        p = pfaffian_of_indices(cov.m, idx[:k])
        if p == 0:
            continue
        key = (a, idx[k:])
        out[key] = out.get(key, 0) + c * p
    return TensorElement(f.rank - k, out)


def random_tensor(rng, rank: int, dim: int, nterms: int = 6) -> TensorElement:
    from .scalars import random_rational

    out = {}
    for _ in range(nterms):
        idx = tuple(rng.randrange(dim) for _ in range(rank))
        out[(0, idx)] = out.get((0, idx), 0) + random_rational(rng, nonzero=True)
    return TensorElement(rank, out)
