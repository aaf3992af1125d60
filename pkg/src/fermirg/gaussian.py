"""Grassmann Gaussian integrals and Wick ordering."""

from __future__ import annotations

import itertools
import random

from .algebra import GrassmannElement, Signature, _bits, prefix_parity
from .pfaffian import PfaffianCache, determinant
from .scalars import ONE, ZERO, Jet, is_exact, magnitude, random_rational, scalar_from_json, scalar_to_json


class Covariance:
    """Antisymmetric D x D matrix of scalars."""

    def __init__(self, matrix, check: bool = True):
        self.m = [list(r) for r in matrix]
        n = len(self.m)
        if any(len(r) != n for r in self.m):
            raise ValueError("covariance must be square")
        if check:
            for i in range(n):
                if self.m[i][i] != 0:
                    raise ValueError(f"diagonal entry ({i},{i}) is nonzero")
                for j in range(i + 1, n):
                    if self.m[i][j] != -self.m[j][i]:
                        raise ValueError(f"covariance not antisymmetric at ({i},{j})")
        self._pf = None

    @property
    def dim(self) -> int:
        return len(self.m)

    def __getitem__(self, ij):
        i, j = ij
        return self.m[i][j]

    def __repr__(self):
        return f"Covariance({self.m})"

    def __eq__(self, other):
        return isinstance(other, Covariance) and self.m == other.m

    __hash__ = None

    @classmethod
    def zeros(cls, dim):
        return cls([[ZERO] * dim for _ in range(dim)], check=False)

    @classmethod
    def from_upper(cls, dim, entries: dict):
        """Build from {(i, j): value} with i < j."""
        m = [[ZERO] * dim for _ in range(dim)]
        for (i, j), v in entries.items():
            if not 0 <= i < j < dim:
                raise ValueError(f"upper entry ({i},{j}) invalid for dim {dim}")
            m[i][j] = v
            m[j][i] = -v
        return cls(m, check=False)

    @classmethod
    def random(cls, rng: random.Random, dim: int, density: float = 1.0):
        ent = {}
        for i in range(dim):
            for j in range(i + 1, dim):
                if rng.random() < density:
                    ent[(i, j)] = random_rational(rng)
        return cls.from_upper(dim, ent)

    def _map(self, fn):
        return Covariance([[fn(x) for x in r] for r in self.m], check=False)

    def __add__(self, other):
        return Covariance([[x + y for x, y in zip(r, s)] for r, s in zip(self.m, other.m)], check=False)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._map(lambda x: -x)

    def scale(self, c):
        return self._map(lambda x: c * x)

    __rmul__ = scale

    def to_float(self):
        return self._map(complex)

    def is_exact(self) -> bool:
        return all(is_exact(x) for r in self.m for x in r)

    def jet(self, direction: "Covariance"):
        """Entries value + eps * direction."""
        return Covariance([[Jet(x, y) for x, y in zip(r, s)] for r, s in zip(self.m, direction.m)],
                          check=False)

    def restrict(self, idx):
        return Covariance([[self.m[i][j] for j in idx] for i in idx], check=False)

    def pf(self, mask: int):
        if self._pf is None:
            self._pf = PfaffianCache(self.m)
        return self._pf.pf(mask)

    def row_abs_sums(self):
        return [sum(magnitude(x) for x in r) for r in self.m]

    def l1_linf(self) -> float:
        """max_i sum_j |C_ij|."""
        return max(self.row_abs_sums(), default=0.0)

    def to_json(self) -> dict:
        upper = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                if self.m[i][j] != 0:
                    upper.append([i, j, *scalar_to_json(self.m[i][j])])
        return {"dim": self.dim, "upper": upper}

    @classmethod
    def from_json(cls, data: dict):
        """Accepts ``{"dim", "upper": [[i, j, re, im], ...]}`` or a full ``{"matrix": [[[re, im], ...], ...]}``."""
        if "matrix" in data:
            rows = [[scalar_from_json(*x) if isinstance(x, list) else scalar_from_json(x, "0") for x in r]
                    for r in data["matrix"]]
            return cls(rows)
        dim = int(data["dim"])
        ent = {}
        for row in data["upper"]:
            i, j = int(row[0]), int(row[1])
            if i == j:
                raise ValueError("diagonal entries are not allowed")
            if i > j:
                raise ValueError(f"entry ({i},{j}) is not in the upper triangle")
            if (i, j) in ent:
                raise ValueError(f"duplicate entry ({i},{j})")
            ent[(i, j)] = scalar_from_json(row[2], row[3] if len(row) > 3 else "0")
        return cls.from_upper(dim, ent)


def _field_mask(sig: Signature):
    return (1 << sig.v) - 1


def integrate(f: GrassmannElement, cov: Covariance, copy: int = 0, keep_copy: bool = False):
    """Integrate copy ``copy`` against the Grassmann Gaussian measure of ``cov``.

    The map is linear over every other generator.  The integrated copy is
    removed from the signature unless ``keep_copy``.
    """
    sig = f.sig
    if cov.dim != sig.v:
        raise ValueError(f"covariance dimension {cov.dim} != field dimension {sig.v}")
    off = sig.offset(copy)
    vm = _field_mask(sig)
    cm = vm << off
    out: dict = {}
    for m, c in f.terms.items():
        S = (m >> off) & vm
        if S.bit_count() & 1:
            continue
        p = cov.pf(S)
        if p == 0:
            continue
        nm = m & ~cm
        out[nm] = out.get(nm, 0) + c * p
    res = GrassmannElement(sig, out)
    return res if keep_copy else res.drop_copy(copy)


def integrate_copies(f, cov, copies):
    """Integrate several copies one after another (highest index first)."""
    for k in sorted(copies, reverse=True):
        f = integrate(f, cov, k)
    return f


class WickTable:
    """Images of monomials in one copy under Wick ordering.

    ``sign=-1`` gives Wick ordering with respect to ``cov`` and ``sign=+1``
    its inverse (integrating the shifted field against ``cov``).
    """

    def __init__(self, cov: Covariance, sign: int):
        self.cov = cov
        self.sign = sign
        self.memo: dict = {}

    def image(self, S: int):
        got = self.memo.get(S)
        if got is not None:
            return got
        out = []
        elems = list(_bits(S))
        for k in range(0, len(elems) + 1, 2):
            for T in itertools.combinations(elems, k):
                tm = 0
                for t in T:
                    tm |= 1 << t
                p = self.cov.pf(tm)
                if p == 0:
                    continue
                if self.sign < 0 and (k // 2) & 1:
                    p = -p
                rest = S ^ tm
                if (rest & prefix_parity(tm, S.bit_length() + 1)).bit_count() & 1:
                    p = -p
                out.append((rest, p))
        self.memo[S] = out
        return out

    def apply(self, f: GrassmannElement, copy: int):
        sig = f.sig
        off = sig.offset(copy)
        vm = _field_mask(sig)
        cm = vm << off
        out: dict = {}
        for m, c in f.terms.items():
            S = (m >> off) & vm
            base = m & ~cm
            for rest, p in self.image(S):
                nm = base | (rest << off)
                out[nm] = out.get(nm, 0) + c * p
        return GrassmannElement(sig, out)


def wick(f: GrassmannElement, cov: Covariance, copies=(0,)):
    """Wick ordering :f:_C in each listed copy."""
    if isinstance(copies, int):
        copies = (copies,)
    t = WickTable(cov, -1)
    for k in copies:
        f = t.apply(f, k)
    return f


def unwick(f: GrassmannElement, cov: Covariance, copies=(0,)):
    """Inverse of :func:`wick`: integrate f(xi + xi') against cov in xi'."""
    if isinstance(copies, int):
        copies = (copies,)
    t = WickTable(cov, +1)
    for k in copies:
        f = t.apply(f, k)
    return f


def wick_by_substitution(f: GrassmannElement, cov: Covariance, copy: int = 0, inverse: bool = False):
    """Wick ordering computed literally as int f(xi + xi') d mu_{-C}(xi')."""
    r = f.sig.copies
    g = f.extend(r + 1).shift(copy, [r])
    return integrate(g, cov if inverse else -cov, r)


def laplacian(f: GrassmannElement, cov: Covariance, copy: int = 0):
    """sum_{ij} C_ij d/dxi_i d/dxi_j f."""
    out = GrassmannElement.zero(f.sig)
    for j in range(f.sig.v):
        dj = f.derivative(j, copy)
        if dj.is_zero():
            continue
        for i in range(f.sig.v):
            c = cov.m[i][j]
            if c != 0:
                out = out + dj.derivative(i, copy).scale(c)
    return out


def integration_by_parts(f_index: int, g: GrassmannElement, cov: Covariance, copy: int = 0):
    """Both sides of int xi_i g d mu = sum_j C_ij int d/dxi_j g d mu."""
    sig = g.sig
    lhs = integrate(GrassmannElement.generator(sig, f_index, copy) * g, cov, copy)
    rhs = GrassmannElement.zero(sig.with_copies(sig.copies - 1))
    for j in range(sig.v):
        c = cov.m[f_index][j]
        if c != 0:
            rhs = rhs + integrate(g.derivative(j, copy), cov, copy).scale(c)
    return lhs, rhs


def source_exponent(D: int):
    """sum_i xi_i zeta_i with the sources zeta realized as coefficient generators."""
    sig = Signature(D, D, 1)
    s = GrassmannElement.zero(sig)
    for i in range(D):
        s = s + GrassmannElement.generator(sig, i) * GrassmannElement.a_generator(sig, i)
    return s


def source_quadratic(cov: Covariance):
    """sum_ij zeta_i C_ij zeta_j in the signature of :func:`source_exponent`."""
    D = cov.dim
    sig = Signature(D, D, 1)
    q = GrassmannElement.zero(sig)
    for i in range(D):
        for j in range(D):
            if cov.m[i][j] != 0:
                q = q + (GrassmannElement.a_generator(sig, i) * GrassmannElement.a_generator(sig, j)).scale(cov.m[i][j])
    return q


def generating_identity_check(cov: Covariance, zeta_count: int | None = None) -> dict:
    """Check the integral and Wick forms of the exponential generating identities."""
    D = cov.dim
    if zeta_count is not None and zeta_count != D:
        raise ValueError("one source per field generator is required")
    e = source_exponent(D).exp()
    q = source_quadratic(cov)
    lhs_int = integrate(e, cov)
    sig0 = lhs_int.sig
    rhs_int = _a_only(q.scale(-ONE / 2).exp(), sig0)
    lhs_wick = wick(e, cov)
    rhs_wick = q.scale(ONE / 2).exp() * e
    return {
        "integral": (lhs_int, rhs_int, lhs_int == rhs_int),
        "wick": (lhs_wick, rhs_wick, lhs_wick == rhs_wick),
    }


def _a_only(f: GrassmannElement, sig0: Signature):
    if any(m >> f.sig.a for m in f.terms):
        raise ValueError("element depends on field generators")
    return GrassmannElement(sig0, dict(f.terms))


def monomial_element(sig: Signature, indices, copy: int = 0):
    return GrassmannElement.monomial(sig, [(copy, i) for i in indices])


def moment_wick_pair(i_list, j_list, cov: Covariance):
    """int (:xi_{i1}..xi_{in}:)(:xi_{jm}..xi_{j1}:) d mu_C and det[C_{i_k j_l}].

    The determinant is ``None`` when the lengths differ (the integral must
    then vanish).
    """
    sig = Signature(0, cov.dim, 1)
    left = wick(monomial_element(sig, i_list), cov)
    right = wick(monomial_element(sig, list(reversed(j_list))), cov)
    val = integrate(left * right, cov).z_part()
    if len(i_list) != len(j_list):
        return val, None
    return val, determinant([[cov.m[i][j] for j in j_list] for i in i_list])


def gaussian_derivative_jet(f: GrassmannElement, C0: Covariance, C1: Covariance, copy: int = 0):
    """d/dk int f d mu_{C0 + k C1} at k = 0, computed two ways.

    Returns (jet derivative, -1/2 sum C1_ij int d_i d_j f d mu_{C0}).
    """
    from .algebra import jet_parts

    jet = integrate(f, C0.jet(C1), copy)
    _, d = jet_parts(jet)
    formula = integrate(laplacian(f, C1, copy), C0, copy).scale(-ONE / 2)
    return d, formula


def moment_bound(cov: Covariance, max_degree: int | None = None):
    """Largest |Pf(C_S)|^(1/|S|) over nonempty even index sets."""
    D = cov.dim
    best = 0.0
    for S in range(1, 1 << D):
        k = S.bit_count()
        if k & 1 or (max_degree is not None and k > max_degree):
            continue
        p = magnitude(cov.pf(S))
        if p:
            best = max(best, p ** (1.0 / k))
    return best


def minimal_integral_bound(cov: Covariance) -> float:
    """Smallest b with |int xi_S d mu_C| <= (b/2)^|S| for every monomial."""
    return 2.0 * moment_bound(cov)


def integral_bound_check(cov: Covariance, b: float, rel=1e-9) -> dict:
    """Exhaustively check |Pf(C_S)| <= (b/2)^|S| over all index sets."""
    worst = None
    holds = True
    D = cov.dim
    for S in range(1, 1 << D):
        k = S.bit_count()
        if k & 1:
            continue
        lhs = magnitude(cov.pf(S))
        rhs = (b / 2.0) ** k
        ok = lhs <= rhs * (1 + rel) + 1e-12
        holds &= ok
        margin = rhs - lhs
        if worst is None or margin < worst[2]:
            worst = (S, lhs, margin, rhs)
    if worst is None:
        return {"name": "moment_bound", "lhs": 0.0, "rhs": 0.0, "holds": True, "margin": 0.0}
    return {"name": "moment_bound", "lhs": worst[1], "rhs": worst[3], "holds": holds, "margin": worst[2]}
