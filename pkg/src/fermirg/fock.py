"""Finite fermionic Fock space and Gram-type bounds on Grassmann moments.

The one-particle space is C^h with the standard basis; the exterior algebra
over it is stored as ``{mask: scalar}``.  ``a_dagger(v)`` multiplies by v on
the left and ``a(v)`` is its adjoint, so both are exact over rationals and
Gaussian rationals.  Time factors e^{+-tau} are floats.
"""

from __future__ import annotations

import math
import random

from .algebra import Signature
from .gaussian import Covariance, integral_bound_check, integrate, monomial_element
from .scalars import ONE, QQi, conj, is_exact, magnitude, parse_rational, random_rational, scalar_from_json, scalar_to_json


class FockVector:
    """Element of the exterior algebra over C^h."""

    __slots__ = ("h", "c")

    def __init__(self, h: int, coeffs: dict | None = None):
        self.h = h
        self.c = {m: x for m, x in (coeffs or {}).items() if x != 0}

    @classmethod
    def vacuum(cls, h: int):
        return cls(h, {0: ONE})

    @classmethod
    def basis(cls, h: int, J):
        m = 0
        for j in J:
            m |= 1 << j
        return cls(h, {m: ONE})

    def __add__(self, other):
        out = dict(self.c)
        for m, x in other.c.items():
            out[m] = out.get(m, 0) + x
        return FockVector(self.h, out)

    def __sub__(self, other):
        return self + other.scale(-ONE)

    def scale(self, s):
        if isinstance(s, (float, complex)):
            # keep floats as Python complex; gmpy2 would promote to mpfr
            return FockVector(self.h, {m: s * complex(x) for m, x in self.c.items()})
        return FockVector(self.h, {m: s * x for m, x in self.c.items()})

    def __eq__(self, other):
        return isinstance(other, FockVector) and self.h == other.h and self.c == other.c

    __hash__ = None

    def __repr__(self):
        return f"FockVector(h={self.h}, {self.c})"

    def is_zero(self):
        return not self.c


def inner(v, w):
    """<v, w> = sum conj(v_k) w_k, for vectors in C^h or Fock vectors."""
    if isinstance(v, FockVector):
        return sum((conj(x) * w.c[m] for m, x in v.c.items() if m in w.c), 0)
    if len(v) != len(w):
        raise ValueError("dimension mismatch")
    return sum((conj(x) * y for x, y in zip(v, w)), 0)


def norm_sq(v) -> float:
    return float(complex(inner(v, v)).real)


def _below(m: int, j: int) -> int:
    return (m & ((1 << j) - 1)).bit_count()


def a_dagger(v, s: FockVector) -> FockVector:
    """Exterior multiplication by v = sum v_j e_j from the left."""
    if len(v) != s.h:
        raise ValueError(f"vector of length {len(v)} on a space with h = {s.h}")
    out: dict = {}
    for j, vj in enumerate(v):
        if vj == 0:
            continue
        b = 1 << j
        for m, x in s.c.items():
            if m & b:
                continue
            y = vj * x
            out[m | b] = out.get(m | b, 0) + (-y if _below(m, j) & 1 else y)
    return FockVector(s.h, out)


def a(v, s: FockVector) -> FockVector:
    """Adjoint of a_dagger(v); antilinear in v."""
    if len(v) != s.h:
        raise ValueError(f"vector of length {len(v)} on a space with h = {s.h}")
    out: dict = {}
    for j, vj in enumerate(v):
        if vj == 0:
            continue
        cj = conj(vj)
        b = 1 << j
        for m, x in s.c.items():
            if not m & b:
                continue
            y = cj * x
            out[m ^ b] = out.get(m ^ b, 0) + (-y if _below(m, j) & 1 else y)
    return FockVector(s.h, out)


def anticommutator(op1, op2, s: FockVector) -> FockVector:
    return op1(op2(s)) + op2(op1(s))


class FockSetup:
    """Generators xi_i with a side ('a' or 'c'), a time tau_i and a vector w_i in C^h."""

    def __init__(self, h: int, sides, taus, ws):
        if not (len(sides) == len(taus) == len(ws)):
            raise ValueError("sides, taus and vectors must have equal length")
        for s in sides:
            if s not in ("a", "c"):
                raise ValueError(f"side must be 'a' or 'c', got {s!r}")
        for w in ws:
            if len(w) != h:
                raise ValueError(f"vector of length {len(w)} in a space with h = {h}")
        self.h = h
        self.sides = list(sides)
        self.taus = list(taus)
        self.ws = [list(w) for w in ws]

    @property
    def n(self) -> int:
        return len(self.sides)

    @property
    def S(self) -> float:
        """sup_i ||w_i||."""
        return max((math.sqrt(norm_sq(w)) for w in self.ws), default=0.0)

    @classmethod
    def random(cls, rng: random.Random, h: int, n: int, complex_entries: bool = True, tau_range: int = 3):
        sides = [rng.choice("ac") for _ in range(n)]
        taus = [random_rational(rng, tau_range, (1, 2)) for _ in range(n)]
        ws = []
        for _ in range(n):
            if complex_entries:
                ws.append([QQi.make(random_rational(rng, 2), random_rational(rng, 2)) for _ in range(h)])
            else:
                ws.append([random_rational(rng, 2) for _ in range(h)])
        return cls(h, sides, taus, ws)

    def to_json(self) -> dict:
        gens = []
        for s, t, w in zip(self.sides, self.taus, self.ws):
            gens.append({"side": s, "tau": scalar_to_json(t)[0], "w": [list(scalar_to_json(x)) for x in w]})
        return {"h": self.h, "generators": gens}

    @classmethod
    def from_json(cls, data: dict):
        h = int(data["h"])
        sides, taus, ws = [], [], []
        for g in data["generators"]:
            sides.append(g["side"])
            taus.append(parse_rational(str(g.get("tau", "0"))))
            ws.append([scalar_from_json(re, im) for re, im in g["w"]])
        return cls(h, sides, taus, ws)

    # covariances

    def _pair(self, i: int, j: int, timed: bool):
        """C(xi_i, xi_j) for xi_i on the a-side and xi_j on the c-side."""
        g = inner(self.ws[i], self.ws[j])
        if not timed:
            return g
        dt = self.taus[i] - self.taus[j]
        if not dt > 0:
            return 0
        return math.exp(-float(dt)) * complex(g)

    def covariance(self, case: str = "i") -> Covariance:
        """Case 'i': <w_i, w_j>; case 'ii': e^{-(tau_i - tau_j)} <w_i, w_j> for tau_i > tau_j."""
        if case not in ("i", "ii"):
            raise ValueError(f"unknown case {case!r}")
        timed = case == "ii"
        n = self.n
        m = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if self.sides[i] == "a" and self.sides[j] == "c":
                    x = self._pair(i, j, timed)
                    m[i][j] = x
                    m[j][i] = -x
        if timed:
            m = [[complex(x) for x in r] for r in m]
        return Covariance(m)

    # vacuum expectations

    def is_time_ordered(self, seq) -> bool:
        """tau non-increasing along seq; within equal times nothing follows an a-side generator but a-side ones."""
        for k in range(len(seq) - 1):
            if self.taus[seq[k]] < self.taus[seq[k + 1]]:
                return False
        for k in range(len(seq)):
            if self.sides[seq[k]] != "a":
                continue
            for l in range(k + 1, len(seq)):
                if self.taus[seq[l]] == self.taus[seq[k]] and self.sides[seq[l]] != "a":
                    return False
        return True

    def time_ordered(self, seq) -> tuple:
        """(sign, reordered sequence) with the reordered sequence time ordered."""
        key = [(-self.taus[i], 0 if self.sides[i] == "c" else 1) for i in seq]
        order = sorted(range(len(seq)), key=lambda k: key[k])
        sign = _perm_sign(order)
        return sign, [seq[k] for k in order]

    def _apply(self, i: int, s: FockVector, timed: bool) -> FockVector:
        w = self.ws[i]
        if self.sides[i] == "a":
            out = a(w, s)
            return out.scale(math.exp(-float(self.taus[i]))) if timed else out
        out = a_dagger(w, s)
        return out.scale(math.exp(float(self.taus[i]))) if timed else out

    def vev(self, seq, timed: bool = True):
        """<Omega_0, a_{i_1} ... a_{i_m} Omega_0>, operators applied right to left."""
        s = FockVector.vacuum(self.h)
        for i in reversed(list(seq)):
            s = self._apply(i, s, timed)
            if s.is_zero():
                return 0
        return s.c.get(0, 0)

    def time_ordered_vev(self, seq):
        """Vacuum expectation for a time-ordered sequence (float)."""
        if not self.is_time_ordered(seq):
            raise ValueError(f"sequence {list(seq)} is not time ordered")
        return self.vev(seq, timed=True)

    def untimed_vev(self, seq):
        """Exact expectation for a sequence with every a-side generator before every c-side one."""
        seen_c = False
        for i in seq:
            if self.sides[i] == "c":
                seen_c = True
            elif seen_c:
                raise ValueError("a-side generators must precede c-side ones")
        return self.vev(seq, timed=False)


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def grassmann_moment(cov: Covariance, seq):
    """int xi_{i_1} ... xi_{i_m} d mu_C."""
    sig = Signature(0, cov.dim, 1)
    mono = monomial_element(sig, list(seq))
    return integrate(mono, cov).z_part()


def vev_moment_sweep(setup: FockSetup, case: str = "ii", max_m: int = 8, tol: float = 1e-9) -> dict:
    """Compare Fock expectations with Grassmann moments over every index subset of size <= max_m.

    Case "ii" orders each subset in time and uses the timed operators; case
    "i" puts a-side generators first and compares exactly.
    """
    C = setup.covariance(case)
    checked = nonzero = 0
    bad = []
    for mask in range(1 << setup.n):
        idx = [i for i in range(setup.n) if mask >> i & 1]
        if len(idx) > max_m:
            continue
        if case == "ii":
            _, seq = setup.time_ordered(idx)
            fock = setup.time_ordered_vev(seq)
        else:
            seq = [i for i in idx if setup.sides[i] == "a"] + [i for i in idx if setup.sides[i] == "c"]
            fock = setup.untimed_vev(seq)
        moment = grassmann_moment(C, seq)
        if case == "ii":
            ok = abs(complex(fock) - complex(moment)) <= tol * max(1.0, abs(complex(moment)))
        else:
            ok = fock == moment
        checked += 1
        nonzero += moment != 0
        if not ok:
            bad.append(seq)
    return {"name": "fock_vev_equals_moment", "case": case, "monomials": checked, "nonzero": nonzero,
            "failed": bad, "holds": not bad}


def gram_bound_check(setup: FockSetup, case: str = "ii", max_m: int | None = None, rel: float = 1e-9) -> dict:
    """|int xi_S d mu_C| <= S^|S| over every index set S, then b = 2S as an integral bound."""
    C = setup.covariance(case)
    S = setup.S
    n = setup.n
    max_m = n if max_m is None else max_m
    holds = True
    worst = 0.0
    checked = 0
    for mask in range(1 << n):
        k = mask.bit_count()
        if k > max_m:
            continue
        checked += 1
        val = magnitude(C.pf(mask)) if k % 2 == 0 else 0.0
        bound = S ** k
        holds &= val <= bound * (1 + rel) + 1e-12
        if bound > 0:
            worst = max(worst, val / bound)
        elif val > 0:
            worst = math.inf
    ib = integral_bound_check(C, 2 * S, rel)
    return {"name": "gram_moment_bound", "S": S, "b": 2 * S, "monomials": checked, "max_ratio": worst,
            "holds": bool(holds), "integral_bound": ib, "exact": all(is_exact(x) for r in C.m for x in r)}


__all__ = ["FockVector", "FockSetup", "a", "a_dagger", "anticommutator", "inner", "norm_sq",
           "grassmann_moment", "gram_bound_check", "vev_moment_sweep"]
