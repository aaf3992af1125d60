"""Renormalization group map, Schwinger functional and the R operators."""

from __future__ import annotations

from .algebra import GrassmannElement, Signature, _bits
from .gaussian import Covariance, integrate, unwick, wick
from .pfaffian import solve
from .scalars import ONE


class NeumannDivergenceError(RuntimeError):
    """A series that should terminate by nilpotency did not."""


class SingularOperatorError(ArithmeticError):
    """1 - R has eigenvalue zero, so no exact inverse exists."""


def _strip_constant(W: GrassmannElement):
    z = W.z_part()
    return W - z if z != 0 else W


def _require_even(W, name="W"):
    if not W.is_even():
        raise ValueError(f"{name} must be even")


def partition_value(W: GrassmannElement, cov: Covariance, copy: int = 0):
    """Z(int e^{W} d mu_C), the constant part, with the constant of W removed."""
    _require_even(W)
    return integrate(_strip_constant(W).exp(), cov, copy).z_part()


def omega(W: GrassmannElement, cov: Covariance, copy: int = 0, via_substitution: bool = True):
    """log (1/Z) int e^{W(psi + xi)} d mu_C(xi), with psi the field of ``copy``.

    The constant part of W cancels against Z and is dropped first.  With
    ``via_substitution`` the exponential is formed before shifting the field,
    which is equivalent and cheaper.
    """
    _require_even(W)
    W0 = _strip_constant(W)
    r = W.sig.copies
    if via_substitution:
        E = W0.exp().extend(r + 1).shift(copy, [r])
    else:
        E = W0.extend(r + 1).shift(copy, [r]).exp()
    return integrate(E, cov, r).log_normalized()


def rg_step(W: GrassmannElement, C: Covariance, D: Covariance | None = None):
    """W' with :W':_D = Omega_C(:W:_{C+D}); D = None means D = 0."""
    if D is None:
        return omega(wick(W, C), C)
    return unwick(omega(wick(W, C + D), C), D)


def rg_step_normalized(W: GrassmannElement, C: Covariance, D: Covariance):
    """Variant normalized by Z(int int e^{W(psi+xi)} d mu_C d mu_D(psi)).

    Returns ``(W'', shift)`` where ``shift = log(Z_C / Z_{C,D})`` is the
    constant separating it from :func:`rg_step`; the logarithm makes this a
    float computation.
    """
    import cmath

    U = wick(W, C + D)
    U0 = _strip_constant(U)
    r = U.sig.copies
    I = integrate(U0.exp().extend(r + 1).shift(0, [r]), C, r)
    z_c = I.z_part()
    z_cd = integrate(I, D, 0).z_part()
    shift = cmath.log(complex(z_c) / complex(z_cd))
    base = rg_step(W, C, D).to_float()
    return base + shift, shift


# Schwinger functional


def schwinger_direct(U: GrassmannElement, f: GrassmannElement, cov: Covariance, copy: int = 0):
    """(1/Z(U,C)) int f e^U d mu_C over ``copy``; Z(U,C) = int e^U d mu_C."""
    _require_even(U, "U")
    E = _strip_constant(U).exp()
    Z = integrate(E, cov, copy)
    return integrate(f * E, cov, copy) * Z.inverse()


class ROperator:
    """f -> int :e^{U(xi+eta) - U(xi)} - 1:_eta f(eta) d mu_C(eta)."""

    def __init__(self, U: GrassmannElement, cov: Covariance, copy: int = 0):
        _require_even(U, "U")
        self.sig = U.sig
        self.cov = cov
        self.copy = copy
        r = U.sig.copies
        U0 = _strip_constant(U)
        ext = self.sig.with_copies(r + 1)
        shifted = U0.exp().extend(r + 1).shift(copy, [r])
        back = (-U0).exp().extend(r + 1)
        kernel = shifted * back - GrassmannElement.one(ext)
        self.kernel = wick(kernel, cov, r)
        self.eta = r

    def __call__(self, f: GrassmannElement):
        r = self.eta
        f_eta = f.extend(r + 1).substitute(self.copy, [r])
        return integrate(self.kernel * f_eta, self.cov, r)


def _neumann(op, f, cap):
    total = f
    g = f
    for _ in range(cap):
        g = op(g)
        if g.is_zero():
            return total
        total = total + g
    raise NeumannDivergenceError(f"Neumann series did not terminate within {cap} steps")


def coefficient_split(sig: Signature, copy: int):
    """Helpers to view an element as coefficients times monomials of one copy."""
    off = sig.offset(copy)
    vm = (1 << sig.v) - 1
    cm = vm << off
    above = ~((1 << (off + sig.v)) - 1)

    def split(m):
        S = (m >> off) & vm
        rest = m & ~cm
        return rest, S, (rest & above).bit_count()

    return split, off, cm


def invert_one_minus(op, op0, f: GrassmannElement, copy: int = 0, cap: int | None = None):
    """g = (1 - op)^{-1} f for a linear map that is linear over all generators
    outside ``copy``.

    ``op0`` is the same map with every generator outside ``copy`` set to
    zero; it acts on the 2^v monomials of ``copy`` and is inverted exactly.
    The remainder op - op0 raises the degree in the other generators, so the
    series sum_k (M (op - op0))^k M f, M = (1 - op0)^{-1}, terminates.
    """
    sig = f.sig
    v = sig.v
    split, off, cm = coefficient_split(sig, copy)
    n = 1 << v
    cols = []
    for S in range(n):
        img = op0(GrassmannElement(sig, {S << off: ONE}))
        col = [0] * n
        for m, c in img.terms.items():
            if m & ~cm:
                raise ValueError("op0 leaves the single-copy subalgebra")
            col[(m >> off)] = c
        cols.append(col)
    a = [[(ONE if T == S else 0) - cols[S][T] for S in range(n)] for T in range(n)]
    ident = [[ONE if i == j else 0 for j in range(n)] for i in range(n)]
    try:
        minv = solve(a, ident)
    except ZeroDivisionError as exc:
        raise SingularOperatorError("1 - R is singular on the scalar part") from exc

    def apply_m(g):
        out: dict = {}
        for m, c in g.terms.items():
            rest, S, k = split(m)
            for T in range(n):
                x = minv[T][S]
                if x == 0:
                    continue
                val = c * x
                if ((S.bit_count() + T.bit_count()) * k) & 1:
                    val = -val
                nm = rest | (T << off)
                out[nm] = out.get(nm, 0) + val
        return GrassmannElement(sig, out)

    other = sig.n_gens - v
    cap = 2 * sig.n_gens + 2 if cap is None else cap
    g = apply_m(f)
    total = g
    for _ in range(cap):
        g = apply_m(op(g) - op0(g))
        if g.is_zero():
            return total
        total = total + g
    raise NeumannDivergenceError(f"series over {other} coefficient generators did not terminate")


def scalar_part(U: GrassmannElement, copy: int):
    """U with every generator outside ``copy`` set to zero."""
    cm = U.sig.copy_mask(copy)
    return U.filter(lambda m: not m & ~cm)


def schwinger_via_r(U: GrassmannElement, f: GrassmannElement, cov: Covariance, copy: int = 0,
                    method: str = "auto"):
    """int (1 - R_{U,C})^{-1}(f) d mu_C.

    ``method="neumann"`` sums the plain Neumann series and fails unless R is
    nilpotent; ``"auto"`` inverts the part of R with scalar coefficients
    exactly and sums the nilpotent remainder.
    """
    R = ROperator(U, cov, copy)
    if method == "neumann":
        g = _neumann(R, f, 2 * f.sig.n_gens + 2)
    elif method == "auto":
        U0 = scalar_part(U, copy)
        R0 = ROperator(U0, cov, copy) if not U0.is_zero() else (lambda h: GrassmannElement.zero(h.sig))
        g = invert_one_minus(R, R0, f, copy)
    else:
        raise ValueError(f"unknown method {method!r}")
    return integrate(g, cov, copy)


# operators with a kernel on three copies (xi, xi', eta)


def _three_copy(f: GrassmannElement):
    if f.sig.copies != 1:
        raise ValueError("f must live on a single copy")
    return f.embed(f.sig.with_copies(3), [2])


def _finish(inner, f, cov):
    g = wick(inner, cov, 2) * _three_copy(f)
    g = integrate(integrate(g, cov, 2), cov, 1)
    return wick(g, cov, 0)


def r_multilinear(kernels, f: GrassmannElement, cov: Covariance):
    """::int int :prod_i :K_i:_{xi'}:_eta f(eta) d mu_C(xi') d mu_C(eta)::_xi."""
    sig3 = f.sig.with_copies(3)
    prod = GrassmannElement.one(sig3)
    for K in kernels:
        if K.sig != sig3:
            raise ValueError("kernels must live on (xi, xi', eta)")
        prod = prod * wick(K, cov, 1)
    return _finish(prod, f, cov)


def r_wick(K: GrassmannElement, f: GrassmannElement, cov: Covariance):
    """::int int :e^{:K:_{xi'}} - 1:_eta f(eta) d mu_C(xi') d mu_C(eta)::_xi."""
    _require_even(K, "K")
    Kw = wick(K, cov, 1)
    E = Kw.exp() - ONE
    return _finish(E, f, cov)


def r_wick_series(K: GrassmannElement, f: GrassmannElement, cov: Covariance):
    """sum_l 1/l! R_C(K, ..., K)(f), stopping when the l-fold product vanishes."""
    sig3 = f.sig.with_copies(3)
    Kw = wick(K, cov, 1)
    total = GrassmannElement.zero(f.sig)
    power = GrassmannElement.one(sig3)
    fact = ONE
    l = 0
    while True:
        l += 1
        power = power * Kw
        if power.is_zero():
            return total
        fact = fact * l
        total = total + r_multilinear([K] * l, f, cov).scale(ONE / fact)


def kernel_from_interaction(U_hat: GrassmannElement):
    """K(xi, xi', eta) = U(xi + xi' + eta) - U(xi + xi')."""
    sig3 = U_hat.sig.with_copies(3)
    base = U_hat.embed(sig3, [0])
    return base.shift(0, [1, 2]) - base.shift(0, [1])


def kernel_vanishes_at_zero_eta(K: GrassmannElement) -> bool:
    cm = K.sig.copy_mask(2)
    return all(m & cm for m in K.terms)


def invert_one_minus_r_wick(K: GrassmannElement, f: GrassmannElement, cov: Covariance):
    """(1 - R_{K,C})^{-1} f."""
    K0 = K.filter(lambda m: not m & K.sig.a_mask)
    return invert_one_minus(lambda h: r_wick(K, h, cov), lambda h: r_wick(K0, h, cov), f, 0)


def omega_via_schwinger_integrand(W: GrassmannElement, cov: Covariance, t):
    """S_{tU,C}(U) with U(psi; xi) = W(psi + xi), psi in copy 0."""
    U = _strip_constant(W).extend(2).shift(0, [1])
    return schwinger_direct(U.scale(t), U, cov, copy=1)


def omega_t_derivative(W: GrassmannElement, cov: Covariance, t):
    """Both sides of d/dt Omega_C(tW) = S_{tU,C}(U) - d/dt log Z(tW) at t.

    The left side is a jet derivative and the right side is exact.
    """
    from .algebra import jet_parts
    from .scalars import Jet

    Wt = _strip_constant(W).map_coefficients(lambda c: Jet(c * t, c))
    _, lhs = jet_parts(omega(Wt, cov))
    z = partition_value(Wt, cov)
    rhs = omega_via_schwinger_integrand(W, cov, t) - z.deriv / z.value
    return lhs, rhs


def omega_via_quadrature(W: GrassmannElement, cov: Covariance, nodes: int = 40):
    """int_0^1 S_{tU,C}(U) dt - log Z by Gauss-Legendre quadrature (float)."""
    import cmath

    import numpy as np

    xs, ws = np.polynomial.legendre.leggauss(nodes)
    total = GrassmannElement.zero(W.sig)
    for x, w in zip(xs, ws):
        t = (x + 1) / 2
        val = omega_via_schwinger_integrand(W.to_float(), cov.to_float(), complex(t))
        total = total + val.scale(complex(w / 2))
    z = partition_value(W, cov)
    return total - cmath.log(complex(z))


def kill_generators(f: GrassmannElement, a_indices=(), fields=()):
    """Image under the homomorphism sending the listed generators to zero."""
    mask = 0
    for j in a_indices:
        mask |= 1 << j
    for c, i in fields:
        mask |= f.sig.bit(c, i)
    return f.filter(lambda m: not m & mask)


__all__ = [
    "omega", "rg_step", "rg_step_normalized", "partition_value", "schwinger_direct",
    "schwinger_via_r", "ROperator", "r_wick", "r_multilinear", "r_wick_series",
    "kernel_from_interaction", "invert_one_minus", "invert_one_minus_r_wick",
    "NeumannDivergenceError", "SingularOperatorError", "omega_t_derivative", "omega_via_quadrature",
]
