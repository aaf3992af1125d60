"""Numerical certification of the norm estimates on random instances.

Every certificate takes a random stream and ``alpha`` and returns a list of
records ``{"name", "lhs", "rhs", "holds", "margin", ...}``.  Left sides are
computed exactly; the norms and right sides are floats in the norm domain.
Interactions are shrunk until the stated smallness condition holds, and
the number of halvings is reported as ``"halvings"``.
"""

from __future__ import annotations

import math

from .algebra import GrassmannElement, NormalizationError, Signature, jet_parts, make_jet
from .contraction import cont, integrate_leading_slots, random_tensor, tensor_product
from .fock import FockSetup
from .gaussian import Covariance, integrate, minimal_integral_bound, unwick, wick
from .instances import anneal, random_element, random_interaction, random_mask
from .instances import random_covariance as _plain_covariance
from .instances import random_nonzero_covariance as _plain_nonzero_covariance
from .norms import NormElement, NormParams, SeminormFamily, big_n, check_record, contraction_bound, inverse_one_minus
from .rg import (SingularOperatorError, invert_one_minus_r_wick, omega, r_multilinear, r_wick, rg_step,
                 rg_step_normalized, schwinger_direct)
from .scalars import ONE, random_rational


# Where covariances and their integral bounds come from: "given" draws random
# covariances and uses the minimal moment bound, "fock" draws Gram covariances
# of random Fock setups and uses b = 2 sup_i ||w_i||.
_B_MODE = "given"


def set_b_mode(mode: str) -> None:
    global _B_MODE
    if mode not in ("given", "fock"):
        raise ValueError(f"unknown b mode {mode!r}")
    _B_MODE = mode


def fock_covariance(rng, dim: int, nonzero: bool = False) -> Covariance:
    """Case-i covariance of a random Fock setup, carrying b = 2S as ``integral_bound``."""
    for _ in range(100):
        setup = FockSetup.random(rng, rng.randint(1, 3), dim)
        C = setup.covariance("i")
        if not nonzero or dim < 2 or any(x != 0 for r in C.m for x in r):
            break
    C.integral_bound = 2 * setup.S
    return C


def random_covariance(rng, dim: int) -> Covariance:
    if _B_MODE == "fock":
        return fock_covariance(rng, dim)
    return _plain_covariance(rng, dim)


def random_nonzero_covariance(rng, dim: int) -> Covariance:
    if _B_MODE == "fock":
        return fock_covariance(rng, dim, nonzero=True)
    return _plain_nonzero_covariance(rng, dim)


def integral_bound(C: Covariance) -> float:
    """The integral bound attached to C, else the smallest one."""
    b = getattr(C, "integral_bound", None)
    return minimal_integral_bound(C) if b is None else b


def _positive(x: float) -> float:
    return x if x > 0 else 1.0


def make_params(C: Covariance, alpha: float, b: float | None = None, c: float | None = None) -> NormParams:
    """Norm parameters with contraction bound max row sum and the minimal moment integral bound."""
    cb = _positive(contraction_bound(C)) if c is None else c
    bb = _positive(integral_bound(C)) if b is None else b
    return NormParams(alpha, bb, cb, SeminormFamily())


def _sig(rng, dim: int, copies: int = 1) -> Signature:
    return Signature(rng.choice([0, 2]), dim, copies)


def _const(x: float) -> NormElement:
    return NormElement.constant(float(x), 0)


def _seminorm(f: GrassmannElement) -> NormElement:
    return SeminormFamily().norm(f)


# main renormalization group bounds


def _gate_failed(name: str, alpha: float, value: float, limit: float) -> dict:
    return {"name": name, "precondition_skipped": True, "holds": True, "alpha": alpha,
            "reason": f"smallness condition fails: {value} >= {limit}"}


def rg_map_check(W: GrassmannElement, C: Covariance, p: NormParams) -> dict:
    """N(Omega_C(:W:) - W; a) <= 2/a^2 N(W;8a)^2 / (1 - 4/a^2 N(W;8a)) when N(W;8a) < a^2/4."""
    alpha = p.alpha
    a = alpha ** 2 / 4
    X = big_n(W, p, 8 * alpha)
    if not X.const < a:
        return _gate_failed("rg_map_bound", alpha, X.const, a)
    lhs = big_n(rg_step(W, C) - W, p)
    rhs = X * X * inverse_one_minus(a, X) * (2 / alpha ** 2 * a)
    return check_record("rg_map_bound", lhs, rhs, alpha=alpha)


def rg_map_output_covariance_check(W: GrassmannElement, C: Covariance, D: Covariance, p: NormParams) -> dict:
    """W' with :W':_D = Omega_C(:W:_{C+D}) obeys N(W'-W; a) <= X^2/(2a^2) / (1 - X/a^2), X = N(W; 32a)."""
    alpha = p.alpha
    a2 = alpha ** 2
    X = big_n(W, p, 32 * alpha)
    if not X.const < a2:
        return _gate_failed("rg_map_output_covariance_bound", alpha, X.const, a2)
    lhs = big_n(rg_step(W, C, D) - W, p)
    rhs = X * X * inverse_one_minus(a2, X) * 0.5
    return check_record("rg_map_output_covariance_bound", lhs, rhs, alpha=alpha)


def rg_map_bound(rng, alpha: float, dim: int = 4) -> list:
    """Gated random instance of :func:`rg_map_check`."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha)
    W = random_interaction(rng, sig)
    W, k = anneal(W, lambda w: big_n(w, p, 8 * alpha).const < alpha ** 2 / 4)
    rec = rg_map_check(W, C, p)
    rec["halvings"] = k
    return [rec]


def rg_map_output_covariance_bound(rng, alpha: float, dim: int = 4) -> list:
    """Gated random instance of :func:`rg_map_output_covariance_check`.

    Also records that the variant normalized by the D-integral differs
    from W' by a constant.
    """
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    D = random_nonzero_covariance(rng, dim)
    b = max(integral_bound(C), integral_bound(D))
    p = make_params(C, alpha, b=_positive(b))
    W = random_interaction(rng, sig)
    W, k = anneal(W, lambda w: big_n(w, p, 32 * alpha).const < alpha ** 2)
    rec = rg_map_output_covariance_check(W, C, D, p)
    rec["halvings"] = k
    Wp = rg_step(W, C, D)
    recs = [rec]
    Wpp, _ = rg_step_normalized(W, C, D)
    diff = Wpp - Wp.to_float()
    dev = max((abs(complex(c)) for m, c in diff.terms.items() if m), default=0.0)
    scale = max((abs(complex(c)) for c in Wp.terms.values()), default=1.0)
    recs.append(check_record("normalized_variant_constant_shift", dev, 1e-9 * max(scale, 1.0),
                             alpha=alpha, z_of_normalized=abs(complex(Wpp.z_part()))))
    return recs


# contraction and integral bounds


def contraction_product_bound(rng, alpha: float, dim: int = 4) -> list:
    """||cont_{xi''->xi'''} f1 f2|| <= n2 c ||f1|| ||f2|| for homogeneous f1(xi', xi''), f2(xi', xi''')."""
    sig = Signature(rng.choice([0, 2]), dim, 3)
    C = random_covariance(rng, dim)
    c = contraction_bound(C)
    n0, n1 = rng.randint(0, 2), rng.randint(1, dim)
    m0, n2 = rng.randint(0, 2), rng.randint(1, dim)
    f1 = random_element(rng, sig, 5, degrees=(n0, n1, 0), a_degree=rng.randint(0, sig.a))
    f2 = random_element(rng, sig, 5, degrees=(m0, 0, n2), a_degree=rng.randint(0, sig.a))
    lhs = _seminorm(cont(f1 * f2, 1, 2, C))
    rhs = _seminorm(f1) * _seminorm(f2) * (n2 * c)
    return [check_record("contraction_product_bound", lhs, rhs, alpha=alpha)]


def _diagonal_integral(f: GrassmannElement, C: Covariance, s: int, t: int) -> GrassmannElement:
    g = wick(f, C, tuple(range(s))) if s else f
    for k in range(t - 1, 0, -1):
        g = g.diagonal(0, k)
    return integrate(g, C, 0)


def integral_diagonal_bound(rng, alpha: float, dim: int = 4) -> list:
    """||int :f:_{first s copies}(xi,...,xi, rest) d mu_C|| <= b^(n_1+...+n_t) ||f|| for homogeneous f."""
    r = 3
    sig = Signature(rng.choice([0, 2]), dim, r)
    C = random_nonzero_covariance(rng, dim)
    b = integral_bound(C)
    t = rng.randint(1, r)
    s = rng.randint(0, t)
    ns = [rng.randint(0, 2) for _ in range(r)]
    if sum(ns[:t]) % 2:
        # odd total degree in the integrated variables gives zero
        ns[rng.randrange(t)] ^= 1
    ns = tuple(ns)
    f = random_element(rng, sig, 10, degrees=ns, a_degree=rng.randint(0, sig.a))
    lhs = _seminorm(_diagonal_integral(f, C, s, t))
    rhs = _seminorm(f) * (b ** sum(ns[:t]))
    return [check_record("integral_diagonal_bound", lhs, rhs, alpha=alpha, s=s, t=t)]


def covariance_combination_bounds(rng, alpha: float, dim: int = 4) -> list:
    """Bounds for l1 C1 + l2 C2 from those of C1 and C2."""
    C1 = random_covariance(rng, dim)
    C2 = random_covariance(rng, dim)
    l1 = random_rational(rng, nonzero=True)
    l2 = random_rational(rng, nonzero=True)
    comb = C1.scale(l1) + C2.scale(l2)
    a1, a2 = abs(float(l1)), abs(float(l2))
    recs = [
        check_record("combination_contraction_bound", contraction_bound(comb),
                     a1 * contraction_bound(C1) + a2 * contraction_bound(C2), alpha=alpha),
        check_record("combination_integral_bound", integral_bound(comb),
                     math.sqrt(a1) * integral_bound(C1) + math.sqrt(a2) * integral_bound(C2),
                     alpha=alpha),
    ]
    return recs


def sampled_bound_definitions(rng, alpha: float, dim: int = 4) -> list:
    """Sample the defining inequalities of contraction and integral bounds on random tensors."""
    C = random_covariance(rng, dim)
    c = contraction_bound(C)
    b = integral_bound(C)
    n, n2 = rng.randint(1, 3), rng.randint(1, 3)
    f = random_tensor(rng, n, dim)
    g = random_tensor(rng, n2, dim)
    fg = tensor_product(f, g)
    worst = None
    for i in range(1, n + 1):
        for j in range(1, n2 + 1):
            rec = check_record("sampled_contraction_bound", fg.contract(i, n + j, C).l1_linf(),
                               c * f.l1_linf() * g.l1_linf(), alpha=alpha)
            if worst is None or rec["margin"] < worst["margin"]:
                worst = rec
    recs = [worst]
    rank = rng.randint(1, 4)
    h = random_tensor(rng, rank, dim, 10)
    k = rng.randint(0, rank)
    recs.append(check_record("sampled_integral_bound", integrate_leading_slots(h, k, C).l1_linf(),
                             (b / 2) ** k * h.l1_linf(), alpha=alpha, slots=k))
    return recs


def integral_shrinking_bound(rng, alpha: float, dim: int = 4) -> list:
    """N(int :f:(xi..xi, rest) d mu_C; a) <= N(f; a), and <= eps^2/a^2 N(f; a) when f vanishes at zero."""
    r = rng.choice([2, 3])
    sig = Signature(rng.choice([0, 2]), dim, r)
    C = random_nonzero_covariance(rng, dim)
    eps = alpha * rng.choice([1, 0.5, 0.25])
    p = make_params(C, alpha, b=integral_bound(C) / eps)
    t = rng.randint(1, r)
    s = rng.randint(0, t)
    f = random_element(rng, sig, 8)
    lhs = big_n(_diagonal_integral(f, C, s, t), p)
    recs = [check_record("integral_shrinking_bound", lhs, big_n(f, p), alpha=alpha, s=s, t=t)]
    lead = 0
    for k in range(t):
        lead |= sig.copy_mask(k)
    f0 = f.filter(lambda m: m & lead)
    lhs0 = big_n(_diagonal_integral(f0, C, s, t), p)
    recs.append(check_record("integral_shrinking_bound_vanishing", lhs0, big_n(f0, p) * (eps ** 2 / alpha ** 2),
                             alpha=alpha, s=s, t=t))
    return recs


def wick_norm_bounds(rng, alpha: float, dim: int = 4) -> list:
    """N(:f:; a) <= N(f; 2a) and N(f; a) <= N(:f:; 2a) when a*b is an integral bound."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha, b=integral_bound(C) / alpha)
    f = random_element(rng, sig, 8)
    wf = wick(f, C)
    return [
        check_record("wick_norm_bound", big_n(wf, p), big_n(f, p, 2 * alpha), alpha=alpha),
        check_record("unwick_norm_bound", big_n(f, p), big_n(wf, p, 2 * alpha), alpha=alpha),
    ]


def wick_change_bound(rng, alpha: float, dim: int = 4) -> list:
    """:f:_{C2} = :f':_{C1} gives N(f' - f; a) <= 2 eps^2/a^2 N(f; 2a)."""
    sig = _sig(rng, dim)
    C1 = random_covariance(rng, dim)
    C2 = random_covariance(rng, dim)
    eps = alpha / math.sqrt(2) * rng.choice([1, 0.5])
    p = make_params(C1, alpha, b=_positive(integral_bound(C1 - C2) / eps))
    f = random_element(rng, sig, 8)
    fp = unwick(wick(f, C2), C1)
    return [check_record("wick_change_bound", big_n(fp - f, p), big_n(f, p, 2 * alpha) * (2 * eps ** 2 / alpha ** 2),
                         alpha=alpha)]


def wick_derivative_bound(rng, alpha: float, dim: int = 4) -> list:
    """:f_k:_{C_k} = f gives N(df/dk; a) <= (b'/b)^2/(a-1)^2 N(f; 2a)."""
    sig = _sig(rng, dim)
    C0 = random_nonzero_covariance(rng, dim)
    C1 = random_covariance(rng, dim)
    b = integral_bound(C0)
    b1 = integral_bound(C1)
    p = make_params(C0, alpha, b=b)
    f = random_element(rng, sig, 8)
    _, df = jet_parts(unwick(f, C0.jet(C1)))
    rhs = big_n(f, p, 2 * alpha) * ((b1 / b) ** 2 / (alpha - 1) ** 2)
    return [check_record("wick_derivative_bound", big_n(df, p), rhs, alpha=alpha)]


def wick_product_integral_bounds(rng, alpha: float, dim: int = 4) -> list:
    """Both bounds on int :prod f_i:_{1..s} :f:_{1..s} prod d mu_C(xi^(i)) for alpha >= 2."""
    if alpha < 2:
        return [{"name": "wick_product_integral_bound", "precondition_skipped": True, "reason": "alpha < 2",
                 "holds": True, "alpha": alpha}]
    r = 2
    s = rng.randint(1, r)
    sig = Signature(rng.choice([0, 2]), dim, r)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha)
    ell = rng.randint(1, 2)
    fs = []
    for _ in range(ell):
        j = rng.randrange(s)
        cm = sig.copy_mask(j)
        fs.append(random_element(rng, sig, 8, max_copy_degree=2).filter(lambda m, cm=cm: m & cm))
    f = random_element(rng, sig, 8, max_copy_degree=2)
    copies = tuple(range(s))
    prod = GrassmannElement.one(sig)
    for fi in fs:
        prod = prod * fi
    g = wick(prod, C, copies) * wick(f, C, copies)
    for _ in range(s):
        g = integrate(g, C, 0)
    lhs = big_n(g, p)
    base = big_n(f, p)
    for fi in fs:
        base = base * big_n(fi, p)
    return [
        check_record("wick_product_integral_bound_factorial", lhs, base * (math.factorial(ell) / alpha ** ell),
                     alpha=alpha, ell=ell, s=s),
        check_record("wick_product_integral_bound_power", lhs, base * (ell ** ell / alpha ** (2 * ell)),
                     alpha=alpha, ell=ell, s=s),
    ]


# operators built from kernels K(xi, xi', eta)


def random_kernel(rng, sig1: Signature, nterms: int = 5) -> GrassmannElement:
    """Even kernel on (xi, xi', eta) vanishing at eta = 0."""
    sig3 = sig1.with_copies(3)
    K = random_element(rng, sig3, nterms, parity=0, max_copy_degree=2)
    cm = sig3.copy_mask(2)
    return K.filter(lambda m: m & cm)


def _matched_kernels(rng, sig1: Signature, ell: int, n: int, nterms: int = 6) -> list:
    """ell even kernels whose eta-degrees add up to n, so that R(K_1..K_ell) sees all of f."""
    sig3 = sig1.with_copies(3)
    cuts = sorted(rng.sample(range(1, n), ell - 1))
    etas = [q - p for p, q in zip([0] + cuts, cuts + [n])]
    Ks = []
    for e in etas:
        terms: dict = {}
        for _ in range(nterms):
            x = rng.randint(0, 2)
            if (x + e) % 2:
                x = x + 1 if x < 2 else x - 1
            degs = (min(x, sig1.v), 0, e)
            a = 0 if sig1.a == 0 else rng.choice([0, 2])
            m = random_mask(rng, sig3, degs, a, 0)
            if m.bit_count() % 2:
                continue
            terms[m] = terms.get(m, 0) + random_rational(rng, nonzero=True)
        Ks.append(GrassmannElement(sig3, terms))
    return Ks


def multilinear_r_bounds(rng, alpha: float, dim: int = 4) -> list:
    """1/l! R_C(K1..Kl)(:f:) = :f': obeys both multilinear bounds."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha)
    ell = rng.randint(1, 3)
    Ks = [random_kernel(rng, sig, 8) for _ in range(ell)]
    nK = _const(1.0)
    for K in Ks:
        nK = nK * big_n(K, p)
    n = rng.randint(0, ell - 1) if rng.random() < 0.25 else rng.randint(ell, dim)
    if n >= ell:
        Ks = _matched_kernels(rng, sig, ell, n)
        nK = _const(1.0)
        for K in Ks:
            nK = nK * big_n(K, p)
    f = random_element(rng, sig, 6, degrees=(n,), a_degree=rng.randint(0, sig.a))
    fp = unwick(r_multilinear(Ks, wick(f, C), C), C).scale(ONE / math.factorial(ell))
    recs = []
    if ell > n:
        recs.append(check_record("multilinear_r_vanishes", float(len(fp.terms)), 0.0, alpha=alpha, ell=ell, n=n))
    rhs = big_n(f, p) * nK * (math.comb(n, ell) / alpha ** (2 * n))
    recs.append(check_record("multilinear_r_bound_homogeneous", big_n(fp, p), rhs, alpha=alpha, ell=ell, n=n))
    if alpha >= 2:
        g = random_element(rng, sig, 8)
        gp = unwick(r_multilinear(Ks, wick(g, C), C), C).scale(ONE / math.factorial(ell))
        recs.append(check_record("multilinear_r_bound", big_n(gp, p), big_n(g, p) * nK / alpha ** ell,
                                 alpha=alpha, ell=ell))
    return recs


def r_series_bound(rng, alpha: float, dim: int = 4) -> list:
    """:f': = R_{K,C}(:f:) obeys N(f') <= 2/a^2 N(K)/(1 - 2N(K)/a^2) N(f)."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha)
    a = alpha ** 2 / 2
    K, k = anneal(random_kernel(rng, sig, 8), lambda x: big_n(x, p).const < a)
    f = random_element(rng, sig, 8)
    fp = unwick(r_wick(K, wick(f, C), C), C)
    nK = big_n(K, p)
    rhs = nK * inverse_one_minus(a, nK) * big_n(f, p)
    return [check_record("r_series_bound", big_n(fp, p), rhs, alpha=alpha, halvings=k)]


def resolvent_bound(rng, alpha: float, dim: int = 4) -> list:
    """:f': = (1 - R_{K,C})^{-1}(:f:) - :f: obeys N(f') <= 2/a^2 N(K)/(1 - 4N(K)/a^2) N(f)."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha)
    a = alpha ** 2 / 4
    K, k = anneal(random_kernel(rng, sig, 8), lambda x: big_n(x, p).const < a)
    f = random_element(rng, sig, 8)
    wf = wick(f, C)
    fp = unwick(invert_one_minus_r_wick(K, wf, C) - wf, C)
    nK = big_n(K, p)
    rhs = nK * inverse_one_minus(a, nK) * big_n(f, p) * 0.5
    return [check_record("resolvent_bound", big_n(fp, p), rhs, alpha=alpha, halvings=k)]


def schwinger_bound(rng, alpha: float, dim: int = 4) -> list:
    """N(S_{:U:,C}(:f:) - f(0); a) <= 2/a^2 N(U;4a)/(1 - 4N(U;4a)/a^2) N(f)."""
    sig = Signature(2, dim)
    C = random_nonzero_covariance(rng, dim)
    p = make_params(C, alpha)
    a = alpha ** 2 / 4
    U, k = anneal(random_interaction(rng, sig), lambda x: big_n(x, p, 4 * alpha).const < a)
    f = random_element(rng, sig, 8)
    S = schwinger_direct(wick(U, C), wick(f, C), C)
    f0 = f.set_zero(0).drop_copy(0)
    X = big_n(U, p, 4 * alpha)
    rhs = X * inverse_one_minus(a, X) * big_n(f, p) * 0.5
    return [check_record("schwinger_bound", big_n(S - f0, p), rhs, alpha=alpha, halvings=k)]


# first-order derivatives along linear families


def _jet_cov(C0: Covariance, C1: Covariance | None) -> Covariance:
    return C0.jet(C1 if C1 is not None else Covariance.zeros(C0.dim))


def _deriv(el: GrassmannElement) -> GrassmannElement:
    return jet_parts(el)[1]


def _mu_params(C: Covariance, alpha: float, b: float):
    p = make_params(C, alpha, b=_positive(b))
    mu = p.c.const  # c <= c^2/mu holds with equality
    return p, mu


def rg_derivative_bound(rng, alpha: float, dim: int = 4) -> list:
    """Joint derivative in W, C and D of W~ with :W~_k:_{D_k} = Omega_{C_k}(:W_k:_{C_k+D_k})."""
    sig = _sig(rng, dim)
    C0, C1 = random_nonzero_covariance(rng, dim), random_covariance(rng, dim)
    D0, D1 = random_nonzero_covariance(rng, dim), random_covariance(rng, dim)
    b = 2 * max(integral_bound(C0), integral_bound(D0))
    b1 = 2 * integral_bound(D1)
    p, mu = _mu_params(C0, alpha, b)
    c1 = contraction_bound(C1)
    a2 = alpha ** 2
    W0, k = anneal(random_interaction(rng, sig), lambda w: big_n(w, p, 32 * alpha).const < a2)
    W1 = random_interaction(rng, sig)
    Ck, Dk = C0.jet(C1), D0.jet(D1)
    Wk = make_jet(W0, W1)
    dW = _deriv(rg_step(Wk, Ck, Dk)) - W1
    X = big_n(W0, p, 32 * alpha)
    inv = inverse_one_minus(a2, X) * a2
    rhs = X * inv * big_n(W1, p, 8 * alpha) / (2 * a2) \
        + X * X * inv * (c1 / (4 * mu) + (b1 / p.b) ** 2) / (2 * a2)
    return [check_record("rg_derivative_bound", big_n(dW, p), rhs, alpha=alpha, halvings=k)]


def interaction_derivative_bounds(rng, alpha: float, dim: int = 4) -> list:
    """Derivative in W alone, without and with an output covariance D."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    D = random_nonzero_covariance(rng, dim)
    recs = []
    p = make_params(C, alpha)
    a = alpha ** 2 / 4
    W0, k = anneal(random_interaction(rng, sig), lambda w: big_n(w, p, 8 * alpha).const < a)
    W1 = random_interaction(rng, sig)
    dW = _deriv(rg_step(make_jet(W0, W1), C)) - W1
    X = big_n(W0, p, 8 * alpha)
    rhs = X * inverse_one_minus(a, X) * big_n(W1, p, 2 * alpha) * (2 / alpha ** 2 * a)
    recs.append(check_record("interaction_derivative_bound", big_n(dW, p), rhs, alpha=alpha, halvings=k))

    b = max(integral_bound(C), integral_bound(D))
    p = make_params(C, alpha, b=_positive(b))
    a2 = alpha ** 2
    W0, k = anneal(W0, lambda w: big_n(w, p, 32 * alpha).const < a2)
    dW = _deriv(rg_step(make_jet(W0, W1), C, D)) - W1
    X = big_n(W0, p, 32 * alpha)
    rhs = X * inverse_one_minus(a2, X) * big_n(W1, p, 8 * alpha) * 0.5
    recs.append(check_record("interaction_derivative_bound_output_covariance", big_n(dW, p), rhs,
                             alpha=alpha, halvings=k))
    return recs


def derivative_pairing_bound(rng, alpha: float, dim: int = 4) -> list:
    """N(sum df/dxi_i C'_ij dg/dxi_j; a) <= c'/(mu a^2) N(f; 2a) N(g; 2a)."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    C1 = random_covariance(rng, dim)
    p, mu = _mu_params(C, alpha, integral_bound(C))
    f = random_element(rng, sig, 5)
    g = random_element(rng, sig, 5)
    acc = GrassmannElement.zero(sig)
    for i in range(dim):
        fi = f.derivative(i)
        if fi.is_zero():
            continue
        for j in range(dim):
            if C1.m[i][j] != 0:
                acc = acc + (fi * g.derivative(j)).scale(C1.m[i][j])
    rhs = big_n(f, p, 2 * alpha) * big_n(g, p, 2 * alpha) * (contraction_bound(C1) / (mu * alpha ** 2))
    return [check_record("derivative_pairing_bound", big_n(acc, p), rhs, alpha=alpha)]


def covariance_derivative_bounds(rng, alpha: float, dim: int = 4) -> list:
    """Derivative in the integration covariance C_k, without and with an output covariance D."""
    sig = _sig(rng, dim)
    C0, C1 = random_nonzero_covariance(rng, dim), random_covariance(rng, dim)
    D = random_nonzero_covariance(rng, dim)
    c1 = contraction_bound(C1)
    Ck = C0.jet(C1)
    recs = []
    p, mu = _mu_params(C0, alpha, integral_bound(C0))
    a = alpha ** 2 / 4
    W, k = anneal(random_interaction(rng, sig), lambda w: big_n(w, p, 8 * alpha).const < a)
    dW = _deriv(omega(wick(make_jet(W), Ck), Ck))
    X = big_n(W, p, 8 * alpha)
    rhs = X * X * inverse_one_minus(a, X) * (a * c1 / (2 * alpha ** 2 * mu))
    recs.append(check_record("covariance_derivative_bound", big_n(dW, p), rhs, alpha=alpha, halvings=k))

    b = max(integral_bound(C0), integral_bound(D))
    p, mu = _mu_params(C0, alpha, b)
    a2 = alpha ** 2
    W, k = anneal(W, lambda w: big_n(w, p, 32 * alpha).const < a2)
    Dj = _jet_cov(D, None)
    dW = _deriv(unwick(omega(wick(make_jet(W), Ck + Dj), Ck), Dj))
    X = big_n(W, p, 32 * alpha)
    rhs = X * X * inverse_one_minus(a2, X) * (c1 / (8 * mu))
    recs.append(check_record("covariance_derivative_bound_output_covariance", big_n(dW, p), rhs,
                             alpha=alpha, halvings=k))
    return recs


def output_covariance_derivative_bound(rng, alpha: float, dim: int = 4) -> list:
    """Derivative in D_k of W~ with :W~_k:_{D_k} = Omega_C(:W:_{C+D_k})."""
    sig = _sig(rng, dim)
    C = random_nonzero_covariance(rng, dim)
    D0, D1 = random_nonzero_covariance(rng, dim), random_covariance(rng, dim)
    b = 2 * max(integral_bound(C), integral_bound(D0))
    b1 = 2 * integral_bound(D1)
    p = make_params(C, alpha, b=_positive(b))
    a2 = alpha ** 2
    W, k = anneal(random_interaction(rng, sig), lambda w: big_n(w, p, 32 * alpha).const < a2)
    dW = _deriv(rg_step(make_jet(W), _jet_cov(C, None), D0.jet(D1)))
    X = big_n(W, p, 32 * alpha)
    rhs = X * X * inverse_one_minus(a2, X) * ((b1 / p.b) ** 2 / 2)
    return [check_record("output_covariance_derivative_bound", big_n(dW, p), rhs, alpha=alpha, halvings=k)]


def gaussian_derivative_formula(rng, alpha: float, dim: int = 4) -> list:
    """Jet derivative of int f d mu_{C0 + k C1} equals the second-derivative formula exactly."""
    from .gaussian import gaussian_derivative_jet

    sig = _sig(rng, dim)
    f = random_element(rng, sig, 8)
    d, formula = gaussian_derivative_jet(f, random_covariance(rng, dim), random_covariance(rng, dim))
    ok = d == formula
    return [{"name": "gaussian_derivative_formula", "lhs": 0.0, "rhs": 0.0, "holds": ok, "margin": 0.0,
             "alpha": alpha}]


BOUND_CERTIFICATES = {
    "rg_map_bound": rg_map_bound,
    "rg_map_output_covariance_bound": rg_map_output_covariance_bound,
    "contraction_product_bound": contraction_product_bound,
    "integral_diagonal_bound": integral_diagonal_bound,
    "covariance_combination_bounds": covariance_combination_bounds,
    "sampled_bound_definitions": sampled_bound_definitions,
    "integral_shrinking_bound": integral_shrinking_bound,
    "wick_norm_bounds": wick_norm_bounds,
    "wick_change_bound": wick_change_bound,
    "wick_derivative_bound": wick_derivative_bound,
    "wick_product_integral_bounds": wick_product_integral_bounds,
    "multilinear_r_bounds": multilinear_r_bounds,
    "r_series_bound": r_series_bound,
    "resolvent_bound": resolvent_bound,
    "schwinger_bound": schwinger_bound,
}

DERIVATIVE_CERTIFICATES = {
    "rg_derivative_bound": rg_derivative_bound,
    "interaction_derivative_bounds": interaction_derivative_bounds,
    "derivative_pairing_bound": derivative_pairing_bound,
    "covariance_derivative_bounds": covariance_derivative_bounds,
    "output_covariance_derivative_bound": output_covariance_derivative_bound,
    "gaussian_derivative_formula": gaussian_derivative_formula,
}

RESAMPLE_ERRORS = (SingularOperatorError, NormalizationError)


def run_certificate(fn, rng, alpha: float, dim: int = 4, attempts: int = 20) -> list:
    """Run one certificate, drawing a fresh instance when the exact inverse or log does not exist."""
    last = None
    for attempt in range(attempts):
        try:
            recs = fn(rng, alpha, dim)
        except RESAMPLE_ERRORS as exc:
            last = exc
            continue
        for r in recs:
            r.setdefault("resampled", attempt)
        return recs
    raise RuntimeError(f"no admissible instance after {attempts} draws: {last}")
