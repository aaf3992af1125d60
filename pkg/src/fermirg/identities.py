"""Exact identity suite on random instances.

Each check takes a random stream and a field dimension, builds a random
instance and returns True when both sides agree exactly.  A check may raise
:class:`Resample` when the instance it drew is degenerate (a singular
operator, a vanishing normalization); the runner then draws again from the
same stream.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

from .algebra import GrassmannElement, NormalizationError, Signature, jet_parts
from .contraction import cont, cont_wick_commutes, contraction_under_integral, random_tensor
from .gaussian import (generating_identity_check, integrate, integration_by_parts, laplacian, moment_wick_pair,
                       wick)
from .instances import random_covariance, random_element, rng_for
from .rg import (ROperator, SingularOperatorError, kernel_from_interaction, omega, r_wick, r_wick_series,
                 schwinger_direct, schwinger_via_r)
from .scalars import ONE, QQi

I = QQi(0, 1)


_FIXED_COV: list = [None]


def set_fixed_covariance(cov) -> None:
    """Use ``cov`` as the main covariance of every instance (None restores random draws)."""
    _FIXED_COV[0] = cov


def _cov(rng, D):
    cov = _FIXED_COV[0]
    if cov is None:
        return random_covariance(rng, D)
    if cov.dim > D:
        # checks that cap their dimension see the leading principal block
        return cov.restrict(range(D))
    if cov.dim < D:
        return random_covariance(rng, D)
    return cov


class Resample(Exception):
    """The drawn instance does not satisfy the hypotheses; draw another."""


def _sig(rng, D, copies=1):
    return Signature(rng.choice([0, 2]), D, copies)


def _el(rng, sig, n=5, deg=3, **kw):
    return random_element(rng, sig, n, max_copy_degree=deg, **kw)


def _shifted(f, sources, copies):
    """f(xi^(0) + sum_j s_j xi^(j)) on ``copies`` copies."""
    return f.extend(copies).shift(0, sources)


def _degree_part(f, copy, n):
    """Terms of degree exactly n in ``copy``."""
    cm = f.sig.copy_mask(copy)
    return f.filter(lambda m: (m & cm).bit_count() == n)


def _second_t_derivative_half(f, copy):
    """1/2 d^2/dt^2 at t = 0 of f with xi^(copy) scaled by t."""
    return _degree_part(f, copy, 2)


def _pair_sum(C1, fn):
    """sum_ij C1_ij fn(i, j) over the nonzero entries."""
    out = None
    for i in range(C1.dim):
        for j in range(C1.dim):
            c = C1.m[i][j]
            if c != 0:
                t = fn(i, j).scale(c)
                out = t if out is None else out + t
    return out


# moments and Wick ordering


def wick_moment_determinant(rng, D):
    C = _cov(rng, D)
    n = rng.randint(0, min(D, 3))
    m = n if rng.random() < 0.7 else rng.randint(0, min(D, 3))
    i_list = rng.sample(range(D), n)
    j_list = rng.sample(range(D), m)
    val, det = moment_wick_pair(i_list, j_list, C)
    return val == (det if det is not None else 0)


def wick_as_shifted_integral(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    fh = _el(rng, sig, 6, 4)
    f = wick(fh, C)
    via_i = integrate(_shifted(fh, [(1, I)], 2), C, 1)
    via_minus = integrate(_shifted(fh, [1], 2), -C, 1)
    back = integrate(_shifted(f, [1], 2), C, 1)
    f0 = f.set_zero(0)
    f0_i = integrate(fh.scale_copy(0, I), C, 0, keep_copy=True)
    f0_minus = integrate(fh, -C, 0, keep_copy=True)
    return f == via_i and f == via_minus and fh == back and f0 == f0_i and f0 == f0_minus


def wick_translation(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    fh = _el(rng, sig, 6, 4)
    f = wick(fh, C)
    fs = _shifted(f, [1], 2)
    fhs = _shifted(fh, [1], 2)
    return fs == wick(fhs, C, 0) and fs == wick(fhs, C, 1)


def wick_product_formula(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    fs = [_el(rng, sig, 4, 2) for _ in range(rng.randint(1, 3))]
    lhs = GrassmannElement.one(sig)
    inner = GrassmannElement.one(sig.with_copies(2))
    for f in fs:
        lhs = lhs * wick(f, C)
        inner = inner * wick(_shifted(f, [1], 2), C, 1)
    return lhs == wick(integrate(inner, C, 1), C)


def wick_exponential_formula(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    f = _el(rng, sig, 5, 2, parity=0, allow_constant=False)
    # remove the constant that Wick ordering creates, keeping e^{:f:} rational
    f = f - wick(f, C).z_part()
    lhs = wick(f, C).exp()
    rhs = wick(integrate(wick(_shifted(f, [1], 2), C, 1).exp(), C, 1), C)
    return lhs == rhs


def wick_product_with_extra_factor(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    fs = [_el(rng, sig, 3, 2) for _ in range(rng.randint(1, 2))]
    g = _el(rng, sig, 3, 2)
    lhs = GrassmannElement.one(sig)
    for f in fs:
        lhs = lhs * wick(f, C)
    lhs = lhs * wick(g, C)
    prod = GrassmannElement.one(sig.with_copies(3))
    for f in fs:
        prod = prod * wick(_shifted(f, [1, 2], 3), C, 1)
    body = wick(prod, C, 2) * wick(_shifted(g, [2], 3), C, 2)
    rhs = wick(integrate(integrate(body, C, 2), C, 1), C)
    return lhs == rhs


def wick_covariance_sum(rng, D):
    sig = _sig(rng, D)
    C, Dc = _cov(rng, D), random_covariance(rng, D)
    f = _el(rng, sig, 6, 4)
    return wick(f, C + Dc) == wick(wick(f, C), Dc)


def wick_covariance_sum_shifted(rng, D):
    sig = _sig(rng, D)
    C, Dc = _cov(rng, D), random_covariance(rng, D)
    f = _el(rng, sig, 5, 3)
    lhs = _shifted(wick(f, C + Dc), [1], 2)
    rhs = wick(wick(_shifted(f, [1], 2), C, 0), Dc, 1)
    return lhs == rhs


def wick_covariance_sum_prewicked(rng, D):
    sig = _sig(rng, D)
    C, Dc = _cov(rng, D), random_covariance(rng, D)
    f = _el(rng, sig, 6, 4)
    fp_i = integrate(_shifted(f, [(1, I)], 2), Dc, 1)
    fp_m = integrate(_shifted(f, [1], 2), -Dc, 1)
    lhs = wick(f, C + Dc)
    return fp_i == fp_m and lhs == wick(fp_i, C)


def wick_split_integral(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    f, g, h = (_el(rng, sig, 4, 3) for _ in range(3))
    lhs = integrate(wick(f * g, C) * h, C)
    sig2 = sig.with_copies(2)
    G = wick(g.embed(sig2, [1]), C, 1)
    H = wick(_shifted(h, [1], 2), C, 0)
    inner = integrate(G * H, C, 1)
    rhs = integrate(wick(f, C) * inner, C)
    return lhs == rhs


def integral_with_wick_of_unwick(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    f, h = _el(rng, sig, 5, 3), _el(rng, sig, 5, 3)
    lhs = integrate(f * h, C)
    rhs = integrate(f * wick(integrate(_shifted(h, [1], 2), C, 1), C), C)
    return lhs == rhs


def wick_quadratic_split(rng, D):
    sig = Signature(rng.choice([0, 2]), D, 1)
    C = _cov(rng, D)
    f = random_element(rng, sig, 5, degrees=(min(2, D),), a_degree=rng.choice([0, 2]) if sig.a else 0)
    g = _el(rng, sig, 6, 2, parity=0)
    h = _el(rng, sig, 6, 2, parity=0)
    sig2 = sig.with_copies(2)
    f1, f2 = f.embed(sig2, [0]), f.embed(sig2, [1])
    f_mix = _shifted(f, [1], 2) - f1 - f2
    lhs = integrate(wick(f, C) * wick(g * h, C), C)
    body = f_mix * wick(g.embed(sig2, [0]), C, 0) * wick(h.embed(sig2, [1]), C, 1)
    t1 = integrate(integrate(body, C, 1), C, 0)
    h0 = h.set_zero(0).drop_copy(0)
    g0 = g.set_zero(0).drop_copy(0)
    t2 = h0 * integrate(wick(f, C) * wick(g, C), C)
    t3 = g0 * integrate(wick(f, C) * wick(h, C), C)
    return lhs == t1 + t2 + t3


# derivatives along linear covariance families


def _jet_family(rng, D):
    return _cov(rng, D), random_covariance(rng, D)


def gaussian_integral_derivative(rng, D):
    sig = _sig(rng, D)
    C0, C1 = _jet_family(rng, D)
    f = _el(rng, sig, 6, 4)
    _, d = jet_parts(integrate(f, C0.jet(C1)))
    t_form = integrate(integrate(_second_t_derivative_half(_shifted(f, [1], 2), 1), C1, 1), C0, 0)
    formula = integrate(laplacian(f, C1), C0).scale(-ONE / 2)
    return d == t_form and d == formula


def wick_derivative(rng, D):
    sig = _sig(rng, D)
    C0, C1 = _jet_family(rng, D)
    f = _el(rng, sig, 6, 4)
    _, d = jet_parts(wick(f, C0.jet(C1)))
    inner = integrate(_second_t_derivative_half(_shifted(f, [1], 2), 1), -C1, 1)
    t_form = wick(inner, C0)
    formula = wick(laplacian(f, C1), C0).scale(ONE / 2)
    return d == t_form and d == formula


def exponential_integral_derivative(rng, D):
    sig = _sig(rng, D)
    C0, C1 = _jet_family(rng, D)
    f = _el(rng, sig, 5, 2, parity=0, allow_constant=False)
    e = f.exp()
    _, d = jet_parts(integrate(e, C0.jet(C1)))

    def term(i, j):
        return f.derivative(i) * f.derivative(j) + f.derivative(j).derivative(i)

    s = _pair_sum(C1, term)
    rhs = integrate(s * e, C0).scale(-ONE / 2) if s is not None else GrassmannElement.zero(d.sig)
    return d == rhs


def wick_exponential_integral_derivative(rng, D):
    sig = _sig(rng, D)
    C0, C1 = _jet_family(rng, D)
    f = _el(rng, sig, 5, 2, parity=0, allow_constant=False)
    f = f - wick(f, C0).z_part()
    _, d = jet_parts(integrate(wick(f, C0.jet(C1)).exp(), C0.jet(C1)))
    wf = wick(f, C0)
    e = wf.exp()

    def term(i, j):
        return wick(f.derivative(i), C0) * wick(f.derivative(j), C0)

    s = _pair_sum(C1, term)
    rhs = integrate(s * e, C0).scale(-ONE / 2) if s is not None else GrassmannElement.zero(d.sig)
    return d == rhs


# contractions


def _random_blocks(rng, D, r):
    while True:
        blocks = tuple(rng.randint(0, 3) for _ in range(r))
        live = [k for k, n in enumerate(blocks) if n]
        if len(live) >= 2 and sum(blocks) <= 6:
            return blocks


def contraction_keeps_antisymmetry(rng, D):
    C = _cov(rng, D)
    r = rng.choice([2, 3])
    blocks = _random_blocks(rng, D, r)
    f = random_tensor(rng, sum(blocks), D, 8).ant(blocks)
    live = [k for k, n in enumerate(blocks) if n]
    k, l = rng.sample(live, 2)
    starts = [sum(blocks[:q]) for q in range(r)]
    mu = starts[k] + rng.randint(1, blocks[k])
    nu = starts[l] + rng.randint(1, blocks[l])
    g = f.contract(mu, nu, C)
    nb = list(blocks)
    nb[k] -= 1
    nb[l] -= 1
    return g == g.ant(tuple(nb))


def contraction_slot_independence(rng, D):
    C = _cov(rng, D)
    r = rng.choice([2, 3])
    blocks = _random_blocks(rng, D, r)
    f = random_tensor(rng, sum(blocks), D, 8).ant(blocks)
    live = [k for k, n in enumerate(blocks) if n]
    k, l = rng.sample(live, 2)
    starts = [sum(blocks[:q]) for q in range(r)]
    ref = None
    for mu in range(starts[k] + 1, starts[k] + blocks[k] + 1):
        for nu in range(starts[l] + 1, starts[l] + blocks[l] + 1):
            g = f.contract(mu, nu, C)
            if ref is None:
                ref = g
            elif g != ref:
                return False
    return True


def contraction_routes_agree(rng, D):
    r = rng.choice([2, 3])
    sig = _sig(rng, D, r)
    C = _cov(rng, D)
    f = _el(rng, sig, 6, 3)
    k, l = rng.sample(range(r), 2)
    return cont(f, k, l, C, "tensor") == cont(f, k, l, C, "derivative")


def contraction_small_values(rng, D):
    D = max(D, 2)
    C = _cov(rng, D)
    sig = Signature(0, D, 2)
    j, k, l, m = (rng.randrange(D) for _ in range(4))

    def mono(*fields):
        return GrassmannElement.monomial(sig, fields)

    one = GrassmannElement.scalar(sig, ONE)
    ok = cont(mono((0, k), (1, l)), 0, 1, C) == one.scale(C.m[k][l])
    want = mono((1, m)).scale(C.m[k][l]) - mono((1, l)).scale(C.m[k][m])
    ok &= cont(mono((0, k), (1, l), (1, m)), 0, 1, C) == want
    want = (mono((0, j)).scale(C.m[k][l]) - mono((0, k)).scale(C.m[j][l])).scale(ONE / 2)
    ok &= cont(mono((0, j), (0, k), (1, l)), 0, 1, C) == want
    return ok


def contraction_commutes_with_wick(rng, D):
    sig = _sig(rng, D, 2)
    C, Cw = _cov(rng, D), random_covariance(rng, D)
    f = _el(rng, sig, 6, 3)
    lhs, rhs = cont_wick_commutes(f, C, Cw, 0, 1)
    return lhs == rhs


def contraction_under_integral_identity(rng, D):
    sig = _sig(rng, D, 3)
    C = _cov(rng, D)
    cm = sig.copy_mask(1)
    f = _el(rng, sig, 12, 2, parity=0).filter(lambda m: m & cm)
    if f.is_zero():
        f = GrassmannElement.generator(sig, rng.randrange(D), 1)
    lhs, rhs = contraction_under_integral(f, C)
    return lhs == rhs


# Gaussian integral basics and the RG map


def integration_by_parts_identity(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    g = _el(rng, sig, 6, 4)
    lhs, rhs = integration_by_parts(rng.randrange(D), g, C)
    return lhs == rhs


def generating_identities(rng, D):
    D = min(D, 4)
    C = _cov(rng, D)
    r = generating_identity_check(C)
    return r["integral"][2] and r["wick"][2]


def rg_map_normalized(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    W = _el(rng, sig, 5, 4, parity=0)
    try:
        return omega(W, C).z_part() == 0
    except NormalizationError as exc:
        raise Resample(str(exc)) from exc


def schwinger_routes_agree(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    U = _el(rng, sig, 4, 4, parity=0, allow_constant=False)
    f = _el(rng, sig, 5, 4)
    try:
        return schwinger_direct(U, f, C) == schwinger_via_r(U, f, C)
    except (SingularOperatorError, NormalizationError) as exc:
        raise Resample(str(exc)) from exc


def r_operator_from_kernel(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    Uh = _el(rng, sig, 4, 4, parity=0, allow_constant=False)
    f = _el(rng, sig, 5, 4)
    K = kernel_from_interaction(Uh)
    return ROperator(wick(Uh, C), C)(f) == r_wick(K, f, C)


def r_operator_series(rng, D):
    sig = _sig(rng, D)
    C = _cov(rng, D)
    sig3 = sig.with_copies(3)
    K = _el(rng, sig3, 10, 2, parity=0).filter(lambda m: m & sig3.copy_mask(2))
    f = _el(rng, sig, 8, 2)
    return r_wick(K, f, C) == r_wick_series(K, f, C)


IDENTITIES = {
    "wick_moment_determinant": wick_moment_determinant,
    "wick_as_shifted_integral": wick_as_shifted_integral,
    "wick_translation": wick_translation,
    "wick_product_formula": wick_product_formula,
    "wick_exponential_formula": wick_exponential_formula,
    "wick_product_with_extra_factor": wick_product_with_extra_factor,
    "wick_covariance_sum": wick_covariance_sum,
    "wick_covariance_sum_shifted": wick_covariance_sum_shifted,
    "wick_covariance_sum_prewicked": wick_covariance_sum_prewicked,
    "wick_split_integral": wick_split_integral,
    "integral_with_wick_of_unwick": integral_with_wick_of_unwick,
    "wick_quadratic_split": wick_quadratic_split,
    "gaussian_integral_derivative": gaussian_integral_derivative,
    "wick_derivative": wick_derivative,
    "exponential_integral_derivative": exponential_integral_derivative,
    "wick_exponential_integral_derivative": wick_exponential_integral_derivative,
    "contraction_keeps_antisymmetry": contraction_keeps_antisymmetry,
    "contraction_slot_independence": contraction_slot_independence,
    "contraction_routes_agree": contraction_routes_agree,
    "contraction_small_values": contraction_small_values,
    "contraction_commutes_with_wick": contraction_commutes_with_wick,
    "contraction_under_integral": contraction_under_integral_identity,
    "integration_by_parts": integration_by_parts_identity,
    "generating_identities": generating_identities,
    "rg_map_normalized": rg_map_normalized,
}

OPERATOR_IDENTITIES = {
    "schwinger_routes_agree": schwinger_routes_agree,
    "r_operator_from_kernel": r_operator_from_kernel,
    "r_operator_series": r_operator_series,
}

ALL_IDENTITIES = {**IDENTITIES, **OPERATOR_IDENTITIES}


def instance_dims(name: str, dim: int, count: int) -> list:
    """Field dimension of each instance: cycles 2..dim (even sizes for operator checks)."""
    if dim <= 0:
        return []
    if _FIXED_COV[0] is not None:
        return [_FIXED_COV[0].dim] * count
    if name in OPERATOR_IDENTITIES:
        pool = [d for d in (2, 4, 6) if d <= dim] or [dim]
    else:
        pool = list(range(min(2, dim), dim + 1))
    return [pool[k % len(pool)] for k in range(count)]


def run_identity(name: str, seed: int, dim: int, count: int, max_resamples: int = 20) -> dict:
    """Record {"check", "instances", "passed", "failed", "resampled", "holds"} for one identity."""
    fn = ALL_IDENTITIES[name]
    failed, resampled, passed = [], 0, 0
    dims = instance_dims(name, dim, count)
    for k, D in enumerate(dims):
        rng = rng_for(seed, "identity", name, k)
        for _ in range(max_resamples):
            try:
                ok = fn(rng, D)
                break
            except Resample:
                resampled += 1
        else:
            ok = False
        if ok:
            passed += 1
        else:
            failed.append(k)
    return {"check": name, "kind": "identity", "dim": dim, "instances": len(dims), "passed": passed,
            "failed": failed, "resampled": resampled, "holds": not failed}


def _run_packed(args):
    *args, cov = args
    set_fixed_covariance(cov)
    return run_identity(*args)


def run_identities(seed: int, dim: int, count: int, names=None, jobs: int = 1, covariance=None) -> list:
    """Records for every identity, in registry order regardless of ``jobs``.

    With ``covariance`` every instance uses it as the main covariance and
    its dimension replaces ``dim``.
    """
    names = list(ALL_IDENTITIES) if names is None else list(names)
    if covariance is not None:
        dim = covariance.dim
    tasks = [(n, seed, dim, count, covariance) for n in names]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_run_packed, tasks))
    return [_run_packed(t) for t in tasks]


__all__ = ["IDENTITIES", "OPERATOR_IDENTITIES", "ALL_IDENTITIES", "Resample", "run_identity",
           "run_identities", "instance_dims", "set_fixed_covariance"]
