"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]`` or ``[FAIL]`` line with the measured
numbers before asserting.
"""

import random
import time

import numpy as np
import pytest

from conftest import matching_pfaffian
from fermirg.certify import BOUND_CERTIFICATES, DERIVATIVE_CERTIFICATES, run_certificate, set_b_mode
from fermirg.cli import main, strip_timestamps
from fermirg.fock import FockSetup, gram_bound_check, vev_moment_sweep
from fermirg.identities import IDENTITIES, OPERATOR_IDENTITIES, instance_dims, run_identities
from fermirg.instances import rng_for
from fermirg.norms import INF, NormElement, inverse_one_minus
from fermirg.pfaffian import pfaffian
from fermirg.scalars import QQi, random_rational
from test_norms import one_minus_times_inverse, random_norm_element


@pytest.fixture
def report(capsys):
    def emit(n, ok, text):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}")
        assert ok, text
    return emit


def _failures(records):
    return [r for r in records if not r["holds"]]


def test_criterion_1_identity_suite(report):
    t0 = time.time()
    recs = run_identities(seed=1, dim=6, count=100, names=list(IDENTITIES))
    dt = time.time() - t0
    bad = _failures(recs)
    few = [r["check"] for r in recs if r["instances"] < 100]
    ok = not bad and not few and dt <= 300
    report(1, ok, f"{len(recs)} identities x 100 instances at D<=6, {len(bad)} failing, "
                  f"{len(few)} short, {dt:.1f}s (limit 300s)")


def test_criterion_2_operator_identities(report):
    count = 60
    dims = {d for n in OPERATOR_IDENTITIES for d in instance_dims(n, 6, count)}
    recs = run_identities(seed=2, dim=6, count=count, names=list(OPERATOR_IDENTITIES))
    bad = _failures(recs)
    ok = not bad and dims == {2, 4, 6} and all(r["instances"] == count for r in recs)
    report(2, ok, f"{', '.join(OPERATOR_IDENTITIES)}: {count} exact instances each at D in {sorted(dims)}, "
                  f"{len(bad)} failing")


def _antisym(rng, n, entry):
    m = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = entry(rng)
            m[i][j], m[j][i] = x, -x
    return m


def test_criterion_3_pfaffian(report):
    rng = random.Random(3)
    exact_checked = exact_bad = 0
    entries = [lambda r: random_rational(r), lambda r: QQi.make(random_rational(r), random_rational(r)),
               lambda r: random_rational(r) if r.random() < 0.5 else 0]
    for n in range(9):
        for entry in entries:
            for _ in range(4):
                m = _antisym(rng, n, entry)
                exact_checked += 1
                exact_bad += pfaffian(m) != matching_pfaffian(m)
    worst = 0.0
    float_checked = 0
    for n in range(0, 13, 2):
        for _ in range(10):
            m = _antisym(rng, n, lambda r: complex(r.gauss(0, 1), r.gauss(0, 1)))
            pf2 = complex(pfaffian(m)) ** 2
            det = complex(np.linalg.det(np.array(m, dtype=complex))) if n else 1.0
            worst = max(worst, abs(pf2 - det) / max(abs(det), 1e-300))
            float_checked += 1
    ok = exact_bad == 0 and worst <= 1e-9
    report(3, ok, f"{exact_checked} exact matrices to 8x8 vs matching sum, {exact_bad} mismatches; "
                  f"{float_checked} float matrices to 12x12, max rel |Pf^2 - det| = {worst:.2e} (tol 1e-9)")


def _campaign(registry, count, mode):
    set_b_mode(mode)
    try:
        recs = []
        for name, fn in registry.items():
            for alpha in (2.0, 4.0):
                for k in range(count):
                    recs += run_certificate(fn, rng_for(4, mode, name, alpha, k), alpha, 4)
        return recs
    finally:
        set_b_mode("given")


def test_criterion_4_bound_campaign(report):
    t0 = time.time()
    given = _campaign(BOUND_CERTIFICATES, 20, "given")
    fock = _campaign(BOUND_CERTIFICATES, 20, "fock")
    dt = time.time() - t0
    bad = _failures(given) + _failures(fock)
    skipped = [r for r in given + fock if r.get("precondition_skipped")]
    ok = not bad and not skipped and dt <= 600
    report(4, ok, f"{len(BOUND_CERTIFICATES)} certificates x 20 instances x alpha in {{2,4}} at D=4: "
                  f"{len(given)} checks (given b) + {len(fock)} checks (b = 2S), {len(bad)} violations, "
                  f"{len(skipped)} skipped, {dt:.1f}s (limit 600s)")


def test_criterion_5_derivative_campaign(report):
    recs = _campaign(DERIVATIVE_CERTIFICATES, 10, "given")
    bad = _failures(recs)
    formula = [r for r in recs if r["name"] == "gaussian_derivative_formula"]
    ok = not bad and len(formula) == 20 and all(r["holds"] for r in formula)
    report(5, ok, f"{len(DERIVATIVE_CERTIFICATES)} derivative certificates x 10 instances x alpha in {{2,4}} "
                  f"at D=4: {len(recs)} checks, {len(bad)} violations; exact jet formula {len(formula)}/20")


def test_criterion_6_fock_space(report):
    rng = random.Random(6)
    sweeps = []
    for k in range(6):
        h = rng.randint(2, 4)
        if k % 2:
            sides = ["a", "c"] * 4
            taus = [random_rational(rng, 2, (1, 2)) + (3 if s == "a" else 0) for s in sides]
            ws = FockSetup.random(rng, h, 8).ws
            setup = FockSetup(h, sides, taus, ws)
        else:
            setup = FockSetup.random(rng, h, 8)
        for case in ("ii", "i"):
            sweeps.append(vev_moment_sweep(setup, case, max_m=8))
    nonzero = sum(s["nonzero"] for s in sweeps)
    grams = []
    for n in range(1, 9):
        for case in ("i", "ii"):
            grams.append(gram_bound_check(FockSetup.random(rng, rng.randint(1, 4), n), case))
    ok = (all(s["holds"] for s in sweeps) and nonzero > 0 and all(g["holds"] for g in grams)
          and all(g["integral_bound"]["holds"] for g in grams))
    report(6, ok, f"{len(sweeps)} sweeps over {sum(s['monomials'] for s in sweeps)} ordered monomials to m=8 "
                  f"({nonzero} nonzero), failing {sum(len(s['failed']) for s in sweeps)}; "
                  f"|moment| <= S^m on {sum(g['monomials'] for g in grams)} index sets at D<=8, "
                  f"b = 2S integral bound held in {sum(g['integral_bound']['holds'] for g in grams)}/{len(grams)}")


def test_criterion_7_norm_domain(report):
    rng = random.Random(7)
    inverse_bad = zero_inf_bad = mono_bad = 0
    for k in range(1000):
        d = k % 4
        x = random_norm_element(rng, d, p_inf=0.05)
        finite = random_norm_element(rng, d, p_inf=0)
        a = finite.const + rng.uniform(0.1, 3)
        for key, v in one_minus_times_inverse(a, finite).items():
            if abs(v - (0.0 if any(key) else 1.0)) > 1e-9 * max(1.0, a):
                inverse_bad += 1
                break
        zero = NormElement(d, {}, 4)
        prod = zero * x
        inf_keys = [key for key, v in x.c.items() if v == INF]
        zero_inf_bad += any(prod.c[key] != INF for key in inf_keys)
        zero_inf_bad += not inf_keys and any(prod.c.values())
        bump = random_norm_element(rng, d, p_inf=0)
        y = random_norm_element(rng, d)
        mono_bad += not (x <= x + bump and x * y <= (x + bump) * y)
        bump.c[(0,) * d] = 0.0
        mono_bad += not inverse_one_minus(a, finite).le(inverse_one_minus(a, finite + bump), rel=1e-12)
    ok = inverse_bad == zero_inf_bad == mono_bad == 0
    report(7, ok, f"1000 random norm elements, d<=3, max degree 4: inverse law {inverse_bad} failures, "
                  f"0*inf = inf {zero_inf_bad} failures, monotonicity {mono_bad} failures")


def test_criterion_8_cli(report, capsys):
    argv = ["identities", "--count", "5", "--seed", "8"]
    code_one = main(argv)
    one = capsys.readouterr().out
    code_two = main(argv + ["--jobs", "2"])
    two = capsys.readouterr().out
    same = strip_timestamps(one)[:-1] == strip_timestamps(two)[:-1]
    code_three = main(argv)
    same &= strip_timestamps(one) == strip_timestamps(capsys.readouterr().out)
    code_default = main(["identities"])
    default = strip_timestamps(capsys.readouterr().out)[-1]
    ok = same and code_one == code_two == code_three == code_default == 0 and default["status"] == "pass"
    report(8, ok, f"repeated identical runs give identical reports: {same}; "
                  f"default `identities` exit code {code_default} ({default['records']} checks)")
