import random

import pytest
from gmpy2 import mpq

import fermirg.gaussian
import fermirg.identities
from fermirg.gaussian import Covariance
from fermirg.identities import (ALL_IDENTITIES, IDENTITIES, OPERATOR_IDENTITIES, instance_dims, run_identities,
                                run_identity)


@pytest.mark.parametrize("name", list(ALL_IDENTITIES))
def test_identity_holds(name):
    rec = run_identity(name, seed=3, dim=6, count=12)
    assert rec["holds"], rec
    assert rec["instances"] == 12 and rec["passed"] == 12


def test_registry_sizes():
    assert len(IDENTITIES) == 25
    assert set(OPERATOR_IDENTITIES) == {"schwinger_routes_agree", "r_operator_from_kernel", "r_operator_series"}


def test_instance_dimensions():
    assert instance_dims("wick_translation", 6, 7) == [2, 3, 4, 5, 6, 2, 3]
    assert instance_dims("schwinger_routes_agree", 6, 4) == [2, 4, 6, 2]
    assert instance_dims("wick_translation", 0, 10) == []


def test_runs_are_reproducible_and_order_stable():
    names = ["wick_translation", "contraction_routes_agree", "schwinger_routes_agree"]
    one = run_identities(5, 4, 5, names)
    assert one == run_identities(5, 4, 5, names)
    assert one == run_identities(5, 4, 5, names, jobs=2)
    assert [r["check"] for r in one] == names


def test_fixed_covariance():
    C = Covariance.from_upper(4, {(0, 1): mpq(1, 2), (1, 3): mpq(-2), (2, 3): mpq(3, 4)})
    recs = run_identities(1, 0, 6, ["wick_product_formula", "contraction_small_values"], covariance=C)
    assert all(r["holds"] and r["instances"] == 6 and r["dim"] == 4 for r in recs)
    fermirg.identities.set_fixed_covariance(None)


def test_wrong_wick_convention_is_detected(monkeypatch):
    # ordering with +C instead of -C
    monkeypatch.setattr(fermirg.gaussian, "wick", fermirg.gaussian.unwick)
    monkeypatch.setattr(fermirg.identities, "wick", fermirg.gaussian.unwick)
    names = ("wick_moment_determinant", "wick_product_formula", "wick_as_shifted_integral")
    assert all(not run_identity(n, 1, 4, 20)["holds"] for n in names)
