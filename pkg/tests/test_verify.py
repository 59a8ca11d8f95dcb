import json

import numpy as np
import pytest

from lincap import linop
from lincap.verify import FAST_CHECKS, STRETCH_CHECKS, brute_force_permanent, checks_to_json, format_table, run_checks


def test_brute_force_reference():
    a = np.array([[1, 2], [3, 4]])
    assert brute_force_permanent(a) == 10
    assert brute_force_permanent(np.zeros((0, 0))) == 1


def test_corrupted_permanent_is_caught(monkeypatch):
    real = linop._permanent_stack
    monkeypatch.setattr(linop, "_permanent_stack", lambda a: real(a) * (1 + 1e-3))
    (chk,) = run_checks(names=["lift_unitarity"])
    assert not chk.passed and chk.computed > 1e-9


def test_exception_becomes_failed_check(monkeypatch):
    def boom():
        raise RuntimeError("no convergence")

    monkeypatch.setitem(FAST_CHECKS, "canonical_capacity", boom)
    (chk,) = run_checks(names=["canonical_capacity"])
    assert not chk.passed and "no convergence" in chk.note


def test_unknown_name():
    with pytest.raises(ValueError):
        run_checks(names=["nope"])


def test_stretch_not_in_fast_table():
    assert not set(STRETCH_CHECKS) & set(FAST_CHECKS)


def test_renderers():
    checks = run_checks(names=["vacuum_posterior", "photon_posterior", "canonical_mapping"])
    table = format_table(checks)
    assert table.splitlines()[0].startswith("check")
    assert table.splitlines()[-1] == "3/3 checks passed"
    data = json.loads(checks_to_json(checks))
    assert data["all_passed"] and {c["name"] for c in data["checks"]} == {"vacuum_posterior", "photon_posterior", "canonical_mapping"}
    assert "seconds" not in data["checks"][0]
