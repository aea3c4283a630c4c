"""Desk-scale acceptance gates, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line with the measured values; the
lines are repeated in the terminal summary.
"""

import json

import pytest

from hyperwave.acceptance import CRITERIA
from hyperwave.io import emit_report

RESULTS = {}


def _run(number):
    if number not in RESULTS:
        RESULTS[number] = CRITERIA[number]()
    res = RESULTS[number]
    print(res.line())
    return res


def _check(number):
    res = _run(number)
    assert res.passed, res.line()


def test_c1_discrete_adjoint_exactness():
    _check(1)


def test_c2_continuous_adjoint_consistency():
    _check(2)


def test_c3_frechet_remainder_order():
    _check(3)


def test_c4_derivative_matches_difference_oracles():
    _check(4)


def test_c5_forward_convergence_and_energy():
    _check(5)


def test_c6_lipschitz_ratio_bounded():
    _check(6)


def test_c7_twin_experiment_recovery():
    _check(7)


def test_c8_structural_checks():
    _check(8)


def test_report_contains_every_criterion(tmp_path):
    results = [_run(n) for n in sorted(CRITERIA)]
    tables = {f"c{r.number}_{k}": v for r in results for k, v in r.tables.items() if isinstance(v, list)}
    emit_report(tmp_path, {"criteria": [r.to_dict() for r in results]}, tables)
    report = json.loads((tmp_path / "report.json").read_text())
    crit = report["summary"]["criteria"]
    assert [c["number"] for c in crit] == list(range(1, 9))
    for c in crit:
        assert c["measured"] and c["gates"]
    assert (tmp_path / "c3_taylor_nonquadratic.csv").exists()
