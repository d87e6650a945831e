"""The fast-vs-oracle agreement checks and their failure path."""

import pytest

from specstream.errors import ValidationError
from specstream.validation import CHECK_NAMES, DECODE_TOL, KERNEL_TOL, run_validation


def test_all_checks_pass_with_healthy_kernels():
    results = {r.name: r for r in run_validation(seed=0, cases=40)}
    assert set(results) == set(CHECK_NAMES)
    for name, r in results.items():
        assert r.passed, r.line()
        assert r.report.compared > 0
    # Pooling agreement is exact; the rest sit under their tolerance.
    assert results["dynamic_max_pool"].report.max_abs_err == 0.0
    assert results["decode_stream"].tol == DECODE_TOL
    assert results["conv1d_same"].tol == KERNEL_TOL


@pytest.mark.parametrize("name", CHECK_NAMES)
def test_perturbation_fails_exactly_one_check(name):
    results = {r.name: r for r in run_validation(seed=0, cases=8, perturb=name)}
    failed = {n for n, r in results.items() if not r.passed}
    assert failed == {name}


def test_unknown_perturb_target_rejected():
    with pytest.raises(ValidationError, match="unknown check"):
        run_validation(seed=0, cases=4, perturb="warp_drive")


def test_result_lines_are_one_per_check():
    results = run_validation(seed=1, cases=8)
    lines = [r.line() for r in results]
    assert len(lines) == len(CHECK_NAMES)
    for line in lines:
        assert line.startswith(("PASS", "FAIL"))
        assert "max_rel=" in line and "compared=" in line


def test_case_count_floor():
    with pytest.raises(ValidationError):
        run_validation(seed=0, cases=0)
