"""
Tests for core/verification.py
"""

from dataclasses import replace

import numpy as np
import pytest

from topv.core.errors import ContractError
from topv.core.sinkhorn import solve
from topv.core.verification import CHECKS, CheckResult, random_instance, run_oracle_suite


def corrupted_solver(cost, p, q, cfg):
    result = solve(cost, p, q, cfg)
    return replace(result, plan=result.plan * 1.01)


class TestOracleSuite:
    """Test the oracle comparison suite"""

    def test_small_sizes_pass(self):
        """Sizes 2, 4, 8 pass every check"""
        report = run_oracle_suite(seed=0, sizes=[2, 4, 8], instances=6)

        assert len(report.checks) == 3 * len(CHECKS)
        assert report.passed, report.rows()

    @pytest.mark.slow
    def test_full_suite(self):
        """200 instances over sizes 2..16 pass"""
        report = run_oracle_suite(seed=1, sizes=[2, 4, 8, 16], instances=50)

        assert report.passed, [row for row in report.rows() if row["status"] == "FAIL"]

    def test_deterministic(self):
        """Same seed gives an identical report"""
        first = run_oracle_suite(seed=5, sizes=[3, 5], instances=3)
        second = run_oracle_suite(seed=5, sizes=[3, 5], instances=3)

        assert first.rows() == second.rows()

    def test_corrupted_solver_fails(self):
        """A solver that scales the plan is caught"""
        report = run_oracle_suite(seed=0, sizes=[4], instances=2, solver=corrupted_solver)

        assert not report.passed
        failed = {check.name for check in report.failures}
        assert "plan_vs_oracle" in failed
        assert "column_marginal" in failed

    def test_size_limit(self):
        """Sizes above 64 are rejected"""
        with pytest.raises(ContractError):
            run_oracle_suite(seed=0, sizes=[65], instances=1)

    def test_instances_positive(self):
        """At least one instance per size"""
        with pytest.raises(ContractError):
            run_oracle_suite(seed=0, sizes=[2], instances=0)


class TestHelpers:
    """Test report helpers"""

    def test_check_result_passed(self):
        """Infinite worst values never pass"""
        assert CheckResult("x", 2, 1, 1e-12, 1e-10).passed
        assert not CheckResult("x", 2, 1, float("inf"), 1e-10).passed
        assert not CheckResult("x", 2, 1, 1e-3, 1e-6).passed

    def test_random_instance(self):
        """Random costs lie in [0, 1] and marginals sum to one"""
        cost, p, q = random_instance(np.random.default_rng(0), 5, 2)

        assert cost.shape == (5, 5)
        assert cost.min() >= 0.0 and cost.max() <= 1.0
        assert p.sum() == pytest.approx(1.0)
        assert np.all(q > 0)
