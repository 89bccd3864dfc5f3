"""
Tests for core/oracle.py
"""

import math

import numpy as np
import pytest

from topv.core.errors import ContractError
from topv.core.oracle import ORACLE_MAX_SIZE, oracle_solve
from topv.core.sinkhorn import SinkhornConfig, entropic_objective, solve


def random_problem(n, seed):
    rng = np.random.default_rng(seed)
    cost = rng.uniform(0.0, 1.0, size=(n, n))
    p = rng.uniform(0.5, 1.5, size=n)
    q = rng.uniform(0.5, 1.5, size=n)
    return cost, p / p.sum(), q / q.sum()


class TestOracle:
    """Test the reference solver"""

    def test_two_by_two_agrees_with_solve(self):
        """Closed-form 2x2 case matches the solver to 1e-9"""
        cost = np.array([[0.0, 1.0], [1.0, 0.0]])
        p = np.array([0.5, 0.5])

        reference = oracle_solve(cost, p, p, 1.0)
        result = solve(cost, p, p, SinkhornConfig(epsilon=1.0, max_iter=100, tolerance=1e-12))

        np.testing.assert_allclose(result.plan, reference.plan, atol=1e-9)
        assert reference.plan[0, 0] == pytest.approx(1.0 / (2.0 * (1.0 + math.exp(-1.0))))

    def test_marginals(self):
        """Both marginals hold to 1e-10"""
        cost, p, q = random_problem(8, seed=1)

        reference = oracle_solve(cost, p, q, 0.1)

        assert reference.converged
        np.testing.assert_allclose(reference.plan.sum(axis=1), p, atol=1e-10)
        np.testing.assert_allclose(reference.plan.sum(axis=0), q, atol=1e-10)

    def test_shift_invariance(self):
        """Adding a constant to every cost entry leaves the plan unchanged"""
        cost, p, q = random_problem(6, seed=2)

        base = oracle_solve(cost, p, q, 0.1)
        shifted = oracle_solve(cost + 3.0, p, q, 0.1)

        np.testing.assert_allclose(shifted.plan, base.plan, atol=1e-9)

    def test_objective_matches_solver(self):
        """N=6 random cost: solver objective equals the oracle optimum"""
        cost, p, q = random_problem(6, seed=3)
        epsilon = 0.1

        reference = oracle_solve(cost, p, q, epsilon)
        result = solve(
            cost, p, q, SinkhornConfig(epsilon=epsilon, max_iter=100_000, tolerance=1e-11)
        )

        assert result.converged
        assert entropic_objective(result.plan, cost, epsilon) == pytest.approx(
            entropic_objective(reference.plan, cost, epsilon), abs=1e-6
        )

    def test_sharper_kernel(self):
        """Larger cost range still converges"""
        cost, p, q = random_problem(5, seed=4)

        reference = oracle_solve(cost * 5.0, p, q, 0.5)

        assert np.all(np.isfinite(reference.plan))
        np.testing.assert_allclose(reference.plan.sum(axis=0), q, atol=1e-10)

    def test_size_limit(self):
        """Problems above 64 x 64 are rejected"""
        n = ORACLE_MAX_SIZE + 1
        p = np.full(n, 1.0 / n)

        with pytest.raises(ContractError):
            oracle_solve(np.zeros((n, n)), p, p, 0.1)
