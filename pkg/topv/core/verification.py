"""
Сверка решателя Синхорна с эталоном на случайных задачах

Для каждого размера строится серия задач (стоимость из U[0, 1], маргиналы
по нормам случайных гауссовых токенов с d = 2 или 8) и проверяются:
совпадение плана и энтропийной цели с эталоном, маргиналы, совпадение
линейной и логарифмической областей, инвариантность к сдвигу стоимости и
эквивариантность к перестановке строк.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import ContractError
from .oracle import ORACLE_MAX_SIZE, oracle_solve
from .sinkhorn import (
    LastUpdate,
    MassMode,
    SinkhornConfig,
    TransportPlan,
    entropic_objective,
    make_marginals,
    solve,
)
from .tokens import TokenSet

logger = logging.getLogger(__name__)

SolverFn = Callable[[np.ndarray, np.ndarray, np.ndarray, SinkhornConfig], TransportPlan]

# (имя проверки, допуск)
CHECKS = (
    ("plan_vs_oracle", 1e-6),
    ("objective_vs_oracle", 1e-6),
    ("column_marginal", 1e-6),
    ("oracle_marginals", 1e-10),
    ("log_vs_linear", 1e-8),
    ("shift_invariance", 1e-9),
    ("permutation_equivariance", 1e-9),
)
FEATURE_DIMS = (2, 8)
SOLVER_TOLERANCE = 1e-13
SOLVER_MAX_ITER = 100_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    size: int
    instances: int
    worst: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst <= self.tolerance)


@dataclass(frozen=True)
class VerificationReport:
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def rows(self) -> List[Dict[str, str]]:
        """Строки таблицы для вывода (одинаковы при одинаковом seed)."""
        return [
            {
                "check": c.name,
                "N": str(c.size),
                "instances": str(c.instances),
                "worst": f"{c.worst:.3e}",
                "tolerance": f"{c.tolerance:.0e}",
                "status": "PASS" if c.passed else "FAIL",
            }
            for c in self.checks
        ]


def random_instance(rng: np.random.Generator, n: int, dim: int):
    """Случайная задача: стоимость из U[0, 1], маргиналы l2_norm."""
    cost = rng.uniform(0.0, 1.0, size=(n, n))
    source = TokenSet.from_grid(rng.standard_normal((n, dim)), 1, n)
    target = TokenSet.from_grid(rng.standard_normal((n, dim)), 1, n)
    p, q = make_marginals(source, target, MassMode.L2_NORM)
    return cost, p, q


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def _converged_plan(solver: SolverFn, cost, p, q, cfg) -> Optional[np.ndarray]:
    result = solver(cost, p, q, cfg)
    return result.plan if result.converged else None


def _measure(
    solver: SolverFn, rng: np.random.Generator, n: int, dim: int, epsilon: float
) -> Dict[str, float]:
    cost, p, q = random_instance(rng, n, dim)
    cfg = SinkhornConfig(
        epsilon=epsilon,
        max_iter=SOLVER_MAX_ITER,
        tolerance=SOLVER_TOLERANCE,
        last_update=LastUpdate.COLUMN,
    )
    log_cfg = SinkhornConfig(
        epsilon=epsilon,
        max_iter=SOLVER_MAX_ITER,
        tolerance=SOLVER_TOLERANCE,
        last_update=LastUpdate.COLUMN,
        log_domain=True,
    )
    reference = oracle_solve(cost, p, q, epsilon).plan
    plan = _converged_plan(solver, cost, p, q, cfg)
    log_plan = _converged_plan(solver, cost, p, q, log_cfg)

    # Сдвиг масштабирует u на exp(shift / eps): держим его в пределах ~12x
    shift = float(rng.uniform(0.05, 0.25)) * epsilon * 10
    shifted = _converged_plan(solver, cost + shift, p, q, cfg)

    perm = rng.permutation(n)
    permuted = _converged_plan(solver, cost[perm], p[perm], q, cfg)

    inf = float("inf")
    values = {
        "oracle_marginals": max(
            _max_abs(reference.sum(axis=1), p), _max_abs(reference.sum(axis=0), q)
        ),
    }
    if plan is None:
        values.update({name: inf for name, _ in CHECKS if name != "oracle_marginals"})
        return values

    values["plan_vs_oracle"] = _max_abs(plan, reference)
    values["objective_vs_oracle"] = abs(
        entropic_objective(plan, cost, epsilon) - entropic_objective(reference, cost, epsilon)
    )
    values["column_marginal"] = _max_abs(plan.sum(axis=0), q)
    values["log_vs_linear"] = inf if log_plan is None else _max_abs(plan, log_plan)
    values["shift_invariance"] = inf if shifted is None else _max_abs(plan, shifted)
    values["permutation_equivariance"] = (
        inf if permuted is None else _max_abs(permuted, plan[perm])
    )
    return values


def run_oracle_suite(
    seed: int,
    sizes: Sequence[int],
    instances: int = 50,
    epsilon: float = 0.1,
    solver: Optional[SolverFn] = None,
) -> VerificationReport:
    """
    Прогоняет набор проверок для каждого размера.

    Args:
        seed: Зерно генератора (определяет все задачи)
        sizes: Размеры N (каждый не больше 64)
        instances: Число задач на размер
        epsilon: Температура задач
        solver: Проверяемый решатель (по умолчанию solve)

    Returns:
        VerificationReport с худшим значением каждой проверки на каждом размере

    Raises:
        ContractError: Если размер вне [1, 64] или instances < 1
        OracleError: Если эталон не сошёлся
    """
    solver = solver if solver is not None else solve
    if instances < 1:
        raise ContractError(f"instances должен быть >= 1: {instances}")
    for size in sizes:
        if not (1 <= size <= ORACLE_MAX_SIZE):
            raise ContractError(f"Размер {size} вне диапазона [1, {ORACLE_MAX_SIZE}]")

    report = VerificationReport(seed=seed)
    for size in sizes:
        rng = np.random.default_rng([seed, size])
        worst = {name: 0.0 for name, _ in CHECKS}
        for i in range(instances):
            values = _measure(solver, rng, size, FEATURE_DIMS[i % len(FEATURE_DIMS)], epsilon)
            for name, value in values.items():
                worst[name] = max(worst[name], value)
        for name, tolerance in CHECKS:
            report.checks.append(
                CheckResult(name, size, instances, worst[name], tolerance)
            )
        logger.debug("Проверка N=%d: %s", size, worst)
    return report
