"""
Решатель энтропийного оптимального транспорта (алгоритм Синхорна)

Ищет план P* = diag(u) K diag(v), K = exp(-C / eps), с заданными
маргиналами p и q чередованием диагональных масштабирований:
    u <- p / (K v),   v <- q / (K^T u)
В логарифмической области та же неподвижная точка считается через
log-sum-exp, что устойчиво при малых eps.

Масштабирующие векторы не оборачиваются в exp(./eps): только стандартная
форма делает выход diag(u) K diag(v) согласованным с маргиналами.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError, NumericalError, ShapeError
from .tokens import TokenSet

logger = logging.getLogger(__name__)

KERNEL_FLOOR = 1e-300
MASS_FLOOR = 1e-12


class MassMode(str, Enum):
    UNIFORM = "uniform"
    L2_NORM = "l2_norm"


class LastUpdate(str, Enum):
    COLUMN = "column"
    ROW = "row"


@dataclass(frozen=True)
class SinkhornConfig:
    """
    Параметры решателя.

    По умолчанию масса пропорциональна норме токена, последним
    масштабируется столбец, а бюджет - три итерации: при точной сходимости
    суммы строк равны p, и с равномерной массой важность вырождается.
    """

    epsilon: float = 0.05
    max_iter: int = 3
    tolerance: float = 1e-6
    mass_mode: MassMode = MassMode.L2_NORM
    last_update: LastUpdate = LastUpdate.COLUMN
    log_domain: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mass_mode", MassMode(self.mass_mode))
        object.__setattr__(self, "last_update", LastUpdate(self.last_update))
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ContractError(f"epsilon должен быть положительным: {self.epsilon}")
        if not (np.isfinite(self.tolerance) and self.tolerance > 0):
            raise ContractError(f"tolerance должна быть положительной: {self.tolerance}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ContractError(f"max_iter должен быть целым >= 1: {self.max_iter}")


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Найденный план переноса и сведения о сходимости."""

    plan: np.ndarray
    p: np.ndarray
    q: np.ndarray
    iterations_used: int
    converged: bool

    @property
    def size(self) -> int:
        return self.plan.shape[0]


def make_marginals(
    source: TokenSet, target: TokenSet, mass_mode: MassMode
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Строит маргиналы p и q по наборам токенов.

    uniform: все массы 1/N. l2_norm: масса пропорциональна L2 норме токена,
    нулевые токены получают массу 1e-12 до перенормировки.

    Returns:
        Пару строго положительных векторов с суммой 1
    """
    return _masses(source, MassMode(mass_mode)), _masses(target, MassMode(mass_mode))


def _masses(tokens: TokenSet, mass_mode: MassMode) -> np.ndarray:
    n = tokens.n_tokens
    if n < 1:
        raise ContractError("Набор токенов пуст")
    if mass_mode is MassMode.UNIFORM:
        return np.full(n, 1.0 / n)
    norms = np.maximum(np.linalg.norm(tokens.data, axis=1), MASS_FLOOR)
    return norms / norms.sum()


def _validate(cost: np.ndarray, p: np.ndarray, q: np.ndarray) -> None:
    if cost.ndim != 2 or cost.shape[0] < 1:
        raise ShapeError(f"Ожидалась непустая матрица стоимости, получена форма {cost.shape}")
    if p.shape != (cost.shape[0],) or q.shape != (cost.shape[1],):
        raise ShapeError(
            f"Маргиналы {p.shape}, {q.shape} не совпадают с матрицей {cost.shape}"
        )
    if not np.all(np.isfinite(cost)):
        raise ContractError("Матрица стоимости содержит нечисловые значения")
    for name, m in (("p", p), ("q", q)):
        if np.any(m <= 0) or not np.isclose(m.sum(), 1.0, atol=1e-9):
            raise ContractError(f"Маргинал {name} должен быть положительным с суммой 1")


def solve(
    cost: np.ndarray, p: np.ndarray, q: np.ndarray, cfg: SinkhornConfig
) -> TransportPlan:
    """
    Решает энтропийную задачу переноса матричным масштабированием.

    Итерации продолжаются, пока оба масштабирующих вектора меняются больше
    чем на tolerance (по max-норме), но не дольше max_iter.

    Args:
        cost: Матрица стоимости N x N
        p: Маргинал источников
        q: Маргинал целей
        cfg: Параметры решателя

    Returns:
        TransportPlan с планом diag(u) K diag(v)

    Raises:
        ContractError: Если стоимость нечисловая или маргиналы некорректны
        NumericalError: Если ядро исчезает в линейной области
    """
    cost = np.asarray(cost, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _validate(cost, p, q)

    if cfg.log_domain:
        plan, iterations, converged = _solve_log(cost, p, q, cfg)
    else:
        plan, iterations, converged = _solve_linear(cost, p, q, cfg)

    if not np.all(np.isfinite(plan)):
        raise NumericalError("План переноса содержит нечисловые значения")
    logger.debug(
        "Синхорн: N=%d, итераций=%d, сошёлся=%s, log=%s",
        cost.shape[0], iterations, converged, cfg.log_domain,
    )
    return TransportPlan(plan=plan, p=p, q=q, iterations_used=iterations, converged=converged)


def _solve_linear(cost, p, q, cfg):
    with np.errstate(under="ignore"):
        kernel = np.exp(-cost / cfg.epsilon)
    dead = kernel < KERNEL_FLOOR
    if np.any(dead.all(axis=1)) or np.any(dead.all(axis=0)):
        raise NumericalError(
            "Ядро exp(-C/eps) обнулилось в целой строке или столбце; "
            "уменьшите масштаб стоимости, увеличьте epsilon или включите log_domain"
        )
    kernel = np.maximum(kernel, KERNEL_FLOOR)

    u = np.ones_like(p)
    v = np.ones_like(q)
    column_last = cfg.last_update is LastUpdate.COLUMN
    iterations, converged = 0, False

    with np.errstate(over="raise", divide="raise", invalid="raise"):
        try:
            for iterations in range(1, cfg.max_iter + 1):
                if column_last:
                    u_new = p / (kernel @ v)
                    v_new = q / (kernel.T @ u_new)
                else:
                    v_new = q / (kernel.T @ u)
                    u_new = p / (kernel @ v_new)

                delta = max(np.max(np.abs(u_new - u)), np.max(np.abs(v_new - v)))
                u, v = u_new, v_new
                if delta < cfg.tolerance:
                    converged = True
                    break

            plan = u[:, None] * kernel * v[None, :]
        except FloatingPointError as e:
            raise NumericalError(
                f"Переполнение в итерациях Синхорна ({e}); включите log_domain"
            )
    return plan, iterations, converged


def _solve_log(cost, p, q, cfg):
    log_kernel = -cost / cfg.epsilon
    log_p, log_q = np.log(p), np.log(q)
    log_u = np.zeros_like(p)
    log_v = np.zeros_like(q)
    column_last = cfg.last_update is LastUpdate.COLUMN
    iterations, converged = 0, False

    for iterations in range(1, cfg.max_iter + 1):
        if column_last:
            log_u_new = log_p - logsumexp(log_kernel + log_v[None, :], axis=1)
            log_v_new = log_q - logsumexp(log_kernel + log_u_new[:, None], axis=0)
        else:
            log_v_new = log_q - logsumexp(log_kernel + log_u[:, None], axis=0)
            log_u_new = log_p - logsumexp(log_kernel + log_v_new[None, :], axis=1)

        # Критерий тот же, что в линейной области: изменение u и v, а не потенциалов
        with np.errstate(over="ignore", invalid="ignore"):
            delta = max(
                np.max(np.abs(np.exp(log_u_new) - np.exp(log_u))),
                np.max(np.abs(np.exp(log_v_new) - np.exp(log_v))),
            )
        log_u, log_v = log_u_new, log_v_new
        if delta < cfg.tolerance:
            converged = True
            break

    plan = np.exp(log_u[:, None] + log_kernel + log_v[None, :])
    return plan, iterations, converged


def plan_entropy(plan: np.ndarray) -> float:
    """Энтропия H(P) = -sum P log P (0 log 0 = 0)."""
    positive = plan[plan > 0]
    return float(-np.sum(positive * np.log(positive)))


def entropic_objective(plan: np.ndarray, cost: np.ndarray, epsilon: float) -> float:
    """Энтропийная цель <P, C> - eps * H(P)."""
    return float(np.sum(plan * cost) - epsilon * plan_entropy(plan))
