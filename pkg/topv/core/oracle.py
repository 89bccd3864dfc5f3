"""
Эталонный решатель для проверки solve

Намеренно простая реализация в логарифмической области, не разделяющая кода
с основным решателем: чередует обновления потенциалов до тех пор, пока оба
маргинала не выполнятся с точностью 1e-12. Только для небольших задач.
"""

import numpy as np
from scipy.special import logsumexp

from .errors import ContractError
from .sinkhorn import TransportPlan

ORACLE_MAX_SIZE = 64
ORACLE_TOLERANCE = 1e-12
ORACLE_MAX_ITER = 100_000


class OracleError(Exception):
    """Эталонный решатель не сошёлся за отведённое число итераций"""
    pass


def oracle_solve(
    cost: np.ndarray, p: np.ndarray, q: np.ndarray, epsilon: float
) -> TransportPlan:
    """
    Решает задачу до сходимости по маргиналам 1e-12.

    Args:
        cost: Матрица стоимости N x N (N <= 64)
        p: Маргинал источников
        q: Маргинал целей
        epsilon: Температура

    Returns:
        TransportPlan с converged=True

    Raises:
        ContractError: Если задача больше 64 x 64
        OracleError: Если предел итераций исчерпан
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if max(n, m) > ORACLE_MAX_SIZE:
        raise ContractError(f"Эталон рассчитан на N <= {ORACLE_MAX_SIZE}, получено {max(n, m)}")

    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    log_p, log_q = np.log(p), np.log(q)
    f = np.zeros(n)
    g = np.zeros(m)

    for iteration in range(1, ORACLE_MAX_ITER + 1):
        f = epsilon * (log_p - logsumexp((g[None, :] - cost) / epsilon, axis=1))
        g = epsilon * (log_q - logsumexp((f[:, None] - cost) / epsilon, axis=0))

        plan = np.exp((f[:, None] + g[None, :] - cost) / epsilon)
        error = max(
            np.max(np.abs(plan.sum(axis=1) - p)),
            np.max(np.abs(plan.sum(axis=0) - q)),
        )
        if error < ORACLE_TOLERANCE:
            return TransportPlan(
                plan=plan,
                p=p,
                q=q,
                iterations_used=iteration,
                converged=True,
            )

    raise OracleError(
        f"Эталон не сошёлся за {ORACLE_MAX_ITER} итераций (ошибка маргиналов {error:.3e})"
    )
