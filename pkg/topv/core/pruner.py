"""
Отсечение токенов по плану переноса

Важность источника - сумма его строки в плане P*. Сохраняются keep_count
самых важных токенов (при равенстве побеждает меньший индекс), затем из
отсечённых, упорядоченных по исходному индексу, возвращается каждый r-й
начиная с первого. Так восстановленные токены равномерно покрывают сетку.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ContractError, ShapeError
from .sinkhorn import TransportPlan
from .tokens import TokenSet

STATUS_KEPT = "kept"
STATUS_RECOVERED = "recovered"
STATUS_PRUNED = "pruned"

# Защита floor от двоичного округления: 10 * (1 - 0.9) = 0.9999999999999998
_FLOOR_GUARD = 1e-9


@dataclass(frozen=True)
class PruneConfig:
    """Доля отсекаемых токенов и шаг равномерного восстановления (0 - без него)."""

    prune_ratio: float = 0.5
    recovery_interval: int = 4

    def __post_init__(self):
        if not (0.0 <= self.prune_ratio < 1.0):
            raise ContractError(f"prune_ratio должен лежать в [0, 1): {self.prune_ratio}")
        if int(self.recovery_interval) != self.recovery_interval or self.recovery_interval < 0:
            raise ContractError(
                f"recovery_interval должен быть целым >= 0: {self.recovery_interval}"
            )

    def keep_count(self, n_tokens: int) -> int:
        """
        Число токенов, сохраняемых до восстановления.

        Raises:
            ContractError: Если при данном N не сохраняется ни одного токена
        """
        keep = math.floor(n_tokens * (1.0 - self.prune_ratio) + _FLOOR_GUARD)
        if keep < 1:
            raise ContractError(
                f"При N={n_tokens} и prune_ratio={self.prune_ratio} не остаётся ни одного токена"
            )
        return keep

    def counts(self, n_tokens: int) -> Tuple[int, int, int, int]:
        """
        Размеры множеств без построения плана.

        Returns:
            (сохранено, отсечено, восстановлено, итого оставлено)
        """
        keep = self.keep_count(n_tokens)
        pruned = n_tokens - keep
        if self.recovery_interval > 0:
            recovered = -(-pruned // self.recovery_interval)
        else:
            recovered = 0
        return keep, pruned, recovered, keep + recovered


@dataclass(frozen=True, eq=False)
class PruneDecision:
    """Результат отсечения: важность и три множества индексов."""

    importance: np.ndarray
    kept_topk: List[int]
    recovered: List[int]
    retained: List[int]

    @property
    def n_tokens(self) -> int:
        return len(self.importance)

    @property
    def pruned(self) -> List[int]:
        retained = set(self.retained)
        return [i for i in range(self.n_tokens) if i not in retained]

    def statuses(self) -> List[str]:
        """Статус каждого токена: kept, recovered или pruned."""
        status = [STATUS_PRUNED] * self.n_tokens
        for i in self.kept_topk:
            status[i] = STATUS_KEPT
        for i in self.recovered:
            status[i] = STATUS_RECOVERED
        return status

    def summary(self) -> Dict[str, int]:
        return {
            "tokens": self.n_tokens,
            "kept": len(self.kept_topk),
            "recovered": len(self.recovered),
            "pruned": self.n_tokens - len(self.retained),
            "retained": len(self.retained),
        }


def importance(plan: TransportPlan) -> np.ndarray:
    """Важность источников: суммы строк плана."""
    return plan.plan.sum(axis=1)


def select_topk(scores: np.ndarray, keep_count: int) -> List[int]:
    """
    Индексы keep_count наибольших значений, по возрастанию.

    Сортировка устойчивая, поэтому при точном равенстве выигрывает меньший
    исходный индекс.

    Raises:
        ContractError: Если keep_count вне [1, N]
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not (1 <= keep_count <= len(scores)):
        raise ContractError(f"keep_count должен лежать в [1, {len(scores)}]: {keep_count}")
    order = np.argsort(-scores, kind="stable")
    return sorted(int(i) for i in order[:keep_count])


def recover(pruned: Sequence[int], interval: int) -> List[int]:
    """
    Равномерно возвращает каждый interval-й отсечённый токен (позиции 0, r, 2r, ...).

    Args:
        pruned: Отсечённые индексы по возрастанию
        interval: Шаг r; 0 отключает восстановление

    Returns:
        Восстановленные индексы по возрастанию
    """
    if interval < 0:
        raise ContractError(f"Шаг восстановления должен быть >= 0: {interval}")
    if interval == 0:
        return []
    return [int(i) for i in list(pruned)[::interval]]


def prune(source: TokenSet, plan: TransportPlan, cfg: PruneConfig) -> PruneDecision:
    """
    Полный шаг отсечения: важность -> top-k -> восстановление.

    Args:
        source: Токены-источники (задают N)
        plan: План переноса размера N x N
        cfg: Параметры отсечения

    Returns:
        PruneDecision; retained определяет строки, которые остаются
        во всех следующих слоях

    Raises:
        ShapeError: Если размер плана не совпадает с числом источников
    """
    if plan.plan.shape[0] != source.n_tokens:
        raise ShapeError(
            f"План для {plan.plan.shape[0]} источников, а токенов {source.n_tokens}"
        )

    scores = importance(plan)
    kept = select_topk(scores, cfg.keep_count(source.n_tokens))
    kept_set = set(kept)
    pruned = [i for i in range(source.n_tokens) if i not in kept_set]
    recovered = recover(pruned, cfg.recovery_interval)
    retained = sorted(kept_set.union(recovered))

    return PruneDecision(
        importance=scores, kept_topk=kept, recovered=recovered, retained=retained
    )
