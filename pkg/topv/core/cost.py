"""
Визуально-ориентированная функция стоимости

Три фактора стоимости переноса массы от источника s_i к цели t_j:
- признаковый: квадрат евклидова расстояния между признаками;
- пространственный: 1 - гауссово ядро от расстояния на сетке;
- центральный: расстояние источника до центра сетки (постоянно по строке).
Каждый фактор нормируется в [0, 1] отдельно, затем они складываются с весами.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ContractError, ShapeError
from .tokens import TokenSet


class Normalization(str, Enum):
    MIN_MAX_PER_MATRIX = "min_max_per_matrix"
    NONE = "none"


@dataclass(frozen=True)
class CostConfig:
    """Веса факторов стоимости и ширина гауссова ядра (в единицах сетки)."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.01
    sigma: float = 10.0
    normalization: Normalization = Normalization.MIN_MAX_PER_MATRIX

    def __post_init__(self):
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        weights = (self.alpha, self.beta, self.gamma)
        if not all(np.isfinite(w) and w >= 0 for w in weights):
            raise ContractError(f"Веса должны быть конечными и неотрицательными: {weights}")
        if not any(w > 0 for w in weights):
            raise ContractError("Хотя бы один вес должен быть положительным")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ContractError(f"sigma должна быть положительной: {self.sigma}")


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Нормированные компоненты и итоговая стоимость c_v."""

    c_f: np.ndarray
    c_s: np.ndarray
    c_e: np.ndarray
    c_v: np.ndarray


def _require_pair(source: TokenSet, target: TokenSet) -> None:
    if source.dim != target.dim:
        raise ShapeError(f"Размерности признаков не совпадают: {source.dim} != {target.dim}")
    if source.n_tokens != target.n_tokens:
        raise ShapeError(
            f"Число токенов не совпадает: {source.n_tokens} != {target.n_tokens}"
        )


def _require_coords(tokens: TokenSet) -> np.ndarray:
    coords = getattr(tokens, "coords", None)
    if coords is None or np.shape(coords) != (tokens.n_tokens, 2):
        raise ContractError("У набора токенов нет корректных координат сетки")
    return np.asarray(coords, dtype=np.float64)


def feature_cost(source: TokenSet, target: TokenSet) -> np.ndarray:
    """
    Квадрат L2 расстояния между каждой парой (s_i, t_j).

    Совпадающие токены дают ровно 0.

    Raises:
        ShapeError: Если размерности или число токенов не совпадают
    """
    _require_pair(source, target)
    return cdist(source.data, target.data, "sqeuclidean")


def spatial_cost(source: TokenSet, target: TokenSet, sigma: float) -> np.ndarray:
    """
    Относительное гауссово расстояние на сетке: 1 - exp(-r^2 / (2 sigma^2)).

    Raises:
        ContractError: Если координат нет или sigma не положительна
    """
    if not sigma > 0:
        raise ContractError(f"sigma должна быть положительной: {sigma}")
    src = _require_coords(source)
    tgt = _require_coords(target)
    dx = src[:, None, 0] - tgt[None, :, 0]
    dy = src[:, None, 1] - tgt[None, :, 1]
    return 1.0 - np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))


def central_cost(source: TokenSet) -> np.ndarray:
    """
    Расстояние источника до центра сетки (grid_w/2, grid_h/2).

    Фактор зависит только от источника, поэтому каждая строка матрицы
    постоянна.
    """
    coords = _require_coords(source)
    center = np.array([source.grid_w / 2.0, source.grid_h / 2.0])
    distance = np.sqrt(((coords - center) ** 2).sum(axis=1))
    return np.repeat(distance[:, None], source.n_tokens, axis=1)


def normalize_min_max(matrix: np.ndarray) -> np.ndarray:
    """Приводит все элементы к [0, 1]; постоянная матрица даёт нули."""
    low = matrix.min()
    span = matrix.max() - low
    if span <= 0:
        return np.zeros_like(matrix, dtype=np.float64)
    return (matrix - low) / span


def build_cost(source: TokenSet, target: TokenSet, cfg: CostConfig) -> CostMatrix:
    """
    Строит итоговую матрицу стоимости c_v = alpha*c_f + beta*c_s + gamma*c_e.

    Args:
        source: Токены-источники
        target: Токены-цели
        cfg: Веса и параметры нормировки

    Returns:
        CostMatrix с нормированными компонентами и их взвешенной суммой
    """
    components = [
        feature_cost(source, target),
        spatial_cost(source, target, cfg.sigma),
        central_cost(source),
    ]
    if cfg.normalization is Normalization.MIN_MAX_PER_MATRIX:
        components = [normalize_min_max(c) for c in components]

    c_f, c_s, c_e = components
    c_v = cfg.alpha * c_f + cfg.beta * c_s + cfg.gamma * c_e
    if not np.all(np.isfinite(c_v)):
        raise ContractError("Матрица стоимости содержит нечисловые значения")
    return CostMatrix(c_f=c_f, c_s=c_s, c_e=c_e, c_v=c_v)
