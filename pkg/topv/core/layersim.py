"""
Игрушечный трансформерный блок для получения целевых токенов

Детерминированный блок Pre-LN -> внимание -> остаток -> Post-LN -> MLP ->
остаток без весов реальной модели. Веса берутся из генератора SplitMix64,
поэтому совпадают побитно в любой реализации.

Точки съёма (tap):
    pre_ln            1  выход Pre-LN
    attn              2  внимание + остаток
    attn_no_residual  2* внимание без остатка
    post_ln           3  выход Post-LN (цели по умолчанию)
    mlp               4  MLP + остаток

Карта внимания строится только внутри симулятора.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict

import numpy as np

from .errors import ContractError, ShapeError
from .tokens import TokenSet

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_WEIGHT_CHUNK = 1 << 20
LAYER_NORM_VAR_FLOOR = 1e-5


class Tap(str, Enum):
    PRE_LN = "pre_ln"
    ATTN = "attn"
    ATTN_NO_RESIDUAL = "attn_no_residual"
    POST_LN = "post_ln"
    MLP = "mlp"


class SplitMix64:
    """Генератор SplitMix64 с 64-битным состоянием."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_weight(self) -> float:
        """Вещественное число в (-0.1, 0.1)."""
        return (self.next_u64() / 2.0**64) * 0.2 - 0.1

    def matrix(self, rows: int, cols: int) -> np.ndarray:
        """Матрица весов, заполняемая построчно (тот же поток, что и next_weight)."""
        count = rows * cols
        out = np.empty(count, dtype=np.float64)
        for start in range(0, count, _WEIGHT_CHUNK):
            stop = min(count, start + _WEIGHT_CHUNK)
            out[start:stop] = self._weights(stop - start)
        return out.reshape(rows, cols)

    def _weights(self, count: int) -> np.ndarray:
        # Состояние k-го шага: seed + k * GOLDEN по модулю 2^64
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = steps * np.uint64(GOLDEN) + np.uint64(self.state)
        self.state = (self.state + count * GOLDEN) & MASK64
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
        return (z.astype(np.float64) / 2.0**64) * 0.2 - 0.1


@dataclass(frozen=True)
class ToyBlockConfig:
    dim: int = 16
    heads: int = 2
    mlp_mult: int = 4
    seed: int = 0
    tap: Tap = Tap.POST_LN

    def __post_init__(self):
        object.__setattr__(self, "tap", Tap(self.tap))
        for name in ("dim", "heads", "mlp_mult"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ContractError(f"{name} должен быть положительным целым: {value}")
        if self.dim % self.heads != 0:
            raise ContractError(f"dim={self.dim} не делится на heads={self.heads}")
        if not (0 <= self.seed <= MASK64):
            raise ContractError(f"seed должен быть 64-битным беззнаковым: {self.seed}")


@dataclass(frozen=True, eq=False)
class ToyBlock:
    """Неизменяемый блок с весами проекций и MLP."""

    config: ToyBlockConfig
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    w_up: np.ndarray
    w_down: np.ndarray

    @property
    def dim(self) -> int:
        return self.config.dim


def init_block(cfg: ToyBlockConfig) -> ToyBlock:
    """
    Заполняет веса блока из SplitMix64(cfg.seed).

    Порядок заполнения: W_q, W_k, W_v, W_o (d x d), W_up (d x m*d),
    W_down (m*d x d), каждая матрица построчно.
    """
    rng = SplitMix64(cfg.seed)
    d, hidden = cfg.dim, cfg.dim * cfg.mlp_mult
    weights = [rng.matrix(d, d) for _ in range(4)]
    w_up = rng.matrix(d, hidden)
    w_down = rng.matrix(hidden, d)
    for w in (*weights, w_up, w_down):
        w.setflags(write=False)
    return ToyBlock(cfg, *weights, w_up, w_down)


def layer_norm(x: np.ndarray) -> np.ndarray:
    """Нормировка каждого токена без обучаемых параметров."""
    mean = x.mean(axis=1, keepdims=True)
    var = np.maximum(x.var(axis=1, keepdims=True), LAYER_NORM_VAR_FLOOR)
    return (x - mean) / np.sqrt(var)


def _attention(block: ToyBlock, h: np.ndarray) -> np.ndarray:
    n, d = h.shape
    heads = block.config.heads
    head_dim = d // heads

    q = (h @ block.w_q).reshape(n, heads, head_dim).transpose(1, 0, 2)
    k = (h @ block.w_k).reshape(n, heads, head_dim).transpose(1, 0, 2)
    v = (h @ block.w_v).reshape(n, heads, head_dim).transpose(1, 0, 2)

    scores = q @ k.transpose(0, 2, 1) / np.sqrt(head_dim)
    scores -= scores.max(axis=2, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=2, keepdims=True)

    mixed = (weights @ v).transpose(1, 0, 2).reshape(n, d)
    return mixed @ block.w_o


def forward_all(block: ToyBlock, x: np.ndarray) -> Dict[Tap, np.ndarray]:
    """Прогоняет блок и возвращает активации во всех точках съёма."""
    pre = layer_norm(x)
    attn_out = _attention(block, pre)
    residual = x + attn_out
    post = layer_norm(residual)
    mlp_out = np.maximum(post @ block.w_up, 0.0) @ block.w_down
    return {
        Tap.PRE_LN: pre,
        Tap.ATTN_NO_RESIDUAL: attn_out,
        Tap.ATTN: residual,
        Tap.POST_LN: post,
        Tap.MLP: residual + mlp_out,
    }


def forward_tap(block: ToyBlock, tokens: TokenSet, tap: Tap) -> TokenSet:
    """
    Активация блока в заданной точке съёма.

    Args:
        block: Инициализированный блок
        tokens: Входные токены (источники)
        tap: Точка съёма

    Returns:
        Набор той же формы и с теми же координатами

    Raises:
        ShapeError: Если размерность токенов не равна block.dim
    """
    if tokens.dim != block.dim:
        raise ShapeError(f"Размерность токенов {tokens.dim} != размерности блока {block.dim}")
    activations = forward_all(block, tokens.data)
    return tokens.with_data(activations[Tap(tap)])
