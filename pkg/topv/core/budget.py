"""
Учёт FLOPs и KV-кэша для схемы отсечения

Токены отсекаются один раз на слое prune_layer (L_i); слои 0..L_i-1
обрабатывают все n визуальных токенов, остальные L - L_i - только
оставленные. Считаются две оценки доли сэкономленных вычислений:

- tokenfraction: (n - retained) / n * (L - L_i) / L;
- layerweighted: 1 - [L_i F(n) + (L - L_i) F(retained)] / [L F(n)],
  где F - FLOPs одного слоя (проекции, внимание, MLP).

Опубликованные доли 35% / ~50% / ~47% соответствуют оценке tokenfraction;
layerweighted учитывает квадратичный член внимания и отличается от неё
на доли процентного пункта для формы LLaVA-7B.
"""

from dataclasses import dataclass, replace
from typing import Dict, List

from .errors import ContractError
from .pruner import PruneConfig


@dataclass(frozen=True)
class ModelShape:
    """Форма языковой модели и слой отсечения."""

    n_layers: int = 32
    hidden: int = 4096
    mlp_hidden: int = 11008
    n_visual: int = 576
    prune_layer: int = 2

    def __post_init__(self):
        for name in ("n_layers", "hidden", "mlp_hidden", "n_visual"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ContractError(f"{name} должен быть положительным целым: {value}")
        if int(self.prune_layer) != self.prune_layer or self.prune_layer < 0:
            raise ContractError(f"prune_layer должен быть целым >= 0: {self.prune_layer}")
        if self.prune_layer >= self.n_layers:
            raise ContractError(
                f"prune_layer={self.prune_layer} должен быть меньше n_layers={self.n_layers}"
            )


PRESETS: Dict[str, ModelShape] = {
    "llava-7b": ModelShape(32, 4096, 11008, 576, 2),
    "llava-13b": ModelShape(40, 5120, 13824, 576, 2),
    "internvl2-2b": ModelShape(24, 2048, 8192, 256, 2),
    "internvl2-26b": ModelShape(48, 6144, 16384, 256, 2),
    # 8 кадров по 256 токенов
    "video-llava-7b": ModelShape(32, 4096, 11008, 8 * 256, 2),
}


@dataclass(frozen=True)
class BudgetReport:
    flops_ratio_layerweighted: float
    flops_ratio_tokenfraction: float
    kv_ratio: float
    retained_tokens: int

    def to_dict(self) -> Dict[str, object]:
        """Плоский словарь для вывода key=value и CSV."""
        return {
            "retained_tokens": self.retained_tokens,
            "flops_ratio_tokenfraction": round(self.flops_ratio_tokenfraction, 6),
            "flops_ratio_layerweighted": round(self.flops_ratio_layerweighted, 6),
            "kv_ratio": round(self.kv_ratio, 6),
        }


def get_preset(name: str) -> ModelShape:
    """
    Возвращает форму модели по имени пресета.

    Raises:
        ContractError: Если пресет неизвестен
    """
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ContractError(
            f"Неизвестный пресет '{name}'. Доступные: {', '.join(sorted(PRESETS))}"
        )


def layer_flops(n_tokens: int, shape: ModelShape) -> float:
    """
    FLOPs одного слоя для n токенов: 4 n d^2 + 2 n^2 d + 2 n d m.
    """
    n, d, m = n_tokens, shape.hidden, shape.mlp_hidden
    return float(4 * n * d * d + 2 * n * n * d + 2 * n * d * m)


def flops_ratio(retained: int, shape: ModelShape) -> BudgetReport:
    """
    Доли сэкономленных FLOPs и относительный размер KV-кэша.

    Args:
        retained: Число визуальных токенов, оставленных после отсечения
        shape: Форма модели

    Returns:
        BudgetReport с обеими оценками FLOPs и долей KV-кэша

    Raises:
        ContractError: Если retained вне [0, n_visual]
    """
    n, layers, cut = shape.n_visual, shape.n_layers, shape.prune_layer
    if int(retained) != retained or not (0 <= retained <= n):
        raise ContractError(f"retained должен лежать в [0, {n}]: {retained}")

    after = (layers - cut) / layers
    token_fraction = (n - retained) / n * after

    full = layer_flops(n, shape)
    pruned_total = cut * full + (layers - cut) * layer_flops(retained, shape)
    layer_weighted = 1.0 - pruned_total / (layers * full)

    kv = (cut * n + (layers - cut) * retained) / (layers * n)

    return BudgetReport(
        flops_ratio_layerweighted=min(1.0, max(0.0, layer_weighted)),
        flops_ratio_tokenfraction=token_fraction,
        kv_ratio=kv,
        retained_tokens=int(retained),
    )


def sweep(
    shape: ModelShape, prune: PruneConfig, start: float, stop: float, step: float
) -> List[Dict[str, object]]:
    """
    Таблица отчётов для prune_ratio от start до stop включительно.

    Шаг восстановления берётся из prune, число оставленных токенов - по тем же
    правилам округления, что и при отсечении.

    Raises:
        ContractError: Если диапазон или шаг некорректны
    """
    if step <= 0 or start > stop:
        raise ContractError(f"Некорректный диапазон {start}:{stop}:{step}")

    rows = []
    count = int(round((stop - start) / step + 1e-9)) + 1
    for i in range(count):
        ratio = round(start + i * step, 10)
        if ratio > stop + 1e-12:
            break
        cfg = replace(prune, prune_ratio=ratio)
        keep, pruned, recovered, retained = cfg.counts(shape.n_visual)
        row: Dict[str, object] = {
            "prune_ratio": ratio,
            "kept": keep,
            "recovered": recovered,
        }
        row.update(flops_ratio(retained, shape).to_dict())
        rows.append(row)
    return rows
