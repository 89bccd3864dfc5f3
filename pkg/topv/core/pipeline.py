"""
Конвейер отсечения для команды prune

Источники (+ цели из дампа или из симулятора) -> стоимость -> план
Синхорна -> решение об отсечении -> оценка бюджета -> файлы результатов.
Каждый прогон изолирован и не разделяет изменяемого состояния, поэтому
несколько дампов можно обрабатывать параллельно.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.paths import (
    ensure_directories,
    get_budget_file,
    get_decision_file,
    get_heatmap_file,
    get_retained_file,
)
from .budget import BudgetReport, flops_ratio
from .config import RunConfig
from .cost import CostMatrix, build_cost
from .layersim import forward_tap, init_block
from .pruner import PruneDecision, prune
from .sinkhorn import TransportPlan, make_marginals, solve
from .storage import Storage
from .tokens import TokenSet, load_dump

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    source: TokenSet
    target: TokenSet
    cost: CostMatrix
    plan: TransportPlan
    decision: PruneDecision
    budget: BudgetReport
    scoring_seconds: float


def make_targets(source: TokenSet, config: RunConfig) -> TokenSet:
    """Целевые токены из игрушечного блока в точке съёма sim.tap."""
    block = init_block(config.sim.block_config(source.dim))
    logger.debug("Цели из симулятора: tap=%s, seed=%d", config.sim.tap.value, config.sim.seed)
    return forward_tap(block, source, config.sim.tap)


def run_pipeline(
    source: TokenSet, target: Optional[TokenSet], config: RunConfig
) -> PipelineResult:
    """
    Выполняет оценку важности и отсечение для одного набора токенов.

    Args:
        source: Токены-источники
        target: Токены-цели или None (тогда они строятся симулятором)
        config: Конфигурация запуска

    Returns:
        PipelineResult со всеми промежуточными результатами
    """
    if target is None:
        target = make_targets(source, config)

    started = time.perf_counter()
    cost = build_cost(source, target, config.cost)
    p, q = make_marginals(source, target, config.sinkhorn.mass_mode)
    plan = solve(cost.c_v, p, q, config.sinkhorn)
    scoring_seconds = time.perf_counter() - started

    decision = prune(source, plan, config.prune)

    shape = config.model_shape
    if source.n_tokens == shape.n_visual:
        retained = len(decision.retained)
    else:
        # Дамп другого размера: та же схема отсечения, перенесённая на n_visual
        retained = config.prune.counts(shape.n_visual)[3]
        logger.debug(
            "N=%d != n_visual=%d, бюджет по правилам отсечения", source.n_tokens, shape.n_visual
        )
    budget = flops_ratio(retained, shape)

    logger.debug("Отсечение: %s", decision.summary())
    return PipelineResult(
        source=source,
        target=target,
        cost=cost,
        plan=plan,
        decision=decision,
        budget=budget,
        scoring_seconds=scoring_seconds,
    )


def render_pgm(importance: np.ndarray, tokens: TokenSet) -> str:
    """
    Тепловая карта важности в формате PGM P2 (ширина grid_w, высота grid_h).

    Важность нормируется в 0..255; клетки сетки без токенов остаются 0.
    """
    values = np.asarray(importance, dtype=np.float64)
    low, span = values.min(), values.max() - values.min()
    scaled = np.zeros_like(values) if span <= 0 else (values - low) / span
    levels = np.rint(scaled * 255).astype(np.int64)

    grid = np.zeros((tokens.grid_h, tokens.grid_w), dtype=np.int64)
    grid[tokens.coords[:, 1], tokens.coords[:, 0]] = levels

    lines = ["P2", f"{tokens.grid_w} {tokens.grid_h}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in grid)
    return "\n".join(lines) + "\n"


def decision_rows(decision: PruneDecision) -> List[Tuple[int, str, str]]:
    """Строки decision.csv: индекс, важность (repr), статус."""
    return [
        (index, repr(float(score)), status)
        for index, (score, status) in enumerate(zip(decision.importance, decision.statuses()))
    ]


def write_outputs(result: PipelineResult, out_dir: Path) -> Dict[str, Path]:
    """
    Записывает результаты прогона в выходную директорию.

    Returns:
        Словарь {имя: путь} записанных файлов

    Raises:
        StorageError: Если файлы не могут быть записаны
    """
    out_dir = Path(out_dir)
    ensure_directories(out_dir)
    decision = result.decision

    paths = {
        "decision": get_decision_file(out_dir),
        "retained": get_retained_file(out_dir),
        "heatmap": get_heatmap_file(out_dir),
        "budget": get_budget_file(out_dir),
    }
    Storage.write_csv(paths["decision"], ["index", "importance", "status"], decision_rows(decision))
    Storage.write_text(paths["retained"], "".join(f"{i}\n" for i in decision.retained))
    Storage.write_text(paths["heatmap"], render_pgm(decision.importance, result.source))

    report = result.budget.to_dict()
    Storage.write_csv(paths["budget"], list(report), [list(report.values())])
    return paths


def process_dump(dump_path: Path, config: RunConfig, out_dir: Path) -> PipelineResult:
    """Загружает дамп, выполняет конвейер и записывает результаты."""
    source, target = load_dump(dump_path)
    logger.info("Дамп %s: N=%d, d=%d", dump_path, source.n_tokens, source.dim)
    result = run_pipeline(source, target, config)
    write_outputs(result, out_dir)
    return result


Outcome = Union[PipelineResult, Exception]


def run_batch(
    jobs: Sequence[Tuple[Path, Path]], config: RunConfig, workers: int = 1
) -> List[Tuple[Path, Outcome]]:
    """
    Обрабатывает несколько дампов, каждый в своей выходной директории.

    Ошибка одного дампа не прерывает остальные: она возвращается вместо
    результата.

    Args:
        jobs: Пары (путь к дампу, выходная директория)
        config: Общая конфигурация
        workers: Число потоков

    Returns:
        Пары (путь к дампу, результат или исключение) в исходном порядке
    """

    def _run(job: Tuple[Path, Path]) -> Outcome:
        dump_path, out_dir = job
        try:
            return process_dump(dump_path, config, out_dir)
        except Exception as e:  # noqa: BLE001 - ошибка отдаётся вызывающему
            return e

    if workers <= 1 or len(jobs) <= 1:
        outcomes = [_run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run, jobs))
    return [(job[0], outcome) for job, outcome in zip(jobs, outcomes)]
