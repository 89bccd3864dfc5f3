"""
Утилиты для работы с путями в TopV

Раскладка выходной директории команды prune:

    out_dir/
    ├── decision.csv      index, importance, status
    ├── retained.txt      оставленные индексы по возрастанию
    ├── importance.pgm    тепловая карта важности (P2, grid_w x grid_h)
    └── budget.csv        оценка FLOPs и KV-кэша
"""

from pathlib import Path
from typing import Sequence


def get_decision_file(out_dir: Path) -> Path:
    """Путь к out_dir/decision.csv"""
    return Path(out_dir) / "decision.csv"


def get_retained_file(out_dir: Path) -> Path:
    """Путь к out_dir/retained.txt"""
    return Path(out_dir) / "retained.txt"


def get_heatmap_file(out_dir: Path) -> Path:
    """Путь к out_dir/importance.pgm"""
    return Path(out_dir) / "importance.pgm"


def get_budget_file(out_dir: Path) -> Path:
    """Путь к out_dir/budget.csv"""
    return Path(out_dir) / "budget.csv"


def get_batch_dir(out_dir: Path, dump_path: Path) -> Path:
    """
    Поддиректория результатов для одного дампа в пакетном режиме.

    Args:
        out_dir: Общая выходная директория
        dump_path: Путь к дампу

    Returns:
        Путь к out_dir/{имя дампа без расширения}/
    """
    return Path(out_dir) / Path(dump_path).stem


def ensure_directories(*paths: Path) -> None:
    """
    Обеспечивает существование директорий, создавая их при необходимости.

    Args:
        *paths: Переменное количество объектов Path для проверки существования
    """
    for path in paths:
        Path(path).mkdir(parents=True, exist_ok=True)


def has_unique_stems(paths: Sequence[Path]) -> bool:
    """Проверяет, что имена дампов без расширения не повторяются."""
    stems = [Path(p).stem for p in paths]
    return len(stems) == len(set(stems))
