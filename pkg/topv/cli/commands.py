"""
Команды CLI для TopV
Реализует все команды интерфейса командной строки.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.budget import flops_ratio, get_preset, sweep
from ..core.config import ConfigError, RunConfig
from ..core.errors import ContractError, NumericalError, ShapeError
from ..core.oracle import OracleError
from ..core.pipeline import make_targets, process_dump, run_batch
from ..core.storage import Storage, StorageError
from ..core.tokens import DumpError, TokenSet, load_dump, save_dump
from ..core.verification import run_oracle_suite
from ..utils.formatters import (
    format_elapsed,
    format_key_value,
    format_ratio,
    format_table,
    print_error,
    print_header,
    print_info,
    print_subsection,
    print_success,
    print_warning,
)
from ..utils.paths import get_batch_dir, has_unique_stems

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

DEFAULT_VERIFY_SIZES = (2, 4, 8, 16)


class UsageError(Exception):
    """Некорректные аргументы командной строки"""
    pass


def exit_code_for(error: BaseException) -> int:
    """Код выхода для исключения: 1 конфигурация, 2 ввод-вывод, 3 численная ошибка."""
    if isinstance(error, (NumericalError, OracleError)):
        return EXIT_NUMERICAL
    if isinstance(error, (StorageError, DumpError, OSError)):
        return EXIT_IO
    return EXIT_CONFIG


def parse_options(
    args: List[str], options: Dict[str, bool]
) -> Tuple[List[str], Dict[str, str], Dict[str, str]]:
    """
    Разбирает аргументы команды.

    Аргументы:
        args: Аргументы после имени команды
        options: Имя опции -> принимает ли она значение

    Возвращает:
        (позиционные аргументы, опции, переопределения конфигурации вида section.field)
    """
    positionals: List[str] = []
    values: Dict[str, str] = {}
    overrides: Dict[str, str] = {}

    i = 0
    while i < len(args):
        arg = args[i]
        if arg == "--":
            positionals.extend(args[i + 1 :])
            break
        if not arg.startswith("--"):
            positionals.append(arg)
            i += 1
            continue

        name, has_value, inline = arg[2:].partition("=")
        is_override = "." in name
        if not is_override and name not in options:
            raise UsageError(f"Неизвестная опция: --{name}")

        if is_override or options[name]:
            if has_value:
                value = inline
            elif i + 1 < len(args):
                i += 1
                value = args[i]
            else:
                raise UsageError(f"Опция --{name} требует значения")
            (overrides if is_override else values)[name] = value
        else:
            if has_value:
                raise UsageError(f"Флаг --{name} не принимает значения")
            values[name] = "true"
        i += 1

    return positionals, values, overrides


def _int_option(values: Dict[str, str], name: str, default: Optional[int], minimum: int = 0):
    if name not in values:
        return default
    try:
        number = int(values[name])
    except ValueError:
        raise UsageError(f"--{name} ожидает целое число, получено '{values[name]}'")
    if number < minimum:
        raise UsageError(f"--{name} должен быть >= {minimum}: {number}")
    return number


def _float_option(values: Dict[str, str], name: str, default: float) -> float:
    if name not in values:
        return default
    try:
        return float(values[name])
    except ValueError:
        raise UsageError(f"--{name} ожидает число, получено '{values[name]}'")


def _require(values: Dict[str, str], name: str) -> str:
    if name not in values:
        raise UsageError(f"Отсутствует обязательная опция --{name}")
    return values[name]


def parse_sweep(text: str) -> Tuple[float, float, float]:
    """Разбирает 'ratio=a:b:step' (префикс 'ratio=' необязателен)."""
    body = text.split("=", 1)[1] if text.startswith("ratio=") else text
    parts = body.split(":")
    if len(parts) != 3:
        raise UsageError(f"Ожидалось --sweep ratio=a:b:step, получено '{text}'")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"Некорректные числа в --sweep: '{text}'")
    return start, stop, step


def parse_sizes(text: str) -> List[int]:
    """Разбирает список размеров '2,4,8'."""
    try:
        sizes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Некорректный список размеров: '{text}'")
    if not sizes:
        raise UsageError("Список размеров пуст")
    return sizes


class CLI:
    """
    Интерфейс командной строки для TopV.

    Каждая команда возвращает код выхода; исключения ядра переводятся в коды
    в run().
    """

    def __init__(self):
        self.verbose = False

    def run(self, args: List[str]) -> int:
        """
        Запустить команду CLI.

        Аргументы:
            args: Аргументы командной строки

        Возвращает:
            Код выхода: 0 успех, 1 конфигурация, 2 ввод-вывод, 3 численная ошибка
        """
        args = list(args)
        if "--verbose" in args:
            args.remove("--verbose")
            self.verbose = True
        logging.basicConfig(level=logging.DEBUG if self.verbose else logging.WARNING)

        if not args:
            return self.show_help()

        command = args[0].lower()
        rest_args = args[1:]

        # Маршрутизация команд
        commands = {
            "prune": self.cmd_prune,
            "verify": self.cmd_verify,
            "budget": self.cmd_budget,
            "simulate": self.cmd_simulate,
            "gen": self.cmd_gen,
            "help": self.show_help,
            "version": self.show_version,
        }

        if command not in commands:
            print_error(f"Неизвестная команда: {command}")
            print_info("Запустите 'topv help' для получения информации об использовании")
            return EXIT_CONFIG

        try:
            return commands[command](rest_args)
        except UsageError as e:
            print_error(str(e))
            print_info("Запустите 'topv help' для получения информации об использовании")
            return EXIT_CONFIG
        except (ConfigError, ContractError, ShapeError) as e:
            print_error(f"Ошибка конфигурации: {e}")
            return EXIT_CONFIG
        except (StorageError, DumpError, OSError) as e:
            print_error(f"Ошибка ввода-вывода: {e}")
            return EXIT_IO
        except (NumericalError, OracleError) as e:
            print_error(f"Численная ошибка: {e}")
            return EXIT_NUMERICAL

    def _load_config(self, values: Dict[str, str], overrides: Dict[str, str]) -> RunConfig:
        path = values.get("config")
        config = RunConfig.load(Path(path) if path else None)
        return config.with_overrides(overrides) if overrides else config

    # ==================== Отсечение ====================

    def cmd_prune(self, args: List[str]) -> int:
        """Отсечь токены одного или нескольких дампов."""
        dumps, values, overrides = parse_options(
            args, {"config": True, "out": True, "jobs": True}
        )
        if not dumps:
            raise UsageError(
                "Использование: topv prune <дамп> [<дамп> ...] --out <директория> "
                "[--config <файл>] [--jobs K] [--section.field=value]"
            )
        out_dir = Path(_require(values, "out"))
        jobs = _int_option(values, "jobs", 1, minimum=1)
        config = self._load_config(values, overrides)

        if len(dumps) == 1:
            result = process_dump(Path(dumps[0]), config, out_dir)
            self._show_result(dumps[0], result, out_dir)
            return EXIT_OK

        if not has_unique_stems(dumps):
            raise UsageError("Имена дампов (без расширения) должны быть уникальны")

        batch = [(Path(d), get_batch_dir(out_dir, Path(d))) for d in dumps]
        exit_code = EXIT_OK
        for (dump_path, dump_out), (_, outcome) in zip(batch, run_batch(batch, config, jobs)):
            if isinstance(outcome, Exception):
                print_error(f"{dump_path}: {outcome}")
                exit_code = max(exit_code, exit_code_for(outcome))
            else:
                self._show_result(str(dump_path), outcome, dump_out)

        print_info(f"Обработано дампов: {len(dumps)}, потоков: {jobs}")
        return exit_code

    def _show_result(self, dump: str, result, out_dir: Path) -> None:
        """Показать итог отсечения одного дампа."""
        source = result.source
        print_success(f"Обработан {dump}: N={source.n_tokens}, d={source.dim}")
        print_info(
            f"Оценка важности (стоимость + Синхорн): {format_elapsed(result.scoring_seconds)}, "
            f"итераций: {result.plan.iterations_used}"
        )
        print(format_key_value(result.decision.summary()))
        budget = result.budget
        print_info(
            f"FLOPs: -{format_ratio(budget.flops_ratio_tokenfraction)}, "
            f"KV-кэш: {format_ratio(budget.kv_ratio)}"
        )
        print_info(f"Результаты: {out_dir}")

    # ==================== Проверка ====================

    def cmd_verify(self, args: List[str]) -> int:
        """Сверить решатель с эталоном на случайных задачах."""
        _, values, _ = parse_options(
            args, {"seed": True, "sizes": True, "instances": True, "epsilon": True}
        )
        seed = _int_option(values, "seed", 0)
        sizes = parse_sizes(values["sizes"]) if "sizes" in values else list(DEFAULT_VERIFY_SIZES)
        instances = _int_option(values, "instances", 50, minimum=1)
        epsilon = _float_option(values, "epsilon", 0.1)

        report = run_oracle_suite(seed, sizes, instances=instances, epsilon=epsilon)

        print_header(f"Сверка с эталоном (seed={seed})")
        print(
            format_table(
                report.rows(), ["check", "N", "instances", "worst", "tolerance", "status"]
            )
        )
        print()

        if not report.passed:
            print_error(f"Не пройдено проверок: {len(report.failures)} из {len(report.checks)}")
            return EXIT_NUMERICAL
        print_success(f"Все проверки пройдены ({len(report.checks)})")
        return EXIT_OK

    # ==================== Бюджет ====================

    def cmd_budget(self, args: List[str]) -> int:
        """Оценить экономию FLOPs и KV-кэша."""
        _, values, overrides = parse_options(
            args,
            {"config": True, "retained": True, "preset": True, "sweep": True, "csv": True},
        )
        config = RunConfig.load(Path(values["config"]) if "config" in values else None)
        if "preset" in values:
            config = config.with_shape(get_preset(values["preset"]))
        if overrides:
            config = config.with_overrides(overrides)
        shape = config.model_shape

        print_header("Бюджет FLOPs и KV-кэша")
        print(
            format_key_value(
                {
                    "n_layers": shape.n_layers,
                    "hidden": shape.hidden,
                    "mlp_hidden": shape.mlp_hidden,
                    "n_visual": shape.n_visual,
                    "prune_layer": shape.prune_layer,
                }
            )
        )

        if "sweep" in values:
            start, stop, step = parse_sweep(values["sweep"])
            rows = sweep(shape, config.prune, start, stop, step)
            columns = list(rows[0]) if rows else []
            print_subsection("Развёртка по prune_ratio")
            print(format_table(rows, columns))
            if "csv" in values:
                Storage.write_csv(
                    Path(values["csv"]), columns, [[row[c] for c in columns] for row in rows]
                )
                print_info(f"Таблица записана: {values['csv']}")
            return EXIT_OK

        if "retained" in values:
            retained = _int_option(values, "retained", None)
        else:
            retained = config.prune.counts(shape.n_visual)[3]
        report = flops_ratio(retained, shape).to_dict()

        print_subsection("Отчёт")
        print(format_key_value(report))
        if "csv" in values:
            Storage.write_csv(Path(values["csv"]), list(report), [list(report.values())])
            print_info(f"Отчёт записан: {values['csv']}")
        return EXIT_OK

    # ==================== Данные ====================

    def cmd_simulate(self, args: List[str]) -> int:
        """Записать дамп с целями игрушечного блока."""
        positionals, values, overrides = parse_options(args, {"config": True, "out": True})
        if len(positionals) != 1:
            raise UsageError(
                "Использование: topv simulate <дамп> --out <файл> [--config <файл>] [--sim.*]"
            )
        out_path = Path(_require(values, "out"))
        config = self._load_config(values, overrides)

        source, target = load_dump(Path(positionals[0]))
        if target is not None:
            print_warning("Дамп уже содержит цели; они будут заменены целями симулятора")

        simulated = make_targets(source, config)
        save_dump(source, simulated, out_path)
        print_success(
            f"Записан дамп {out_path}: N={source.n_tokens}, d={source.dim}, "
            f"tap={config.sim.tap.value}"
        )
        return EXIT_OK

    def cmd_gen(self, args: List[str]) -> int:
        """Сгенерировать синтетический дамп гауссовых токенов."""
        _, values, _ = parse_options(
            args,
            {"n": True, "dim": True, "grid-h": True, "grid-w": True, "seed": True, "out": True},
        )
        out_path = Path(_require(values, "out"))
        dim = _int_option(values, "dim", None, minimum=1)
        grid_h = _int_option(values, "grid-h", None, minimum=1)
        grid_w = _int_option(values, "grid-w", None, minimum=1)
        if dim is None or grid_h is None or grid_w is None:
            raise UsageError(
                "Использование: topv gen --dim D --grid-h H --grid-w W [--n N] [--seed S] --out <файл>"
            )
        n_tokens = _int_option(values, "n", grid_h * grid_w, minimum=1)
        if n_tokens != grid_h * grid_w:
            raise UsageError(f"--n={n_tokens} должно равняться grid-h * grid-w = {grid_h * grid_w}")
        seed = _int_option(values, "seed", 0)

        rng = np.random.default_rng(seed)
        data = rng.standard_normal((n_tokens, dim)).astype(np.float32)
        save_dump(TokenSet.from_grid(data, grid_h, grid_w), None, out_path)
        print_success(f"Записан дамп {out_path}: N={n_tokens}, d={dim}, сетка {grid_h}x{grid_w}")
        return EXIT_OK

    # ==================== Команды информации ====================

    def show_help(self, args: List[str] = None) -> int:
        """Показать справочную информацию."""
        print_header("TopV - Справка")

        print("ИСПОЛЬЗОВАНИЕ:")
        print("  topv <команда> [опции] [--verbose]\n")

        print("КОМАНДЫ:")
        print("  prune <дамп> [<дамп> ...] --out <директория> [--config <файл>] [--jobs K]")
        print("    Оценить важность токенов и отсечь их (decision.csv, retained.txt,")
        print("    importance.pgm, budget.csv)")
        print("  verify [--seed S] [--sizes 2,4,8,16] [--instances K] [--epsilon E]")
        print("    Сверить решатель Синхорна с эталоном")
        print("  budget [--config <файл>] [--preset NAME] [--retained N]")
        print("         [--sweep ratio=a:b:step] [--csv <файл>]")
        print("    Оценить экономию FLOPs и KV-кэша")
        print("  simulate <дамп> --out <файл> [--config <файл>]")
        print("    Добавить в дамп цели игрушечного трансформерного блока")
        print("  gen --dim D --grid-h H --grid-w W [--n N] [--seed S] --out <файл>")
        print("    Сгенерировать синтетический дамп гауссовых токенов\n")

        print("ДРУГИЕ КОМАНДЫ:")
        print("  help")
        print("    Показать эту справку")
        print("  version")
        print("    Показать версию\n")

        print("ПЕРЕОПРЕДЕЛЕНИЯ:")
        print("  Любое поле конфигурации: --section.field=value")
        print("  (cost, sinkhorn, prune, sim, model_shape), например --cost.sigma=10\n")

        print("КОДЫ ВЫХОДА:")
        print("  0 успех, 1 ошибка конфигурации, 2 ошибка ввода-вывода, 3 численная ошибка\n")

        print("ПРИМЕРЫ:")
        print("  # Синтетический дамп 24x24 и цели симулятора")
        print("  topv gen --n 576 --dim 64 --grid-h 24 --grid-w 24 --seed 7 --out src.topv")
        print("  topv simulate src.topv --out pair.topv\n")

        print("  # Отсечение с конфигурацией по умолчанию")
        print("  topv prune pair.topv --out results/\n")

        print("  # Развёртка бюджета для LLaVA-13B")
        print("  topv budget --preset llava-13b --sweep ratio=0.1:0.9:0.1\n")

        return EXIT_OK

    def show_version(self, args: List[str] = None) -> int:
        """Показать информацию о версии."""
        from .. import __version__

        print(f"TopV v{__version__}")
        print("Отсечение визуальных токенов через оптимальный транспорт")

        return EXIT_OK
