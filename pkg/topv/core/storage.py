"""
Слой хранения для TopV

Обрабатывает все операции ввода-вывода файлов с правильной обработкой ошибок.
Все записи атомарны: сначала временный файл, затем переименование.
"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence


class StorageError(Exception):
    """Базовое исключение для ошибок хранения данных"""
    pass


class Storage:
    """
    Обрабатывает операции файлового хранения для TopV.

    Обеспечивает безопасные операции чтения/записи для JSON, текстовых,
    бинарных и CSV файлов с единообразной обработкой ошибок.
    """

    @staticmethod
    def load_json(path: Path) -> Dict[str, Any]:
        """
        Загружает данные из JSON файла.

        Args:
            path: Путь к JSON файлу

        Returns:
            Словарь с загруженными данными

        Raises:
            StorageError: Если файл не найден, не читается или не является JSON-объектом
        """
        path = Path(path)
        if not path.is_file():
            raise StorageError(f"Файл не найден: {path}")

        try:
            with path.open("r", encoding="utf-8") as f:
                data = json.load(f)

            if not isinstance(data, dict):
                raise StorageError(
                    f"Неверный формат JSON в {path}: ожидался объект, получен {type(data).__name__}"
                )

            return data

        except json.JSONDecodeError as e:
            raise StorageError(f"Не удалось распарсить JSON из {path}: {e}")
        except OSError as e:
            raise StorageError(f"Не удалось прочитать файл {path}: {e}")

    @staticmethod
    def read_bytes(path: Path) -> bytes:
        """
        Читает бинарный файл целиком.

        Raises:
            StorageError: Если файл не существует или не может быть прочитан
        """
        path = Path(path)
        try:
            return path.read_bytes()
        except OSError as e:
            raise StorageError(f"Не удалось прочитать файл {path}: {e}")

    @staticmethod
    def write_bytes(path: Path, content: bytes) -> None:
        """
        Записывает бинарные данные в файл атомарно.

        Создает родительские директории, если они не существуют.

        Raises:
            StorageError: Если файл не может быть записан
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)

            temp_path = path.with_suffix(path.suffix + ".tmp")
            temp_path.write_bytes(content)

            # Переименовывает временный файл в целевой (атомарно на POSIX системах)
            temp_path.replace(path)

        except OSError as e:
            raise StorageError(f"Не удалось записать файл {path}: {e}")

    @staticmethod
    def write_text(path: Path, content: str) -> None:
        """
        Записывает текст в файл.

        Строки всегда завершаются символом '\\n' независимо от платформы,
        чтобы результаты были побайтово воспроизводимы.

        Args:
            path: Путь к текстовому файлу
            content: Текстовое содержимое для записи

        Raises:
            StorageError: Если файл не может быть записан
        """
        Storage.write_bytes(path, content.encode("utf-8"))

    @staticmethod
    def write_csv(
        path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> None:
        """
        Записывает таблицу в CSV файл.

        Args:
            path: Путь к CSV файлу
            header: Названия столбцов
            rows: Строки таблицы

        Raises:
            StorageError: Если файл не может быть записан
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        Storage.write_text(path, buffer.getvalue())

