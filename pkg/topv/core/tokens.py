"""
Модель токенов и бинарный формат дампа TOPV

Набор токенов - матрица N x d признаков плюс координаты каждого токена
на сетке патчей. Дамп хранит один (источники) или два (источники и цели)
набора в float32, в памяти все расчёты идут в float64.

Порядок патчей фиксирован: построчно от левого верхнего угла, x меняется
быстрее всего (индекс i -> x = i mod grid_w, y = i div grid_w).
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import ShapeError
from .storage import Storage

MAGIC = b"TOPV"
VERSION = 1
HEADER = struct.Struct("<4sIIIIII")

KIND_SOURCE = 0
KIND_SOURCE_TARGET = 1


class DumpError(Exception):
    """Базовое исключение для ошибок формата дампа"""
    pass


class DumpFormatError(DumpError):
    """Неверная сигнатура, версия или заголовок"""
    pass


class DumpLengthError(DumpError):
    """Длина полезной нагрузки не совпадает с заголовком"""
    pass


class DumpDataError(DumpError):
    """В полезной нагрузке есть нечисловые значения"""
    pass


def grid_coords(grid_h: int, grid_w: int) -> np.ndarray:
    """
    Строит координаты сетки в построчном порядке.

    Args:
        grid_h: Высота сетки
        grid_w: Ширина сетки

    Returns:
        Массив формы (grid_h * grid_w, 2) со столбцами (x, y)
    """
    index = np.arange(grid_h * grid_w, dtype=np.int64)
    return np.stack([index % grid_w, index // grid_w], axis=1)


@dataclass(frozen=True, eq=False)
class TokenSet:
    """
    Неизменяемый набор токенов на сетке патчей.

    data хранится как float64 только для чтения, coords - пары (x, y).
    """

    data: np.ndarray
    grid_h: int
    grid_w: int
    coords: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ShapeError(f"Ожидалась матрица N x d, получено измерений: {data.ndim}")
        if self.grid_h <= 0 or self.grid_w <= 0:
            raise ShapeError(f"Размер сетки должен быть положительным: {self.grid_h}x{self.grid_w}")
        if not np.all(np.isfinite(data)):
            raise ShapeError("Признаки токенов должны быть конечными числами")

        coords = np.array(self.coords, dtype=np.int64)
        if coords.shape != (data.shape[0], 2):
            raise ShapeError(
                f"Ожидалось {data.shape[0]} пар координат, получена форма {coords.shape}"
            )
        if coords.size and (
            coords[:, 0].min() < 0
            or coords[:, 0].max() >= self.grid_w
            or coords[:, 1].min() < 0
            or coords[:, 1].max() >= self.grid_h
        ):
            raise ShapeError(f"Координаты выходят за пределы сетки {self.grid_h}x{self.grid_w}")

        data.setflags(write=False)
        coords.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_grid(cls, data: np.ndarray, grid_h: int, grid_w: int) -> "TokenSet":
        """
        Создает набор с автоматическими построчными координатами.

        Raises:
            ShapeError: Если число токенов не равно grid_h * grid_w
        """
        data = np.asarray(data)
        if data.ndim != 2 or data.shape[0] != grid_h * grid_w:
            raise ShapeError(
                f"Число токенов {data.shape[0] if data.ndim else 0} не совпадает "
                f"с сеткой {grid_h}x{grid_w}"
            )
        return cls(data, grid_h, grid_w, grid_coords(grid_h, grid_w))

    @property
    def n_tokens(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray) -> "TokenSet":
        """Тот же набор координат с новыми признаками (форма должна совпадать)."""
        if np.shape(data) != self.data.shape:
            raise ShapeError(f"Форма {np.shape(data)} не совпадает с {self.data.shape}")
        return TokenSet(data, self.grid_h, self.grid_w, self.coords)

    def is_row_major(self) -> bool:
        """Проверяет, что координаты совпадают с построчной раскладкой сетки."""
        return self.n_tokens == self.grid_h * self.grid_w and np.array_equal(
            self.coords, grid_coords(self.grid_h, self.grid_w)
        )


def load_dump(path: Path) -> Tuple[TokenSet, Optional[TokenSet]]:
    """
    Загружает дамп TOPV.

    Args:
        path: Путь к файлу дампа

    Returns:
        Набор источников и, если payload_kind = 1, набор целей

    Raises:
        StorageError: Если файл не может быть прочитан
        DumpFormatError: Если сигнатура, версия или заголовок неверны
        DumpLengthError: Если полезная нагрузка обрезана или слишком длинная
        DumpDataError: Если в данных есть NaN или бесконечности
    """
    raw = Storage.read_bytes(path)
    if len(raw) < HEADER.size:
        raise DumpFormatError(f"{path}: файл короче заголовка ({len(raw)} байт)")

    magic, version, n_tokens, dim, grid_h, grid_w, kind = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DumpFormatError(f"{path}: неверная сигнатура {magic!r}")
    if version != VERSION:
        raise DumpFormatError(f"{path}: неподдерживаемая версия {version}")
    if kind not in (KIND_SOURCE, KIND_SOURCE_TARGET):
        raise DumpFormatError(f"{path}: неизвестный тип полезной нагрузки {kind}")
    if n_tokens == 0 or dim == 0 or n_tokens != grid_h * grid_w:
        raise DumpFormatError(
            f"{path}: заголовок несогласован (N={n_tokens}, d={dim}, сетка {grid_h}x{grid_w})"
        )

    n_sets = 2 if kind == KIND_SOURCE_TARGET else 1
    expected = n_sets * n_tokens * dim * 4
    payload = raw[HEADER.size:]
    if len(payload) != expected:
        raise DumpLengthError(
            f"{path}: ожидалось {expected} байт данных, получено {len(payload)}"
        )

    values = np.frombuffer(payload, dtype="<f4").reshape(n_sets, n_tokens, dim)
    if not np.all(np.isfinite(values)):
        raise DumpDataError(f"{path}: данные содержат нечисловые значения")

    source = TokenSet.from_grid(values[0].astype(np.float64), grid_h, grid_w)
    target = None
    if n_sets == 2:
        target = TokenSet.from_grid(values[1].astype(np.float64), grid_h, grid_w)
    return source, target


def encode_dump(source: TokenSet, target: Optional[TokenSet] = None) -> bytes:
    """
    Кодирует наборы токенов в байты формата TOPV.

    Raises:
        ShapeError: Если формы не совпадают или набор не лежит на полной сетке
    """
    if source.n_tokens != source.grid_h * source.grid_w:
        raise ShapeError("Дамп хранит только полные сетки (N = grid_h * grid_w)")
    if target is not None and (
        target.data.shape != source.data.shape
        or (target.grid_h, target.grid_w) != (source.grid_h, source.grid_w)
    ):
        raise ShapeError(
            f"Форма целей {target.data.shape} ({target.grid_h}x{target.grid_w}) не совпадает "
            f"с источниками {source.data.shape} ({source.grid_h}x{source.grid_w})"
        )

    kind = KIND_SOURCE if target is None else KIND_SOURCE_TARGET
    header = HEADER.pack(
        MAGIC, VERSION, source.n_tokens, source.dim, source.grid_h, source.grid_w, kind
    )
    parts = [header, source.data.astype("<f4").tobytes(order="C")]
    if target is not None:
        parts.append(target.data.astype("<f4").tobytes(order="C"))
    return b"".join(parts)


def save_dump(source: TokenSet, target: Optional[TokenSet], path: Path) -> None:
    """
    Сохраняет наборы токенов в дамп TOPV.

    Args:
        source: Набор источников
        target: Необязательный набор целей той же формы
        path: Путь к файлу дампа

    Raises:
        ShapeError: Если формы не совпадают
        StorageError: Если файл не может быть записан
    """
    Storage.write_bytes(path, encode_dump(source, target))
