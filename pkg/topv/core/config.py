"""
Конфигурация запуска для TopV

RunConfig собирает настройки всех модулей: cost, sinkhorn, prune, sim,
model_shape. Загружается из JSON, дополняется переопределениями вида
--section.field=value и проверяется контрактами модулей до любых расчётов.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

from .budget import ModelShape
from .cost import CostConfig
from .errors import ContractError
from .layersim import Tap, ToyBlockConfig
from .pruner import PruneConfig
from .sinkhorn import SinkhornConfig
from .storage import Storage, StorageError


class ConfigError(Exception):
    """Базовое исключение для ошибок конфигурации"""
    pass


@dataclass(frozen=True)
class SimConfig:
    """
    Настройки симулятора в RunConfig.

    dim = None означает "взять размерность из дампа".
    """

    dim: Optional[int] = None
    heads: int = 2
    mlp_mult: int = 4
    seed: int = 0
    tap: Tap = Tap.POST_LN

    def __post_init__(self):
        object.__setattr__(self, "tap", Tap(self.tap))
        # Проверяет всё, кроме dim, на реальном конфиге блока
        self.block_config(self.dim if self.dim is not None else self.heads)

    def block_config(self, token_dim: int) -> ToyBlockConfig:
        """
        Конфиг блока для токенов размерности token_dim.

        Raises:
            ConfigError: Если явно заданная dim не совпадает с token_dim
        """
        if self.dim is not None and self.dim != token_dim:
            raise ConfigError(
                f"sim.dim={self.dim} не совпадает с размерностью токенов {token_dim}"
            )
        return ToyBlockConfig(
            dim=token_dim,
            heads=self.heads,
            mlp_mult=self.mlp_mult,
            seed=self.seed,
            tap=self.tap,
        )


SECTIONS = {
    "cost": CostConfig,
    "sinkhorn": SinkhornConfig,
    "prune": PruneConfig,
    "sim": SimConfig,
    "model_shape": ModelShape,
}

# Имена в JSON, отличающиеся от полей dataclass
_ALIASES = {("prune", "ratio"): "prune_ratio"}
_REVERSE_ALIASES = {(s, f): a for (s, a), f in _ALIASES.items()}


@dataclass(frozen=True)
class RunConfig:
    cost: CostConfig = field(default_factory=CostConfig)
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    model_shape: ModelShape = field(default_factory=ModelShape)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Создает RunConfig из словаря.

        Raises:
            ConfigError: Если есть неизвестные ключи или значения нарушают контракты
        """
        if not isinstance(data, dict):
            raise ConfigError("Конфигурация должна быть JSON-объектом")

        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"Неизвестные секции конфигурации: {', '.join(unknown)}")

        sections = {}
        for name, section_cls in SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"Секция '{name}' должна быть объектом")
            sections[name] = _build_section(name, section_cls, raw)
        return cls(**sections)

    @classmethod
    def load(cls, path: Optional[Path]) -> "RunConfig":
        """
        Загружает конфигурацию с диска (или значения по умолчанию без пути).

        Raises:
            ConfigError: Если файл не найден, не читается или невалиден
        """
        if path is None:
            return cls()
        try:
            data = Storage.load_json(Path(path))
        except StorageError as e:
            raise ConfigError(f"Не удалось загрузить конфигурацию: {e}")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        """Конвертирует в словарь для сериализации (имена как в JSON)."""
        result = {}
        for name in SECTIONS:
            section = {}
            for key, value in asdict(getattr(self, name)).items():
                key = _REVERSE_ALIASES.get((name, key), key)
                section[key] = value.value if isinstance(value, Enum) else value
            result[name] = section
        return result

    def with_shape(self, shape: ModelShape) -> "RunConfig":
        """Копия конфигурации с другой формой модели (пресеты бюджета)."""
        return replace(self, model_shape=shape)

    def with_overrides(self, overrides: Dict[str, str]) -> "RunConfig":
        """
        Применяет переопределения вида {"cost.sigma": "10"}.

        Значения приводятся к типу поля (bool принимает true/false/1/0/yes/no).

        Raises:
            ConfigError: Если путь неизвестен или значение не приводится к типу
        """
        data = self.to_dict()
        for dotted, raw in overrides.items():
            section, _, key = dotted.partition(".")
            if section not in data or not key or key not in data[section]:
                raise ConfigError(f"Неизвестный параметр конфигурации: {dotted}")
            data[section][key] = _parse_text(section, key, raw)
        return RunConfig.from_dict(data)


def _build_section(name: str, section_cls, raw: Dict[str, Any]):
    known = {f.name for f in fields(section_cls)}
    kwargs = {}
    for key, value in raw.items():
        field_name = _ALIASES.get((name, key), key)
        if field_name not in known:
            raise ConfigError(f"Неизвестный параметр '{name}.{key}'")
        kwargs[field_name] = _normalize(name, field_name, value)
    try:
        return section_cls(**kwargs)
    except (ContractError, ValueError, TypeError) as e:
        raise ConfigError(f"Некорректная секция '{name}': {e}")


def _field_kind(section: str, field_name: str) -> type:
    """Тип поля по значению по умолчанию (None у sim.dim означает int)."""
    default = getattr(SECTIONS[section](), field_name)
    if isinstance(default, Enum):
        return str
    if default is None:
        return int
    return type(default)


def _normalize(section: str, field_name: str, value: Any) -> Any:
    """Проверяет тип значения из JSON и приводит целые/вещественные."""
    kind = _field_kind(section, field_name)
    where = f"{section}.{field_name}"
    if value is None and (section, field_name) == ("sim", "dim"):
        return None
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: ожидалось true/false, получено {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where}: ожидалось число, получено {value!r}")
    if kind is int:
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{where}: ожидалось целое, получено {value!r}")
        return value
    if kind is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: ожидалось число, получено {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: ожидалась строка, получено {value!r}")
    return value


_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _parse_text(section: str, key: str, raw: str) -> Any:
    """Разбирает значение переопределения из командной строки."""
    field_name = _ALIASES.get((section, key), key)
    kind = _field_kind(section, field_name)
    text = str(raw).strip()
    dotted = f"{section}.{key}"
    if text.lower() in ("null", "none") and (section, field_name) == ("sim", "dim"):
        return None
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"Некорректное значение для {dotted}: '{raw}'")
