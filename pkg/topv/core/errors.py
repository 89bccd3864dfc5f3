"""
Общие исключения TopV

Модульные исключения (DumpError, StorageError, ConfigError, OracleError)
объявлены рядом со своим кодом; здесь только те, что разделяют несколько модулей.
"""


class TopVError(Exception):
    """Базовое исключение для ошибок TopV"""
    pass


class ShapeError(TopVError, ValueError):
    """Несовпадение размерностей матриц или наборов токенов"""
    pass


class ContractError(TopVError, ValueError):
    """Нарушено предусловие операции или параметр вне допустимого диапазона"""
    pass


class NumericalError(TopVError, ArithmeticError):
    """Численная ошибка: переполнение, исчезновение или нечисловой результат"""
    pass
