"""Ошибки библиотеки"""

from typing import Any


class CbdpError(Exception):
    pass


class ParameterError(CbdpError, ValueError):
    """Недопустимые параметры процесса (lambda, mu)"""


class DomainError(CbdpError, ValueError):
    """Аргумент вне области определения: индексы, вероятности, границы"""


class RegimeError(CbdpError):
    """Операция не поддерживается в данном режиме (Юла / критический / общий)"""


class StructureError(CbdpError):
    """Некорректное дерево: не бинарное, нет возрастов, нарушен ранг"""


class CapacityError(CbdpError):
    """Превышен лимит событий при прямой симуляции"""

    def __init__(self, events: int, cap: int) -> None:
        super().__init__(f"Превышен лимит событий: {events} > {cap}")
        self.events = events
        self.cap = cap


class QuadratureError(CbdpError):
    """Квадратура не сошлась; несёт лучшую оценку"""

    def __init__(self, message: str, best: Any) -> None:
        super().__init__(message)
        self.best = best


class NewickSyntaxError(CbdpError, ValueError):
    """Синтаксическая ошибка Newick с позицией"""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (позиция {offset})")
        self.offset = offset


class SamplingError(CbdpError):
    """Отбраковка не дала ни одного дерева за отведённые попытки"""

    def __init__(self, attempts: int, statistics: dict[str, int]) -> None:
        details = ", ".join(f"{reason}={count}" for reason, count in sorted(statistics.items()))
        super().__init__(f"Исчерпано {attempts} попыток ({details})")
        self.attempts = attempts
        self.statistics = statistics
