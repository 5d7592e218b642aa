"""
Иерархия исключений проекта.

Ошибки входных данных наследуют ValueError, сбои выполнения - RuntimeError,
чтобы вызывающий код мог ловить их и по общему корню NibbleError.
"""

from typing import Any, List, Optional, Sequence, Tuple


class NibbleError(Exception):
    """Общий корень всех ошибок проекта."""


# --- Граф ---

class GraphError(NibbleError, ValueError):
    """Некорректный граф или запрос к нему."""


class LoopEdge(GraphError):
    def __init__(self, vertex: int):
        super().__init__(f"Петля в вершине {vertex}: граф должен быть простым")
        self.vertex = vertex


class DuplicateEdge(GraphError):
    def __init__(self, u: int, v: int):
        super().__init__(f"Кратное ребро ({u}, {v}): граф должен быть простым")
        self.pair = (u, v)


class VertexOutOfRange(GraphError):
    def __init__(self, vertex: int, vertex_count: int):
        super().__init__(f"Вершина {vertex} вне диапазона [0, {vertex_count})")
        self.vertex = vertex
        self.vertex_count = vertex_count


class InvalidSize(GraphError):
    """Недопустимый размер для генератора графов."""


class NotAnEndpoint(GraphError):
    def __init__(self, edge: int, vertex: int):
        super().__init__(f"Вершина {vertex} не является концом ребра {edge}")
        self.edge = edge
        self.vertex = vertex


# --- Соответствие ---

class CorrespondenceError(NibbleError, ValueError):
    """Некорректное рёберное соответствие."""


class NotIncident(CorrespondenceError):
    def __init__(self, e: int, f: int):
        super().__init__(f"Рёбра {e} и {f} не инцидентны")
        self.pair = (e, f)


class NotACycle(CorrespondenceError):
    """Сдвиговое соответствие строится только на цикле."""


class InvalidCorrespondence(CorrespondenceError):
    def __init__(self, report: Any):
        super().__init__(f"Соответствие не прошло проверку: {report}")
        self.report = report


# --- Процедура nibble ---

class PropertyFailure(NibbleError, RuntimeError):
    """Нарушено свойство (1) для очередной итерации."""


class ListTooShort(PropertyFailure):
    def __init__(self, edge: int, size: int, target: int):
        super().__init__(f"Список ребра {edge} короче цели: {size} < {target}")
        self.edge = edge
        self.size = size
        self.target = target


class ProbabilityOverflow(PropertyFailure):
    def __init__(self, edge: int, vertex: int, colour: int, size: int, bound: float):
        super().__init__(
            f"|T({edge},{vertex},{colour})| = {size} > T_i = {bound:.6g}: "
            f"вероятность выравнивающей монетки больше 1"
        )
        self.edge = edge
        self.vertex = vertex
        self.colour = colour
        self.size = size
        self.bound = bound


class RetryExhausted(NibbleError, RuntimeError):
    def __init__(self, iteration: int, attempts: int, violations: Sequence[str]):
        preview = "; ".join(list(violations)[:5])
        super().__init__(
            f"Итерация {iteration}: свойство (1) не выполнено за {attempts} попыток. "
            f"Худшие нарушения: {preview}"
        )
        self.iteration = iteration
        self.attempts = attempts
        self.violations: List[str] = list(violations)


class ScheduleEmpty(NibbleError, RuntimeError):
    """Расписание не содержит ни одной исполнимой итерации."""


# --- Рекурсия параметров ---

class DomainError(NibbleError, ValueError):
    """Аргументы вне области определения формулы."""


class NoProgress(NibbleError, RuntimeError):
    def __init__(self, row: int, previous_ratio: float, ratio: float):
        super().__init__(
            f"Отношение L_i/T_i не растёт в строке {row}: {previous_ratio:.12g} -> {ratio:.12g} "
            f"(Δ слишком мало для выбранного ε)"
        )
        self.row = row
        self.previous_ratio = previous_ratio
        self.ratio = ratio


# --- Финишёр ---

class EmptyResidualList(NibbleError, RuntimeError):
    def __init__(self, edge: int):
        super().__init__(f"Остаточный список ребра {edge} пуст: условие локальной леммы не выполнено")
        self.edge = edge


class ResampleCapExceeded(NibbleError, RuntimeError):
    def __init__(self, count: int, remaining: Sequence[Tuple[int, int]]):
        super().__init__(
            f"Превышен лимит перевыборок ({count}); осталось нарушенных событий: {len(remaining)}"
        )
        self.count = count
        self.remaining = list(remaining)


# --- Точный оракул ---

class TooLarge(NibbleError, ValueError):
    def __init__(self, edges: int, q: int, max_edges: int, max_q: int):
        super().__init__(
            f"Экземпляр слишком велик для перебора: рёбер {edges} (лимит {max_edges}), q = {q} (лимит {max_q})"
        )
        self.edges = edges
        self.q = q


class InvalidPartial(NibbleError, ValueError):
    """Частичная раскраска уже нарушает соответствие."""


# --- Файлы ---

class InstanceFormatError(NibbleError, ValueError):
    def __init__(self, path: str, message: str, line: Optional[int] = None):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
