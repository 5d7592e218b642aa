"""
Рёберное соответствие: по одному частичному паросочетанию цветов на каждую
пару инцидентных рёбер.

Паросочетание пары {e, f} хранится один раз в канонической ориентации
(меньший id первым); запрос с обратной стороны возвращает обращённые пары.
Цвета - целые 1..q.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from core.exceptions import NotACycle, NotIncident
from core.graph import SimpleGraph

logger = logging.getLogger(__name__)

PairKey = Tuple[int, int]
ColourPair = Tuple[int, int]


def canonical_key(e: int, f: int) -> PairKey:
    return (e, f) if e < f else (f, e)


@dataclass
class EdgeCorrespondence:
    """
    Соответствие M_{e,f} для графа.

    Конструктор не проверяет инварианты: это делает validate_correspondence,
    чтобы некорректные экземпляры из файлов можно было загрузить и описать.
    """

    graph: SimpleGraph
    q: int
    matchings: Dict[PairKey, Tuple[ColourPair, ...]]
    _forward: Dict[PairKey, Dict[int, int]] = field(init=False, repr=False, compare=False)
    _backward: Dict[PairKey, Dict[int, int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        normalized: Dict[PairKey, Tuple[ColourPair, ...]] = {}
        for (a, b), pairs in self.matchings.items():
            pairs = [(int(x), int(y)) for x, y in pairs]
            if a > b:
                a, b = b, a
                pairs = [(y, x) for x, y in pairs]
            normalized[(a, b)] = tuple(sorted(pairs))
        self.matchings = dict(sorted(normalized.items()))
        # При повторах в паросочетании словари хранят последнюю пару; такие
        # экземпляры отвергает validate_correspondence.
        self._forward = {key: {x: y for x, y in pairs} for key, pairs in self.matchings.items()}
        self._backward = {key: {y: x for x, y in pairs} for key, pairs in self.matchings.items()}

    def partner(self, e: int, c: int, f: int) -> Optional[int]:
        """Цвет c' на f, блокируемый цветом c на e (пара (c, c') в M_{e,f}), или None."""
        if not self.graph.are_incident(e, f):
            raise NotIncident(e, f)
        key = canonical_key(e, f)
        table = self._forward if e < f else self._backward
        return table.get(key, {}).get(c)

    def pairs_for(self, e: int, f: int) -> List[ColourPair]:
        """Пары M_{e,f}, прочитанные со стороны e."""
        if not self.graph.are_incident(e, f):
            raise NotIncident(e, f)
        pairs = self.matchings.get(canonical_key(e, f), ())
        if e < f:
            return list(pairs)
        return sorted((y, x) for x, y in pairs)

    def partner_matrix(self) -> Dict[PairKey, np.ndarray]:
        """
        Для каждой ориентированной инцидентной пары (e, f) - массив длины q:
        0-базовый индекс цвета-партнёра на f или -1.
        """
        result: Dict[PairKey, np.ndarray] = {}
        for e, f in self.graph.incident_pairs():
            ef = np.full(self.q, -1, dtype=np.int64)
            fe = np.full(self.q, -1, dtype=np.int64)
            for x, y in self.matchings.get((e, f), ()):
                if 1 <= x <= self.q and 1 <= y <= self.q:
                    ef[x - 1] = y - 1
                    fe[y - 1] = x - 1
            result[(e, f)] = ef
            result[(f, e)] = fe
        return result


@dataclass
class CorrespondenceReport:
    ok: bool
    pair: Optional[PairKey] = None
    reason: str = ""

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return f"пара {self.pair}: {self.reason}"


# --- Конструкторы ---

def identity_correspondence(graph: SimpleGraph, q: int) -> EdgeCorrespondence:
    """Тождественное соответствие: допустимые раскраски - правильные рёберные q-раскраски."""
    identity = tuple((c, c) for c in range(1, q + 1))
    return EdgeCorrespondence(graph, q, {key: identity for key in graph.incident_pairs()})


def _check_cycle(graph: SimpleGraph) -> None:
    if graph.edge_count != graph.vertex_count or graph.vertex_count < 3:
        raise NotACycle(f"Граф не является циклом: n={graph.vertex_count}, m={graph.edge_count}")
    if any(graph.degree(v) != 2 for v in range(graph.vertex_count)):
        raise NotACycle("Граф не является циклом: есть вершина степени, отличной от 2")
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for e in graph.incidence[v]:
            w = graph.other_endpoint(e, v)
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != graph.vertex_count:
        raise NotACycle("Граф не является циклом: он несвязен")


def shift_correspondence(
    graph: SimpleGraph, q: int, shifted_pairs: Iterable[Sequence[int]]
) -> EdgeCorrespondence:
    """
    Тождество на всех парах, кроме shifted_pairs, где стоит циклический сдвиг
    {(c, c mod q + 1)} в канонической ориентации.

    Один сдвиг на C4 при q=2 даёт нераскрашиваемый экземпляр.
    """
    _check_cycle(graph)
    shifted: Set[PairKey] = set()
    for pair in shifted_pairs:
        e, f = int(pair[0]), int(pair[1])
        if not graph.are_incident(e, f):
            raise NotIncident(e, f)
        shifted.add(canonical_key(e, f))

    identity = tuple((c, c) for c in range(1, q + 1))
    shift = tuple((c, c % q + 1) for c in range(1, q + 1))
    matchings = {key: (shift if key in shifted else identity) for key in graph.incident_pairs()}
    return EdgeCorrespondence(graph, q, matchings)


def random_correspondence(graph: SimpleGraph, q: int, density: float, seed: int) -> EdgeCorrespondence:
    """
    Для каждой инцидентной пары - случайное паросочетание размера floor(density*q):
    два случайных подмножества цветов, перемешанные и сшитые попарно.
    Поток каждой пары определяется (seed, e, f) и не зависит от остальных пар.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density должна лежать в [0, 1], получено {density}")
    size = int(np.floor(density * q + 1e-12))
    matchings: Dict[PairKey, Tuple[ColourPair, ...]] = {}
    for e, f in graph.incident_pairs():
        rng = np.random.default_rng([seed, e, f])
        firsts = rng.permutation(q)[:size] + 1
        seconds = rng.permutation(q)[:size] + 1
        matchings[(e, f)] = tuple((int(x), int(y)) for x, y in zip(firsts, seconds))
    logger.debug(f"random_correspondence: q={q}, density={density}, размер паросочетаний {size}, пар {len(matchings)}")
    return EdgeCorrespondence(graph, q, matchings)


# --- Проверка ---

def validate_correspondence(corr: EdgeCorrespondence) -> CorrespondenceReport:
    """Проверяет инварианты соответствия; сообщает первую нарушающую пару в порядке ключей."""
    if corr.q < 1:
        return CorrespondenceReport(False, None, f"q должно быть >= 1, получено {corr.q}")
    graph = corr.graph
    for (a, b), pairs in corr.matchings.items():
        if not (0 <= a < graph.edge_count and 0 <= b < graph.edge_count):
            return CorrespondenceReport(False, (a, b), "ребро вне диапазона")
        if not graph.are_incident(a, b):
            return CorrespondenceReport(False, (a, b), "паросочетание на неинцидентной паре")
        firsts: Set[int] = set()
        seconds: Set[int] = set()
        for x, y in pairs:
            if not (1 <= x <= corr.q and 1 <= y <= corr.q):
                return CorrespondenceReport(False, (a, b), f"цвет вне диапазона 1..{corr.q} в паре ({x}, {y})")
            if x in firsts:
                return CorrespondenceReport(False, (a, b), f"цвет {x} повторяется как первый элемент")
            if y in seconds:
                return CorrespondenceReport(False, (a, b), f"цвет {y} повторяется как второй элемент")
            firsts.add(x)
            seconds.add(y)
    return CorrespondenceReport(True)


def correspondence_from_pairs(
    graph: SimpleGraph, q: int, matchings: Mapping[PairKey, Iterable[Sequence[int]]]
) -> EdgeCorrespondence:
    """Соответствие из явных списков пар; пары без записи получают пустое паросочетание."""
    raw = {(int(a), int(b)): [(int(x), int(y)) for x, y in pairs] for (a, b), pairs in matchings.items()}
    return EdgeCorrespondence(graph, q, raw)
