"""
Простой граф с индексом инцидентности и детерминированные генераторы.

Идентификаторы рёбер выдаются в порядке вставки; все «произвольные» выборы
дальше по конвейеру разрешаются в пользу меньшего id.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Sequence, Tuple

import networkx as nx
import numpy as np

from core.exceptions import (
    DuplicateEdge,
    InvalidSize,
    LoopEdge,
    NotAnEndpoint,
    VertexOutOfRange,
)

logger = logging.getLogger(__name__)

EdgeId = int
VertexId = int


@dataclass(frozen=True)
class SimpleGraph:
    """Неизменяемый простой граф. Создавать через build_graph."""

    vertex_count: int
    edges: Tuple[Tuple[int, int], ...]
    incidence: Tuple[Tuple[int, ...], ...]
    max_degree: int
    _index: Dict[FrozenSet[int], int] = field(repr=False, compare=False, default_factory=dict)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def endpoints(self, e: EdgeId) -> Tuple[int, int]:
        return self.edges[e]

    def other_endpoint(self, e: EdgeId, v: VertexId) -> int:
        u, w = self.edges[e]
        if v == u:
            return w
        if v == w:
            return u
        raise NotAnEndpoint(e, v)

    def degree(self, v: VertexId) -> int:
        return len(self.incidence[v])

    def edge_id(self, u: VertexId, v: VertexId) -> int:
        return self._index[frozenset((u, v))]

    def incident_edges(self, e: EdgeId, v: VertexId) -> List[int]:
        """Рёбра, отличные от e и содержащие v, по возрастанию id."""
        if v not in self.edges[e]:
            raise NotAnEndpoint(e, v)
        return [f for f in self.incidence[v] if f != e]

    def neighbours(self, e: EdgeId) -> List[int]:
        u, v = self.edges[e]
        return self.incident_edges(e, u) + self.incident_edges(e, v)

    def are_incident(self, e: EdgeId, f: EdgeId) -> bool:
        if e == f:
            return False
        return bool(set(self.edges[e]) & set(self.edges[f]))

    def shared_vertex(self, e: EdgeId, f: EdgeId) -> int:
        common = set(self.edges[e]) & set(self.edges[f])
        # В простом графе у двух разных рёбер не больше одной общей вершины.
        return next(iter(common)) if e != f and common else -1

    def incident_pairs(self) -> Iterator[Tuple[int, int]]:
        """Каждая неупорядоченная пара инцидентных рёбер ровно один раз, (e, f) с e < f, по возрастанию."""
        pairs = []
        for v in range(self.vertex_count):
            pairs.extend(combinations(self.incidence[v], 2))
        return iter(sorted(pairs))

    def recompute_max_degree(self) -> int:
        return max((len(inc) for inc in self.incidence), default=0)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.vertex_count))
        for e, (u, v) in enumerate(self.edges):
            g.add_edge(u, v, id=e)
        return g


def build_graph(vertex_count: int, edge_list: Iterable[Sequence[int]]) -> SimpleGraph:
    """Строит простой граф, отвергая петли, кратные рёбра и вершины вне диапазона."""
    if vertex_count < 1:
        raise InvalidSize(f"Число вершин должно быть положительным, получено {vertex_count}")

    edges: List[Tuple[int, int]] = []
    index: Dict[FrozenSet[int], int] = {}
    incidence: List[List[int]] = [[] for _ in range(vertex_count)]
    for pair in edge_list:
        u, v = int(pair[0]), int(pair[1])
        for x in (u, v):
            if not 0 <= x < vertex_count:
                raise VertexOutOfRange(x, vertex_count)
        if u == v:
            raise LoopEdge(u)
        key = frozenset((u, v))
        if key in index:
            raise DuplicateEdge(u, v)
        e = len(edges)
        index[key] = e
        edges.append((u, v))
        incidence[u].append(e)
        incidence[v].append(e)

    max_degree = max((len(inc) for inc in incidence), default=0)
    return SimpleGraph(
        vertex_count=vertex_count,
        edges=tuple(edges),
        incidence=tuple(tuple(inc) for inc in incidence),
        max_degree=max_degree,
        _index=index,
    )


# --- Генераторы ---

def gen_cycle(n: int) -> SimpleGraph:
    """Цикл C_n с рёбрами (i, i+1 mod n) в порядке i."""
    if n < 3:
        raise InvalidSize(f"Цикл требует n >= 3, получено {n}")
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def gen_path(n: int) -> SimpleGraph:
    if n < 1:
        raise InvalidSize(f"Путь требует n >= 1, получено {n}")
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def gen_star(k: int) -> SimpleGraph:
    """Звезда K_{1,k} с центром 0."""
    if k < 1:
        raise InvalidSize(f"Звезда требует k >= 1, получено {k}")
    return build_graph(k + 1, [(0, i) for i in range(1, k + 1)])


def gen_complete(n: int) -> SimpleGraph:
    if n < 1:
        raise InvalidSize(f"Полный граф требует n >= 1, получено {n}")
    return build_graph(n, combinations(range(n), 2))


def gen_random_max_degree(n: int, delta_cap: int, seed: int) -> SimpleGraph:
    """
    Случайный простой граф с максимальной степенью не больше delta_cap.

    Все пары вершин перемешиваются генератором numpy с данным seed, затем
    пары добавляются жадно, пока обе вершины не насыщены.
    """
    if n < 1:
        raise InvalidSize(f"Число вершин должно быть положительным, получено {n}")
    if delta_cap < 1:
        raise InvalidSize(f"Ограничение степени должно быть >= 1, получено {delta_cap}")

    rng = np.random.default_rng(seed)
    candidates = np.array(list(combinations(range(n), 2)), dtype=np.int64).reshape(-1, 2)
    order = rng.permutation(len(candidates))
    degree = np.zeros(n, dtype=np.int64)
    chosen: List[Tuple[int, int]] = []
    for idx in order:
        u, v = candidates[idx]
        if degree[u] < delta_cap and degree[v] < delta_cap:
            degree[u] += 1
            degree[v] += 1
            chosen.append((int(u), int(v)))

    graph = build_graph(n, sorted(chosen))
    logger.debug(f"gen_random_max_degree(n={n}, cap={delta_cap}, seed={seed}): {graph.edge_count} рёбер, Δ={graph.max_degree}")
    return graph


def gen_random_regular(n: int, d: int, seed: int) -> SimpleGraph:
    """Случайный d-регулярный граф (networkx), рёбра в лексикографическом порядке."""
    if d < 1 or n <= d or (n * d) % 2:
        raise InvalidSize(f"d-регулярный граф на n вершинах не существует: n={n}, d={d}")
    g = nx.random_regular_graph(d, n, seed=seed)
    return build_graph(n, sorted(tuple(sorted(edge)) for edge in g.edges()))
