"""
Точный перебор для крошечных экземпляров.

Рёбра перебираются в порядке убывания степени в рёберном графе (при
равенстве - по возрастанию id), цвета - по возрастанию. После каждого
назначения из доменов непокрашенных соседей удаляются заблокированные
цвета (forward checking); пустой домен - откат.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Set, Tuple

from config import settings
from core.correspondence import EdgeCorrespondence, identity_correspondence, shift_correspondence
from core.exceptions import InvalidPartial, TooLarge
from core.graph import SimpleGraph

logger = logging.getLogger(__name__)

CorrespondenceBuilder = Callable[[SimpleGraph, int], EdgeCorrespondence]


@dataclass
class OracleResult:
    colourable: bool
    witness: Optional[Dict[int, int]] = None
    nodes: int = 0


def _guard(edges: int, q: int, max_edges: Optional[int], max_q: Optional[int]) -> None:
    max_edges = settings.ORACLE_MAX_EDGES if max_edges is None else max_edges
    max_q = settings.ORACLE_MAX_Q if max_q is None else max_q
    if edges > max_edges or q > max_q:
        raise TooLarge(edges, q, max_edges, max_q)


def _search(
    graph: SimpleGraph,
    corr: EdgeCorrespondence,
    domains: Dict[int, Set[int]],
    fixed: Mapping[int, int],
) -> OracleResult:
    free = [e for e in range(graph.edge_count) if e not in fixed]
    order = sorted(free, key=lambda e: (-len(graph.neighbours(e)), e))
    neighbours = {e: [f for f in graph.neighbours(e) if f not in fixed] for e in free}
    assignment: Dict[int, int] = dict(fixed)
    nodes = 0

    def backtrack(depth: int) -> bool:
        nonlocal nodes
        if depth == len(order):
            return True
        e = order[depth]
        for colour in sorted(domains[e]):
            nodes += 1
            assignment[e] = colour
            pruned: List[Tuple[int, int]] = []
            wiped = False
            for f in neighbours[e]:
                if f in assignment:
                    continue
                blocked = corr.partner(e, colour, f)
                if blocked is not None and blocked in domains[f]:
                    domains[f].discard(blocked)
                    pruned.append((f, blocked))
                    if not domains[f]:
                        wiped = True
                        break
            if not wiped and backtrack(depth + 1):
                return True
            for f, blocked in pruned:
                domains[f].add(blocked)
            del assignment[e]
        return False

    if any(not domains[e] for e in free):
        return OracleResult(False, None, 0)
    found = backtrack(0)
    return OracleResult(found, dict(sorted(assignment.items())) if found else None, nodes)


def oracle_colourable(
    graph: SimpleGraph,
    corr: EdgeCorrespondence,
    max_edges: Optional[int] = None,
    max_q: Optional[int] = None,
) -> OracleResult:
    """Точно решает, существует ли допустимая раскраска; при успехе возвращает свидетеля."""
    _guard(graph.edge_count, corr.q, max_edges, max_q)
    domains = {e: set(range(1, corr.q + 1)) for e in range(graph.edge_count)}
    result = _search(graph, corr, domains, {})
    logger.debug(f"Оракул: m={graph.edge_count}, q={corr.q}, раскрашиваем={result.colourable}, узлов {result.nodes}")
    return result


def oracle_completion(
    graph: SimpleGraph,
    corr: EdgeCorrespondence,
    partial: Mapping[int, int],
    max_edges: Optional[int] = None,
    max_q: Optional[int] = None,
) -> OracleResult:
    """Продолжается ли частичная раскраска до полной допустимой."""
    free = [e for e in range(graph.edge_count) if e not in partial]
    _guard(len(free), corr.q, max_edges, max_q)

    for e, colour in partial.items():
        if not 0 <= e < graph.edge_count or not 1 <= colour <= corr.q:
            raise InvalidPartial(f"Недопустимое назначение {e}: {colour}")
    for e, f in graph.incident_pairs():
        if e in partial and f in partial and corr.partner(e, partial[e], f) == partial[f]:
            raise InvalidPartial(f"Частичная раскраска нарушает M_{{{e},{f}}}: ({partial[e]}, {partial[f]})")

    domains: Dict[int, Set[int]] = {}
    for e in free:
        allowed = set(range(1, corr.q + 1))
        for f in graph.neighbours(e):
            if f in partial:
                allowed.discard(corr.partner(f, partial[f], e))
        domains[e] = allowed
    return _search(graph, corr, domains, dict(partial))


def oracle_min_q(
    graph: SimpleGraph,
    builder: CorrespondenceBuilder,
    q_max: int,
    max_edges: Optional[int] = None,
    max_q: Optional[int] = None,
) -> Optional[int]:
    """Наименьшее q в 1..q_max, при котором экземпляр builder(graph, q) раскрашиваем, иначе None."""
    for q in range(1, q_max + 1):
        if oracle_colourable(graph, builder(graph, q), max_edges, max_q).colourable:
            return q
    return None


def identity_builder(graph: SimpleGraph, q: int) -> EdgeCorrespondence:
    return identity_correspondence(graph, q)


def shift_builder(graph: SimpleGraph, q: int) -> EdgeCorrespondence:
    """Цикл с одной сдвинутой парой: рёбра 0 и 1 цикла gen_cycle."""
    return shift_correspondence(graph, q, [(0, 1)])
