"""
Независимая проверка раскрасок.

Модуль читает только сырые пары паросочетаний и список рёбер графа;
кода движка он не использует.
"""

from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

from core.correspondence import EdgeCorrespondence
from core.graph import SimpleGraph


@dataclass
class ColouringReport:
    valid: bool
    conflicts: List[Tuple[int, int, int, int]] = field(default_factory=list)
    uncoloured: List[int] = field(default_factory=list)
    out_of_range: List[int] = field(default_factory=list)

    def summary(self) -> str:
        if self.valid:
            return "раскраска допустима"
        parts = []
        if self.conflicts:
            e, f, a, b = self.conflicts[0]
            parts.append(f"конфликтов {len(self.conflicts)}, первый: ({e}:{a}, {f}:{b})")
        if self.uncoloured:
            parts.append(f"непокрашенных рёбер {len(self.uncoloured)}")
        if self.out_of_range:
            parts.append(f"цветов вне диапазона {len(self.out_of_range)}")
        return "; ".join(parts)


def validate_colouring(
    graph: SimpleGraph,
    corr: EdgeCorrespondence,
    colouring: Mapping[int, int],
    require_total: bool = True,
) -> ColouringReport:
    """
    Проверяет, что ни одна инцидентная пара (e, f) с цветами (σ(e), σ(f))
    не лежит в M_{e,f}. Частичная раскраска проверяется только на покрашенных рёбрах.
    """
    out_of_range = sorted(e for e, c in colouring.items() if not 1 <= c <= corr.q or not 0 <= e < graph.edge_count)
    uncoloured = [e for e in range(graph.edge_count) if e not in colouring] if require_total else []

    conflicts: List[Tuple[int, int, int, int]] = []
    for (a, b), pairs in corr.matchings.items():
        ca: Optional[int] = colouring.get(a)
        cb: Optional[int] = colouring.get(b)
        if ca is None or cb is None:
            continue
        if (ca, cb) in set(pairs):
            conflicts.append((a, b, ca, cb))

    valid = not conflicts and not uncoloured and not out_of_range
    return ColouringReport(valid=valid, conflicts=conflicts, uncoloured=uncoloured, out_of_range=out_of_range)


def is_proper_edge_colouring(graph: SimpleGraph, colouring: Mapping[int, int]) -> bool:
    """Правильная рёберная раскраска: у рёбер с общей вершиной разные цвета."""
    for v in range(graph.vertex_count):
        seen = set()
        for e in graph.incidence[v]:
            if e not in colouring:
                continue
            if colouring[e] in seen:
                return False
            seen.add(colouring[e])
    return True
