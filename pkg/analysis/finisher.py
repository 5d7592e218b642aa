"""
Завершение частичной раскраски на остаточном экземпляре перевыборкой
нарушенных событий (Мозер-Тардош).

Плохое событие (e, f, α, α') - ребро e получило α, ребро f получило α',
и пара (α, α') лежит в M_{e,f}. Пока такие события есть, выбирается
наименьшее в лексикографическом порядке и оба ребра получают новые
равномерные цвета из своих списков.
"""

import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from config import settings
from core.correspondence import EdgeCorrespondence
from core.exceptions import EmptyResidualList, ResampleCapExceeded
from core.graph import SimpleGraph

if TYPE_CHECKING:
    from analysis.nibble import NibbleState

logger = logging.getLogger(__name__)
perf_logger = logging.getLogger("performance")

Event = Tuple[int, int, int, int]


@dataclass
class ResidualInstance:
    graph: SimpleGraph
    corr: EdgeCorrespondence
    edges: List[int]
    lists: Dict[int, List[int]]
    pairs: List[Tuple[int, int]]
    t_max: int
    l_min: int
    partial: Dict[int, int] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.edges


@dataclass
class HypothesisReport:
    ok: bool
    l_min: int
    t_max: int
    factor: float

    def __str__(self) -> str:
        verdict = "выполнено" if self.ok else "нарушено"
        return f"L_min = {self.l_min}, T_max = {self.t_max}, множитель {self.factor:g}: {verdict}"


@dataclass
class FinisherResult:
    colouring: Dict[int, int]
    resamples: int
    log: List[Dict[str, int]] = field(default_factory=list)


def residual_from_lists(
    graph: SimpleGraph,
    corr: EdgeCorrespondence,
    lists: Mapping[int, Sequence[int]],
    partial: Optional[Mapping[int, int]] = None,
) -> ResidualInstance:
    """
    Остаточный экземпляр: непокрашенные рёбра, их списки без цветов,
    заблокированных покрашенными соседями, и граница T_max по остаточной структуре.

    Ребро без записи в lists получает полный список 1..q.
    """
    partial = dict(partial or {})
    residual_edges = [e for e in range(graph.edge_count) if e not in partial]
    residual_set = set(residual_edges)

    residual_lists: Dict[int, List[int]] = {}
    for e in residual_edges:
        allowed = set(lists.get(e, range(1, corr.q + 1)))
        for f in graph.neighbours(e):
            if f in partial:
                blocked = corr.partner(f, partial[f], e)
                allowed.discard(blocked)
        if not allowed:
            raise EmptyResidualList(e)
        residual_lists[e] = sorted(allowed)

    pairs = [(e, f) for e, f in graph.incident_pairs() if e in residual_set and f in residual_set]

    t_max = 0
    for e in residual_edges:
        residual_neighbours = [f for f in graph.neighbours(e) if f in residual_set]
        for c in residual_lists[e]:
            degree = 0
            for f in residual_neighbours:
                if corr.partner(e, c, f) in residual_lists[f]:
                    degree += 1
            t_max = max(t_max, degree)

    l_min = min((len(colours) for colours in residual_lists.values()), default=0)
    return ResidualInstance(graph, corr, residual_edges, residual_lists, pairs, t_max, l_min, partial)


def build_residual(state: "NibbleState", corr: EdgeCorrespondence) -> ResidualInstance:
    """Остаточный экземпляр по итоговому состоянию процедуры nibble."""
    partial = state.colouring()
    lists = {e: state.list_of(e) for e in range(state.graph.edge_count) if e not in partial}
    residual = residual_from_lists(state.graph, corr, lists, partial)
    logger.info(
        f"Остаточный экземпляр: рёбер {len(residual.edges)}, L_min = {residual.l_min}, T_max = {residual.t_max}"
    )
    return residual


def check_hypothesis(residual: ResidualInstance, factor: Optional[float] = None) -> HypothesisReport:
    """Проверяет min |L(e)| >= factor * T_max; пустой экземпляр удовлетворяет условию."""
    factor = settings.LLL_FACTOR if factor is None else factor
    ok = residual.is_empty or residual.l_min >= factor * residual.t_max
    return HypothesisReport(ok=ok, l_min=residual.l_min, t_max=residual.t_max, factor=factor)


def complete_colouring(
    residual: ResidualInstance,
    seed: int,
    resample_cap: Optional[int] = None,
) -> FinisherResult:
    """
    Перевыборка Мозера-Тардоша.

    Args:
        residual: остаточный экземпляр
        seed: seed генератора numpy
        resample_cap: лимит перевыборок; по умолчанию RESAMPLE_CAP_PER_EDGE * |рёбер|

    Returns:
        FinisherResult с раскраской остаточных рёбер и журналом перевыборок

    Raises:
        ResampleCapExceeded: лимит исчерпан, в исключении - оставшиеся нарушенные пары
    """
    if residual.is_empty:
        return FinisherResult({}, 0)
    cap = settings.RESAMPLE_CAP_PER_EDGE * len(residual.edges) if resample_cap is None else resample_cap

    rng = np.random.default_rng(seed)
    lists = {e: np.array(residual.lists[e], dtype=np.int64) for e in residual.edges}
    forbidden: Dict[Tuple[int, int], Set[Tuple[int, int]]] = {
        (e, f): set(residual.corr.pairs_for(e, f)) for e, f in residual.pairs
    }
    pairs_of: Dict[int, List[Tuple[int, int]]] = {e: [] for e in residual.edges}
    for e, f in residual.pairs:
        pairs_of[e].append((e, f))
        pairs_of[f].append((e, f))

    sigma: Dict[int, int] = {e: int(rng.choice(lists[e])) for e in residual.edges}

    def event_of(pair: Tuple[int, int]) -> Optional[Event]:
        e, f = pair
        if (sigma[e], sigma[f]) in forbidden[pair]:
            return (e, f, sigma[e], sigma[f])
        return None

    # Куча содержит каждое текущее нарушенное событие; устаревшие записи
    # отбрасываются при извлечении.
    violated: Dict[Tuple[int, int], Event] = {}
    heap: List[Event] = []
    for pair in residual.pairs:
        event = event_of(pair)
        if event is not None:
            violated[pair] = event
            heap.append(event)
    heapq.heapify(heap)

    started = time.perf_counter()
    log: List[Dict[str, int]] = []
    resamples = 0
    while violated:
        if resamples >= cap:
            remaining = sorted(violated)
            logger.error(f"Финишёр: лимит {cap} перевыборок исчерпан, нарушено {len(remaining)} пар")
            raise ResampleCapExceeded(resamples, remaining)
        e, f, alpha, alpha_prime = heapq.heappop(heap)
        if violated.get((e, f)) != (e, f, alpha, alpha_prime):
            continue
        del violated[(e, f)]
        resamples += 1
        log.append({"step": resamples, "e": e, "f": f, "alpha": alpha, "alpha_prime": alpha_prime})
        sigma[e] = int(rng.choice(lists[e]))
        sigma[f] = int(rng.choice(lists[f]))
        for pair in dict.fromkeys(pairs_of[e] + pairs_of[f]):
            event = event_of(pair)
            if event is None:
                violated.pop(pair, None)
            elif violated.get(pair) != event:
                violated[pair] = event
                heapq.heappush(heap, event)

    perf_logger.info(
        f"complete_colouring: рёбер {len(residual.edges)}, перевыборок {resamples}, "
        f"{time.perf_counter() - started:.3f} с"
    )
    return FinisherResult(sigma, resamples, log)


def merge_colourings(partial: Mapping[int, int], completion: Mapping[int, int]) -> Dict[int, int]:
    merged = dict(partial)
    merged.update(completion)
    return dict(sorted(merged.items()))
