"""
Полуслучайная процедура nibble для рёберной раскраски по соответствию.

Состояние хранится в массивах numpy:
    lists    (m, q)  bool  - остаточные списки L(e)
    assigned (m, q)  bool  - цвета, назначенные в текущей итерации
    retained (m, q)  bool  - цвета, сохранённые в прошлых итерациях
    tracker  (K, q)  bool  - f входит в T(e, v, c) для ориентированной
                             инцидентной пары k = (e, v, f)
    lost_at  (m, 2, q) bool - L(e) потеряло c при конце e с данной стороны

Итерация: усечение -> активация -> удаление конфликтов -> выравнивающие
монетки -> фиксация. Удаление конфликтов одновременное и «расточительное»:
набор удалений зависит только от множества активаций.

Цвета внутри массивов 0-базовые; наружу (раскраска, множества назначений)
выдаются цвета 1..q.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from analysis.concentration import TraceRow, iteration_diagnostics, t_prime_set
from analysis.param_recursion import ParamTrajectory, TrajectoryRow, list_target, tracker_bound
from config import settings
from core.correspondence import EdgeCorrespondence, validate_correspondence
from core.exceptions import (
    InvalidCorrespondence,
    ListTooShort,
    NotAnEndpoint,
    ProbabilityOverflow,
    PropertyFailure,
    RetryExhausted,
    ScheduleEmpty,
)
from core.graph import SimpleGraph
from utils.rng import Purpose, RandomStreams

logger = logging.getLogger(__name__)
perf_logger = logging.getLogger("performance")

TRUNCATION_MODES = ("smallest", "random")


@dataclass(frozen=True)
class IncidenceTables:
    """Ориентированные инцидентные пары k = (source e, сторона v у e, target f)."""

    source: np.ndarray
    source_side: np.ndarray
    target: np.ndarray
    target_side: np.ndarray  # сторона общей вершины v у ребра f
    partner: np.ndarray  # (K, q): цвет на f, блокируемый цветом c на e, или -1
    endpoints: np.ndarray  # (m, 2)

    @property
    def size(self) -> int:
        return len(self.source)


def build_tables(graph: SimpleGraph, corr: EdgeCorrespondence) -> IncidenceTables:
    q = corr.q
    partners = corr.partner_matrix()
    source, source_side, target, target_side, rows = [], [], [], [], []
    for e, (u, v) in enumerate(graph.edges):
        for side, vertex in enumerate((u, v)):
            for f in graph.incident_edges(e, vertex):
                source.append(e)
                source_side.append(side)
                target.append(f)
                target_side.append(graph.edges[f].index(vertex))
                rows.append(partners[(e, f)])
    endpoints = np.array(graph.edges, dtype=np.int64).reshape(-1, 2)
    return IncidenceTables(
        source=np.array(source, dtype=np.int64),
        source_side=np.array(source_side, dtype=np.int64),
        target=np.array(target, dtype=np.int64),
        target_side=np.array(target_side, dtype=np.int64),
        partner=np.array(rows, dtype=np.int64).reshape(-1, q),
        endpoints=endpoints,
    )


@dataclass
class NibbleState:
    graph: SimpleGraph
    corr: EdgeCorrespondence
    tables: IncidenceTables
    lists: np.ndarray
    assigned: np.ndarray
    retained: np.ndarray
    uncoloured: np.ndarray
    tracker: np.ndarray
    lost_at: np.ndarray
    step_counts: np.ndarray
    iteration: int = 0

    @property
    def q(self) -> int:
        return self.corr.q

    def copy(self) -> "NibbleState":
        return NibbleState(
            graph=self.graph,
            corr=self.corr,
            tables=self.tables,
            lists=self.lists.copy(),
            assigned=self.assigned.copy(),
            retained=self.retained.copy(),
            uncoloured=self.uncoloured.copy(),
            tracker=self.tracker.copy(),
            lost_at=self.lost_at.copy(),
            step_counts=self.step_counts.copy(),
            iteration=self.iteration,
        )

    def tracker_counts(self) -> np.ndarray:
        """|T(e, v, c)| для всех (e, сторона, c), форма (m, 2, q)."""
        counts = np.zeros((self.graph.edge_count, 2, self.q), dtype=np.int64)
        np.add.at(counts, (self.tables.source, self.tables.source_side), self.tracker.astype(np.int64))
        return counts

    def tracker_set(self, e: int, v: int, c: int) -> List[int]:
        """T(e, v, c) как отсортированный список рёбер; c - цвет 1..q."""
        if v not in self.graph.edges[e]:
            raise NotAnEndpoint(e, v)
        side = self.graph.edges[e].index(v)
        rows = np.nonzero((self.tables.source == e) & (self.tables.source_side == side))[0]
        return sorted(int(self.tables.target[k]) for k in rows if self.tracker[k, c - 1])

    def list_of(self, e: int) -> List[int]:
        return [int(c) + 1 for c in np.nonzero(self.lists[e])[0]]

    def colouring(self) -> Dict[int, int]:
        """Частичная раскраска: наименьший сохранённый цвет каждого покрашенного ребра."""
        result: Dict[int, int] = {}
        for e in np.nonzero(self.retained.any(axis=1))[0]:
            result[int(e)] = int(np.argmax(self.retained[e])) + 1
        return result


@dataclass
class IterationOutcome:
    property_holds: bool
    stats: Dict[str, float]
    attempts: int = 1
    violations: List[str] = field(default_factory=list)


@dataclass
class NibbleRun:
    colouring: Dict[int, int]
    state: NibbleState
    trace: List[TraceRow]
    halt_reason: str
    total_attempts: int = 0


# --- Шаги итерации ---

def refresh_trackers(state: NibbleState) -> None:
    """Пересчитывает все T(e, v, c) из определения по текущим спискам и непокрашенным рёбрам."""
    t = state.tables
    blocking = np.clip(t.partner, 0, None)
    state.tracker = (
        (t.partner >= 0)
        & state.uncoloured[t.target][:, None]
        & state.lists[t.target[:, None], blocking]
        & state.lists[t.source]
        & state.uncoloured[t.source][:, None]
    )


def init_state(graph: SimpleGraph, corr: EdgeCorrespondence) -> NibbleState:
    """L(e) = {1..q}; T(e, v, c) = все рёбра, инцидентные e при v; ничего не назначено."""
    report = validate_correspondence(corr)
    if not report.ok:
        raise InvalidCorrespondence(report)
    tables = build_tables(graph, corr)
    m, q = graph.edge_count, corr.q
    state = NibbleState(
        graph=graph,
        corr=corr,
        tables=tables,
        lists=np.ones((m, q), dtype=bool),
        assigned=np.zeros((m, q), dtype=bool),
        retained=np.zeros((m, q), dtype=bool),
        uncoloured=np.ones(m, dtype=bool),
        tracker=np.ones((tables.size, q), dtype=bool),
        lost_at=np.zeros((m, 2, q), dtype=bool),
        step_counts=np.zeros((m, 2, q), dtype=np.int64),
    )
    state.step_counts = state.tracker_counts()
    return state


def truncate_lists(
    state: NibbleState,
    target: int,
    mode: str = "smallest",
    streams: Optional[RandomStreams] = None,
    attempt: int = 0,
) -> NibbleState:
    """
    Оставляет в списке каждого непокрашенного ребра ровно target цветов.

    mode="smallest" сохраняет наименьшие цвета, mode="random" - случайные
    (поток TRUNCATE). Трекеры пересчитываются, снимок их размеров для
    выравнивающих монеток фиксируется здесь.
    """
    live = state.uncoloured
    sizes = state.lists.sum(axis=1)
    short = np.nonzero(live & (sizes < target))[0]
    if short.size:
        e = int(short[0])
        raise ListTooShort(e, int(sizes[e]), target)

    if mode == "smallest":
        keep = state.lists & (np.cumsum(state.lists, axis=1) <= target)
    elif mode == "random":
        if streams is None:
            raise ValueError("Случайное усечение требует потоков RandomStreams")
        m, q = state.lists.shape
        priority = streams.uniform(
            Purpose.TRUNCATE, state.iteration, attempt,
            np.arange(m)[:, None], np.arange(q)[None, :], 0,
        )
        priority = np.where(state.lists, priority, np.inf)
        order = np.argsort(priority, axis=1, kind="stable")
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(q)[None, :].repeat(m, axis=0), axis=1)
        keep = state.lists & (ranks < target)
    else:
        raise ValueError(f"Неизвестный режим усечения: {mode}")

    state.lists = np.where(live[:, None], keep, state.lists)
    refresh_trackers(state)
    state.step_counts = state.tracker_counts()
    return state


def _vertex_salts(state: NibbleState, streams: RandomStreams) -> Tuple[np.ndarray, np.ndarray]:
    ends = state.tables.endpoints
    return streams.vertex_salts(ends[:, 0]), streams.vertex_salts(ends[:, 1])


def activation_round(
    state: NibbleState,
    L_i: float,
    ln_factor: float,
    streams: RandomStreams,
    attempt: int = 0,
) -> np.ndarray:
    """
    Маска назначений (m, q): каждая пара (непокрашенное e, c из L(e))
    активируется независимо с вероятностью 1/(L_i * ln_factor).
    Ребро может получить несколько цветов.
    """
    m, q = state.lists.shape
    probability = 1.0 / (L_i * ln_factor)
    salt_u, salt_v = _vertex_salts(state, streams)
    draws = streams.uniform(
        Purpose.ACTIVATE, state.iteration, attempt,
        np.arange(m)[:, None], np.arange(q)[None, :], 0,
        salt_a=salt_u[:, None], salt_b=salt_v[:, None],
    )
    return state.lists & state.uncoloured[:, None] & (draws < probability)


def assignment_pairs(assignments: np.ndarray) -> Set[Tuple[int, int]]:
    """Маска назначений как множество (ребро, цвет 1..q)."""
    edges, colours = np.nonzero(assignments)
    return {(int(e), int(c) + 1) for e, c in zip(edges, colours)}


def assignment_mask(state: NibbleState, pairs: Set[Tuple[int, int]]) -> np.ndarray:
    mask = np.zeros_like(state.lists)
    for e, c in pairs:
        mask[e, c - 1] = True
    return mask


def conflict_removal(state: NibbleState, assignments: np.ndarray) -> NibbleState:
    """
    Одновременное удаление конфликтов: для каждого назначения (e, c) и
    каждого f ~ e с c' = partner(e, c, f) в L(f) цвет c' удаляется из L(f)
    и снимается с f, даже если c само будет снято с e.
    """
    t = state.tables
    state.assigned |= assignments
    hit = assignments[t.source] & (t.partner >= 0)
    ks, cs = np.nonzero(hit)
    fs = t.target[ks]
    blocked = t.partner[ks, cs]
    present = state.lists[fs, blocked] & state.uncoloured[fs]
    ks, fs, blocked = ks[present], fs[present], blocked[present]

    removal = np.zeros_like(state.lists)
    removal[fs, blocked] = True
    state.lost_at[fs, t.target_side[ks], blocked] = True
    state.lists &= ~removal
    state.assigned &= ~removal
    refresh_trackers(state)
    return state


def equalizing_flips(
    state: NibbleState,
    keep: float,
    L_i: float,
    ln_factor: float,
    T_i: float,
    streams: RandomStreams,
    attempt: int = 0,
    step_lists: Optional[np.ndarray] = None,
) -> NibbleState:
    """
    Две независимые монетки F(e,u,c), F(e,v,c) с вероятностью успеха
    Eq = Keep / (1 - 1/(L_i ln))^{|T(e,v,c)|}, где |T| берётся из снимка
    начала шага. Неудача удаляет c из L(e) и снимает назначение.
    """
    m, q = state.lists.shape
    live = (state.lists if step_lists is None else step_lists) & state.uncoloured[:, None]
    counts = state.step_counts
    bound = tracker_bound(T_i)
    overflow = np.argwhere((counts > bound) & live[:, None, :])
    if overflow.size:
        e, side, c = (int(x) for x in overflow[0])
        raise ProbabilityOverflow(e, state.graph.edges[e][side], c + 1, int(counts[e, side, c]), T_i)

    p = 1.0 / (L_i * ln_factor)
    eq = np.minimum(keep * np.exp(-counts * np.log1p(-p)), 1.0)

    salt_u, salt_v = _vertex_salts(state, streams)
    salts = np.stack([salt_u, salt_v], axis=1)[:, :, None]
    draws = streams.uniform(
        Purpose.FLIP, state.iteration, attempt,
        np.arange(m)[:, None, None], np.arange(q)[None, None, :], np.arange(2)[None, :, None],
        salt_a=salts,
    )
    failed = live[:, None, :] & (draws >= eq)
    state.lost_at |= failed
    removal = failed.any(axis=1)
    state.lists &= ~removal
    state.assigned &= ~removal
    refresh_trackers(state)
    return state


def finalize_iteration(state: NibbleState, next_L: float, next_T: float) -> IterationOutcome:
    """
    Рёбра с хотя бы одним уцелевшим назначенным цветом становятся покрашенными;
    трекеры пересчитываются; проверяется свойство (1) для следующей итерации:
    |L(e)| >= L_{i+1} и |T(e, v, c)| <= T_{i+1}. Нарушение возвращается как данные.
    """
    newly = state.uncoloured & state.assigned.any(axis=1)
    state.retained[newly] = state.assigned[newly]
    state.uncoloured &= ~newly
    state.assigned[:] = False
    refresh_trackers(state)

    sizes = state.lists.sum(axis=1)
    live_sizes = sizes[state.uncoloured]
    counts = state.tracker_counts()
    live_mask = np.broadcast_to((state.lists & state.uncoloured[:, None])[:, None, :], counts.shape)
    live_counts = counts[live_mask]

    target = list_target(next_L)
    bound = tracker_bound(next_T)
    violations: List[str] = []
    short = np.nonzero(state.uncoloured & (sizes < target))[0]
    for e in short[np.argsort(sizes[short], kind="stable")]:
        violations.append(f"|L({int(e)})| = {int(sizes[e])} < {target}")
    over = np.argwhere((counts > bound) & live_mask)
    for e, side, c in sorted(over.tolist(), key=lambda x: -counts[x[0], x[1], x[2]]):
        violations.append(f"|T({e},{state.graph.edges[e][side]},{c + 1})| = {int(counts[e, side, c])} > {bound}")

    stats = {
        "min_list": int(live_sizes.min()) if live_sizes.size else 0,
        "mean_list": float(live_sizes.mean()) if live_sizes.size else 0.0,
        "max_tracker": int(live_counts.max()) if live_counts.size else 0,
        "mean_tracker": float(live_counts.mean()) if live_counts.size else 0.0,
        "newly_retained": int(newly.sum()),
        "uncoloured": int(state.uncoloured.sum()),
    }
    state.iteration += 1
    return IterationOutcome(property_holds=not violations, stats=stats, violations=violations)


def compute_T_prime(before: NibbleState, after: NibbleState, e: int, v: int, c: int) -> Set[int]:
    """T'_{i+1}(e, v, c): рёбра f = vw из T_i(e, v, c), не сохранившие цвет и не потерявшие c' при w."""
    side = before.graph.edges[e].index(v)
    return set(t_prime_set(before.tables, before, after, e, side, c - 1))


# --- Цикл процедуры ---

def _run_iteration(
    state: NibbleState,
    row: TrajectoryRow,
    next_row: TrajectoryRow,
    schedule: ParamTrajectory,
    streams: RandomStreams,
    attempt: int,
    truncation_mode: str,
    instrument: bool,
) -> Tuple[NibbleState, IterationOutcome]:
    trial = state.copy()
    trial.lost_at[:] = False
    truncate_lists(trial, list_target(row.L), truncation_mode, streams, attempt)
    before = trial.copy() if instrument else None
    step_lists = trial.lists.copy()

    assignments = activation_round(trial, row.L, schedule.ln_factor, streams, attempt)
    conflict_removal(trial, assignments)
    equalizing_flips(trial, row.keep, row.L, schedule.ln_factor, row.T, streams, attempt, step_lists=step_lists)

    diagnostics = (
        iteration_diagnostics(trial.tables, before, trial, row.keep, schedule.eps, schedule.ln_factor)
        if instrument else {}
    )
    outcome = finalize_iteration(trial, next_row.L, next_row.T)
    outcome.stats.update(diagnostics)
    return trial, outcome


def run_nibble(
    graph: SimpleGraph,
    corr: EdgeCorrespondence,
    eps: float,
    schedule: ParamTrajectory,
    retry_limit: Optional[int] = None,
    seed: Optional[int] = None,
    truncation_mode: Optional[str] = None,
    instrument: bool = True,
    streams: Optional[RandomStreams] = None,
) -> NibbleRun:
    """
    Итерации процедуры по расписанию schedule (итерация i использует строку i
    и проверяется по строке i+1). Итерация, после которой свойство (1) не
    выполнено, откатывается и повторяется с новым потоком до retry_limit раз.

    Вероятность активации использует schedule.ln_factor, чтобы расписание и
    движок опирались на одно и то же значение ln.

    Returns:
        NibbleRun с частичной раскраской, итоговым состоянием и трассой

    Raises:
        ScheduleEmpty: в расписании нет исполнимых итераций или q < ⌈L_0⌉
        RetryExhausted: свойство (1) не удалось получить за retry_limit попыток
    """
    retry_limit = settings.RETRY_LIMIT if retry_limit is None else retry_limit
    seed = settings.DEFAULT_SEED if seed is None else seed
    truncation_mode = truncation_mode or settings.TRUNCATION_MODE
    if truncation_mode not in TRUNCATION_MODES:
        raise ValueError(f"Неизвестный режим усечения: {truncation_mode}")
    streams = streams or RandomStreams(seed)

    state = init_state(graph, corr)
    trace: List[TraceRow] = []
    if graph.edge_count == 0:
        logger.info("Граф без рёбер: итерации не выполняются")
        return NibbleRun({}, state, trace, "edgeless")

    if schedule.runnable_iterations == 0:
        raise ScheduleEmpty(f"Расписание не содержит исполнимых итераций (остановка {schedule.halt_reason})")
    first_target = list_target(schedule.rows[0].L)
    if corr.q < first_target:
        raise ScheduleEmpty(f"q = {corr.q} меньше ⌈L_0⌉ = {first_target}")

    started = time.perf_counter()
    total_attempts = 0
    halt_reason = schedule.halt_reason.value if schedule.halt_reason else "schedule_end"
    for i in range(schedule.runnable_iterations):
        if not state.uncoloured.any():
            halt_reason = "all_coloured"
            break
        row, next_row = schedule.rows[i], schedule.rows[i + 1]
        worst: List[str] = []
        for attempt in range(retry_limit):
            total_attempts += 1
            try:
                trial, outcome = _run_iteration(
                    state, row, next_row, schedule, streams, attempt, truncation_mode, instrument,
                )
            except PropertyFailure as exc:
                worst = [str(exc)]
                logger.warning(f"Итерация {i}, попытка {attempt + 1}: {exc}")
                continue
            if outcome.property_holds:
                outcome.attempts = attempt + 1
                state = trial
                trace.append(TraceRow(
                    iteration=i,
                    attempts=outcome.attempts,
                    L_sched=row.L,
                    T_sched=row.T,
                    keep=row.keep,
                    L_next=next_row.L,
                    T_next=next_row.T,
                    **outcome.stats,
                ))
                logger.debug(
                    f"Итерация {i}: попыток {outcome.attempts}, сохранено {outcome.stats['newly_retained']}, "
                    f"непокрашено {outcome.stats['uncoloured']}, min|L| = {outcome.stats['min_list']}"
                )
                break
            if not worst or len(outcome.violations) > len(worst):
                worst = outcome.violations
            logger.warning(
                f"Итерация {i}, попытка {attempt + 1}: свойство (1) нарушено ({len(outcome.violations)} нарушений)"
            )
        else:
            logger.error(f"Итерация {i}: исчерпан лимит попыток {retry_limit}")
            raise RetryExhausted(i, retry_limit, worst)

    perf_logger.info(
        f"run_nibble: m={graph.edge_count}, q={corr.q}, итераций {len(trace)}, попыток {total_attempts}, "
        f"{time.perf_counter() - started:.3f} с"
    )
    return NibbleRun(state.colouring(), state, trace, halt_reason, total_attempts)
