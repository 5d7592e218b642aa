"""
Диагностика концентрации для прогонов nibble.

Для каждой итерации считаются события «L(e) теряет c при v» (ожидаемая
частота 1 - Keep_i), сохранение цвета в L(e) (ожидаемая частота Keep_i^2) и
средний размер T'_{i+1}(e,v,c) против верхней границы
|T_i(e,v,c)| * (1 - (1 - ε/2) Keep_i^2 / ln) * Keep_i.

Сводный отчёт считает стандартные ошибки по независимым прогонам с разными
seed, поэтому корреляции внутри одного прогона на него не влияют.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Sequence

import numpy as np
import pandas as pd

if TYPE_CHECKING:
    from analysis.nibble import IncidenceTables, NibbleState

logger = logging.getLogger(__name__)

FLAG_SIGMAS = 3.0
ZERO_TOLERANCE = 1e-12


@dataclass
class TraceRow:
    """Одна строка трассы прогона (одна успешная итерация)."""

    iteration: int
    attempts: int
    L_sched: float
    T_sched: float
    keep: float
    L_next: float
    T_next: float
    min_list: int = 0
    mean_list: float = 0.0
    max_tracker: int = 0
    mean_tracker: float = 0.0
    mean_t_prime: float = 0.0
    mean_t_prime_bound: float = 0.0
    newly_retained: int = 0
    uncoloured: int = 0
    loss_trials: int = 0
    loss_events: int = 0
    retention_trials: int = 0
    retention_events: int = 0


TRACE_COLUMNS = list(TraceRow.__dataclass_fields__.keys())


def _stays_uncoloured(state: "NibbleState") -> np.ndarray:
    # До фиксации итерации ребро с уцелевшим назначенным цветом уже считается покрашенным.
    return state.uncoloured & ~state.assigned.any(axis=1)


def t_prime_counts(tables: "IncidenceTables", before: "NibbleState", after: "NibbleState") -> np.ndarray:
    """
    |T'_{i+1}(e,v,c)| для всех (e, сторона, c), массив формы (m, 2, q).

    f = vw из T_i(e,v,c) входит в T', если f осталось непокрашенным и L(f)
    не потеряло блокирующий цвет c' при w.
    """
    partner = np.clip(tables.partner, 0, None)
    far_side = 1 - tables.target_side
    lost_far = after.lost_at[tables.target[:, None], far_side[:, None], partner]
    member = before.tracker & _stays_uncoloured(after)[tables.target][:, None] & ~lost_far
    counts = np.zeros_like(before.step_counts)
    np.add.at(counts, (tables.source, tables.source_side), member.astype(np.int64))
    return counts


def t_prime_set(tables: "IncidenceTables", before: "NibbleState", after: "NibbleState", e: int, side: int, c: int) -> List[int]:
    """Множество T'_{i+1}(e, v, c) для одного трекера (цвет c 0-базовый)."""
    rows = np.nonzero((tables.source == e) & (tables.source_side == side))[0]
    open_edges = _stays_uncoloured(after)
    result = []
    for k in rows:
        if not before.tracker[k, c]:
            continue
        f = int(tables.target[k])
        c_prime = int(tables.partner[k, c])
        w_side = 1 - int(tables.target_side[k])
        if open_edges[f] and not after.lost_at[f, w_side, c_prime]:
            result.append(f)
    return sorted(result)


def iteration_diagnostics(
    tables: "IncidenceTables",
    before: "NibbleState",
    after: "NibbleState",
    keep: float,
    eps: float,
    ln_factor: float,
) -> Dict[str, float]:
    """Счётчики событий итерации; before - состояние сразу после усечения."""
    live = before.lists & before.uncoloured[:, None]
    live_trials = int(live.sum())
    loss_events = int((after.lost_at & live[:, None, :]).sum())
    retention_events = int((after.lists & live).sum())

    live_trackers = np.broadcast_to(live[:, None, :], before.step_counts.shape)
    if live_trials:
        t_prime = t_prime_counts(tables, before, after)
        factor = (1.0 - (1.0 - eps / 2.0) * keep ** 2 / ln_factor) * keep
        mean_t_prime = float(t_prime[live_trackers].mean())
        mean_bound = float(before.step_counts[live_trackers].mean()) * factor
    else:
        mean_t_prime = 0.0
        mean_bound = 0.0

    return {
        "mean_t_prime": mean_t_prime,
        "mean_t_prime_bound": mean_bound,
        "loss_trials": 2 * live_trials,
        "loss_events": loss_events,
        "retention_trials": live_trials,
        "retention_events": retention_events,
    }


def _summarize(values: np.ndarray, predicted: float, one_sided: bool) -> Dict[str, float]:
    runs = len(values)
    mean = float(values.mean()) if runs else math.nan
    if runs < 2:
        return {"runs": runs, "mean": mean, "predicted": predicted, "std_error": math.nan, "z_score": math.nan, "flagged": False}
    std_error = float(values.std(ddof=1) / math.sqrt(runs))
    diff = mean - predicted
    # Шум округления у одинаковых частот не считается разбросом
    tolerance = ZERO_TOLERANCE * max(1.0, abs(mean), abs(predicted))
    if std_error <= tolerance:
        std_error = 0.0
        z = 0.0 if abs(diff) <= tolerance else math.copysign(math.inf, diff)
    else:
        z = diff / std_error
    flagged = z > FLAG_SIGMAS if one_sided else abs(z) > FLAG_SIGMAS
    return {"runs": runs, "mean": mean, "predicted": predicted, "std_error": std_error, "z_score": z, "flagged": bool(flagged)}


def concentration_report(traces: Sequence[Sequence[TraceRow]]) -> pd.DataFrame:
    """
    Сводка по итерациям и метрикам: runs, mean, predicted, std_error, z_score, flagged.

    Метрики: loss (частота потери цвета при вершине), retention (частота
    сохранения цвета в списке), t_prime (средний |T'|, односторонняя проверка
    против верхней границы).
    """
    frame = pd.DataFrame(
        [row.__dict__ for trace in traces for row in trace],
        columns=TRACE_COLUMNS,
    )
    records = []
    if frame.empty:
        return pd.DataFrame(columns=["iteration", "metric", "runs", "mean", "predicted", "std_error", "z_score", "flagged"])

    for iteration, group in frame.groupby("iteration", sort=True):
        keep = float(group["keep"].mean())

        loss = group[group["loss_trials"] > 0]
        loss_freq = (loss["loss_events"] / loss["loss_trials"]).to_numpy(dtype=float)
        records.append({"iteration": iteration, "metric": "loss", **_summarize(loss_freq, 1.0 - keep, one_sided=False)})

        ret = group[group["retention_trials"] > 0]
        ret_freq = (ret["retention_events"] / ret["retention_trials"]).to_numpy(dtype=float)
        records.append({"iteration": iteration, "metric": "retention", **_summarize(ret_freq, keep ** 2, one_sided=False)})

        # Граница зависит от прогона, поэтому проверяется разность с нулём.
        excess = (ret["mean_t_prime"] - ret["mean_t_prime_bound"]).to_numpy(dtype=float)
        summary = _summarize(excess, 0.0, one_sided=True)
        summary["mean"] = float(ret["mean_t_prime"].mean()) if len(ret) else math.nan
        summary["predicted"] = float(ret["mean_t_prime_bound"].mean()) if len(ret) else math.nan
        records.append({"iteration": iteration, "metric": "t_prime", **summary})

    report = pd.DataFrame.from_records(records)
    flagged = int(report["flagged"].sum())
    if flagged:
        logger.warning(f"Отчёт о концентрации: {flagged} метрик вне {FLAG_SIGMAS:g} стандартных ошибок")
    return report
