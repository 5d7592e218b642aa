"""
Детерминированные траектории параметров L_i, T_i, Keep_i.

Рекурсии:
    L_{i+1} = L_i * Keep_i^k - s_L
    T_{i+1} = T_i * (1 - (1 - ε/2) * Keep_i^k / ln) * Keep_i^(k-1) + s_T
где по умолчанию s_L = s_T = Δ^(2/3), а ln = ln Δ. Для графов k = 2.

Остановка: L_i < уровня, T_i < уровня или L_i > threshold * T_i
(уровень Δ^(9/10), порог 10 для графов и 5k для гиперграфов).

Настольный режим (engineering) заменяет Δ^(2/3) на отклонение в
ENGINEERING_SIGMAS биномиальных стандартных отклонений, ограничивает T
сверху структурным максимумом Δ - 1 и останавливается на уровне
ENGINEERING_HALT_LEVEL.
"""

import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from config import settings
from core.exceptions import DomainError, NoProgress

logger = logging.getLogger(__name__)

# Рост отношения L/T гарантирован только при ε < 1/12
EPS_PROOF_LIMIT = 1.0 / 12.0

DEFAULT_CROSSOVER_GRID: Tuple[float, ...] = (1e60, 1e80, 1e100, 1e150, 1e200, 1e250)

_TARGET_TOLERANCE = 1e-9


class HaltReason(str, Enum):
    L_BELOW = "L_below"
    T_BELOW = "T_below"
    RATIO_EXCEEDED = "ratio_exceeded"
    ROW_LIMIT = "row_limit"


class ScheduleMode(str, Enum):
    ANALYTIC = "analytic"
    ENGINEERING = "engineering"
    IMPORTED = "imported"


@dataclass
class TrajectoryRow:
    i: int
    L: float
    T: float
    keep: float
    ratio: float


@dataclass
class ParamTrajectory:
    """Траектория параметров; строки 0..H, где H - первая строка с условием остановки."""

    eps: float
    delta: float
    k: int
    ratio_threshold: float
    halt_level: float
    ln_factor: float
    mode: ScheduleMode = ScheduleMode.ANALYTIC
    sigmas: float = 0.0
    rows: List[TrajectoryRow] = field(default_factory=list)
    halt_reason: Optional[HaltReason] = None
    crossover_index: Optional[int] = None

    @property
    def runnable_iterations(self) -> int:
        """
        Число итераций движка: итерация i работает со строкой i и проверяется по строке i+1.
        Переход в строку остановки с целью для списков меньше 1 не выполняется.
        """
        if len(self.rows) < 2:
            return 0
        if list_target(self.rows[-1].L) < 1:
            return len(self.rows) - 2
        return len(self.rows) - 1

    @property
    def final_row(self) -> TrajectoryRow:
        return self.rows[-1]


def list_target(L: float) -> int:
    """Целая цель для длины списков."""
    return int(math.ceil(L - _TARGET_TOLERANCE))


def tracker_bound(T: float) -> int:
    """Целая граница для размера трекеров."""
    return int(math.floor(T + _TARGET_TOLERANCE))


def ln_factor_for(delta: float, override: Optional[float] = None, floor: Optional[float] = None) -> float:
    """ln Δ с нижней границей LN_FACTOR_FLOOR либо явное значение."""
    if override is not None:
        if override <= 0:
            raise DomainError(f"ln_factor должен быть положительным, получено {override}")
        return float(override)
    floor = settings.LN_FACTOR_FLOOR if floor is None else floor
    return max(math.log(delta), floor) if delta > 0 else floor


def keep_value(L: float, T: float, delta: float, ln_factor: Optional[float] = None) -> float:
    """Keep = (1 - 1/(L ln))^T через exp(T * log1p(-1/(L ln)))."""
    ln = math.log(delta) if ln_factor is None else ln_factor
    if L * ln <= 1.0:
        raise DomainError(f"Keep не определён: L*ln = {L * ln:.6g} <= 1")
    if T < 0:
        raise DomainError(f"Keep не определён: T = {T} < 0")
    if T == 0:
        return 1.0
    return math.exp(T * math.log1p(-1.0 / (L * ln)))


def next_params(
    L: float,
    T: float,
    keep: float,
    delta: float,
    eps: float,
    k: int = 2,
    slack_l: Optional[float] = None,
    slack_t: Optional[float] = None,
    ln_factor: Optional[float] = None,
) -> Tuple[float, float]:
    """Один шаг рекурсии. Без явных отклонений используется Δ^(2/3)."""
    if k < 2:
        raise DomainError(f"k должно быть >= 2, получено {k}")
    ln = math.log(delta) if ln_factor is None else ln_factor
    slack = delta ** (2.0 / 3.0)
    slack_l = slack if slack_l is None else slack_l
    slack_t = slack if slack_t is None else slack_t
    keep_k = keep ** k
    next_L = L * keep_k - slack_l
    next_T = T * (1.0 - (1.0 - eps / 2.0) / ln * keep_k) * keep ** (k - 1) + slack_t
    return next_L, next_T


def _engineering_slacks(L: float, T: float, keep: float, eps: float, k: int, ln: float, sigmas: float) -> Tuple[float, float]:
    """Отклонения в sigmas стандартных отклонений биномиальных величин |L| и |T'|."""
    survive = keep ** k
    tracker_keep = (1.0 - (1.0 - eps / 2.0) / ln * survive) * keep ** (k - 1)
    tracker_keep = min(max(tracker_keep, 0.0), 1.0)
    slack_l = sigmas * math.sqrt(max(L, 0.0) * survive * (1.0 - survive))
    slack_t = sigmas * math.sqrt(max(T, 0.0) * tracker_keep * (1.0 - tracker_keep))
    return slack_l, slack_t


def _step(traj: ParamTrajectory, row: TrajectoryRow) -> Tuple[float, float]:
    if traj.mode == ScheduleMode.ENGINEERING:
        slack_l, slack_t = _engineering_slacks(row.L, row.T, row.keep, traj.eps, traj.k, traj.ln_factor, traj.sigmas)
        next_L, next_T = next_params(
            row.L, row.T, row.keep, traj.delta, traj.eps, traj.k,
            slack_l=slack_l, slack_t=slack_t, ln_factor=traj.ln_factor,
        )
        return next_L, min(next_T, max(traj.delta - 1.0, 0.0))
    if traj.mode == ScheduleMode.ANALYTIC:
        return next_params(row.L, row.T, row.keep, traj.delta, traj.eps, traj.k, ln_factor=traj.ln_factor)
    raise DomainError("Импортированное расписание нельзя пересчитать по рекурсии")


def _halt_reason(L: float, T: float, level: float, threshold: float) -> Optional[HaltReason]:
    if L < level:
        return HaltReason.L_BELOW
    if T < level:
        return HaltReason.T_BELOW
    if L > threshold * T:
        return HaltReason.RATIO_EXCEEDED
    return None


def _ratio(L: float, T: float) -> float:
    return L / T if T > 0 else math.inf


def _halting_keep(L: float, T: float, delta: float, ln: float) -> float:
    # На строке остановки Keep может быть не определён; тогда пишем 0.
    try:
        return keep_value(L, T, delta, ln)
    except DomainError:
        return 0.0


def _run(traj: ParamTrajectory, require_progress: bool, max_rows: int) -> ParamTrajectory:
    L, T = (1.0 + traj.eps) * traj.delta, float(traj.delta)
    previous_ratio: Optional[float] = None
    for i in range(max_rows):
        ratio = _ratio(L, T)
        reason = _halt_reason(L, T, traj.halt_level, traj.ratio_threshold)
        if reason is not None:
            traj.rows.append(TrajectoryRow(i, L, T, _halting_keep(L, T, traj.delta, traj.ln_factor), ratio))
            traj.halt_reason = reason
            if reason == HaltReason.RATIO_EXCEEDED:
                traj.crossover_index = i
            break
        if require_progress and previous_ratio is not None and ratio <= previous_ratio:
            raise NoProgress(i, previous_ratio, ratio)
        row = TrajectoryRow(i, L, T, keep_value(L, T, traj.delta, traj.ln_factor), ratio)
        traj.rows.append(row)
        previous_ratio = ratio
        L, T = _step(traj, row)
    else:
        traj.halt_reason = HaltReason.ROW_LIMIT
        logger.warning(f"Траектория не остановилась за {max_rows} строк (ε={traj.eps}, Δ={traj.delta:.6g})")

    logger.debug(
        f"Траектория {traj.mode.value}: ε={traj.eps}, Δ={traj.delta:.6g}, k={traj.k}, "
        f"строк {len(traj.rows)}, остановка {traj.halt_reason.value}"
    )
    return traj


def _check_inputs(eps: float, delta: float, k: int) -> None:
    if eps <= 0:
        raise DomainError(f"ε должно быть положительным, получено {eps}")
    if delta <= 1:
        raise DomainError(f"Δ должно быть > 1, получено {delta}")
    if k < 2:
        raise DomainError(f"k должно быть >= 2, получено {k}")


def default_threshold(k: int) -> float:
    """10 для графов (настраивается), 5k для гиперграфов."""
    return settings.RATIO_THRESHOLD if k == 2 else 5.0 * k


def trajectory(
    eps: float,
    delta: float,
    k: int = 2,
    ratio_threshold: Optional[float] = None,
    ln_factor: Optional[float] = None,
    halt_level: Optional[float] = None,
    require_progress: bool = True,
    max_rows: int = 1_000_000,
) -> ParamTrajectory:
    """
    Траектория рекурсии в исходной форме (отклонение Δ^(2/3), уровень Δ^(9/10)).

    Args:
        eps: ε > 0; при ε >= 1/12 рост отношения не гарантирован (предупреждение)
        delta: Δ > 1, вещественный параметр
        k: однородность (2 для графов)
        ratio_threshold: порог L/T; по умолчанию 10 для k=2 и 5k иначе
        ln_factor: явное значение вместо ln Δ (для согласования с движком)
        halt_level: явный уровень вместо Δ^(9/10)
        require_progress: бросать NoProgress, если L/T перестало расти

    Returns:
        ParamTrajectory со строками 0..H
    """
    _check_inputs(eps, delta, k)
    if eps >= EPS_PROOF_LIMIT:
        logger.warning(f"ε = {eps} >= 1/12: монотонность отношения L/T не гарантирована")
    traj = ParamTrajectory(
        eps=eps,
        delta=delta,
        k=k,
        ratio_threshold=default_threshold(k) if ratio_threshold is None else ratio_threshold,
        halt_level=delta ** 0.9 if halt_level is None else halt_level,
        ln_factor=math.log(delta) if ln_factor is None else ln_factor,
        mode=ScheduleMode.ANALYTIC,
    )
    return _run(traj, require_progress, max_rows)


def engineering_trajectory(
    eps: float,
    delta: float,
    k: int = 2,
    ratio_threshold: Optional[float] = None,
    ln_factor: Optional[float] = None,
    sigmas: Optional[float] = None,
    halt_level: Optional[float] = None,
    max_rows: int = 100_000,
) -> ParamTrajectory:
    """Настольное расписание: биномиальные отклонения вместо Δ^(2/3), без требования роста."""
    _check_inputs(eps, delta, k)
    traj = ParamTrajectory(
        eps=eps,
        delta=delta,
        k=k,
        ratio_threshold=default_threshold(k) if ratio_threshold is None else ratio_threshold,
        halt_level=settings.ENGINEERING_HALT_LEVEL if halt_level is None else halt_level,
        ln_factor=ln_factor_for(delta, ln_factor),
        mode=ScheduleMode.ENGINEERING,
        sigmas=settings.ENGINEERING_SIGMAS if sigmas is None else sigmas,
    )
    return _run(traj, require_progress=False, max_rows=max_rows)


def imported_trajectory(
    eps: float,
    delta: float,
    rows: Sequence[TrajectoryRow],
    ln_factor: Optional[float] = None,
    ratio_threshold: Optional[float] = None,
) -> ParamTrajectory:
    """Расписание из внешних строк (например, из CSV). Последняя строка считается строкой остановки."""
    if not rows:
        raise DomainError("Импортируемое расписание пусто")
    threshold = default_threshold(2) if ratio_threshold is None else ratio_threshold
    last = rows[-1]
    reason = _halt_reason(last.L, last.T, settings.ENGINEERING_HALT_LEVEL, threshold)
    return ParamTrajectory(
        eps=eps,
        delta=delta,
        k=2,
        ratio_threshold=threshold,
        halt_level=settings.ENGINEERING_HALT_LEVEL,
        ln_factor=ln_factor_for(delta, ln_factor),
        mode=ScheduleMode.IMPORTED,
        rows=list(rows),
        halt_reason=reason,
        crossover_index=last.i if reason == HaltReason.RATIO_EXCEEDED else None,
    )


# --- Проверки траекторий ---

def _exact_precision(delta: float, precision: int = 40) -> int:
    # 1/(L ln) порядка Δ^(-1): точность растёт вместе с порядком Δ.
    return precision + int(math.log10(max(delta, 10.0))) + 5


def _decimal_keep(L: Decimal, T: Decimal, ln: Decimal) -> Decimal:
    one = Decimal(1)
    if L * ln <= one or T < 0:
        return Decimal(0)
    if T == 0:
        return one
    return ((one - one / (L * ln)).ln() * T).exp()


def _decimal_step(
    traj: ParamTrajectory, L: Decimal, T: Decimal, keep: Decimal, analytic_slack: Decimal
) -> Tuple[Decimal, Decimal]:
    """Шаг рекурсии, выписанный заново в десятичной арифметике; analytic_slack = Δ^(2/3)."""
    one, zero = Decimal(1), Decimal(0)
    e = Decimal(repr(traj.eps))
    d = Decimal(repr(traj.delta))
    ln = Decimal(repr(traj.ln_factor))
    survive = keep ** traj.k
    tracker_keep = (one - (one - e / 2) / ln * survive) * keep ** (traj.k - 1)
    if traj.mode == ScheduleMode.ANALYTIC:
        slack_l = slack_t = analytic_slack
    elif traj.mode == ScheduleMode.ENGINEERING:
        sigmas = Decimal(repr(traj.sigmas))
        clipped = min(max(tracker_keep, zero), one)
        slack_l = sigmas * (max(L, zero) * survive * (one - survive)).sqrt()
        slack_t = sigmas * (max(T, zero) * clipped * (one - clipped)).sqrt()
    else:
        raise DomainError("Импортированное расписание нельзя пересчитать по рекурсии")
    next_L = L * survive - slack_l
    next_T = T * tracker_keep + slack_t
    if traj.mode == ScheduleMode.ENGINEERING:
        next_T = min(next_T, max(d - one, zero))
    return next_L, next_T


def verify_trajectory(traj: ParamTrajectory) -> float:
    """
    Максимальная относительная ошибка строк траектории против независимого
    пересчёта каждой строки из предыдущей в десятичной арифметике (L, T и Keep).

    Величины меньше 1 сравниваются по абсолютной ошибке.
    """
    worst = 0.0

    def rel(exact: Decimal, value: float) -> float:
        scale = max(abs(float(exact)), abs(value), 1.0)
        return abs(float(exact - Decimal(value))) / scale

    with localcontext() as ctx:
        ctx.prec = _exact_precision(traj.delta)
        ln = Decimal(repr(traj.ln_factor))
        slack = (Decimal(repr(traj.delta)).ln() * 2 / 3).exp()
        for previous, row in zip(traj.rows, traj.rows[1:]):
            L, T = _decimal_step(traj, Decimal(previous.L), Decimal(previous.T), Decimal(previous.keep), slack)
            worst = max(worst, rel(L, row.L), rel(T, row.T))
        for row in traj.rows:
            worst = max(worst, rel(_decimal_keep(Decimal(row.L), Decimal(row.T), ln), row.keep))
    return worst


def analytic_x(eps: float, threshold: float = 10.0) -> float:
    """X, при котором (1+ε)(1+ε/4)^X = threshold."""
    if eps <= 0:
        raise DomainError(f"ε должно быть положительным, получено {eps}")
    return math.log(threshold / (1.0 + eps)) / math.log1p(eps / 4.0)


@dataclass
class TrajectoryReport:
    eti_holds: bool
    ekk_holds: bool
    ratio_increasing: bool
    growth_holds: bool
    min_growth: float
    required_growth: float
    slack_dominated: bool
    x_analytic: float
    crossover_within_bound: Optional[bool]
    notes: List[str] = field(default_factory=list)


def check_trajectory_properties(traj: ParamTrajectory, x: Optional[float] = None) -> TrajectoryReport:
    """
    Проверяет свойства траектории и возвращает отчёт (не бросает исключений):
    нижнюю границу L_i > T_i > Δ e^(-2X) при i <= X ln Δ, границу Keep >= 1 - T/(L ln),
    рост отношения не меньше 1 + ε/(4 ln Δ) на каждом шаге и малость отклонения.
    """
    ln_delta = math.log(traj.delta)
    x = analytic_x(traj.eps, traj.ratio_threshold) if x is None else x
    notes: List[str] = []
    kept_rows = traj.rows[:-1] if traj.halt_reason is not None and traj.halt_reason != HaltReason.ROW_LIMIT else traj.rows

    floor_value = traj.delta * math.exp(-2.0 * x)
    eti_holds = True
    for row in traj.rows:
        if row.i > x * ln_delta:
            break
        if not (row.L > row.T > floor_value):
            eti_holds = False
            notes.append(f"строка {row.i}: нарушено L > T > Δe^(-2X)")
            break

    ekk_holds = True
    for row in kept_rows:
        if row.ratio >= 1.0 + traj.eps - 1e-12:
            lower = 1.0 - row.T / (row.L * traj.ln_factor)
            if not (lower - 1e-12 <= row.keep <= 1.0):
                ekk_holds = False
                notes.append(f"строка {row.i}: Keep = {row.keep:.12g} вне [{lower:.12g}, 1]")
                break

    required = 1.0 + traj.eps / (4.0 * traj.ln_factor)
    growths = [b.ratio / a.ratio for a, b in zip(traj.rows, traj.rows[1:])]
    min_growth = min(growths) if growths else math.inf
    ratio_increasing = all(g > 1.0 for g in growths)
    growth_holds = all(g >= required - 1e-12 for g in growths)

    slack = traj.delta ** (2.0 / 3.0)
    slack_dominated = traj.mode == ScheduleMode.ANALYTIC and any(
        slack >= 0.01 * row.L * row.keep ** traj.k for row in kept_rows
    )
    if slack_dominated:
        notes.append("Δ^(2/3) не является членом второго порядка: Δ слишком мало")

    within: Optional[bool] = None
    if traj.crossover_index is not None:
        within = traj.crossover_index <= x * ln_delta

    return TrajectoryReport(
        eti_holds=eti_holds,
        ekk_holds=ekk_holds,
        ratio_increasing=ratio_increasing,
        growth_holds=growth_holds,
        min_growth=min_growth,
        required_growth=required,
        slack_dominated=slack_dominated,
        x_analytic=x,
        crossover_within_bound=within,
        notes=notes,
    )


def exact_trajectory(eps: float, delta: float, rows: int = 5, k: int = 2, precision: int = 60) -> List[TrajectoryRow]:
    """Первые строки траектории в десятичной арифметике повышенной точности (для выборочной сверки)."""
    _check_inputs(eps, delta, k)
    result: List[TrajectoryRow] = []
    with localcontext() as ctx:
        ctx.prec = _exact_precision(delta, precision)
        e = Decimal(repr(eps))
        d = Decimal(repr(delta))
        ln = d.ln()
        slack = (ln * Decimal(2) / Decimal(3)).exp()
        one = Decimal(1)
        L = (one + e) * d
        T = d
        for i in range(rows):
            keep = ((one - one / (L * ln)).ln() * T).exp()
            result.append(TrajectoryRow(i, float(L), float(T), float(keep), float(L / T)))
            keep_k = keep ** k
            L, T = (
                L * keep_k - slack,
                T * (one - (one - e / 2) / ln * keep_k) * keep ** (k - 1) + slack,
            )
    return result


# --- Анализ точки пересечения ---

@dataclass
class CrossoverPoint:
    delta: float
    status: str
    index: Optional[int]
    x_effective: Optional[float]
    x_analytic: float
    within_bound: Optional[bool]
    rows: int


def crossover_analysis(
    eps: float,
    k: int = 2,
    grid: Sequence[float] = DEFAULT_CROSSOVER_GRID,
    ratio_threshold: Optional[float] = None,
) -> Dict[float, CrossoverPoint]:
    """
    Для каждого Δ из сетки: индекс I, на котором L_I > threshold * T_I, и X_eff = I / ln Δ.
    Точки, где рекурсия не растёт или останавливается раньше, получают статус вместо индекса.
    """
    if not 0 < eps < EPS_PROOF_LIMIT:
        raise DomainError(f"Анализ пересечения требует 0 < ε < 1/12, получено {eps}")
    threshold = default_threshold(k) if ratio_threshold is None else ratio_threshold
    x = analytic_x(eps, threshold)
    result: Dict[float, CrossoverPoint] = {}
    for delta in grid:
        try:
            traj = trajectory(eps, delta, k, threshold)
        except NoProgress as exc:
            logger.info(f"Δ={delta:.3g}: рекурсия не растёт ({exc})")
            result[delta] = CrossoverPoint(delta, "no_progress", None, None, x, None, exc.row + 1)
            continue
        if traj.crossover_index is None:
            result[delta] = CrossoverPoint(delta, traj.halt_reason.value, None, None, x, None, len(traj.rows))
            continue
        index = traj.crossover_index
        x_eff = index / math.log(delta)
        result[delta] = CrossoverPoint(delta, HaltReason.RATIO_EXCEEDED.value, index, x_eff, x, x_eff <= x, len(traj.rows))
    return result
