import asyncio
import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from analysis.concentration import TraceRow
from analysis.finisher import build_residual, check_hypothesis, complete_colouring, merge_colourings
from analysis.nibble import NibbleState, init_state, run_nibble
from analysis.param_recursion import (
    ParamTrajectory,
    engineering_trajectory,
    ln_factor_for,
    trajectory,
)
from config import settings
from core.correspondence import EdgeCorrespondence, validate_correspondence
from core.exceptions import DomainError, InvalidCorrespondence, NibbleError, NoProgress, ScheduleEmpty
from core.graph import SimpleGraph
from core.validator import validate_colouring
from pipeline.models import EngineOptions, FinisherSummary, RunSummary

logger = logging.getLogger(__name__)
perf_logger = logging.getLogger("performance")
experiments_logger = logging.getLogger("experiments")


@dataclass
class PipelineResult:
    summary: RunSummary
    colouring: Dict[int, int] = field(default_factory=dict)
    trace: List[TraceRow] = field(default_factory=list)
    resample_log: List[Dict[str, int]] = field(default_factory=list)


class ColouringOrchestrator:
    """
    Оркестратор полного конвейера: расписание -> nibble -> остаточный экземпляр ->
    проверка гипотезы -> финишёр -> независимая проверка раскраски.
    """

    def __init__(self, options: Optional[EngineOptions] = None, max_workers: Optional[int] = None):
        self.options = options or EngineOptions()
        self.max_workers = max_workers or settings.MAX_WORKERS
        logger.debug(f"ColouringOrchestrator: {self.options.model_dump()}")

    def build_schedule(self, graph: SimpleGraph) -> ParamTrajectory:
        """Расписание для Δ(G): исходная рекурсия или настольный режим."""
        delta = graph.max_degree
        if delta < 2:
            raise DomainError(f"Расписание требует Δ >= 2, получено Δ = {delta}")
        ln_factor = ln_factor_for(delta, self.options.ln_factor)
        if self.options.engineering_mode:
            return engineering_trajectory(
                self.options.eps, delta, ratio_threshold=self.options.ratio_threshold, ln_factor=ln_factor,
            )
        return trajectory(
            self.options.eps, delta, 2, self.options.ratio_threshold, ln_factor=ln_factor,
        )

    def _nibble_phase(
        self,
        graph: SimpleGraph,
        corr: EdgeCorrespondence,
        seed: int,
        schedule: Optional[ParamTrajectory],
        summary: RunSummary,
    ) -> Tuple[NibbleState, List[TraceRow]]:
        opts = self.options
        try:
            schedule = schedule or self.build_schedule(graph)
            summary.schedule_mode = schedule.mode.value
            run = run_nibble(
                graph, corr, opts.eps, schedule,
                retry_limit=opts.retry_limit,
                seed=seed,
                truncation_mode=opts.truncation_mode,
                instrument=opts.instrument,
            )
        except (ScheduleEmpty, DomainError, NoProgress) as exc:
            logger.warning(f"Процедура nibble пропущена, экземпляр передаётся финишёру: {exc}")
            summary.halt_reason = "skipped"
            summary.fallback = str(exc)
            return init_state(graph, corr), []
        summary.halt_reason = run.halt_reason
        summary.iterations = len(run.trace)
        summary.nibble_coloured = len(run.colouring)
        return run.state, run.trace

    def run(
        self,
        graph: SimpleGraph,
        corr: EdgeCorrespondence,
        seed: Optional[int] = None,
        schedule: Optional[ParamTrajectory] = None,
    ) -> PipelineResult:
        """
        Один прогон конвейера.

        Если расписание построить нельзя (ScheduleEmpty, DomainError, NoProgress),
        процедура nibble пропускается и финишёр получает исходный экземпляр.

        Raises:
            InvalidCorrespondence, RetryExhausted, EmptyResidualList, ResampleCapExceeded
        """
        opts = self.options
        seed = opts.seed if seed is None else seed
        report = validate_correspondence(corr)
        if not report.ok:
            raise InvalidCorrespondence(report)

        started = time.perf_counter()
        summary = RunSummary(
            seed=seed,
            eps=opts.eps,
            delta=graph.max_degree,
            q=corr.q,
            edges=graph.edge_count,
            schedule_mode="engineering" if opts.engineering_mode else "analytic",
            halt_reason="",
        )
        trace: List[TraceRow] = []
        if graph.edge_count == 0:
            state = init_state(graph, corr)
            summary.halt_reason = "edgeless"
        else:
            state, trace = self._nibble_phase(graph, corr, seed, schedule, summary)

        residual = build_residual(state, corr)
        hypothesis = check_hypothesis(residual)
        summary.finisher = FinisherSummary(
            residual_edges=len(residual.edges),
            l_min=residual.l_min,
            t_max=residual.t_max,
            hypothesis_ok=hypothesis.ok,
        )
        if not hypothesis.ok:
            logger.warning(f"Условие локальной леммы не выполнено: {hypothesis}")
            if opts.strict_hypothesis:
                summary.error = f"гипотеза финишёра нарушена: {hypothesis}"
                experiments_logger.info(summary.model_dump_json())
                return PipelineResult(summary, state.colouring(), trace)

        cap = opts.resample_cap
        if cap is None and opts.resample_cap_per_edge is not None:
            cap = opts.resample_cap_per_edge * len(residual.edges)
        completion = complete_colouring(residual, seed, cap)
        summary.finisher.resamples = completion.resamples
        summary.finisher.success = True

        colouring = merge_colourings(residual.partial, completion.colouring)
        validation = validate_colouring(graph, corr, colouring, require_total=True)
        summary.valid = validation.valid
        summary.success = validation.valid
        if not validation.valid:
            summary.error = validation.summary()
            logger.error(f"Итоговая раскраска не прошла проверку: {summary.error}")

        perf_logger.info(f"Прогон seed={seed}: m={graph.edge_count}, {time.perf_counter() - started:.3f} с")
        experiments_logger.info(summary.model_dump_json())
        return PipelineResult(summary, colouring, trace, completion.log)

    def _run_safe(
        self, graph: SimpleGraph, corr: EdgeCorrespondence, seed: int, schedule: Optional[ParamTrajectory] = None
    ) -> PipelineResult:
        """Прогон, в котором ошибки процедуры записываются в сводку, а не пробрасываются."""
        try:
            return self.run(graph, corr, seed, schedule)
        except NibbleError as exc:
            logger.warning(f"Прогон seed={seed} завершился ошибкой {type(exc).__name__}: {exc}")
            summary = RunSummary(
                seed=seed,
                eps=self.options.eps,
                delta=graph.max_degree,
                q=corr.q,
                edges=graph.edge_count,
                schedule_mode="engineering" if self.options.engineering_mode else "analytic",
                halt_reason="error",
                error=f"{type(exc).__name__}: {exc}",
            )
            return PipelineResult(summary)

    async def run_many_async(
        self,
        graph: SimpleGraph,
        corr: EdgeCorrespondence,
        seeds: Sequence[int],
        schedule: Optional[ParamTrajectory] = None,
    ) -> List[PipelineResult]:
        """Независимые прогоны в пуле потоков; результаты в порядке seeds."""
        loop = asyncio.get_running_loop()
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            tasks = [loop.run_in_executor(executor, self._run_safe, graph, corr, seed, schedule) for seed in seeds]
            return list(await asyncio.gather(*tasks))

    def run_many(
        self,
        graph: SimpleGraph,
        corr: EdgeCorrespondence,
        seeds: Sequence[int],
        schedule: Optional[ParamTrajectory] = None,
    ) -> List[PipelineResult]:
        results = asyncio.run(self.run_many_async(graph, corr, seeds, schedule))
        succeeded = sum(1 for r in results if r.summary.success)
        logger.info(f"Серия из {len(results)} прогонов: успешных {succeeded}")
        return results
