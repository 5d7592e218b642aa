"""
Командная строка: gen, color, simulate, oracle, validate, stats.

Сводка каждой команды печатается в stdout как JSON; логи идут в stderr и в
файлы LOG_DIR. Коды выхода: 0 успех, 2 некорректный ввод, 3 RetryExhausted,
4 ResampleCapExceeded или EmptyResidualList, 5 раскраска не прошла проверку.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

from analysis.concentration import concentration_report
from analysis.oracle import identity_builder, oracle_colourable, oracle_min_q, shift_builder
from analysis.param_recursion import (
    DEFAULT_CROSSOVER_GRID,
    ParamTrajectory,
    check_trajectory_properties,
    crossover_analysis,
    engineering_trajectory,
    trajectory,
    verify_trajectory,
)
from config import settings
from core.correspondence import (
    identity_correspondence,
    random_correspondence,
    shift_correspondence,
    validate_correspondence,
)
from core.exceptions import (
    EmptyResidualList,
    InvalidCorrespondence,
    NibbleError,
    ResampleCapExceeded,
    RetryExhausted,
)
from core.graph import (
    SimpleGraph,
    gen_complete,
    gen_cycle,
    gen_path,
    gen_random_max_degree,
    gen_random_regular,
    gen_star,
)
from core.validator import validate_colouring
from logging_config import setup_logging
from pipeline.models import EngineOptions
from pipeline.orchestrator import ColouringOrchestrator
from services.export_service import ExportService
from services.instance_store import load_colouring, load_instance, save_colouring, save_instance

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_RETRY_EXHAUSTED = 3
EXIT_FINISHER_FAILED = 4
EXIT_INVALID_COLOURING = 5

DEFAULT_REPORT_NAME = "concentration_report.csv"


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2, default=_json_default))


def _json_default(value: Any) -> Any:
    if hasattr(value, "item"):
        return value.item()
    return str(value)


def _engine_options(args: argparse.Namespace) -> EngineOptions:
    """Флаги поверх настроек; синглтон settings не меняется."""
    return EngineOptions(
        eps=args.eps,
        seed=args.seed,
        ln_factor=args.ln_factor,
        retry_limit=args.retry_limit,
        resample_cap=args.resample_cap,
        resample_cap_per_edge=args.resample_cap_per_edge,
        ratio_threshold=args.ratio_threshold,
        truncation_mode=args.truncation,
        engineering_mode=args.engineering_mode,
        strict_hypothesis=getattr(args, "strict_hypothesis", False),
    )


def _load_schedule(args: argparse.Namespace, exporter: ExportService, graph: SimpleGraph) -> Optional[ParamTrajectory]:
    """Внешнее расписание из CSV траектории (флаг --schedule) либо None."""
    if not args.schedule:
        return None
    return exporter.load_trajectory(
        args.schedule, args.eps, graph.max_degree, ln_factor=args.ln_factor, ratio_threshold=args.ratio_threshold,
    )


# --- Команды ---

def cmd_gen(args: argparse.Namespace) -> int:
    generators: Dict[str, Callable[[], Any]] = {
        "cycle": lambda: gen_cycle(args.n),
        "complete": lambda: gen_complete(args.n),
        "path": lambda: gen_path(args.n),
        "star": lambda: gen_star(args.n),
        "random": lambda: gen_random_max_degree(args.n, args.degree, args.seed),
        "regular": lambda: gen_random_regular(args.n, args.degree, args.seed),
    }
    graph = generators[args.graph]()
    q = args.q if args.q is not None else max(1, math.ceil(1.2 * graph.max_degree))
    if args.corr == "identity":
        corr = identity_correspondence(graph, q)
    elif args.corr == "shift":
        corr = shift_correspondence(graph, q, [(0, 1)])
    else:
        corr = random_correspondence(graph, q, args.density, args.seed)

    save_instance(args.out, graph, corr)
    _emit({
        "instance": str(args.out),
        "vertex_count": graph.vertex_count,
        "edges": graph.edge_count,
        "max_degree": graph.max_degree,
        "q": q,
        "correspondence": args.corr,
    })
    return EXIT_OK


def cmd_color(args: argparse.Namespace) -> int:
    graph, corr = load_instance(args.instance)
    orchestrator = ColouringOrchestrator(_engine_options(args))
    exporter = ExportService()
    schedule = _load_schedule(args, exporter, graph)

    if args.runs > 1:
        seeds = list(range(args.seed, args.seed + args.runs))
        results = orchestrator.run_many(graph, corr, seeds, schedule)
        if args.traces:
            for result in results:
                exporter.export_trace(result.trace, Path(args.traces) / f"trace_seed{result.summary.seed}.csv")
        invalid = [r.summary.seed for r in results if r.summary.finisher and r.summary.finisher.success and not r.summary.valid]
        _emit({
            "runs": len(results),
            "succeeded": sum(1 for r in results if r.summary.success),
            "invalid_successes": invalid,
            "summaries": [r.summary.model_dump() for r in results],
        })
        return EXIT_INVALID_COLOURING if invalid else EXIT_OK

    result = orchestrator.run(graph, corr, schedule=schedule)
    if args.out and result.summary.success:
        save_colouring(args.out, result.colouring)
    if args.trace:
        exporter.export_trace(result.trace, args.trace)
    if args.resample_log:
        exporter.export_resample_log(result.resample_log, args.resample_log)
    _emit(result.summary.model_dump())

    finisher = result.summary.finisher
    if finisher is None or not finisher.success:
        return EXIT_FINISHER_FAILED
    return EXIT_OK if result.summary.valid else EXIT_INVALID_COLOURING


def cmd_simulate(args: argparse.Namespace) -> int:
    exporter = ExportService()
    if args.crossover:
        grid = tuple(args.grid) if args.grid else DEFAULT_CROSSOVER_GRID
        points = crossover_analysis(args.eps, args.k, grid=grid, ratio_threshold=args.ratio_threshold)
        if args.out:
            exporter.export_crossover(points, args.out)
        _emit({
            "eps": args.eps,
            "k": args.k,
            "points": [asdict(point) for point in points.values()],
        })
        return EXIT_OK

    if args.engineering_mode:
        traj = engineering_trajectory(args.eps, args.delta, args.k, args.ratio_threshold, ln_factor=args.ln_factor)
    else:
        traj = trajectory(args.eps, args.delta, args.k, args.ratio_threshold, ln_factor=args.ln_factor)
    if args.out:
        exporter.export_trajectory(traj, args.out)
    report = check_trajectory_properties(traj)
    final = traj.final_row
    _emit({
        "eps": traj.eps,
        "delta": traj.delta,
        "k": traj.k,
        "mode": traj.mode.value,
        "rows": len(traj.rows),
        "halt_reason": traj.halt_reason.value,
        "crossover_index": traj.crossover_index,
        "final": {"L": final.L, "T": final.T, "keep": final.keep, "ratio": final.ratio},
        "max_relative_error": verify_trajectory(traj),
        "report": asdict(report),
    })
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    graph, corr = load_instance(args.instance)
    limits = {"max_edges": args.max_edges, "max_q": args.max_q}
    if args.min_q:
        builder = identity_builder if args.builder == "identity" else shift_builder
        q = oracle_min_q(graph, builder, args.q_max, **limits)
        _emit({"builder": args.builder, "q_max": args.q_max, "min_q": q})
        return EXIT_OK

    report = validate_correspondence(corr)
    if not report.ok:
        raise InvalidCorrespondence(report)
    result = oracle_colourable(graph, corr, **limits)
    witness = [[e, c] for e, c in sorted(result.witness.items())] if result.witness is not None else None
    _emit({
        "decision": "colourable" if result.colourable else "uncolourable",
        "witness": witness,
        "nodes": result.nodes,
    })
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    graph, corr = load_instance(args.instance)
    colouring = load_colouring(args.colouring)
    report = validate_colouring(graph, corr, colouring, require_total=not args.partial)
    _emit({
        "valid": report.valid,
        "conflicts": [list(c) for c in report.conflicts],
        "uncoloured": report.uncoloured,
        "out_of_range": report.out_of_range,
    })
    return EXIT_OK if report.valid else EXIT_INVALID_COLOURING


def cmd_stats(args: argparse.Namespace) -> int:
    exporter = ExportService()
    if args.traces:
        traces = [exporter.load_trace(path) for path in args.traces]
    elif args.instance:
        graph, corr = load_instance(args.instance)
        orchestrator = ColouringOrchestrator(_engine_options(args))
        seeds = list(range(args.seed, args.seed + args.runs))
        schedule = _load_schedule(args, exporter, graph)
        traces = [result.trace for result in orchestrator.run_many(graph, corr, seeds, schedule)]
    else:
        raise ValueError("stats требует файл экземпляра или --traces")

    report = concentration_report(traces)
    out = exporter.export_report(report, args.out or exporter.default_path(DEFAULT_REPORT_NAME))
    _emit({
        "report_file": str(out),
        "runs": len(traces),
        "rows": len(report),
        "flagged": int(report["flagged"].sum()) if len(report) else 0,
        "report": report.to_dict(orient="records"),
    })
    return EXIT_OK


# --- Разбор аргументов ---

def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="Мастер-seed всех случайных решений")
    parser.add_argument("--eps", type=float, default=settings.DEFAULT_EPS, help="ε: число цветов q ≈ (1+ε)Δ")
    parser.add_argument("--ln-factor", type=float, default=None, help="Значение вместо max(ln Δ, LN_FACTOR_FLOOR)")
    parser.add_argument("--retry-limit", type=int, default=settings.RETRY_LIMIT, help="Попыток на итерацию")
    parser.add_argument("--resample-cap", type=int, default=None, help="Лимит перевыборок финишёра")
    parser.add_argument("--resample-cap-per-edge", type=int, default=None, help="Лимит перевыборок на остаточное ребро (серийные проверки: SERIES_RESAMPLE_CAP_PER_EDGE)")
    parser.add_argument("--ratio-threshold", type=float, default=settings.RATIO_THRESHOLD, help="Остановка при L > threshold*T")
    parser.add_argument("--engineering-mode", action="store_true", help="Настольное расписание с биномиальными отклонениями")
    parser.add_argument("--truncation", choices=["smallest", "random"], default=settings.TRUNCATION_MODE)
    parser.add_argument("--schedule", default=None, help="CSV траектории (i, L_i, T_i, Keep_i, ratio) вместо вычисляемого расписания")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edge-dp-nibble",
        description="Рёберная раскраска по соответствию: процедура nibble, финишёр и диагностика.",
    )
    parser.add_argument("--log-level", default=None, help="Уровень логирования (по умолчанию INFO, DEBUG при NIBBLE_DEBUG)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Сгенерировать граф и соответствие в файл экземпляра")
    gen.add_argument("--graph", choices=["cycle", "complete", "path", "star", "random", "regular"], default="random")
    gen.add_argument("--n", type=int, required=True, help="Число вершин (для star - число листьев)")
    gen.add_argument("--degree", type=int, default=8, help="Ограничение степени (random) или степень (regular)")
    gen.add_argument("--corr", choices=["identity", "shift", "random"], default="identity")
    gen.add_argument("--q", type=int, default=None, help="Число цветов; по умолчанию ⌈1.2Δ⌉")
    gen.add_argument("--density", type=float, default=1.0, help="Доля q в размере случайных паросочетаний")
    gen.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_gen)

    color = sub.add_parser("color", help="Полный конвейер: nibble -> финишёр -> проверка")
    color.add_argument("instance")
    _add_engine_flags(color)
    color.add_argument("--strict-hypothesis", action="store_true", help="Не запускать финишёр при L_min < 8 T_max")
    color.add_argument("--out", default=None, help="Файл раскраски")
    color.add_argument("--trace", default=None, help="CSV трассы итераций")
    color.add_argument("--resample-log", default=None, help="CSV журнала перевыборок")
    color.add_argument("--runs", type=int, default=1, help="Число независимых прогонов с seed, seed+1, ...")
    color.add_argument("--traces", default=None, help="Директория для трасс серии прогонов")
    color.set_defaults(handler=cmd_color)

    simulate = sub.add_parser("simulate", help="Траектории параметров и анализ пересечения")
    simulate.add_argument("--eps", type=float, default=settings.DEFAULT_EPS)
    simulate.add_argument("--delta", type=float, default=1e100)
    simulate.add_argument("--k", type=int, default=2)
    simulate.add_argument("--ratio-threshold", type=float, default=None)
    simulate.add_argument("--ln-factor", type=float, default=None)
    simulate.add_argument("--engineering-mode", action="store_true")
    simulate.add_argument("--crossover", action="store_true", help="Перебрать Δ по сетке")
    simulate.add_argument("--grid", type=float, nargs="*", default=None, help="Значения Δ для --crossover")
    simulate.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="Не используется; для единообразия флагов")
    simulate.add_argument("--out", default=None, help="CSV траектории или сетки")
    simulate.set_defaults(handler=cmd_simulate)

    oracle = sub.add_parser("oracle", help="Точное решение для крошечных экземпляров")
    oracle.add_argument("instance")
    oracle.add_argument("--min-q", action="store_true", help="Наименьшее q для семейства соответствий")
    oracle.add_argument("--builder", choices=["identity", "shift"], default="identity")
    oracle.add_argument("--q-max", type=int, default=settings.ORACLE_MAX_Q)
    oracle.add_argument("--max-edges", type=int, default=settings.ORACLE_MAX_EDGES)
    oracle.add_argument("--max-q", type=int, default=settings.ORACLE_MAX_Q)
    oracle.set_defaults(handler=cmd_oracle)

    validate = sub.add_parser("validate", help="Проверить файл раскраски")
    validate.add_argument("instance")
    validate.add_argument("colouring")
    validate.add_argument("--partial", action="store_true", help="Допускать непокрашенные рёбра")
    validate.set_defaults(handler=cmd_validate)

    stats = sub.add_parser("stats", help="Отчёт о концентрации по трассам прогонов")
    stats.add_argument("instance", nargs="?", default=None)
    _add_engine_flags(stats)
    stats.add_argument("--runs", type=int, default=40)
    stats.add_argument("--traces", nargs="*", default=None, help="CSV трасс вместо новых прогонов")
    stats.add_argument("--out", default=None, help=f"CSV отчёта; по умолчанию EXPORT_DIR/{DEFAULT_REPORT_NAME}")
    stats.set_defaults(handler=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    log_level = args.log_level or settings.log_level or ("DEBUG" if settings.DEBUG else "INFO")
    setup_logging(log_level_str=log_level)

    try:
        return args.handler(args)
    except RetryExhausted as e:
        logger.error(f"{args.command}: {e}")
        _emit({"error": type(e).__name__, "message": str(e), "iteration": e.iteration})
        return EXIT_RETRY_EXHAUSTED
    except (ResampleCapExceeded, EmptyResidualList) as e:
        logger.error(f"{args.command}: {e}")
        _emit({"error": type(e).__name__, "message": str(e)})
        return EXIT_FINISHER_FAILED
    except (NibbleError, ValueError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        _emit({"error": type(e).__name__, "message": str(e)})
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
