import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd

from analysis.concentration import TRACE_COLUMNS, TraceRow
from analysis.param_recursion import CrossoverPoint, ParamTrajectory, TrajectoryRow, imported_trajectory
from config import settings
from utils.file_operations import load_frame_from_csv, save_frame_to_csv

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRAJECTORY_COLUMNS = ["i", "L_i", "T_i", "Keep_i", "ratio"]
RESAMPLE_COLUMNS = ["step", "e", "f", "alpha", "alpha_prime"]
CROSSOVER_COLUMNS = ["delta", "status", "index", "x_effective", "x_analytic", "within_bound", "rows"]

_INT_TRACE_COLUMNS = {
    "iteration", "attempts", "min_list", "max_tracker", "newly_retained", "uncoloured",
    "loss_trials", "loss_events", "retention_trials", "retention_events",
}


class ExportService:
    """
    Экспорт табличных артефактов в CSV: трассы прогонов, траектории параметров,
    журналы перевыборок, отчёты о концентрации и результаты анализа пересечения.
    """

    def __init__(self, export_dir: Optional[str] = None):
        self.export_dir = Path(export_dir or settings.EXPORT_DIR)

    def default_path(self, name: str) -> Path:
        """Путь внутри EXPORT_DIR для артефактов без явного --out."""
        return self.export_dir / name

    # --- Трассы ---

    def export_trace(self, trace: Sequence[TraceRow], path: PathLike) -> Path:
        df = pd.DataFrame([asdict(row) for row in trace], columns=TRACE_COLUMNS)
        return save_frame_to_csv(df, Path(path))

    def load_trace(self, path: PathLike) -> List[TraceRow]:
        df = load_frame_from_csv(Path(path), TRACE_COLUMNS)
        rows = []
        for record in df.to_dict(orient="records"):
            values = {
                column: int(record[column]) if column in _INT_TRACE_COLUMNS else float(record[column])
                for column in TRACE_COLUMNS
            }
            rows.append(TraceRow(**values))
        return rows

    # --- Траектории ---

    def export_trajectory(self, traj: ParamTrajectory, path: PathLike) -> Path:
        df = pd.DataFrame(
            [[row.i, row.L, row.T, row.keep, row.ratio] for row in traj.rows],
            columns=TRAJECTORY_COLUMNS,
        )
        return save_frame_to_csv(df, Path(path))

    def load_trajectory(
        self,
        path: PathLike,
        eps: float,
        delta: float,
        ln_factor: Optional[float] = None,
        ratio_threshold: Optional[float] = None,
    ) -> ParamTrajectory:
        """Расписание из CSV траектории; используется движком как внешнее расписание."""
        df = load_frame_from_csv(Path(path), TRAJECTORY_COLUMNS)
        rows = [
            TrajectoryRow(int(r["i"]), float(r["L_i"]), float(r["T_i"]), float(r["Keep_i"]), float(r["ratio"]))
            for r in df.to_dict(orient="records")
        ]
        logger.info(f"Загружено расписание из {path}: {len(rows)} строк")
        return imported_trajectory(eps, delta, rows, ln_factor=ln_factor, ratio_threshold=ratio_threshold)

    # --- Прочие таблицы ---

    def export_resample_log(self, log: Sequence[Mapping[str, int]], path: PathLike) -> Path:
        df = pd.DataFrame(list(log), columns=RESAMPLE_COLUMNS)
        return save_frame_to_csv(df, Path(path))

    def export_report(self, report: pd.DataFrame, path: PathLike) -> Path:
        return save_frame_to_csv(report, Path(path))

    def export_crossover(self, points: Mapping[float, CrossoverPoint], path: PathLike) -> Path:
        records: List[Dict[str, object]] = []
        for delta, point in points.items():
            records.append({
                "delta": delta,
                "status": point.status,
                "index": point.index if point.index is not None else "",
                "x_effective": point.x_effective if point.x_effective is not None else math.nan,
                "x_analytic": point.x_analytic,
                "within_bound": "" if point.within_bound is None else point.within_bound,
                "rows": point.rows,
            })
        df = pd.DataFrame(records, columns=CROSSOVER_COLUMNS)
        return save_frame_to_csv(df, Path(path))
