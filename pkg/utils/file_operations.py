import logging
from pathlib import Path
from typing import Sequence, Union

import pandas as pd

PathLike = Union[str, Path]


def save_frame_to_csv(df: pd.DataFrame, file_path: PathLike) -> Path:
    """Сохраняет DataFrame в CSV файл (без индекса, UTF-8, создаёт директорию)."""
    path = Path(file_path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
        logging.info(f"Таблица сохранена в файл: {path} ({len(df)} строк)")
    except Exception as e:
        logging.error(f"Ошибка сохранения CSV {path}: {e}", exc_info=True)
        raise
    return path


def load_frame_from_csv(file_path: PathLike, required_columns: Sequence[str] = ()) -> pd.DataFrame:
    """Читает CSV с точным восстановлением чисел с плавающей точкой."""
    path = Path(file_path)
    df = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    missing = [column for column in required_columns if column not in df.columns]
    if missing:
        raise ValueError(f"В файле {path} нет столбцов: {', '.join(missing)}")
    return df
