import logging
import sys
import time
from pathlib import Path
from logging.handlers import RotatingFileHandler

from config import settings


def _dedicated_logger(name: str, log_dir_path: Path, log_level: int, formatter: logging.Formatter) -> logging.Logger:
    """Именованный логгер со своим файлом, не передающий записи корневому."""
    dedicated = logging.getLogger(name)
    if dedicated.hasHandlers():
        dedicated.handlers.clear()
    dedicated.setLevel(log_level)
    handler = RotatingFileHandler(
        filename=log_dir_path / f"{name}.log",
        maxBytes=10_485_760,
        backupCount=5,
        encoding="utf-8",
    )
    handler.setFormatter(formatter)
    dedicated.addHandler(handler)
    dedicated.propagate = False
    return dedicated


def setup_logging(log_level_str: str = "INFO"):
    """Настраивает систему логирования приложения."""

    log_level = getattr(logging, log_level_str.upper(), logging.INFO)

    log_formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    log_dir_path = Path(settings.LOG_DIR)
    log_dir_path.mkdir(parents=True, exist_ok=True)

    root_logger = logging.getLogger()
    # Очищаем существующие обработчики, чтобы избежать дублирования
    if root_logger.hasHandlers():
        root_logger.handlers.clear()

    root_logger.setLevel(log_level)

    # Консоль - stderr: stdout занят машиночитаемым JSON
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(log_formatter)
    root_logger.addHandler(console_handler)

    app_log_filename = log_dir_path / f"app_{time.strftime('%Y-%m-%d')}.log"
    app_file_handler = RotatingFileHandler(
        filename=app_log_filename,
        maxBytes=10_485_760,  # 10 MB
        backupCount=10,
        encoding="utf-8",
    )
    app_file_handler.setFormatter(log_formatter)
    root_logger.addHandler(app_file_handler)

    # Время прогонов пишется только сюда, в артефакты оно не попадает
    _dedicated_logger("performance", log_dir_path, log_level, log_formatter)
    # Сводки отдельных прогонов
    _dedicated_logger("experiments", log_dir_path, log_level, log_formatter)

    logging.info(f"Система логирования инициализирована. Уровень: {log_level_str.upper()}. Директория логов: {log_dir_path.resolve()}")
