from pydantic_settings import BaseSettings
from typing import Optional


class Settings(BaseSettings):
    """Конфигурация приложения на основе переменных окружения (префикс NIBBLE_)."""

    # Базовые настройки приложения
    APP_NAME: str = "edge-dp-nibble"
    DEBUG: bool = False

    # Пути для логов и экспортируемых артефактов
    LOG_DIR: str = "logs"
    EXPORT_DIR: str = "exports"

    # Процедура nibble
    DEFAULT_SEED: int = 0
    DEFAULT_EPS: float = 0.2
    LN_FACTOR_FLOOR: float = 2.0  # нижняя граница для ln Δ в вероятности активации
    RETRY_LIMIT: int = 50  # попыток на итерацию, если свойство (1) нарушено
    TRUNCATION_MODE: str = "smallest"  # "smallest" | "random"

    # Рекурсия параметров
    RATIO_THRESHOLD: float = 10.0  # остановка при L_i > threshold * T_i

    # Настольный (engineering) режим расписания
    ENGINEERING_SIGMAS: float = 4.0
    ENGINEERING_HALT_LEVEL: float = 2.0

    # Финишёр
    RESAMPLE_CAP_PER_EDGE: int = 10_000
    SERIES_RESAMPLE_CAP_PER_EDGE: int = 100  # лимит на ребро в серийных проверках корректности и завершения
    LLL_FACTOR: float = 8.0  # условие локальной леммы: l_min >= LLL_FACTOR * t_max

    # Точный оракул
    ORACLE_MAX_EDGES: int = 16
    ORACLE_MAX_Q: int = 8

    # Параллельные независимые прогоны
    MAX_WORKERS: int = 4

    # Версия формата файлов экземпляров и раскрасок
    FORMAT_VERSION: int = 1

    log_level: Optional[str] = None  # NIBBLE_LOG_LEVEL, если не задан --log-level

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        env_prefix = "NIBBLE_"
        extra = "allow"  # Разрешаем дополнительные поля


# Создаем экземпляр настроек
settings = Settings()
