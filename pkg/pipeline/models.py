from pydantic import BaseModel, Field
from typing import Dict, List, Optional

from config import settings


class MatchingEntry(BaseModel):
    """Паросочетание одной пары инцидентных рёбер, edge_a < edge_b."""
    edge_a: int = Field(..., ge=0, description="Меньший id ребра пары")
    edge_b: int = Field(..., ge=0, description="Больший id ребра пары")
    pairs: List[List[int]] = Field(default_factory=list, description="Пары цветов [α, α'] в ориентации (edge_a, edge_b)")


class InstanceDocument(BaseModel):
    """Файл экземпляра: граф и рёберное соответствие."""
    version: int = Field(default=settings.FORMAT_VERSION, description="Версия формата файла")
    vertex_count: int = Field(..., ge=1)
    edges: List[List[int]] = Field(default_factory=list, description="Рёбра как пары вершин в порядке id")
    q: int = Field(..., ge=1, description="Число цветов, цвета 1..q")
    matchings: List[MatchingEntry] = Field(default_factory=list)


class ColouringDocument(BaseModel):
    """Файл раскраски: пары [ребро, цвет] по возрастанию id ребра."""
    version: int = Field(default=settings.FORMAT_VERSION)
    colours: List[List[int]] = Field(default_factory=list)

    def as_mapping(self) -> Dict[int, int]:
        return {int(e): int(c) for e, c in self.colours}


class EngineOptions(BaseModel):
    """Параметры движка, собранные из настроек и флагов командной строки."""
    eps: float = Field(default=settings.DEFAULT_EPS, gt=0)
    seed: int = Field(default=settings.DEFAULT_SEED)
    ln_factor: Optional[float] = Field(None, gt=0, description="Явное значение вместо max(ln Δ, LN_FACTOR_FLOOR)")
    retry_limit: int = Field(default=settings.RETRY_LIMIT, ge=1)
    resample_cap: Optional[int] = Field(None, ge=0, description="Лимит перевыборок; по умолчанию RESAMPLE_CAP_PER_EDGE * |рёбер|")
    resample_cap_per_edge: Optional[int] = Field(None, ge=1, description="Лимит перевыборок на остаточное ребро, если resample_cap не задан")
    ratio_threshold: float = Field(default=settings.RATIO_THRESHOLD, gt=1)
    truncation_mode: str = Field(default=settings.TRUNCATION_MODE, pattern="^(smallest|random)$")
    engineering_mode: bool = False
    strict_hypothesis: bool = Field(False, description="Не запускать финишёр, если L_min < LLL_FACTOR * T_max")
    instrument: bool = True


class FinisherSummary(BaseModel):
    residual_edges: int
    l_min: int
    t_max: int
    hypothesis_ok: bool
    resamples: int = 0
    success: bool = False


class RunSummary(BaseModel):
    """Машиночитаемая сводка одного прогона конвейера (без замеров времени)."""
    seed: int
    eps: float
    delta: int
    q: int
    edges: int
    schedule_mode: str
    iterations: int = 0
    halt_reason: str
    nibble_coloured: int = 0
    fallback: Optional[str] = Field(None, description="Причина, по которой процедура nibble была пропущена")
    finisher: Optional[FinisherSummary] = None
    success: bool = False
    valid: bool = False
    error: Optional[str] = None
