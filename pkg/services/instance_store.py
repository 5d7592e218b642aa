import json
import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ValidationError

from core.correspondence import EdgeCorrespondence, correspondence_from_pairs
from core.exceptions import InstanceFormatError
from core.graph import SimpleGraph, build_graph
from pipeline.models import ColouringDocument, InstanceDocument, MatchingEntry

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_document(graph: SimpleGraph, corr: EdgeCorrespondence) -> InstanceDocument:
    """Граф и соответствие в документ файла экземпляра."""
    matchings = [
        MatchingEntry(edge_a=a, edge_b=b, pairs=[[x, y] for x, y in pairs])
        for (a, b), pairs in corr.matchings.items()
    ]
    return InstanceDocument(
        vertex_count=graph.vertex_count,
        edges=[[u, v] for u, v in graph.edges],
        q=corr.q,
        matchings=matchings,
    )


def from_document(doc: InstanceDocument) -> Tuple[SimpleGraph, EdgeCorrespondence]:
    """Документ в граф и соответствие. Инварианты соответствия здесь не проверяются."""
    graph = build_graph(doc.vertex_count, [tuple(edge) for edge in doc.edges])
    raw = {(m.edge_a, m.edge_b): [tuple(pair) for pair in m.pairs] for m in doc.matchings}
    return graph, correspondence_from_pairs(graph, doc.q, raw)


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def _read_document(path: PathLike, model: type) -> BaseModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceFormatError(str(path), f"не удалось прочитать файл: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(str(path), f"некорректный JSON: {e.msg}", line=e.lineno)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        top_key = str(first["loc"][0]) if first["loc"] else ""
        raise InstanceFormatError(str(path), f"{location}: {first['msg']}", line=_line_of(text, top_key))


def _write_document(path: PathLike, doc: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Файл сохранён: {path}")
    return path


def load_instance(path: PathLike) -> Tuple[SimpleGraph, EdgeCorrespondence]:
    doc = _read_document(path, InstanceDocument)
    if doc.version != InstanceDocument.model_fields["version"].default:
        logger.warning(f"{path}: версия формата {doc.version} отличается от текущей")
    return from_document(doc)


def save_instance(path: PathLike, graph: SimpleGraph, corr: EdgeCorrespondence) -> Path:
    return _write_document(path, to_document(graph, corr))


def load_colouring(path: PathLike) -> Dict[int, int]:
    return _read_document(path, ColouringDocument).as_mapping()


def save_colouring(path: PathLike, colouring: Mapping[int, int]) -> Path:
    doc = ColouringDocument(colours=[[int(e), int(c)] for e, c in sorted(colouring.items())])
    return _write_document(path, doc)
