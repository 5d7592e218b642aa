"""
Счётчиковые случайные потоки.

Каждое решение процедуры (активация, монетка, случайное усечение) получает
своё равномерное число как хеш от (seed, назначение, итерация, попытка,
соли вершин, ребро, цвет, сторона). Любое решение воспроизводимо отдельно,
а порядок вычислений не влияет на результат.

Хеш - финализатор splitmix64 над массивами numpy.uint64.
"""

from enum import IntEnum
from typing import Mapping, Optional

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)
_SHIFT11 = np.uint64(11)
_TO_UNIT = 2.0 ** -53


class Purpose(IntEnum):
    ACTIVATE = 1
    FLIP = 2
    TRUNCATE = 3


def _as_u64(value) -> np.ndarray:
    if isinstance(value, (int, np.integer)):
        return np.uint64(int(value) & _MASK)
    return np.asarray(value, dtype=np.int64).astype(np.uint64)


def _mix(x):
    x = x ^ (x >> _SHIFT30)
    x = x * _MUL1
    x = x ^ (x >> _SHIFT27)
    x = x * _MUL2
    return x ^ (x >> _SHIFT31)


def _absorb(h, value):
    return _mix(h ^ ((_as_u64(value) + _ONE) * _GOLDEN))


class RandomStreams:
    """
    Семейство независимых потоков от одного мастер-seed.

    salts: необязательные соли вершин; смена соли вершины u меняет только
    решения, привязанные к u (монетки F(e,u,c) и активации рёбер при u).
    """

    def __init__(self, seed: int, salts: Optional[Mapping[int, int]] = None):
        self.seed = int(seed)
        self.salts = dict(salts or {})

    def with_salts(self, salts: Mapping[int, int]) -> "RandomStreams":
        return RandomStreams(self.seed, salts)

    def vertex_salts(self, vertices: np.ndarray) -> np.ndarray:
        vertices = np.asarray(vertices, dtype=np.int64)
        if not self.salts:
            return np.zeros(vertices.shape, dtype=np.int64)
        lookup = np.vectorize(lambda v: self.salts.get(int(v), 0), otypes=[np.int64])
        return lookup(vertices) if vertices.size else np.zeros(vertices.shape, dtype=np.int64)

    def uniform(
        self,
        purpose: Purpose,
        iteration: int,
        attempt: int,
        edges: np.ndarray,
        colours: np.ndarray,
        sides: np.ndarray,
        salt_a: Optional[np.ndarray] = None,
        salt_b: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Равномерные числа в [0, 1), по одному на элемент (совместно транслируемых) массивов."""
        edges = np.asarray(edges, dtype=np.int64)
        colours = np.asarray(colours, dtype=np.int64)
        sides = np.asarray(sides, dtype=np.int64)
        zeros = np.zeros(np.broadcast(edges, colours, sides).shape, dtype=np.int64)
        salt_a = zeros if salt_a is None else np.asarray(salt_a, dtype=np.int64)
        salt_b = zeros if salt_b is None else np.asarray(salt_b, dtype=np.int64)

        with np.errstate(over="ignore"):
            h = _absorb(np.uint64(0), self.seed)
            h = _absorb(h, int(purpose))
            h = _absorb(h, iteration)
            h = _absorb(h, attempt)
            h = _absorb(h, salt_a)
            h = _absorb(h, salt_b)
            h = _absorb(h, edges)
            h = _absorb(h, colours)
            h = _absorb(h, sides)
            h = np.broadcast_to(h, zeros.shape)
        return (h >> _SHIFT11).astype(np.float64) * _TO_UNIT
