"""
键控随机流 - 抽样值只由 (种子, 边标识, 迭代帧, 抽样序号) 决定
"""
import hashlib
from typing import List

import numpy as np

_MASK64 = (1 << 64) - 1


def _edge_key(edge_id: str) -> int:
    digest = hashlib.blake2b(edge_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def stream_key(seed: int, edge_id: str, iteration: int, ordinal: int) -> List[int]:
    """组装 SeedSequence 的熵，各分量均为非负整数"""
    return [seed & _MASK64, _edge_key(edge_id), iteration & _MASK64, ordinal & _MASK64]


def keyed_uniform(seed: int, edge_id: str, iteration: int, ordinal: int) -> float:
    """返回 [0, 1) 内的均匀抽样"""
    sequence = np.random.SeedSequence(stream_key(seed, edge_id, iteration, ordinal))
    return float(np.random.default_rng(sequence).random())


class KeyedStream:
    """一次边求值所用的抽样流，序号随每次抽样递增"""

    def __init__(self, seed: int, edge_id: str, iteration: int):
        self.seed = seed
        self.edge_id = edge_id
        self.iteration = iteration
        self._ordinal = 0

    @property
    def draws(self) -> int:
        return self._ordinal

    def random(self) -> float:
        value = keyed_uniform(self.seed, self.edge_id, self.iteration, self._ordinal)
        self._ordinal += 1
        return value

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def randint(self, low: int, high: int) -> int:
        """闭区间 [low, high] 内的整数"""
        span = high - low + 1
        return low + min(int(self.random() * span), span - 1)
