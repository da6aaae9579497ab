"""One hash family per run: node ``v`` hashes at ``v``, color ``c`` at ``n + c``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .core import D1LCInstance
from .kwise import HashFamily, Seed, make_family


@dataclass(frozen=True)
class RunHash:
    family: HashFamily
    n: int

    @property
    def range_bits(self) -> int:
        return self.family.range_bits

    def node_out(self, seeds: Sequence[int] | np.ndarray, nodes: Sequence[int]) -> np.ndarray:
        return self.family.outputs(seeds, list(nodes))

    def color_out(self, seeds: Sequence[int] | np.ndarray, colors: Sequence[int]) -> np.ndarray:
        return self.family.outputs(seeds, [self.n + c for c in colors])

    def node_int(self, seed: Seed | int, v: int, length: int) -> int:
        return self.family.eval_int(seed, v, length)

    def color_int(self, seed: Seed | int, c: int, length: int) -> int:
        return self.family.eval_int(seed, self.n + c, length)


def default_range_bits(n: int, color_bits: int = 0) -> int:
    # 5*ceil(log2 n) keeps seed_bits / ceil(log2 n) (the batch count) the same for every n
    return max(2, 5 * math.ceil(math.log2(max(n, 2))), color_bits)


def make_run_hash(n: int, max_color: int, k: int, range_bits: int) -> RunHash:
    return RunHash(make_family(k, n + max_color + 1, range_bits), n)


def adjacency_matrix(inst: D1LCInstance, nodes: Sequence[int]) -> sparse.csr_matrix:
    """Symmetric 0/1 matrix over ``nodes`` (row/col order as given)."""
    pos = {v: i for i, v in enumerate(nodes)}
    rows, cols = [], []
    for v in nodes:
        i = pos[v]
        for u in inst.adjacency[v]:
            j = pos.get(u)
            if j is not None and u not in inst.colored:
                rows.append(i)
                cols.append(j)
    m = len(nodes)
    return sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(m, m))


def chunks(values, size: int = 2048):
    for lo in range(0, len(values), size):
        yield values[lo : lo + size]
