"""Seed selection by the method of conditional expectations.

Exact mode evaluates the total cost of every seed once, then fixes the seed
``batch_bits`` at a time, each time keeping the batch value whose block of
completions has the smallest summed cost (equal block sizes, so sums order
like conditional means).  The result never costs more than the family mean.
Sample mode is the fallback for seed spaces too large to enumerate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .clique import RoundLedger
from .errors import TooLargeToEnumerate
from .kwise import HashFamily, Seed

DEFAULT_EXACT_CAP = 1 << 22
_CHUNK = 1 << 13


@dataclass
class CostOracle:
    """Decomposable cost F(h) = sum_i f(h, i).

    ``item_costs`` is the per-item reference path; ``batch_totals`` (optional)
    returns F for many seed values at once and must agree with it.
    """

    item_count: int
    item_costs: Callable[[Seed], Sequence[float]]
    batch_totals: Callable[[np.ndarray | list[int]], np.ndarray] | None = None
    hops: int = 1
    # real-valued costs are folded as fixed-point integers cost*scale
    scale: int = 1

    def totals(self, family: HashFamily, values: Sequence[int] | np.ndarray) -> np.ndarray:
        if self.batch_totals is not None:
            out = np.asarray(self.batch_totals(values), dtype=float)
        else:
            out = np.array([sum(self.item_costs(family.seed(int(v)))) for v in values], dtype=float)
        return np.rint(out * self.scale).astype(np.int64)


@dataclass
class DerandResult:
    seed: Seed
    achieved_cost: float
    family_mean: float
    mode: str
    evaluations: int
    family_total: float | None = None
    # exact-mode integer view: achieved_fixed * size <= total_fixed
    achieved_fixed: int | None = None
    total_fixed: int | None = None

    @property
    def within_mean(self) -> bool:
        if self.achieved_fixed is not None:
            return self.achieved_fixed * (1 << self.seed.width) <= self.total_fixed
        return self.achieved_cost <= self.family_mean

    def to_dict(self) -> dict:
        return {
            "seed": self.seed.hex(),
            "seed_bits": self.seed.width,
            "mode": self.mode,
            "achieved": float(self.achieved_cost),
            "mean": float(self.family_mean),
            "evaluations": self.evaluations,
        }


def tie_break(candidates: Iterable[int | str]):
    """Lowest bit-value wins."""
    cands = list(candidates)
    if not cands:
        raise ValueError("no candidates")
    return min(cands, key=lambda c: (int(c, 2) if c else 0) if isinstance(c, str) else c)


def all_totals(family: HashFamily, oracle: CostOracle) -> np.ndarray:
    size = family.size
    parts = []
    for lo in range(0, size, _CHUNK):
        parts.append(oracle.totals(family, np.arange(lo, min(size, lo + _CHUNK), dtype=np.int64)))
    return np.concatenate(parts)


def fold_prefixes(totals: np.ndarray, seed_bits: int, batch_bits: int) -> int:
    prefix, fixed = 0, 0
    while fixed < seed_bits:
        b = min(batch_bits, seed_bits - fixed)
        rest = seed_bits - fixed
        block = totals[prefix << rest : (prefix + 1) << rest]
        sums = block.reshape(1 << b, -1).sum(axis=1)
        best = sums.min()
        choice = tie_break(int(i) for i in np.flatnonzero(sums == best))
        prefix = (prefix << b) | choice
        fixed += b
    return prefix


def derandomize_exact(
    family: HashFamily,
    oracle: CostOracle,
    batch_bits: int | None = None,
    cap: int = DEFAULT_EXACT_CAP,
) -> DerandResult:
    if family.size > cap:
        raise TooLargeToEnumerate(f"2^{family.seed_bits} seeds exceeds exact-mode cap {cap}")
    if batch_bits is None:
        batch_bits = default_batch_bits(oracle.item_count)
    batch_bits = max(1, batch_bits)
    totals = all_totals(family, oracle)
    value = fold_prefixes(totals, family.seed_bits, batch_bits)
    total = int(totals.sum(dtype=object))
    return DerandResult(
        seed=family.seed(value),
        achieved_cost=totals[value].item() / oracle.scale,
        family_mean=total / family.size / oracle.scale,
        mode="exact",
        evaluations=family.size,
        family_total=total / oracle.scale,
        achieved_fixed=totals[value].item(),
        total_fixed=total,
    )


def derandomize_sample(family: HashFamily, oracle: CostOracle, sample_size: int, rng_seed: int) -> DerandResult:
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    rng = random.Random(rng_seed)
    values = [rng.getrandbits(family.seed_bits) if family.seed_bits else 0 for _ in range(sample_size)]
    totals = oracle.totals(family, values if family.seed_bits >= 63 else np.array(values, dtype=np.int64))
    best = totals.min()
    value = tie_break(v for v, t in zip(values, totals) if t == best)
    return DerandResult(
        seed=family.seed(value),
        achieved_cost=best.item() / oracle.scale,
        family_mean=float(np.mean(totals)) / oracle.scale,
        mode="sample",
        evaluations=sample_size,
    )


def default_batch_bits(n: int) -> int:
    return min(max(1, math.ceil(math.log2(max(n, 2)))), 8)


def charged_batches(seed_bits: int, n: int) -> int:
    """Batches of ceil(log2 n) bits the distributed procedure needs."""
    return math.ceil(seed_bits / max(1, math.ceil(math.log2(max(n, 2)))))


@dataclass(frozen=True)
class DerandMode:
    kind: str = "sample"
    samples: int = 16

    @classmethod
    def parse(cls, text: str) -> "DerandMode":
        text = text.strip()
        if text == "exact":
            return cls("exact", 0)
        if text.startswith("sample"):
            _, _, num = text.partition(":")
            return cls("sample", int(num) if num else 16)
        raise ValueError(f"unknown derandomization mode {text!r}")

    def __str__(self) -> str:
        return "exact" if self.kind == "exact" else f"sample:{self.samples}"


def select_seed(
    family: HashFamily,
    oracle: CostOracle,
    mode: DerandMode,
    ledger: RoundLedger | None = None,
    label: str = "derand",
    rng_seed: int = 0,
    cap: int = DEFAULT_EXACT_CAP,
    batch_bits: int | None = None,
) -> DerandResult:
    """Pick a seed and charge the distributed prefix-fixing schedule to ``ledger``.

    The charge is one Lenzen route per batch of ceil(log2 n) seed bits (each
    network node gathers the conditional costs of its prefix from all others),
    independent of how the seed was found centrally.
    """
    if mode.kind == "exact":
        res = derandomize_exact(family, oracle, batch_bits, cap)
    else:
        res = derandomize_sample(family, oracle, mode.samples, rng_seed)
    if ledger is not None:
        n = ledger.n
        for i in range(charged_batches(family.seed_bits, n)):
            ledger.route(f"{label}/batch{i}", volume=n * n, max_send=n, max_recv=n)
    return res
