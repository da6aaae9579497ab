"""Subsample: deferral of nodes into S with probability d(v)^-0.1.

G1 splits into G2 (colored next by bucket descent) and G' = S + F1 + L,
which is colored recursively.  Nodes of the would-be G2 that lack the slack
bucket descent relies on are also routed to G' (``deferred``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .clique import RoundLedger
from .core import EPS, D1LCInstance, ge, has_slack, le, neighbor_partition
from .derand import DEFAULT_EXACT_CAP, CostOracle, DerandMode, DerandResult, select_seed
from .kwise import Seed
from .runhash import RunHash, adjacency_matrix, chunks

SAMPLE_BITS = 20
FIXED_POINT = 1 << 24


def sample_bits(rh: RunHash) -> int:
    return min(SAMPLE_BITS, rh.range_bits)


def join_threshold(d: int, bits: int) -> int:
    """Hash values below this join S; d = 0 never joins."""
    if d < 1:
        return 0
    return round((1 << bits) * d ** -0.1)


def sample_s(g1: D1LCInstance, rh: RunHash, seed: Seed | int) -> set[int]:
    bits = sample_bits(rh)
    return {v for v in g1.uncolored if rh.node_int(seed, v, bits) < join_threshold(g1.degree(v), bits)}


def static_success(d: int, p: int, napprox: int) -> bool:
    return ge(p, 1.1 * d) or le(napprox, d / 3)


def classify_subsample(g1: D1LCInstance, s_set: Iterable[int], exclude: Iterable[int] = ()) -> set[int]:
    s_set, exclude = set(s_set), set(exclude)
    failed = set()
    for v in g1.uncolored:
        if v in exclude:
            continue
        d, p = g1.degree(v), len(g1.palettes[v])
        if static_success(d, p, len(neighbor_partition(g1, v).napprox)):
            continue
        joined = sum(1 for u in g1.neighbors(v) if u in s_set)
        if not ge(joined, 0.25 * p ** 0.9):
            failed.add(v)
    return failed


def weight(d: int, tenths: int) -> float:
    return float(d) ** ((tenths + 1) / 10)


def low_palette(g1: D1LCInstance, C: int) -> set[int]:
    return {v for v in g1.uncolored if len(g1.palettes[v]) < C}


def subsample_oracle(g1: D1LCInstance, rh: RunHash, tenths: int, l_set: set[int]) -> CostOracle:
    nodes = g1.uncolored
    bits = sample_bits(rh)
    shift = rh.range_bits - bits
    deg = np.array([g1.degree(v) for v in nodes], dtype=np.int64)
    thr = np.array([join_threshold(int(d), bits) for d in deg], dtype=np.int64)
    active = np.array([v not in l_set for v in nodes], dtype=bool)
    w = np.array([weight(int(d), tenths) for d in deg]) * active
    risky = np.array(
        [
            v not in l_set
            and not static_success(g1.degree(v), len(g1.palettes[v]), len(neighbor_partition(g1, v).napprox))
            for v in nodes
        ],
        dtype=bool,
    )
    need = np.array([0.25 * len(g1.palettes[v]) ** 0.9 - EPS for v in nodes])
    adj = adjacency_matrix(g1, nodes)

    def batch(vals) -> np.ndarray:
        out = []
        for part in chunks(vals):
            join = (rh.node_out(part, nodes) >> shift) < thr[None, :]
            cnt = (adj @ join.T.astype(np.int64)).T
            fail = risky[None, :] & ~(cnt >= need[None, :])
            out.append((fail | join).astype(float) @ w)
        return np.concatenate(out) if out else np.zeros(0)

    def item_costs(seed: Seed) -> list[float]:
        s = sample_s(g1, rh, seed)
        f1 = classify_subsample(g1, s, l_set)
        return [
            weight(g1.degree(v), tenths) if v not in l_set and (v in s or v in f1) else 0.0 for v in nodes
        ]

    return CostOracle(len(nodes), item_costs, batch if nodes else None, hops=1, scale=FIXED_POINT)


def slack_fixpoint(g1: D1LCInstance, candidates: Iterable[int]) -> tuple[set[int], set[int]]:
    """Drop nodes without slack (measured inside the kept set) until none remain."""
    keep = set(candidates)
    dropped: set[int] = set()
    while True:
        sub = g1.induced(keep)
        bad = {v for v in sub.uncolored if not has_slack(sub, v)}
        if not bad:
            return keep, dropped
        keep -= bad
        dropped |= bad


@dataclass
class SubsampleOutcome:
    g2: D1LCInstance
    gprime: D1LCInstance
    s_set: set[int]
    f1_set: set[int]
    l_set: set[int]
    seed: Seed
    tenths: int
    potential_before: float
    potential_after: float
    bound: float
    deferred: set[int] = field(default_factory=set)
    result: DerandResult | None = None

    @property
    def satisfied(self) -> bool:
        return le(self.potential_after, self.bound)

    def stats(self) -> dict:
        return {
            "x": str(Fraction(self.tenths, 10)),
            "s": len(self.s_set),
            "f1": len(self.f1_set),
            "l": len(self.l_set),
            "deferred": len(self.deferred),
            "g2_nodes": len(self.g2),
            "gprime_nodes": len(self.gprime),
            "gprime_edges": self.gprime.edge_count(),
            "potential_before": self.potential_before,
            "potential_after": self.potential_after,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "derand": self.result.to_dict() if self.result else None,
        }


def run(
    g1: D1LCInstance,
    tenths: int,
    rh: RunHash,
    mode: DerandMode,
    C: int,
    ledger: RoundLedger | None = None,
    rng_seed: int = 0,
    cap: int = DEFAULT_EXACT_CAP,
    label: str = "subsample",
) -> SubsampleOutcome:
    if not 0 <= tenths <= 9:
        raise ValueError("x must lie in {0, 0.1, ..., 0.9}")
    l_set = low_palette(g1, C)
    if not len(g1):
        return SubsampleOutcome(g1, g1, set(), set(), set(), rh.family.seed(0), tenths, 0.0, 0.0, C * g1.n)
    res = select_seed(rh.family, subsample_oracle(g1, rh, tenths, l_set), mode, ledger, label, rng_seed, cap)
    s_set = sample_s(g1, rh, res.seed)
    f1 = classify_subsample(g1, s_set, l_set)
    if ledger is not None:
        ledger.broadcast(f"{label}/membership")
    out = s_set | f1 | l_set
    keep, deferred = slack_fixpoint(g1, (v for v in g1.uncolored if v not in out))
    gp_nodes = out | deferred
    before = sum(float(g1.degree(v)) ** (tenths / 10) for v in g1.uncolored)
    after = sum(weight(g1.degree(v), tenths) for v in gp_nodes)
    return SubsampleOutcome(
        g2=g1.induced(keep),
        gprime=g1.induced(gp_nodes),
        s_set=s_set,
        f1_set=f1,
        l_set=l_set,
        seed=res.seed,
        tenths=tenths,
        potential_before=before,
        potential_after=after,
        bound=C * g1.n + 2 * before,
        deferred=deferred,
        result=res,
    )
