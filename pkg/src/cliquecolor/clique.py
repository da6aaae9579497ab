"""Round accounting for the Congested Clique.

Stages execute centrally but declare every communication phase here.  The
ledger converts declared volumes into charged rounds:

* LOCAL      -- computation only, 0 rounds
* BROADCAST  -- one word from every node to every node, 1 round
* ROUTE      -- Lenzen routing, ``lenzen_constant * max(1, ceil(s/n), ceil(r/n))``
                for max per-sender load ``s`` and max per-receiver load ``r``
* COLLECT    -- ``m`` words onto one node, ``max(1, ceil(m/n))``
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import BandwidthModelViolation


class PhaseKind(str, enum.Enum):
    LOCAL = "local"
    BROADCAST = "broadcast"
    ROUTE = "route"
    COLLECT = "collect"


@dataclass(frozen=True)
class Phase:
    label: str
    kind: PhaseKind
    volume: int
    rounds: int
    max_send: int = 0
    max_recv: int = 0

    def to_dict(self) -> dict:
        return {"label": self.label, "kind": self.kind.value, "volume": self.volume, "rounds": self.rounds}


@dataclass
class BudgetReport:
    ok: bool
    total_rounds: int
    max_rounds: int
    phases: list[Phase] = field(default_factory=list)


def phase_rounds(
    n: int,
    kind: PhaseKind,
    volume: int = 0,
    max_send: int = 0,
    max_recv: int = 0,
    lenzen_constant: int = 2,
) -> int:
    if kind is PhaseKind.LOCAL:
        return 0
    if kind is PhaseKind.BROADCAST:
        return 1
    if kind is PhaseKind.ROUTE:
        return lenzen_constant * max(1, math.ceil(max_send / n), math.ceil(max_recv / n))
    return max(1, math.ceil(volume / n))


class RoundLedger:
    def __init__(self, n: int, lenzen_constant: int = 2, load_cap: int = 64, collect_rounds_cap: int = 64):
        if n < 1:
            raise ValueError("network needs at least one node")
        self.n = n
        self.lenzen_constant = lenzen_constant
        # per-node load above load_cap * n words means some O(n) bound broke
        self.load_cap = load_cap
        self.collect_rounds_cap = collect_rounds_cap
        self.phases: list[Phase] = []

    @property
    def total_rounds(self) -> int:
        return sum(p.rounds for p in self.phases)

    def charge(self, label: str, kind: PhaseKind | str, volume: int = 0, max_send: int = 0, max_recv: int = 0) -> int:
        kind = PhaseKind(kind)
        if min(volume, max_send, max_recv) < 0:
            raise ValueError("volumes must be non-negative")
        n = self.n
        if kind is PhaseKind.ROUTE and max(max_send, max_recv) > self.load_cap * n:
            raise BandwidthModelViolation(
                f"{label}: per-node load {max(max_send, max_recv)} exceeds {self.load_cap}*n={self.load_cap * n}"
            )
        if kind is PhaseKind.COLLECT and volume > self.collect_rounds_cap * n:
            raise BandwidthModelViolation(
                f"{label}: collecting {volume} words exceeds {self.collect_rounds_cap}*n={self.collect_rounds_cap * n}"
            )
        rounds = phase_rounds(n, kind, volume, max_send, max_recv, self.lenzen_constant)
        self.phases.append(Phase(label, kind, volume, rounds, max_send, max_recv))
        return rounds

    def broadcast(self, label: str) -> int:
        return self.charge(label, PhaseKind.BROADCAST, volume=self.n)

    def route(self, label: str, volume: int, max_send: int, max_recv: int) -> int:
        return self.charge(label, PhaseKind.ROUTE, volume, max_send, max_recv)

    def collect(self, label: str, words: int) -> int:
        return self.charge(label, PhaseKind.COLLECT, volume=words)

    def assert_budget(self, max_rounds: int) -> BudgetReport:
        total = self.total_rounds
        ok = total <= max_rounds
        return BudgetReport(ok, total, max_rounds, [] if ok else [p for p in self.phases if p.rounds])

    def to_list(self) -> list[dict]:
        return [p.to_dict() for p in self.phases]


def replay(n: int, phases: list[Phase], lenzen_constant: int = 2) -> int:
    """Recompute a run's total from its phase log."""
    return sum(phase_rounds(n, p.kind, p.volume, p.max_send, p.max_recv, lenzen_constant) for p in phases)
