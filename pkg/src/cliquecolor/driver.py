"""Color(G, x): the recursive pipeline tying the stages together.

Each level peels off low-palette nodes (L0), runs ColorTrial, Subsample and
BucketColor, recurses on the deferred graph G' with x + 0.1, and finally
colors L0 and then F greedily.  Graphs with at most kappa*n edges, and the
level reached after x = 0.9, are collected and colored greedily in one go.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

from . import bucket, colortrial, subsample
from .clique import RoundLedger
from .core import D1LCInstance, apply_colors, greedy_color, verify_coloring
from .derand import DEFAULT_EXACT_CAP, DerandMode
from .errors import MaxDegreeExceeded
from .runhash import RunHash, default_range_bits, make_run_hash

MAX_TENTHS = 10
# Published end-to-end budget.  A pipeline level charges at most ~222 rounds
# (size 1, trial <= 94, subsample 43, bucket 84 with k=4 and default range
# bits); ten levels plus the residual collections stay below this.
ROUND_BUDGET = 2500

Observer = Callable[[str, dict], None]


@dataclass
class Config:
    C: int = 16
    kappa: float = 4.0
    c_delta: float = 4.0
    k: int = 4
    derand: str = "sample:16"
    iterations: int = bucket.DEFAULT_ITERATIONS
    range_bits: int | None = None
    lenzen_constant: int = 2
    exact_cap: int = DEFAULT_EXACT_CAP
    rng_seed: int = 0
    budget: int | None = None

    @property
    def mode(self) -> DerandMode:
        return DerandMode.parse(self.derand)


@dataclass
class LevelReport:
    tenths: int
    nodes: int
    edges: int
    base_case: bool
    l0: int = 0
    trial: dict | None = None
    subsample: dict | None = None
    bucket: dict | None = None
    f_edges: int = 0


@dataclass
class RunReport:
    n: int
    m: int
    config: dict
    levels: list[LevelReport] = field(default_factory=list)
    depth: int = 0
    total_rounds: int = 0
    phases: list[dict] = field(default_factory=list)
    budget_ok: bool = True
    verified: bool = False
    violations: list[str] = field(default_factory=list)
    ledger: RoundLedger | None = field(default=None, repr=False, compare=False)

    @property
    def f_edges(self) -> int:
        return sum(lv.f_edges for lv in self.levels)

    @property
    def gbad_edges(self) -> int:
        return sum(lv.bucket["gbad_edges"] for lv in self.levels if lv.bucket)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("ledger", None)
        out["f_edges"] = self.f_edges
        out["gbad_edges"] = self.gbad_edges
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"


def check_max_degree(inst: D1LCInstance, c_delta: float = 4.0) -> None:
    limit = c_delta * math.sqrt(inst.n)
    delta = inst.max_degree()
    if delta > limit + 1e-9:
        raise MaxDegreeExceeded(
            f"max degree {delta} exceeds {c_delta}*sqrt({inst.n}) = {limit:.2f}; "
            "split the graph into low-degree parts first"
        )


def run_hash_for(inst: D1LCInstance, config: Config) -> RunHash:
    max_color = max((c for v in inst.nodes for c in inst.palettes[v]), default=0)
    color_bits = bucket.bucket_width(bucket.level_of(inst.max_degree()) + bucket.DEPTH)
    rb = config.range_bits or default_range_bits(inst.n, color_bits)
    return make_run_hash(inst.n, max_color, config.k, rb)


class _Run:
    def __init__(self, n: int, config: Config, rh: RunHash, ledger: RoundLedger, observer: Observer | None):
        self.n = n
        self.config = config
        self.mode = config.mode
        self.rh = rh
        self.ledger = ledger
        self.observer = observer
        self.levels: list[LevelReport] = []
        self.depth = 0

    def emit(self, event: str, payload: dict) -> None:
        if self.observer:
            self.observer(event, payload)

    def seed_for(self, tenths: int, stage: int) -> int:
        return self.config.rng_seed * 1000 + tenths * 10 + stage

    def collect_and_greedy(self, inst: D1LCInstance, label: str) -> dict[int, int]:
        if len(inst):
            self.ledger.collect(label, inst.edge_count())
        return greedy_color(inst)

    def color(self, g: D1LCInstance, tenths: int) -> dict[int, int]:
        """Color every node of ``g`` (an uncolored induced instance)."""
        self.depth = max(self.depth, tenths)
        cfg, ledger, tag = self.config, self.ledger, f"x{tenths}"
        m = g.edge_count()
        if len(g):
            ledger.broadcast(f"{tag}/size")
        if m <= cfg.kappa * self.n or tenths >= MAX_TENTHS:
            self.levels.append(LevelReport(tenths, len(g), m, True))
            self.emit("base", {"tenths": tenths, "inst": g})
            return self.collect_and_greedy(g, f"{tag}/base")
        level = LevelReport(tenths, len(g), m, False)
        self.levels.append(level)
        l0 = {v for v in g.uncolored if len(g.palettes[v]) < cfg.C}
        level.l0 = len(l0)
        g0 = g.induced(v for v in g.uncolored if v not in l0)

        trial = colortrial.run(
            g0, self.rh, self.mode, ledger, self.seed_for(tenths, 0), cfg.exact_cap, f"{tag}/trial"
        )
        state = apply_colors(g, trial.newly_colored)
        level.trial = trial.stats()
        f_nodes = set(trial.f_graph.nodes)

        sub = subsample.run(
            trial.g1, tenths, self.rh, self.mode, cfg.C, ledger, self.seed_for(tenths, 2), cfg.exact_cap,
            f"{tag}/subsample",
        )
        level.subsample = sub.stats()
        self.emit("subsample", {"tenths": tenths, "g0": g0, "trial": trial, "outcome": sub})

        bk = bucket.run(
            sub.g2, self.n, self.rh, self.mode, ledger, cfg.iterations, self.seed_for(tenths, 3), cfg.exact_cap,
            self.observer, f"{tag}/bucket",
        )
        level.bucket = bk.stats()
        self.emit("bucket", {"tenths": tenths, "g2": sub.g2, "outcome": bk})
        state = apply_colors(state, bk.coloring)

        if len(sub.gprime):
            state = apply_colors(state, self.color(state.induced(sub.gprime.nodes), tenths + 1))

        state = apply_colors(state, self.collect_and_greedy(state.induced(l0), f"{tag}/L0"))
        f_inst = state.induced(f_nodes)
        level.f_edges = f_inst.edge_count()
        state = apply_colors(state, self.collect_and_greedy(f_inst, f"{tag}/F"))
        return {v: state.colored[v] for v in g.uncolored}


def color(inst: D1LCInstance, config: Config | None = None, observer: Observer | None = None):
    """Color ``inst`` completely; returns (coloring, RunReport)."""
    config = config or Config()
    check_max_degree(inst, config.c_delta)
    ledger = RoundLedger(inst.n, config.lenzen_constant)
    run = _Run(inst.n, config, run_hash_for(inst, config), ledger, observer)
    top = inst.induced(inst.uncolored)
    coloring = dict(inst.colored)
    coloring.update(run.color(top, 0))
    check = verify_coloring(inst, coloring)
    budget = config.budget if config.budget is not None else ROUND_BUDGET
    report = RunReport(
        n=inst.n,
        m=inst.edge_count(),
        config=asdict(config),
        levels=run.levels,
        depth=run.depth,
        total_rounds=ledger.total_rounds,
        phases=ledger.to_list(),
        budget_ok=ledger.assert_budget(budget).ok,
        verified=check.ok,
        violations=check.describe(),
        ledger=ledger,
    )
    return coloring, report
