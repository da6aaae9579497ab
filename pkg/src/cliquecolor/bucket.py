"""BucketColor: color G2 by walking nodes down a tree of hashed buckets.

Nodes and colors get bit strings from one hash function; a node only
competes for colors whose string extends its bucket string.  Nodes the hash
treats badly are set aside and colored greedily at the end.  The others move
one level down per iteration while keeping more colors than higher-ranked
neighbors in their subtree, until each bucket holds a single usable color.

Rank orders nodes by (-degree, id).  ``u`` is in N+(v) when it ranks before
``v``; equal degrees are broken by id so the relation is antisymmetric,
which is what the in-bucket processing order relies on.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy import sparse

from .clique import RoundLedger
from .core import EPS, D1LCInstance, apply_colors, ge, greedy_color, le, trim_palettes
from .derand import DEFAULT_EXACT_CAP, CostOracle, DerandMode, DerandResult, select_seed
from .errors import LenOutOfRange, NoFeasibleChild, ResidualConflict
from .kwise import Seed
from .runhash import RunHash, chunks

DEFAULT_ITERATIONS = 20
DEPTH = 20  # condition (3) looks this many levels below a node


# --- level and width formulas ---------------------------------------------------

def bucket_width(i: int) -> int:
    """floor(0.7 * 1.1**i), exactly."""
    if i < 0:
        raise ValueError("level must be non-negative")
    return (7 * 11**i) // 10 ** (i + 1)


def level_of(d: int) -> int:
    """max(floor(log_1.1(log2 d)), 0), with d <= 1 at level 0."""
    if d <= 2:
        return 0
    t = math.log2(d)
    i = max(0, math.floor(math.log(t) / math.log(1.1)))
    # float guess, then settle against the exact powers 1.1**i
    while i > 0 and Fraction(11**i, 10**i) > t:
        i -= 1
    while Fraction(11 ** (i + 1), 10 ** (i + 1)) <= t:
        i += 1
    return i


# --- addresses ---------------------------------------------------------------

@dataclass(frozen=True, order=True)
class BucketAddress:
    level: int
    bits: str

    def __post_init__(self):
        if len(self.bits) != bucket_width(self.level):
            raise ValueError(f"level {self.level} needs {bucket_width(self.level)} bits, got {len(self.bits)}")

    def is_ancestor_of(self, other: "BucketAddress") -> bool:
        return self.level <= other.level and other.bits.startswith(self.bits)

    def contains_color(self, color_string: str) -> bool:
        return color_string.startswith(self.bits)

    def children(self) -> list["BucketAddress"]:
        ext = bucket_width(self.level + 1) - len(self.bits)
        if ext == 0:
            return [BucketAddress(self.level + 1, self.bits)]
        return [BucketAddress(self.level + 1, self.bits + format(j, f"0{ext}b")) for j in range(1 << ext)]

    def __str__(self) -> str:
        return f"{self.level}:{self.bits or '-'}"


@dataclass
class BucketAssignment:
    node_bucket: dict[int, BucketAddress]
    color_string: dict[int, str]
    lmax: int
    node_full_hash: dict[int, str] = field(default_factory=dict)

    @property
    def color_length(self) -> int:
        return bucket_width(self.lmax + DEPTH)

    def moved(self, updates: Mapping[int, BucketAddress]) -> "BucketAssignment":
        nb = dict(self.node_bucket)
        nb.update(updates)
        return BucketAssignment(nb, self.color_string, self.lmax, self.node_full_hash)


def rank_key(inst: D1LCInstance, v: int) -> tuple[int, int]:
    return (-inst.degree(v), v)


def plus_sets(inst: D1LCInstance) -> dict[int, frozenset[int]]:
    """N+ under rank order: neighbors ranked strictly before v."""
    key = {v: rank_key(inst, v) for v in inst.uncolored}
    return {v: frozenset(u for u in inst.neighbors(v) if key[u] < key[v]) for v in inst.uncolored}


def assign(g2: D1LCInstance, rh: RunHash, seed: Seed | int) -> BucketAssignment:
    lmax = level_of(g2.max_degree())
    length = bucket_width(lmax + DEPTH)
    if length > rh.range_bits:
        raise LenOutOfRange(f"color strings need {length} bits, hash gives {rh.range_bits}")
    fam = rh.family
    node_bucket, full = {}, {}
    for v in g2.uncolored:
        lv = level_of(g2.degree(v))
        node_bucket[v] = BucketAddress(lv, fam.eval_bits(seed, v, bucket_width(lv)))
        full[v] = fam.eval_bits(seed, v, rh.range_bits)
    colors = sorted({c for v in g2.uncolored for c in g2.palettes[v]})
    cs = {c: fam.eval_bits(seed, rh.n + c, length) for c in colors}
    return BucketAssignment(node_bucket, cs, lmax, full)


# --- per-node quantities ---------------------------------------------------

def bucket_palette(inst: D1LCInstance, asg: BucketAssignment, v: int, addr: BucketAddress | None = None) -> list[int]:
    addr = asg.node_bucket[v] if addr is None else addr
    return [c for c in inst.palettes[v] if addr.contains_color(asg.color_string[c])]


def bucket_dplus(
    plus: Mapping[int, Iterable[int]],
    asg: BucketAssignment,
    v: int,
    addr: BucketAddress | None = None,
    among: set[int] | None = None,
) -> int:
    addr = asg.node_bucket[v] if addr is None else addr
    nb = asg.node_bucket
    return sum(1 for w in plus[v] if (among is None or w in among) and addr.is_ancestor_of(nb[w]))


def bad_reasons(
    g2: D1LCInstance, asg: BucketAssignment, n: int, plus: Mapping[int, frozenset[int]] | None = None
) -> dict[int, set[int]]:
    """Which of the four badness conditions each node meets (empty set = good)."""
    plus = plus_sets(g2) if plus is None else plus
    occupancy: dict[BucketAddress, int] = defaultdict(int)
    for a in asg.node_bucket.values():
        occupancy[a] += 1
    out = {}
    for v in g2.uncolored:
        d, p = g2.degree(v), len(g2.palettes[v])
        a = asg.node_bucket[v]
        scale = 2.0 ** -len(a.bits)
        slack = d**0.9 / 8
        reasons = set()
        if ge(bucket_dplus(plus, asg, v), (len(plus[v]) + slack) * scale):
            reasons.add(1)
        inside = bucket_palette(g2, asg, v)
        if le(len(inside), (p - slack) * scale):
            reasons.add(2)
        deep = bucket_width(a.level + DEPTH)
        keys = [asg.color_string[c][:deep] for c in inside]
        if len(set(keys)) < len(keys):
            reasons.add(3)
        if occupancy[a] > 2 * n * scale:
            reasons.add(4)
        out[v] = reasons
    return out


def classify_bad(g2: D1LCInstance, asg: BucketAssignment, n: int) -> set[int]:
    return {v for v, r in bad_reasons(g2, asg, n).items() if r}


def bad_oracle(g2: D1LCInstance, rh: RunHash, n: int) -> CostOracle:
    nodes = g2.uncolored
    pos = {v: i for i, v in enumerate(nodes)}
    R = rh.range_bits
    lmax = level_of(g2.max_degree())
    clen = bucket_width(lmax + DEPTH)
    deg = np.array([g2.degree(v) for v in nodes], dtype=np.int64)
    lev = [level_of(int(d)) for d in deg]
    bw = np.array([bucket_width(l) for l in lev], dtype=np.int64)
    sh = R - bw
    sh3 = np.array([clen - bucket_width(l + DEPTH) for l in lev], dtype=np.int64)
    colors = sorted({c for v in nodes for c in g2.palettes[v]})
    cpos = {c: i for i, c in enumerate(colors)}
    plus = plus_sets(g2)
    slack = deg.astype(float) ** 0.9 / 8
    scale = 2.0 ** -bw
    thr1 = (np.array([len(plus[v]) for v in nodes]) + slack) * scale - EPS
    thr2 = (np.array([len(g2.palettes[v]) for v in nodes]) - slack) * scale + EPS
    pv, pw = [], []
    for v in nodes:
        for w in plus[v]:
            pv.append(pos[v])
            pw.append(pos[w])
    pv, pw = np.array(pv, dtype=np.int64), np.array(pw, dtype=np.int64)
    m1 = sparse.csr_matrix((np.ones(len(pv)), (pv, np.arange(len(pv)))), shape=(len(nodes), len(pv)))
    cv, cc = [], []
    for v in nodes:
        for c in g2.palettes[v]:
            cv.append(pos[v])
            cc.append(cpos[c])
    cv, cc = np.array(cv, dtype=np.int64), np.array(cc, dtype=np.int64)
    m2 = sparse.csr_matrix((np.ones(len(cv)), (cv, np.arange(len(cv)))), shape=(len(nodes), len(cv)))
    width3 = (1 << clen) + len(cv)
    groups = defaultdict(list)
    for i, l in enumerate(lev):
        groups[l].append(i)
    crowd = [
        (np.array(ix, dtype=np.int64), int(bucket_width(l)))
        for l, ix in groups.items()
        if len(ix) > 2 * n * 2.0 ** -bucket_width(l)
    ]

    def bad(part) -> np.ndarray:
        s = len(part)
        out_n = rh.node_out(part, nodes)
        nb = out_n >> sh[None, :]
        bad = np.zeros((s, len(nodes)), dtype=bool)
        if len(pv):
            eq = (out_n[:, pw] >> sh[pv][None, :]) == nb[:, pv]
            bad |= (m1 @ eq.T.astype(float)).T >= thr1[None, :]
        else:
            bad |= 0 >= thr1[None, :]
        out_c = rh.color_out(part, colors) >> (R - clen)
        inside = (out_c[:, cc] >> (clen - bw[cv])[None, :]) == nb[:, cv]
        cnt2 = (m2 @ inside.T.astype(float)).T
        bad |= cnt2 <= thr2[None, :]
        if len(cv) > 1:
            # duplicate deep strings among a node's in-bucket colors; outside colors get unique fillers
            deep = out_c[:, cc] >> sh3[cv][None, :]
            keys = np.where(inside, deep, (1 << clen) + np.arange(len(cv))[None, :])
            packed = np.sort(cv[None, :] * width3 + keys, axis=1)
            rows, cols = np.nonzero(np.diff(packed, axis=1) == 0)
            bad[rows, packed[rows, cols] // width3] = True
        for ix, b in crowd:
            code = np.arange(s)[:, None] * (1 << b) + nb[:, ix]
            _, inv, counts = np.unique(code.ravel(), return_inverse=True, return_counts=True)
            bad[:, ix] |= counts[inv].reshape(s, len(ix)) > 2 * n * 2.0**-b
        return bad

    def batch(vals) -> np.ndarray:
        res = [bad(part).astype(np.int64) @ deg for part in chunks(vals, 1024)]
        return np.concatenate(res) if res else np.zeros(0, dtype=np.int64)

    def item_costs(seed: Seed) -> list[int]:
        reasons = bad_reasons(g2, assign(g2, rh, seed), n, plus)
        return [g2.degree(v) if reasons[v] else 0 for v in nodes]

    return CostOracle(len(nodes), item_costs, batch if nodes else None, hops=1)


# --- reduced instances and descent -------------------------------------------

def reduced_instances(
    plus: Mapping[int, Iterable[int]], good: set[int], asg: BucketAssignment
) -> dict[BucketAddress, tuple[set[int], set[tuple[int, int]]]]:
    """Per bucket: its good nodes and owned edges (v, w), w in N+(v) in a descendant bucket."""
    out: dict[BucketAddress, tuple[set[int], set[tuple[int, int]]]] = {}
    nb = asg.node_bucket
    for v in sorted(good):
        a = nb[v]
        nodes, edges = out.setdefault(a, (set(), set()))
        nodes.add(v)
        for w in plus[v]:
            if w in good and a.is_ancestor_of(nb[w]):
                edges.add((v, w))
    return out


def colorability_violations(
    inst: D1LCInstance, plus: Mapping[int, Iterable[int]], good: set[int], asg: BucketAssignment
) -> list[tuple[int, int, int]]:
    """Good nodes with d+ >= p in their current bucket, as (v, d+, p)."""
    out = []
    for v in sorted(good):
        dp = bucket_dplus(plus, asg, v, among=good)
        p = len(bucket_palette(inst, asg, v))
        if dp >= p:
            out.append((v, dp, p))
    return out


def descend_iteration(
    inst: D1LCInstance, plus: Mapping[int, Iterable[int]], good: set[int], asg: BucketAssignment
) -> BucketAssignment:
    """Move every good node one level down, keeping d+ < p in the chosen child."""
    snapshot = asg.node_bucket
    by_bucket: dict[BucketAddress, list[int]] = defaultdict(list)
    for v in good:
        by_bucket[snapshot[v]].append(v)
    moved: dict[int, BucketAddress] = {}
    for addr in sorted(by_bucket):
        members = sorted(by_bucket[addr], key=lambda v: rank_key(inst, v))
        here: dict[int, BucketAddress] = {}
        for v in members:
            choice = None
            for child in addr.children():
                p = sum(1 for c in inst.palettes[v] if child.contains_color(asg.color_string[c]))
                if p == 0:
                    continue
                dp = sum(
                    1
                    for w in plus[v]
                    if w in good and child.is_ancestor_of(here.get(w, snapshot[w]))
                )
                if dp < p:
                    choice = child
                    break
            if choice is None:
                raise NoFeasibleChild(f"node {v} in bucket {addr} has no child with d+ < p")
            here[v] = choice
        moved.update(here)
    return asg.moved(moved)


def finalize(inst: D1LCInstance, plus: Mapping[int, Iterable[int]], good: set[int], asg: BucketAssignment) -> dict[int, int]:
    out = {}
    for v in sorted(good):
        pal = bucket_palette(inst, asg, v)
        dp = bucket_dplus(plus, asg, v, among=good)
        if len(pal) != 1 or dp != 0:
            raise ResidualConflict(f"node {v} ends with p={len(pal)}, d+={dp} in bucket {asg.node_bucket[v]}")
        out[v] = pal[0]
    return out


def largest_reduced(red: Mapping[BucketAddress, tuple[set[int], set[tuple[int, int]]]]) -> int:
    return max((len(e) for _, e in red.values()), default=0)


def edges_nested(
    prev: Mapping[BucketAddress, tuple[set[int], set[tuple[int, int]]]],
    cur: Mapping[BucketAddress, tuple[set[int], set[tuple[int, int]]]],
) -> bool:
    """Every G+ of a bucket is a subgraph of its parent's G+ one iteration earlier."""
    for addr, (nodes, edges) in cur.items():
        parent = next((a for a in prev if a.level == addr.level - 1 and a.is_ancestor_of(addr)), None)
        if parent is None:
            if edges or nodes:
                return False
            continue
        pn, pe = prev[parent]
        if not nodes <= pn or not edges <= pe:
            return False
    return True


# --- the stage ----------------------------------------------------------------

@dataclass
class IterationRecord:
    iteration: int
    max_reduced_edges: int
    violations: list[tuple[int, int, int]]
    nested: bool


@dataclass
class BucketOutcome:
    coloring: dict[int, int]
    bad: set[int]
    good: set[int]
    seed: Seed | None
    initial: BucketAssignment | None
    final: BucketAssignment | None
    gbad_edges: int
    iterations: list[IterationRecord] = field(default_factory=list)
    result: DerandResult | None = None
    reasons: dict[int, set[int]] = field(default_factory=dict)

    @property
    def invariants_ok(self) -> bool:
        return all(not r.violations and r.nested for r in self.iterations)

    def stats(self) -> dict:
        return {
            "good": len(self.good),
            "bad": len(self.bad),
            "gbad_edges": self.gbad_edges,
            "max_reduced_edges": [r.max_reduced_edges for r in self.iterations],
            "invariants_ok": self.invariants_ok,
            "derand": self.result.to_dict() if self.result else None,
        }


Observer = Callable[[str, dict], None]


def run(
    g2: D1LCInstance,
    n: int,
    rh: RunHash,
    mode: DerandMode,
    ledger: RoundLedger | None = None,
    iterations: int = DEFAULT_ITERATIONS,
    rng_seed: int = 0,
    cap: int = DEFAULT_EXACT_CAP,
    observer: Observer | None = None,
    label: str = "bucket",
) -> BucketOutcome:
    if not len(g2):
        return BucketOutcome({}, set(), set(), None, None, None, 0)
    inst = trim_palettes(g2)
    plus = plus_sets(inst)
    res = select_seed(rh.family, bad_oracle(inst, rh, n), mode, ledger, label, rng_seed, cap)
    asg0 = assign(inst, rh, res.seed)
    reasons = bad_reasons(inst, asg0, n, plus)
    bad = {v for v, r in reasons.items() if r}
    good = set(inst.uncolored) - bad
    if ledger is not None:
        ledger.broadcast(f"{label}/badness")
    asg = asg0
    red = reduced_instances(plus, good, asg)
    records = [IterationRecord(0, largest_reduced(red), colorability_violations(inst, plus, good, asg), True)]
    if observer:
        observer("bucket_iteration", {"iteration": 0, "inst": inst, "plus": plus, "good": good, "assignment": asg})
    if records[0].violations:
        raise NoFeasibleChild(f"good nodes start without room: {records[0].violations[:5]}")
    for it in range(1, iterations + 1):
        if ledger is not None:
            ledger.collect(f"{label}/iter{it}/reduced", largest_reduced(red))
            ledger.broadcast(f"{label}/iter{it}/moves")
        asg = descend_iteration(inst, plus, good, asg)
        new_red = reduced_instances(plus, good, asg)
        rec = IterationRecord(it, largest_reduced(new_red), colorability_violations(inst, plus, good, asg), edges_nested(red, new_red))
        records.append(rec)
        if observer:
            observer("bucket_iteration", {"iteration": it, "inst": inst, "plus": plus, "good": good, "assignment": asg})
        if rec.violations:
            raise NoFeasibleChild(f"iteration {it} broke d+ < p: {rec.violations[:5]}")
        red = new_red
    coloring = finalize(inst, plus, good, asg)
    after = apply_colors(g2, coloring)
    rest = after.induced(bad)
    if ledger is not None:
        ledger.collect(f"{label}/gbad", rest.edge_count())
    coloring.update(greedy_color(rest))
    return BucketOutcome(
        coloring=coloring,
        bad=bad,
        good=good,
        seed=res.seed,
        initial=asg0,
        final=asg,
        gbad_edges=rest.edge_count(),
        iterations=records,
        result=res,
        reasons=reasons,
    )
