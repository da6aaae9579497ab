"""ColorTrial: derandomized self-nomination followed by a one-shot color trial.

Nodes that fail either step are deferred to F; nodes that keep a color are
colored permanently; the rest form G1.  Each step's seed is picked by
conditional expectations on the weighted failure count sum d(v)*1{failed}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .clique import RoundLedger
from .core import EPS, D1LCInstance, apply_colors, ge, le, neighbor_partition
from .derand import DEFAULT_EXACT_CAP, CostOracle, DerandMode, DerandResult, select_seed
from .kwise import Seed
from .runhash import RunHash, adjacency_matrix, chunks


# --- scalar reference path ---------------------------------------------------

def nominate(g0: D1LCInstance, rh: RunHash, seed: Seed | int) -> set[int]:
    """v is nominated iff the top two bits of its hash are 00."""
    return {v for v in g0.uncolored if rh.node_int(seed, v, 2) == 0}


def nomination_ok(d: int, p: int, nom: int, nstar: int, nom_star: int) -> bool:
    q = p ** 0.7
    return le(nom, d / 4 + q) and ge(nom_star, nstar / 4 - q)


def classify_nomination(g0: D1LCInstance, nominated: Iterable[int]) -> set[int]:
    nominated = set(nominated)
    failed = set()
    for v in g0.uncolored:
        part = neighbor_partition(g0, v)
        nom = sum(1 for u in g0.neighbors(v) if u in nominated)
        nom_star = sum(1 for u in part.nstar if u in nominated)
        if not nomination_ok(g0.degree(v), len(g0.palettes[v]), nom, len(part.nstar), nom_star):
            failed.add(v)
    return failed


def try_colors(
    g0: D1LCInstance, survivors: Iterable[int], rh: RunHash, seed: Seed | int
) -> tuple[dict[int, int], dict[int, int]]:
    """Tentative choices of the survivors and the subset that keeps them."""
    survivors = set(survivors)
    choice = {}
    for v in sorted(survivors):
        pal = g0.palettes[v]
        choice[v] = pal[rh.family.output(seed, v) % len(pal)]
    kept = {
        v: c
        for v, c in choice.items()
        if not any(choice.get(u) == c for u in g0.neighbors(v))
    }
    return choice, kept


def coloring_static_ok(d: int, p: int, nstar: int, nf_nbrs: int) -> bool:
    """The three seed-independent success conditions of the coloring step."""
    return ge(p, 1.1 * d) or nstar < d / 3 - EPS or ge(nf_nbrs, 0.03 * d)


def classify_coloring(g0: D1LCInstance, nom_failed: Iterable[int], kept: Mapping[int, int]) -> set[int]:
    """Uncolored, non-nomination-failed nodes failing every coloring-step condition."""
    nom_failed = set(nom_failed)
    failed = set()
    for v in g0.uncolored:
        if v in nom_failed or v in kept:
            continue
        d, p = g0.degree(v), len(g0.palettes[v])
        part = neighbor_partition(g0, v)
        nf = sum(1 for u in g0.neighbors(v) if u in nom_failed)
        if coloring_static_ok(d, p, len(part.nstar), nf):
            continue
        pal = set(g0.palettes[v])
        outside = sum(1 for u in g0.neighbors(v) if u in kept and kept[u] not in pal)
        if not ge(outside, 0.01 * p):
            failed.add(v)
    return failed


# --- vectorized cost oracles -----------------------------------------------

class _Arrays:
    def __init__(self, g0: D1LCInstance):
        self.nodes = g0.uncolored
        self.pos = {v: i for i, v in enumerate(self.nodes)}
        self.deg = np.array([g0.degree(v) for v in self.nodes], dtype=np.int64)
        self.pal = np.array([len(g0.palettes[v]) for v in self.nodes], dtype=np.int64)
        self.adj = adjacency_matrix(g0, self.nodes)
        rows, cols = [], []
        for v in self.nodes:
            for u in neighbor_partition(g0, v).nstar:
                rows.append(self.pos[v])
                cols.append(self.pos[u])
        m = len(self.nodes)
        self.star = sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(m, m))
        self.nstar = np.asarray(self.star.sum(axis=1)).ravel()


def nomination_oracle(g0: D1LCInstance, rh: RunHash) -> CostOracle:
    arr = _Arrays(g0)
    shift = rh.range_bits - 2
    q = arr.pal.astype(float) ** 0.7
    hi = arr.deg / 4 + q + EPS
    lo = arr.nstar / 4 - q - EPS

    def failed(vals) -> np.ndarray:
        nom = ((rh.node_out(vals, arr.nodes) >> shift) == 0).astype(np.int64)
        cnt = (arr.adj @ nom.T).T
        cnt_star = (arr.star @ nom.T).T
        return ~((cnt <= hi) & (cnt_star >= lo))

    def item_costs(seed: Seed) -> list[int]:
        nominated = nominate(g0, rh, seed)
        nf = classify_nomination(g0, nominated)
        return [g0.degree(v) if v in nf else 0 for v in arr.nodes]

    def batch(vals) -> np.ndarray:
        out = []
        for part in chunks(vals):
            out.append(failed(part).astype(np.int64) @ arr.deg)
        return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)

    return CostOracle(len(arr.nodes), item_costs, batch if arr.nodes else None, hops=1)


def coloring_oracle(g0: D1LCInstance, rh: RunHash, nom_failed: set[int], survivors: set[int]) -> CostOracle:
    nodes = g0.uncolored
    sv = sorted(survivors)
    spos = {v: i for i, v in enumerate(sv)}
    offs = np.zeros(len(sv) + 1, dtype=np.int64)
    for i, v in enumerate(sv):
        offs[i + 1] = offs[i] + len(g0.palettes[v])
    flatpal = np.array([c for v in sv for c in g0.palettes[v]], dtype=np.int64)
    plen = np.diff(offs)
    ea, eb = [], []
    for v in sv:
        for u in g0.neighbors(v):
            if u in spos and u > v:
                ea.append(spos[v])
                eb.append(spos[u])
    ea, eb = np.array(ea, dtype=np.int64), np.array(eb, dtype=np.int64)
    ne = len(ea)
    inc = sparse.csr_matrix(
        (np.ones(2 * ne, dtype=np.int64), (np.concatenate([ea, eb]), np.concatenate([np.arange(ne)] * 2))),
        shape=(len(sv), ne),
    )
    # nodes whose outcome depends on the seed
    risky, rdeg, rthr = [], [], []
    pair_v, pair_u, table, toffs = [], [], [], []
    for v in nodes:
        if v in nom_failed:
            continue
        d, p = g0.degree(v), len(g0.palettes[v])
        part = neighbor_partition(g0, v)
        nf = sum(1 for u in g0.neighbors(v) if u in nom_failed)
        if coloring_static_ok(d, p, len(part.nstar), nf):
            continue
        r = len(risky)
        risky.append(v)
        rdeg.append(d)
        rthr.append(0.01 * p - EPS)
        pal = set(g0.palettes[v])
        for u in g0.neighbors(v):
            if u in spos:
                pair_v.append(r)
                pair_u.append(spos[u])
                toffs.append(len(table))
                table.extend(c not in pal for c in g0.palettes[u])
    rdeg = np.array(rdeg, dtype=np.int64)
    rthr = np.array(rthr, dtype=float)
    rself = np.array([spos.get(v, -1) for v in risky], dtype=np.int64)
    pair_u = np.array(pair_u, dtype=np.int64)
    toffs = np.array(toffs, dtype=np.int64)
    table = np.array(table, dtype=bool)
    npair = len(pair_u)
    to_v = sparse.csr_matrix(
        (np.ones(npair, dtype=np.int64), (np.array(pair_v, dtype=np.int64), np.arange(npair))),
        shape=(len(risky), npair),
    )

    def batch(vals) -> np.ndarray:
        res = []
        for part in chunks(vals):
            s = len(part)
            if not risky:
                res.append(np.zeros(s, dtype=np.int64))
                continue
            if sv:
                idx = rh.node_out(part, sv) % plen[None, :]
                colmat = flatpal[offs[:-1][None, :] + idx]
                if ne:
                    eq = (colmat[:, ea] == colmat[:, eb]).astype(np.int64)
                    kept = (inc @ eq.T).T == 0
                else:
                    kept = np.ones((s, len(sv)), dtype=bool)
            else:
                kept = np.zeros((s, 0), dtype=bool)
                idx = np.zeros((s, 0), dtype=np.int64)
            if npair:
                ind = kept[:, pair_u] & table[toffs[None, :] + idx[:, pair_u]]
                outside = (to_v @ ind.T.astype(np.int64)).T
            else:
                outside = np.zeros((s, len(risky)), dtype=np.int64)
            self_kept = np.zeros((s, len(risky)), dtype=bool)
            has = rself >= 0
            if has.any():
                self_kept[:, has] = kept[:, rself[has]]
            fail = ~(outside >= rthr[None, :]) & ~self_kept
            res.append(fail.astype(np.int64) @ rdeg)
        return np.concatenate(res) if res else np.zeros(0, dtype=np.int64)

    def item_costs(seed: Seed) -> list[int]:
        _, kept = try_colors(g0, survivors, rh, seed)
        cf = classify_coloring(g0, nom_failed, kept)
        return [g0.degree(v) if v in cf else 0 for v in nodes]

    return CostOracle(len(nodes), item_costs, batch, hops=2)


# --- the stage ------------------------------------------------------------

@dataclass
class TrialOutcome:
    g1: D1LCInstance
    f_graph: D1LCInstance
    newly_colored: dict[int, int]
    nomination_seed: Seed
    coloring_seed: Seed
    nominated: set[int] = field(default_factory=set)
    nom_failed: set[int] = field(default_factory=set)
    col_failed: set[int] = field(default_factory=set)
    palettebound_moved: set[int] = field(default_factory=set)
    nom_result: DerandResult | None = None
    col_result: DerandResult | None = None

    def stats(self) -> dict:
        return {
            "g1_nodes": len(self.g1),
            "f_nodes": len(self.f_graph),
            "f_edges": self.f_graph.edge_count(),
            "colored": len(self.newly_colored),
            "nominated": len(self.nominated),
            "nom_failed": len(self.nom_failed),
            "col_failed": len(self.col_failed),
            "palettebound_moved": len(self.palettebound_moved),
            "nomination": self.nom_result.to_dict() if self.nom_result else None,
            "coloring": self.col_result.to_dict() if self.col_result else None,
        }


def charge_two_hop(g0: D1LCInstance, ledger: RoundLedger, label: str) -> None:
    deg = g0.degrees()
    if not deg:
        return
    sq = [d * d for d in deg.values()]
    recv = max(sum(deg[u] for u in g0.neighbors(v)) for v in deg)
    ledger.route(label, volume=sum(sq), max_send=max(sq), max_recv=recv)


def run(
    g0: D1LCInstance,
    rh: RunHash,
    mode: DerandMode,
    ledger: RoundLedger | None = None,
    rng_seed: int = 0,
    cap: int = DEFAULT_EXACT_CAP,
    label: str = "trial",
) -> TrialOutcome:
    if not len(g0):
        zero = rh.family.seed(0)
        return TrialOutcome(g0, g0, {}, zero, zero)
    nom_res = select_seed(rh.family, nomination_oracle(g0, rh), mode, ledger, f"{label}/nominate", rng_seed, cap)
    nominated = nominate(g0, rh, nom_res.seed)
    nom_failed = classify_nomination(g0, nominated)
    survivors = nominated - nom_failed
    if ledger is not None:
        ledger.broadcast(f"{label}/nominations")
        charge_two_hop(g0, ledger, f"{label}/two-hop")
    col_res = select_seed(
        rh.family, coloring_oracle(g0, rh, nom_failed, survivors), mode, ledger, f"{label}/color", rng_seed + 1, cap
    )
    _, kept = try_colors(g0, survivors, rh, col_res.seed)
    col_failed = classify_coloring(g0, nom_failed, kept)
    if ledger is not None:
        ledger.broadcast(f"{label}/colors")
    after = apply_colors(g0, kept)
    failed = nom_failed | col_failed
    rest = [v for v in g0.uncolored if v not in kept and v not in failed]
    # palettes shrink only through kept neighbor colors; degrade to F when the 2/3 bound breaks
    moved = {v for v in rest if 3 * len(after.palettes[v]) < 2 * len(g0.palettes[v])}
    f_nodes = failed | moved
    return TrialOutcome(
        g1=after.induced(v for v in rest if v not in moved),
        f_graph=after.induced(f_nodes),
        newly_colored=dict(kept),
        nomination_seed=nom_res.seed,
        coloring_seed=col_res.seed,
        nominated=nominated,
        nom_failed=nom_failed,
        col_failed=col_failed,
        palettebound_moved=moved,
        nom_result=nom_res,
        col_result=col_res,
    )
