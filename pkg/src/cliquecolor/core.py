"""Graph + palette model for (degree+1)-list coloring.

An instance holds the full member graph, the current palette of every
uncolored member and the colors fixed so far.  Degrees always count
*uncolored* member neighbors, so a partially colored instance is again a
valid list-coloring instance as long as palettes are kept updated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    ColorNotInPalette,
    ConflictingAssignment,
    Infeasible,
    MalformedEdge,
    PaletteTooSmall,
    SelfReducibilityViolation,
)

# Symmetric slack applied to comparisons involving fractional powers.
EPS = 1e-9


def ge(a: float, b: float) -> bool:
    return a >= b - EPS


def le(a: float, b: float) -> bool:
    return a <= b + EPS


@dataclass(frozen=True)
class D1LCInstance:
    n: int
    adjacency: Mapping[int, tuple[int, ...]]
    palettes: Mapping[int, tuple[int, ...]]
    colored: Mapping[int, int] = field(default_factory=dict)
    original: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    @property
    def nodes(self) -> list[int]:
        return sorted(self.adjacency)

    @property
    def uncolored(self) -> list[int]:
        return [v for v in sorted(self.adjacency) if v not in self.colored]

    def __len__(self) -> int:
        return len(self.adjacency)

    def neighbors(self, v: int) -> list[int]:
        """Uncolored neighbors of ``v``."""
        col = self.colored
        return [u for u in self.adjacency[v] if u not in col]

    def degree(self, v: int) -> int:
        col = self.colored
        if not col:
            return len(self.adjacency[v])
        return sum(1 for u in self.adjacency[v] if u not in col)

    def degrees(self) -> dict[int, int]:
        return {v: self.degree(v) for v in self.uncolored}

    def palette(self, v: int) -> tuple[int, ...]:
        return self.palettes[v]

    def edges(self) -> list[tuple[int, int]]:
        """Edges between uncolored members, each once as (u, v) with u < v."""
        col = self.colored
        out = []
        for v in self.uncolored:
            for u in self.adjacency[v]:
                if u > v and u not in col:
                    out.append((v, u))
        return out

    def edge_count(self) -> int:
        return sum(self.degree(v) for v in self.uncolored) // 2

    def max_degree(self) -> int:
        return max((self.degree(v) for v in self.uncolored), default=0)

    def induced(self, nodes: Iterable[int]) -> "D1LCInstance":
        """Uncolored induced subinstance on ``nodes`` carrying current palettes."""
        keep = {v for v in nodes if v not in self.colored}
        adjacency = {v: tuple(u for u in self.adjacency[v] if u in keep) for v in sorted(keep)}
        return D1LCInstance(
            n=self.n,
            adjacency=adjacency,
            palettes={v: self.palettes[v] for v in adjacency},
            colored={},
            original={v: self.original.get(v, self.palettes[v]) for v in adjacency},
        )

    def with_palettes(self, palettes: Mapping[int, tuple[int, ...]]) -> "D1LCInstance":
        merged = dict(self.palettes)
        merged.update(palettes)
        return D1LCInstance(self.n, self.adjacency, merged, self.colored, self.original)


@dataclass(frozen=True)
class NeighborPartition:
    nplus: frozenset[int]
    nminus: frozenset[int]
    nstar: frozenset[int]
    napprox: frozenset[int]


@dataclass
class VerificationReport:
    ok: bool
    violations: list[tuple] = field(default_factory=list)

    def describe(self) -> list[str]:
        out = []
        for kind, *rest in self.violations:
            if kind == "monochromatic":
                u, v, c = rest
                out.append(f"monochromatic edge ({u},{v}) color {c}")
            elif kind == "not-in-palette":
                v, c = rest
                out.append(f"node {v} colored {c} not in its palette")
            else:
                out.append(f"node {rest[0]} uncolored")
        return out


def check_self_reducibility(inst: D1LCInstance) -> list[int]:
    """Uncolored nodes with p(v) < d(v) + 1."""
    return [v for v in inst.uncolored if len(inst.palettes[v]) < inst.degree(v) + 1]


def build_instance(edges: Iterable[Iterable[int]], palettes: list[Iterable[int]]) -> D1LCInstance:
    n = len(palettes)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for e in edges:
        u, v = (int(x) for x in e)
        if not (0 <= u < n and 0 <= v < n):
            raise MalformedEdge(f"edge ({u},{v}) outside [0,{n})")
        if u == v:
            raise MalformedEdge(f"self-loop at {u}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    pal = {v: tuple(sorted(set(int(c) for c in palettes[v]))) for v in range(n)}
    for v in range(n):
        if any(c < 0 for c in pal[v]):
            raise MalformedEdge(f"negative color in palette of {v}")
        if len(pal[v]) < len(nbrs[v]) + 1:
            raise PaletteTooSmall(v, len(pal[v]), len(nbrs[v]))
    adjacency = {v: tuple(sorted(nbrs[v])) for v in range(n)}
    return D1LCInstance(n=n, adjacency=adjacency, palettes=pal, colored={}, original=dict(pal))


def verify_coloring(inst: D1LCInstance, coloring: Mapping[int, int] | None = None) -> VerificationReport:
    """Check a (possibly partial) coloring against original palettes and all member edges."""
    colors = dict(inst.colored)
    if coloring is not None:
        colors.update(coloring)
    violations: list[tuple] = []
    for v in inst.nodes:
        if v not in colors:
            violations.append(("uncolored", v))
            continue
        pal = inst.original.get(v, inst.palettes.get(v, ()))
        if colors[v] not in pal:
            violations.append(("not-in-palette", v, colors[v]))
    for v in inst.nodes:
        for u in inst.adjacency[v]:
            if u > v and v in colors and u in colors and colors[u] == colors[v]:
                violations.append(("monochromatic", v, u, colors[v]))
    return VerificationReport(ok=not violations, violations=violations)


def apply_colors(inst: D1LCInstance, assignments: Mapping[int, int]) -> D1LCInstance:
    if not assignments:
        return inst
    for v, c in assignments.items():
        if v not in inst.adjacency or v in inst.colored:
            raise ColorNotInPalette(f"node {v} is not an uncolored member")
        if c not in inst.palettes[v]:
            raise ColorNotInPalette(f"color {c} not in palette of node {v}")
    for v, c in assignments.items():
        for u in inst.adjacency[v]:
            if assignments.get(u) == c:
                raise ConflictingAssignment(f"adjacent nodes {min(u, v)},{max(u, v)} both assigned {c}")
    colored = dict(inst.colored)
    colored.update(assignments)
    palettes = dict(inst.palettes)
    removed: dict[int, set[int]] = {}
    for v, c in assignments.items():
        for u in inst.adjacency[v]:
            if u not in colored:
                removed.setdefault(u, set()).add(c)
    for u, cs in removed.items():
        palettes[u] = tuple(c for c in palettes[u] if c not in cs)
    out = D1LCInstance(inst.n, inst.adjacency, palettes, colored, inst.original)
    bad = [u for u in removed if len(palettes[u]) < out.degree(u) + 1]
    if bad:
        raise SelfReducibilityViolation(f"nodes {sorted(bad)} lost self-reducibility")
    return out


def neighbor_partition(inst: D1LCInstance, v: int) -> NeighborPartition:
    dv = inst.degree(v)
    plus, minus, star, approx = set(), set(), set(), set()
    for u in inst.neighbors(v):
        du = inst.degree(u)
        (plus if du >= dv else minus).add(u)
        if du >= 3 * dv:
            star.add(u)
        if 2 * du >= dv and du <= 6 * dv:
            approx.add(u)
    return NeighborPartition(frozenset(plus), frozenset(minus), frozenset(star), frozenset(approx))


def greedy_order(inst: D1LCInstance) -> list[int]:
    deg = inst.degrees()
    return sorted(deg, key=lambda v: (-deg[v], v))


def greedy_color(inst: D1LCInstance) -> dict[int, int]:
    """Sequential greedy list coloring: non-increasing degree, ties by id, smallest free color."""
    taken: dict[int, set[int]] = {}
    out: dict[int, int] = {}
    for v in greedy_order(inst):
        used = taken.get(v, ())
        for c in inst.palettes[v]:
            if c not in used:
                break
        else:
            raise Infeasible(f"palette of node {v} exhausted")
        out[v] = c
        for u in inst.neighbors(v):
            if u not in out:
                taken.setdefault(u, set()).add(c)
    return out


def trim_target(p: int, d: int) -> int:
    # ceil(1.25 d) in integers
    return min(p, max(d + 1, (5 * d + 3) // 4))


def trim_palettes(inst: D1LCInstance) -> D1LCInstance:
    """Keep the lowest-id colors so that p(v) <= max(d(v)+1, ceil(1.25 d(v)))."""
    trimmed = {}
    for v in inst.uncolored:
        pal = inst.palettes[v]
        t = trim_target(len(pal), inst.degree(v))
        if t < len(pal):
            trimmed[v] = pal[:t]
    return inst.with_palettes(trimmed) if trimmed else inst


def has_slack(inst: D1LCInstance, v: int) -> bool:
    """p >= d + d^0.9/4  or  |N^-(v)| >= d/3."""
    d = inst.degree(v)
    p = len(inst.palettes[v])
    if ge(p, d + 0.25 * d ** 0.9):
        return True
    nminus = sum(1 for u in inst.neighbors(v) if inst.degree(u) < d)
    return ge(nminus, d / 3)


# --- serialization -------------------------------------------------------

def instance_to_dict(inst: D1LCInstance) -> dict:
    if inst.nodes != list(range(inst.n)):
        raise ValueError("only full instances (members 0..n-1) serialize")
    edges = [[v, u] for v in inst.nodes for u in inst.adjacency[v] if u > v]
    palettes = [list(inst.original.get(v, inst.palettes[v])) for v in range(inst.n)]
    return {"n": inst.n, "edges": edges, "palettes": palettes}


def dumps_instance(inst: D1LCInstance) -> str:
    return json.dumps(instance_to_dict(inst), separators=(",", ":"), sort_keys=True) + "\n"


def loads_instance(text: str) -> D1LCInstance:
    data = json.loads(text)
    n = int(data["n"])
    if len(data["palettes"]) != n:
        raise MalformedEdge(f"expected {n} palettes, got {len(data['palettes'])}")
    return build_instance(data["edges"], data["palettes"])
