"""Instance generators: random graphs plus a palette model."""

from __future__ import annotations

import random
from dataclasses import dataclass

import networkx as nx

from .core import D1LCInstance, build_instance
from .errors import InvalidSpec

MODELS = ("gnp", "dregular", "powerlaw")


@dataclass(frozen=True)
class GenSpec:
    model: str
    n: int
    p: float = 0.0
    d: int = 0
    exponent: float = 2.5
    avg_degree: float = 6.0
    palettes: str = "fresh"
    seed: int = 0

    @classmethod
    def parse(cls, text: str, seed: int = 0, palettes: str = "fresh") -> "GenSpec":
        """``gnp:n=64,p=0.1`` / ``dregular:n=10,d=3`` / ``powerlaw:n=128,exponent=2.5,avg=6``."""
        model, _, rest = text.partition(":")
        kw: dict = {"model": model.strip(), "seed": seed, "palettes": palettes}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise InvalidSpec(f"expected key=value, got {item!r}")
            key = {"avg": "avg_degree"}.get(key, key)
            if key in ("n", "d", "seed"):
                kw[key] = int(val)
            elif key in ("p", "exponent", "avg_degree"):
                kw[key] = float(val)
            elif key == "palettes":
                kw[key] = val
            else:
                raise InvalidSpec(f"unknown parameter {key!r}")
        return cls(**kw)


def make_graph(spec: GenSpec) -> nx.Graph:
    if spec.n < 1:
        raise InvalidSpec("n must be positive")
    if spec.model == "gnp":
        if not 0 <= spec.p <= 1:
            raise InvalidSpec("p must lie in [0, 1]")
        return nx.gnp_random_graph(spec.n, spec.p, seed=spec.seed)
    if spec.model == "dregular":
        if spec.d >= spec.n or (spec.d * spec.n) % 2:
            raise InvalidSpec(f"no {spec.d}-regular graph on {spec.n} nodes")
        return nx.random_regular_graph(spec.d, spec.n, seed=spec.seed)
    if spec.model == "powerlaw":
        rng = random.Random(spec.seed)
        raw = [rng.paretovariate(spec.exponent - 1) for _ in range(spec.n)]
        scale = spec.avg_degree * spec.n / sum(raw)
        g = nx.expected_degree_graph([w * scale for w in raw], seed=spec.seed, selfloops=False)
        return nx.Graph(g)
    raise InvalidSpec(f"unknown model {spec.model!r}; choose from {', '.join(MODELS)}")


def make_palettes(g: nx.Graph, model: str, seed: int) -> list[list[int]]:
    """``fresh``: d+1 colors drawn from a universe of 2(Delta+1); ``shared:S``: every node gets 0..S-1."""
    n = g.number_of_nodes()
    deg = [g.degree(v) for v in range(n)]
    if model == "fresh":
        rng = random.Random(seed)
        universe = 2 * (max(deg, default=0) + 1)
        return [sorted(rng.sample(range(universe), d + 1)) for d in deg]
    if model.startswith("shared"):
        _, _, size = model.partition(":")
        try:
            s = int(size)
        except ValueError:
            raise InvalidSpec(f"shared palette model needs a size, got {model!r}") from None
        worst = max(deg, default=0)
        if s < worst + 1:
            raise InvalidSpec(f"shared universe of {s} colors cannot cover degree {worst}")
        return [list(range(s)) for _ in range(n)]
    raise InvalidSpec(f"unknown palette model {model!r}")


def generate(spec: GenSpec) -> D1LCInstance:
    g = make_graph(spec)
    return build_instance(g.edges(), make_palettes(g, spec.palettes, spec.seed))
