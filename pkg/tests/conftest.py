import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cliquecolor import build_instance

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def instances(draw, max_n=9, extra=3, universe=None):
    """A random valid D1LC instance: arbitrary graph, palettes of size d+1..d+1+extra."""
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = [e for e in pairs if draw(st.booleans())] if pairs else []
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    top = universe or (max(deg, default=0) + 1 + extra) * 2
    palettes = []
    for v in range(n):
        size = deg[v] + 1 + draw(st.integers(0, extra))
        palettes.append(draw(st.permutations(range(top)))[:size])
    return build_instance(edges, palettes)


def random_instance(n, p, rng, extra=2):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    top = 2 * (max(deg, default=0) + 1 + extra)
    palettes = [rng.sample(range(top), deg[v] + 1 + rng.randint(0, extra)) for v in range(n)]
    return build_instance(edges, palettes)


def star_degrees(center_degree, leaf_degrees):
    """Node 0 with the given degree, its neighbors 1..k padded with private leaves."""
    edges, nxt = [], 1 + len(leaf_degrees)
    for i, target in enumerate(leaf_degrees, start=1):
        edges.append((0, i))
        for _ in range(target - 1):
            edges.append((i, nxt))
            nxt += 1
    assert len(leaf_degrees) == center_degree
    deg = [0] * nxt
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return build_instance(edges, [range(d + 1) for d in deg])


@pytest.fixture
def rng():
    return random.Random(20240601)
