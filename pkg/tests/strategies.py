"""Random instance builders shared by the test modules."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from icfd.model import Graph, Instance


def random_connected_graph(rng: random.Random, m: int, extra: float = 0.25) -> Graph:
    edges = set()
    for v in range(1, m):
        edges.add((rng.randrange(v), v))
    for u in range(m):
        for v in range(u + 1, m):
            if rng.random() < extra:
                edges.add((u, v))
    return Graph(m, frozenset(edges))


def random_instance(
    rng: random.Random,
    m: int,
    n: int,
    p: int,
    values: tuple[int, ...] = (0, 1, 2, 3),
    extra: float = 0.25,
) -> Instance:
    graph = random_connected_graph(rng, m, extra)
    rows = tuple(tuple(rng.choice(values) for _ in range(m)) for _ in range(n))
    return Instance(graph, rows, p)


def small_cover_instance(
    rng: random.Random, m: int, n: int, p: int, t: int, values: tuple[int, ...]
) -> Instance:
    """Connected instance whose vertices ``0..t-1`` cover every edge."""
    cover = list(range(t))
    edges = set()
    for v in range(1, m):
        u = rng.randrange(v) if v < t else rng.choice(cover)
        edges.add((u, v))
    for u in cover:
        for v in range(m):
            if v != u and rng.random() < 0.2:
                edges.add((min(u, v), max(u, v)))
    rows = tuple(tuple(rng.choice(values) for _ in range(m)) for _ in range(n))
    return Instance(Graph(m, frozenset(edges)), rows, p)


@st.composite
def instances(draw, max_m: int = 7, max_n: int = 3, max_value: int = 4, connected: bool = True):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    p = draw(st.integers(1, m))
    pairs = [(u, v) for u in range(m) for v in range(u + 1, m)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    edges = set(chosen)
    if connected:
        for v in range(1, m):
            edges.add((draw(st.integers(0, v - 1)), v))
    rows = tuple(
        tuple(draw(st.integers(0, max_value)) for _ in range(m)) for _ in range(n)
    )
    return Instance(Graph(m, frozenset(edges)), rows, p)
