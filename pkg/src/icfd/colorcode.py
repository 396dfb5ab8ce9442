"""Randomized PROP solver built on color coding.

An n-coloring is *suitable* when some PROP allocation gives every agent only
vertices of its own color. Suitability is checked per bundle-size vector with
a heaviest-connected-subgraph query inside each color class. Uniform random
colorings are drawn until one is suitable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from icfd.model import Allocation, Graph, IcfdError, Instance
from icfd.oracle import SolveOutcome, Status, max_weight_connected_subgraph_exact

MAX_PALETTE = 25
REPETITION_CAP = 10**6


class PaletteTooLarge(IcfdError):
    pass


class ResourceCapExceeded(IcfdError):
    pass


@dataclass(frozen=True)
class Coloring:
    colors: tuple[int, ...]
    palette: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "colors", tuple(int(c) for c in self.colors))
        if any(not 0 <= c < self.palette for c in self.colors):
            raise ValueError(f"color outside [0, {self.palette})")

    def classes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.palette)]
        for v, c in enumerate(self.colors):
            out[c].append(v)
        return out


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(x < 1 for x in self.parts):
            raise ValueError("composition parts must be positive")

    @property
    def total(self) -> int:
        return sum(self.parts)


@dataclass(frozen=True)
class MonteCarloConfig:
    seed: int = 0
    outer_repetitions: Optional[int] = None
    inner_mode: str = "exact"
    inner_failure_budget: Fraction = Fraction(1, 100)
    allow_large: bool = False

    def __post_init__(self) -> None:
        if self.outer_repetitions is not None and self.outer_repetitions < 1:
            raise ValueError("outer_repetitions must be at least 1")
        if self.inner_mode not in ("exact", "colorcode"):
            raise ValueError(f"unknown inner mode {self.inner_mode!r}")
        delta = Fraction(self.inner_failure_budget)
        if not 0 < delta < 1:
            raise ValueError("inner_failure_budget must lie strictly between 0 and 1")
        object.__setattr__(self, "inner_failure_budget", delta)

    def repetitions_for(self, n: int, p: int) -> int:
        if self.outer_repetitions is not None:
            return self.outer_repetitions
        wanted = n**p
        if wanted > REPETITION_CAP and not self.allow_large:
            raise ResourceCapExceeded(
                f"n^p = {wanted} repetitions exceeds the cap of {REPETITION_CAP}; pass an explicit count"
            )
        return wanted


def enumerate_compositions(p: int, n: int) -> Iterator[Composition]:
    """All ways to write ``p`` as ``n`` positive parts, in lexicographic order."""
    if n < 1 or n > p:
        raise ValueError(f"need 1 <= n <= p, got n={n}, p={p}")

    def rec(left: int, slots: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            yield (left,)
            return
        for first in range(1, left - slots + 2):
            for rest in rec(left - first, slots - 1):
                yield (first,) + rest

    for parts in rec(p, n):
        yield Composition(parts)


# --------------------------------------------------------------------------- colorful DP


@dataclass
class DPTable:
    """``best[v][C]`` is the heaviest colorful connected set containing ``v`` with color set ``C``.

    ``split[v][C]`` records ``(u, C')`` used to build the entry (``None`` for the base case),
    so a witness can be rebuilt with :meth:`witness`.
    """

    palette: int
    colors: tuple[int, ...]
    best: list[dict[int, int]]
    split: list[dict[int, Optional[tuple[int, int]]]]

    def get(self, v: int, colors: int) -> Optional[int]:
        return self.best[v].get(colors)

    def witness(self, v: int, colors: int) -> frozenset:
        step = self.split[v][colors]
        if step is None:
            return frozenset((v,))
        u, sub = step
        return self.witness(u, sub) | self.witness(v, colors & ~sub)

    def best_full(self) -> Optional[tuple[int, int]]:
        """(value, vertex) of the heaviest entry using the whole palette, lowest vertex on ties."""
        full = (1 << self.palette) - 1
        out = None
        for v, row in enumerate(self.best):
            w = row.get(full)
            if w is not None and (out is None or w > out[0]):
                out = (w, v)
        return out


def colorful_dp(graph: Graph, weights: Sequence[int], coloring: Coloring) -> DPTable:
    """Fill the colorful connected-subgraph table by increasing color-set size."""
    k = coloring.palette
    if k > MAX_PALETTE:
        raise PaletteTooLarge(f"palette of {k} colors exceeds the limit of {MAX_PALETTE}")
    if len(coloring.colors) != graph.vertex_count:
        raise ValueError("coloring length differs from the vertex count")
    m = graph.vertex_count
    cols = coloring.colors
    best: list[dict[int, int]] = [{1 << cols[v]: int(weights[v])} for v in range(m)]
    split: list[dict[int, Optional[tuple[int, int]]]] = [{1 << cols[v]: None} for v in range(m)]
    closed = [sorted({v} | graph.adjacency[v]) for v in range(m)]
    by_size: dict[int, list[int]] = {}
    for mask in range(1, 1 << k):
        by_size.setdefault(mask.bit_count(), []).append(mask)
    for size in range(2, k + 1):
        for mask in by_size.get(size, []):
            for v in range(m):
                own = 1 << cols[v]
                if not mask & own:
                    continue
                others = mask & ~own
                top: Optional[int] = None
                arg: Optional[tuple[int, int]] = None
                sub = others
                while sub:
                    rest = mask & ~sub
                    base = best[v].get(rest)
                    if base is not None:
                        for u in closed[v]:
                            part = best[u].get(sub)
                            if part is not None and (top is None or part + base > top):
                                top = part + base
                                arg = (u, sub)
                    sub = (sub - 1) & others
                if top is not None:
                    best[v][mask] = top
                    split[v][mask] = arg
    return DPTable(k, cols, best, split)


def _uniform_coloring(rng: np.random.Generator, m: int, k: int) -> Coloring:
    return Coloring(tuple(int(c) for c in rng.integers(0, k, size=m)), k)


def _inner_repetitions(k: int, delta: Fraction) -> int:
    return max(1, math.ceil(math.exp(k) * math.log(1 / float(delta))))


def max_weight_connected_subgraph_cc(
    graph: Graph,
    weights: Sequence[int],
    k: int,
    threshold: int,
    mc: MonteCarloConfig = MonteCarloConfig(inner_mode="colorcode"),
    stream: Sequence[int] = (),
) -> Optional[tuple[frozenset, int]]:
    """Connected ``k``-set of weight at least ``threshold`` found by random k-colorings.

    A returned set is always genuine; a Yes-input is missed with probability at
    most the configured failure budget.
    """
    if not 1 <= k <= graph.vertex_count:
        raise ValueError(f"k={k} outside [1, {graph.vertex_count}]")
    if k > MAX_PALETTE:
        raise PaletteTooLarge(f"k={k} exceeds the palette limit of {MAX_PALETTE}")
    if k == 1:
        v = max(range(graph.vertex_count), key=lambda x: (weights[x], -x))
        return (frozenset((v,)), int(weights[v])) if weights[v] >= threshold else None
    reps = _inner_repetitions(k, mc.inner_failure_budget)
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(mc.seed, spawn_key=(*stream, r)))
        table = colorful_dp(graph, weights, _uniform_coloring(rng, graph.vertex_count, k))
        found = table.best_full()
        if found is not None and found[0] >= threshold:
            return table.witness(found[1], (1 << k) - 1), found[0]
    return None


# --------------------------------------------------------------------------- PROP driver


def _share(total: int, n: int) -> int:
    return -(-total // n)


def is_suitable(
    inst: Instance,
    coloring: Coloring,
    inner_mode: str = "exact",
    mc: Optional[MonteCarloConfig] = None,
    stream: Sequence[int] = (),
) -> Optional[Allocation]:
    """PROP allocation respecting ``coloring`` (agent ``i`` gets color ``i``), if one exists."""
    n = inst.n
    if coloring.palette != n:
        raise ValueError(f"palette size {coloring.palette} differs from n={n}")
    if n > inst.p:
        return None
    mc = mc or MonteCarloConfig(inner_mode=inner_mode)
    classes = coloring.classes()
    subgraphs = [inst.graph.induced_subgraph(cls) for cls in classes]
    need = [_share(inst.totals[i], n) for i in range(n)]
    cache: dict[tuple[int, int], Optional[frozenset]] = {}

    def query(i: int, size: int) -> Optional[frozenset]:
        key = (i, size)
        if key not in cache:
            sub, keep = subgraphs[i]
            answer = None
            if size <= sub.vertex_count:
                weights = [inst.valuations[i][v] for v in keep]
                if inner_mode == "exact":
                    found = max_weight_connected_subgraph_exact(sub, weights, size)
                    if found is not None and found[1] < need[i]:
                        found = None
                else:
                    found = max_weight_connected_subgraph_cc(sub, weights, size, need[i], mc, (*stream, i, size))
                if found is not None:
                    answer = frozenset(keep[v] for v in found[0])
            cache[key] = answer
        return cache[key]

    for comp in enumerate_compositions(inst.p, n):
        bundles = []
        for i, size in enumerate(comp.parts):
            got = query(i, size)
            if got is None:
                break
            bundles.append(got)
        else:
            return Allocation.validated(inst, bundles)
    return None


def solve_prop_cc(inst: Instance, mc: MonteCarloConfig = MonteCarloConfig()) -> SolveOutcome:
    """Draw uniform n-colorings until one is suitable; never answers a definitive No."""
    start = time.perf_counter()
    if inst.n > inst.p:
        return SolveOutcome(Status.NO, None, 0, time.perf_counter() - start)
    reps = mc.repetitions_for(inst.n, inst.p)
    for r in range(reps):
        rng = np.random.default_rng(np.random.SeedSequence(mc.seed, spawn_key=(r,)))
        coloring = _uniform_coloring(rng, inst.m, inst.n)
        found = is_suitable(inst, coloring, mc.inner_mode, mc, stream=(r,))
        if found is not None:
            return SolveOutcome(Status.YES, found, r + 1, time.perf_counter() - start)
    return SolveOutcome(Status.NO_WITNESS_FOUND, None, reps, time.perf_counter() - start)
