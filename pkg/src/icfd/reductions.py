"""Instance generators with known ground truth.

Each gadget maps a source instance (k-SUM or red-blue dominating set) to an
ICFD instance whose answer matches the source answer. When the source is a Yes
instance, the matching fair allocation is built too.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from icfd.model import Allocation, FairnessNotion, Graph, IcfdError, Instance, ValidationError
from icfd.oracle import solve_ksum_brute, solve_rbds_brute


class ParameterError(IcfdError):
    pass


@dataclass(frozen=True)
class KSumInstance:
    """Pick ``k`` of ``values`` summing to ``target``; ``bound`` is the value ceiling M."""

    values: tuple[int, ...]
    target: int
    k: int
    bound: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(int(a) for a in self.values))
        if self.k < 0 or self.k > len(self.values):
            raise ParameterError(f"k={self.k} must lie in [0, N={len(self.values)}]")
        if any(a < 0 for a in self.values) or self.target < 0:
            raise ParameterError("values and target must be non-negative")
        if self.bound is not None and (max(self.values, default=0) > self.bound or self.target > self.bound):
            raise ParameterError(f"values and target must lie in [0, {self.bound}]")
        if not 2 <= self.k <= len(self.values) - 2:
            warnings.warn(f"k={self.k} outside [2, N-2={len(self.values) - 2}]", stacklevel=2)

    @property
    def total(self) -> int:
        return sum(self.values)

    @classmethod
    def parse(cls, text: str) -> "KSumInstance":
        """One line: ``k t a1 a2 ...``."""
        tokens = text.split("#", 1)[0].split()
        if len(tokens) < 2:
            raise ParameterError("k-SUM source needs 'k t a1 a2 ...'")
        try:
            k, target, *values = (int(x) for x in tokens)
        except ValueError as exc:
            raise ParameterError(f"k-SUM source: {exc}") from None
        return cls(tuple(values), target, k)

    def serialize(self) -> str:
        return " ".join(str(x) for x in (self.k, self.target, *self.values)) + "\n"


@dataclass(frozen=True)
class RbdsInstance:
    """Bipartite graph with sides T (``0..t_size-1``) and N (``0..n_size-1``).

    ``edges`` holds ``(t, n)`` index pairs. The question is whether at most
    ``k`` vertices of N dominate all of T.
    """

    t_size: int
    n_size: int
    edges: frozenset
    k: int

    def __post_init__(self) -> None:
        edges = frozenset((int(t), int(n)) for t, n in self.edges)
        object.__setattr__(self, "edges", edges)
        for t, n in edges:
            if not (0 <= t < self.t_size and 0 <= n < self.n_size):
                raise ParameterError(f"edge ({t}, {n}) leaves the T x N grid")
        if self.k < 0 or self.k > self.n_size:
            raise ParameterError(f"k={self.k} must lie in [0, |N|={self.n_size}]")
        if self.k >= self.n_size:
            warnings.warn(f"k={self.k} is not below |N|={self.n_size}", stacklevel=2)

    def neighbors_of_t(self, t: int) -> list[int]:
        return sorted(n for tt, n in self.edges if tt == t)

    @classmethod
    def parse(cls, text: str) -> "RbdsInstance":
        """First line ``|T| |N| k``, then one ``t n`` pair per line."""
        lines = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or len(lines[0]) != 3:
            raise ParameterError("RBDS source needs a '|T| |N| k' header")
        try:
            t_size, n_size, k = (int(x) for x in lines[0])
            edges = []
            for ln in lines[1:]:
                if len(ln) != 2:
                    raise ParameterError(f"RBDS edge line needs two indices, got {' '.join(ln)!r}")
                edges.append((int(ln[0]), int(ln[1])))
        except ValueError as exc:
            raise ParameterError(f"RBDS source: {exc}") from None
        return cls(t_size, n_size, frozenset(edges), k)

    def serialize(self) -> str:
        out = [f"{self.t_size} {self.n_size} {self.k}"]
        out.extend(f"{t} {n}" for t, n in sorted(self.edges))
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class GeneratedInstance:
    instance: Instance
    vertex_names: tuple[str, ...]
    notion: FairnessNotion
    source_yes: bool
    expected_witness: Optional[Allocation] = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.vertex_names) != self.instance.m:
            raise ValueError("every vertex needs a name")

    def index(self, name: str) -> int:
        return self.vertex_names.index(name)


def _graph(m: int, edges) -> Graph:
    return Graph.from_edges(m, edges)


# --------------------------------------------------------------------------- k-SUM gadgets


def gen_ksum_ef(ks: KSumInstance) -> GeneratedInstance:
    """Star centred at d1 with leaves d2, v1..vN; two agents with identical values."""
    n_items = len(ks.values)
    d1, d2 = 0, 1
    names = ("d1", "d2", *(f"v{j + 1}" for j in range(n_items)))
    edges = [(d1, d2)] + [(d1, 2 + j) for j in range(n_items)]
    base = 1 + ks.total
    row = (base, base + ks.target, *ks.values)
    inst = Instance(_graph(n_items + 2, edges), (row, row), ks.k + 2)
    solution = solve_ksum_brute(ks)
    witness = None
    if solution is not None:
        witness = Allocation.validated(inst, [{d1, *(2 + j for j in solution)}, {d2}])
    return GeneratedInstance(inst, names, FairnessNotion.EF, solution is not None, witness)


def gen_ksum_envy(ks: KSumInstance, notion: FairnessNotion | str) -> GeneratedInstance:
    """Path x1..x5 with x6 on x4 and pendants v1..vN on x2; three agents, p = k + 6.

    The EF1 and EFX versions differ only in agent 3's value for x1. The pendant
    values only separate correctly when the target is below the total, so a
    source with ``target >= total`` (decided outright) is first swapped for a
    canonical source with the same answer, N and k.
    """
    notion = FairnessNotion(notion)
    if notion not in (FairnessNotion.EF1, FairnessNotion.EFX):
        raise ParameterError("this gadget targets EF1 or EFX")
    n_items, k = len(ks.values), ks.k
    if k < 2 or n_items < k + 2:
        raise ParameterError(f"need k >= 2 and N >= k + 2, got k={k}, N={n_items}")
    notes: tuple[str, ...] = ()
    if ks.target >= ks.total:
        yes = solve_ksum_brute(ks) is not None
        ks = KSumInstance((1,) * n_items, k, k) if yes else KSumInstance((2,) * n_items, 1, k)
        notes = (f"target >= total: encoded canonical {'yes' if yes else 'no'} source {ks.serialize().strip()}",)
    t = ks.target
    c = ks.total
    big = n_items * c
    x = {i: i - 1 for i in range(1, 7)}
    names = tuple(f"x{i}" for i in range(1, 7)) + tuple(f"v{j + 1}" for j in range(n_items))
    edges = [(x[i], x[i + 1]) for i in range(1, 5)] + [(x[4], x[6])]
    edges += [(x[2], 6 + j) for j in range(n_items)]
    pendants = tuple(c + a for a in ks.values)
    # columns: x1..x6 then the pendants
    share = 3 * big + k * c + t
    row12 = (big, 2 * big, 0, share, 0, 0, *pendants)
    x1_for_3 = big if notion is FairnessNotion.EF1 else 0
    row3 = (x1_for_3, 2 * big, 2 * big + k * c + t, 0, 0, 0, *pendants)
    inst = Instance(_graph(6 + n_items, edges), (row12, row12, row3), k + 6)
    solution = solve_ksum_brute(ks)
    witness = None
    if solution is not None:
        witness = Allocation.validated(
            inst,
            [{x[1], x[2], *(6 + j for j in solution)}, {x[4], x[5], x[6]}, {x[3]}],
        )
    return GeneratedInstance(inst, names, notion, solution is not None, witness, notes)


# --------------------------------------------------------------------------- RBDS gadgets


def _rbds_base(rb: RbdsInstance) -> tuple[list[tuple[int, int]], list[str]]:
    """Source graph with T first, then N; returns edges and names."""
    edges = [(t, rb.t_size + n) for t, n in sorted(rb.edges)]
    names = [f"t{i + 1}" for i in range(rb.t_size)] + [f"n{i + 1}" for i in range(rb.n_size)]
    return edges, names


def _padded_solution(rb: RbdsInstance) -> Optional[list[int]]:
    """A dominating set of exactly k N-side indices, or None."""
    found = solve_rbds_brute(rb)
    if found is None:
        return None
    chosen = list(found)
    for n in range(rb.n_size):
        if len(chosen) == rb.k:
            break
        if n not in chosen:
            chosen.append(n)
    return sorted(chosen)


def gen_rbds_prop(rb: RbdsInstance) -> GeneratedInstance:
    """Add d1, d2 to the T side, both adjacent to all of N; two identical agents."""
    edges, names = _rbds_base(rb)
    ts, ns = rb.t_size, rb.n_size
    d1, d2 = ts + ns, ts + ns + 1
    n_side = [ts + j for j in range(ns)]
    edges += [(d, v) for d in (d1, d2) for v in n_side]
    names += ["d1", "d2"]
    row = tuple([1] * ts + [0] * ns + [ts + 1, 1])
    inst = Instance(_graph(ts + ns + 2, edges), (row, row), ts + rb.k + 2)
    solution = _padded_solution(rb)
    witness = None
    if solution is not None:
        witness = Allocation.validated(inst, [{d1}, {*range(ts), d2, *(ts + j for j in solution)}])
    return GeneratedInstance(inst, tuple(names), FairnessNotion.PROP, solution is not None, witness)


def gen_rbds_ef(rb: RbdsInstance) -> GeneratedInstance:
    """Same graph as the PROP gadget with heavier N-side values.

    When ``|T| + k + 2`` is even a pendant d3 hangs off d1 so that p becomes odd.
    """
    edges, names = _rbds_base(rb)
    ts, ns, k = rb.t_size, rb.n_size, rb.k
    d1, d2 = ts + ns, ts + ns + 1
    n_side = [ts + j for j in range(ns)]
    edges += [(d, v) for d in (d1, d2) for v in n_side]
    names += ["d1", "d2"]
    odd = (ts + k + 2) % 2 == 1
    notes: tuple[str, ...] = ()
    if odd:
        row = tuple([1] * ts + [5 * ts] * ns + [5 * k * ts + ts + 1, 1])
        p, m = ts + k + 2, ts + ns + 2
    else:
        d3 = ts + ns + 2
        edges.append((d1, d3))
        names.append("d3")
        # d3 is worthless: it only fixes the parity of p
        row = tuple([1] * ts + [5 * ts] * ns + [5 * k * ts + ts + 1, 1, 0])
        p, m = ts + k + 3, ts + ns + 3
        notes = ("pendant d3 on d1 is valued 0",)
    inst = Instance(_graph(m, edges), (row, row), p)
    solution = _padded_solution(rb)
    witness = None
    if solution is not None:
        first = {d1} if odd else {d1, ts + ns + 2}
        witness = Allocation.validated(inst, [first, {*range(ts), d2, *(ts + j for j in solution)}])
    return GeneratedInstance(inst, tuple(names), FairnessNotion.EF, solution is not None, witness, notes)


def gen_rbds_envy(rb: RbdsInstance, notion: FairnessNotion | str) -> GeneratedInstance:
    """Two-type gadget with X, Y, Z and W vertex families and 2t + 6 agents.

    Agents ``0..t+2`` share one valuation (type I) and agents ``t+3..2t+5``
    another (type II). ``p = 8kt + 24k``. The first Z group is cut to
    length ``l`` so that the witness has exactly p vertices.
    """
    notion = FairnessNotion(notion)
    if notion not in (FairnessNotion.EF1, FairnessNotion.EFX):
        raise ParameterError("this gadget targets EF1 or EFX")
    k, t, ns = rb.k, rb.t_size, rb.n_size
    if k <= 1 or t <= 1:
        raise ParameterError(f"need k > 1 and |T| > 1, got k={k}, |T|={t}")
    edges, names = _rbds_base(rb)
    n_side = [t + j for j in range(ns)]
    nxt = t + ns
    d1, d2 = nxt, nxt + 1
    nxt += 2
    xs = list(range(nxt, nxt + t + 3))
    nxt += t + 3
    ys = list(range(nxt, nxt + t + 1))
    nxt += t + 1
    group = 32 * k * t
    zs = [list(range(nxt + j * group, nxt + (j + 1) * group)) for j in range(t + 1)]
    nxt += (t + 1) * group
    ws = list(range(nxt, nxt + ns))
    nxt += ns
    names += ["d1", "d2"]
    names += [f"x{i + 1}" for i in range(t + 3)]
    names += [f"y{j + 1}" for j in range(t + 1)]
    names += [f"z^{j + 1}_{i + 1}" for j in range(t + 1) for i in range(group)]
    names += [f"w{i + 1}" for i in range(ns)]

    edges += [(d1, v) for v in n_side + [d2]]
    edges += [(d2, v) for v in xs + ys]
    edges += [(ys[j], z) for j in range(t + 1) for z in zs[j]]
    edges += [(v, w) for v, w in zip(n_side, ws)]

    heavy = 5 * k * t + t + 1
    type1 = [0] * nxt
    type2 = [0] * nxt
    for v in list(range(t)) + [d1]:
        type1[v] = type2[v] = 1
    for v in n_side:
        type2[v] = 5 * t
    for w in ws:
        type1[w] = 5 * t
    type1[d2] = type2[d2] = 10 * k * t
    for v in xs:
        type2[v] = heavy
    for v in ys:
        type1[v] = heavy
    p = 8 * k * t + 24 * k
    rows = [tuple(type1)] * (t + 3) + [tuple(type2)] * (t + 3)
    inst = Instance(_graph(nxt, edges), tuple(rows), p)

    cut = p - (2 * k + t + 1) - 1 - (t + 3) - t - 1
    notes = (f"first Z group prefix length {cut} so the witness has p = {p} vertices",)
    solution = _padded_solution(rb)
    witness = None
    if solution is not None:
        chosen = [t + j for j in solution]
        bundles = [
            {*range(t), d1, *chosen, *(ws[j] for j in solution)},
            {d2},
            {ys[0], *zs[0][:cut]},
            *({ys[j]} for j in range(1, t + 1)),
            *({x} for x in xs),
        ]
        witness = Allocation.validated(inst, bundles)
    return GeneratedInstance(inst, tuple(names), notion, solution is not None, witness, notes)


# --------------------------------------------------------------------------- random corpus


def gen_random(m: int, n: int, p: int, max_val: int, density: float, seed: int) -> Instance:
    """Random connected instance: a random spanning tree plus each other edge with probability ``density``."""
    if m < 1 or n < 1 or not 1 <= p <= m or max_val < 0 or not 0.0 <= density <= 1.0:
        raise ParameterError(
            f"infeasible parameters m={m} n={n} p={p} max_val={max_val} density={density}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(m)
    edges = set()
    for pos in range(1, m):
        a, b = int(order[pos]), int(order[rng.integers(0, pos)])
        edges.add((min(a, b), max(a, b)))
    for u in range(m):
        for v in range(u + 1, m):
            if (u, v) not in edges and rng.random() < density:
                edges.add((u, v))
    values = rng.integers(0, max_val + 1, size=(n, m))
    rows = tuple(tuple(int(x) for x in row) for row in values)
    return Instance(Graph(m, frozenset(edges)), rows, p)
