"""Vertex covers and kernelization.

Envy notions use a single rule: inside each class of interchangeable
independent-set vertices keep only the ``p`` lowest-indexed members.

PROP goes through three stages:

1. :func:`preprocess_prop` adds one dummy agent and one dummy vertex per agent.
2. :func:`rr2` trims the classes and moves the removed value onto each agent's
   own dummy vertex.
3. :func:`rr3` detects agents that can no longer reach their share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from icfd.model import (
    Allocation,
    FairnessNotion,
    Graph,
    Instance,
    ValidationError,
    agent_types,
    distinct_values,
    iter_bits,
    mask_of,
)


@dataclass(frozen=True)
class VertexCoverResult:
    cover: frozenset
    exact: bool
    vertex_count: int

    @property
    def independent_set(self) -> frozenset:
        return frozenset(range(self.vertex_count)) - self.cover

    def covers(self, graph: Graph) -> bool:
        return all(u in self.cover or v in self.cover for u, v in graph.edges)


def vertex_cover_approx(graph: Graph) -> VertexCoverResult:
    """Both endpoints of a greedy maximal matching, scanning edges in sorted order."""
    cover: set[int] = set()
    for u, v in graph.sorted_edges:
        if u not in cover and v not in cover:
            cover.update((u, v))
    return VertexCoverResult(frozenset(cover), False, graph.vertex_count)


def _vc_search(adj: dict[int, int], k: int) -> Optional[int]:
    """Cover of at most ``k`` vertices for the graph in ``adj`` (vertex -> neighbour mask), or None."""
    adj = {v: nb for v, nb in adj.items() if nb}
    if not adj:
        return 0
    if k <= 0:
        return None

    def take(graph: dict[int, int], chosen: int) -> dict[int, int]:
        return {v: nb & ~chosen for v, nb in graph.items() if not (chosen >> v) & 1}

    # a pendant vertex: taking its neighbour is never worse
    for v, nb in adj.items():
        if nb.bit_count() == 1:
            u = nb.bit_length() - 1
            rest = _vc_search(take(adj, 1 << u), k - 1)
            return None if rest is None else rest | (1 << u)
    degrees = {v: nb.bit_count() for v, nb in adj.items()}
    v = max(degrees, key=lambda x: (degrees[x], -x))
    # a vertex of degree > k must be in every cover of size <= k
    if degrees[v] > k:
        rest = _vc_search(take(adj, 1 << v), k - 1)
        return None if rest is None else rest | (1 << v)
    if sum(degrees.values()) // 2 > k * degrees[v]:
        return None
    rest = _vc_search(take(adj, 1 << v), k - 1)
    if rest is not None:
        return rest | (1 << v)
    nb = adj[v]
    if nb.bit_count() <= k:
        rest = _vc_search(take(adj, nb), k - nb.bit_count())
        if rest is not None:
            return rest | nb
    return None


def vertex_cover_exact(graph: Graph, budget: int = 12) -> Optional[VertexCoverResult]:
    """A minimum vertex cover if its size is at most ``budget``, else None."""
    if budget < 0:
        raise ValueError("budget must be non-negative")
    adj = {v: graph.neighbor_masks[v] for v in range(graph.vertex_count)}
    lower = len(vertex_cover_approx(graph).cover) // 2
    for k in range(lower, budget + 1):
        found = _vc_search(adj, k)
        if found is not None:
            return VertexCoverResult(frozenset(iter_bits(found)), True, graph.vertex_count)
    return None


def choose_cover(graph: Graph, vc_mode: str = "exact-if-small", budget: int = 12) -> VertexCoverResult:
    if vc_mode not in ("exact-if-small", "approx-only"):
        raise ValueError(f"unknown vc_mode {vc_mode!r}")
    if vc_mode == "exact-if-small":
        exact = vertex_cover_exact(graph, budget)
        if exact is not None:
            return exact
    return vertex_cover_approx(graph)


# --------------------------------------------------------------------------- equivalence classes


@dataclass(frozen=True)
class EquivalenceClass:
    """Independent-set vertices sharing cover neighbourhood and valuation column."""

    neighborhood: tuple[int, ...]
    column: tuple[int, ...]
    members: tuple[int, ...]

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.neighborhood, self.column


def _classes(
    graph: Graph,
    valuations: Sequence[Sequence[int]],
    cover: frozenset,
    candidates: Sequence[int],
) -> list[EquivalenceClass]:
    groups: dict[tuple, list[int]] = {}
    for v in candidates:
        key = (
            tuple(sorted(u for u in graph.adjacency[v] if u in cover)),
            tuple(row[v] for row in valuations),
        )
        groups.setdefault(key, []).append(v)
    return [EquivalenceClass(nb, col, tuple(sorted(members))) for (nb, col), members in sorted(groups.items())]


def equivalence_classes(inst: Instance, cover: VertexCoverResult) -> list[EquivalenceClass]:
    """Partition of the vertices outside ``cover``, ordered by signature."""
    if not cover.covers(inst.graph):
        raise ValidationError("vertex-cover", "the given set does not cover every edge")
    return _classes(inst.graph, inst.valuations, cover.cover, sorted(cover.independent_set))


# --------------------------------------------------------------------------- reports


@dataclass(frozen=True)
class RuleApplication:
    """One logged rule step. ``removed`` lists vertices of the rule's input instance.

    ``transfers`` holds ``(agent, dummy_vertex, amount)`` triples for value moved
    onto a dummy vertex (in the rule's input numbering).
    """

    rule: str
    removed: tuple[int, ...] = ()
    transfers: tuple[tuple[int, int, int], ...] = ()
    note: str = ""

    def describe(self) -> str:
        parts = [self.rule]
        if self.removed:
            parts.append("removed=" + ",".join(map(str, self.removed)))
        if self.transfers:
            parts.append("transfers=" + ",".join(f"{a}:{d}:+{x}" for a, d, x in self.transfers))
        if self.note:
            parts.append(self.note)
        return " ".join(parts)


@dataclass(frozen=True)
class KernelReport:
    """A reduced instance plus how it was obtained.

    ``vertex_map[v]`` is the vertex of the kernelized input that kernel vertex
    ``v`` came from. For PROP, dummy vertices map to ``None`` and
    ``dummies[i]`` is the kernel index of agent ``i``'s dummy vertex.
    """

    kernel: Instance
    rule_log: tuple[RuleApplication, ...]
    cover_used: VertexCoverResult
    size_bound: int
    vertex_map: tuple[Optional[int], ...]
    notion: FairnessNotion
    verdict_no: bool = False
    dummies: tuple[int, ...] = ()
    original_n: int = 0

    @property
    def size(self) -> int:
        return self.kernel.m


def envy_size_bound(p: int, t: int, val: int, types: int) -> int:
    return p * 2**t * val**types + t


def prop_size_bound(p: int, t: int, val: int, types: int, n: int) -> int:
    return 2**t * val**types * p + t + n


def _delete_extras(classes: list[EquivalenceClass], p: int) -> list[int]:
    doomed: list[int] = []
    for cls in classes:
        doomed.extend(cls.members[p:])
    return sorted(doomed)


def rr1(inst: Instance, cover: VertexCoverResult) -> KernelReport:
    """Keep at most ``p`` members of every equivalence class (lowest indices)."""
    classes = equivalence_classes(inst, cover)
    doomed = _delete_extras(classes, inst.p)
    kernel, keep = inst.restrict(set(range(inst.m)) - set(doomed))
    log = (RuleApplication("RR1", tuple(doomed), note=f"classes={len(classes)} t={len(cover.cover)}"),)
    bound = envy_size_bound(inst.p, len(cover.cover), distinct_values(inst), len(agent_types(inst)))
    return KernelReport(kernel, log, cover, bound, keep, FairnessNotion.EF, original_n=inst.n)


# --------------------------------------------------------------------------- PROP pipeline


@dataclass(frozen=True)
class PreprocessedInstance:
    """Augmented instance with the layout of its dummy block.

    Vertices ``0..original_m-1`` are the original ones, ``original_m + i`` is
    the dummy vertex of agent ``i``. Agents ``0..original_n-1`` are the original
    agents, ``original_n + i`` is the dummy agent owning dummy vertex ``i``.
    """

    instance: Instance
    original_m: int
    original_n: int
    original_p: int
    anchor: int

    @property
    def dummies(self) -> tuple[int, ...]:
        return tuple(range(self.original_m, self.original_m + self.original_n))


def preprocess_prop(inst: Instance, cover: Optional[VertexCoverResult] = None) -> PreprocessedInstance:
    """Add a dummy clique attached to the lowest cover vertex, n dummy agents, and p += n.

    Original values are doubled and each original agent values its own dummy
    vertex at twice its original total, which keeps every original agent's
    proportional threshold unchanged once dummies go to the dummy agents.
    """
    if cover is None:
        cover = choose_cover(inst.graph)
    m, n = inst.m, inst.n
    anchor = min(cover.cover) if cover.cover else 0
    dummies = [m + i for i in range(n)]
    edges = set(inst.graph.edges)
    edges.update((a, b) for i, a in enumerate(dummies) for b in dummies[i + 1 :])
    edges.add((anchor, dummies[0]))
    graph = Graph(m + n, frozenset(edges))
    rows = []
    for i, row in enumerate(inst.valuations):
        extra = [0] * n
        extra[i] = 2 * inst.totals[i]
        rows.append(tuple(2 * x for x in row) + tuple(extra))
    for i in range(n):
        extra = [0] * n
        extra[i] = 1
        rows.append((0,) * m + tuple(extra))
    return PreprocessedInstance(Instance(graph, tuple(rows), inst.p + n), m, n, inst.p, anchor)


def rr2(pre: PreprocessedInstance, cover: VertexCoverResult) -> KernelReport:
    """Trim classes of the original part; deleted value moves onto each agent's dummy vertex."""
    if not isinstance(pre, PreprocessedInstance):
        raise ValidationError("dummy-block", "rr2 needs the output of preprocess_prop")
    inst = pre.instance
    m0, n0, p0 = pre.original_m, pre.original_n, pre.original_p
    base_cover = frozenset(v for v in cover.cover if v < m0)
    original_part = [v for v in range(m0) if v not in base_cover]
    for u, v in inst.graph.edges:
        if u < m0 and v < m0 and u not in base_cover and v not in base_cover:
            raise ValidationError("vertex-cover", f"edge {u} {v} is not covered", (u, v))
    classes = _classes(inst.graph, inst.valuations[:n0], base_cover, original_part)
    doomed = _delete_extras(classes, p0)
    rows = [list(row) for row in inst.valuations]
    transfers = []
    for i in range(n0):
        moved = sum(inst.valuations[i][v] for v in doomed)
        if moved:
            rows[i][m0 + i] += moved
            transfers.append((i, m0 + i, moved))
    moved_inst = Instance(inst.graph, tuple(tuple(r) for r in rows), inst.p)
    kernel, keep = moved_inst.restrict(set(range(inst.m)) - set(doomed))
    position = {old: new for new, old in enumerate(keep)}
    dummies = tuple(position[d] for d in pre.dummies)
    log = (RuleApplication("RR2", tuple(doomed), tuple(transfers), note=f"classes={len(classes)} t={len(base_cover)}"),)
    vertex_map = tuple(v if v < m0 else None for v in keep)
    return KernelReport(
        kernel, log, cover, 0, vertex_map, FairnessNotion.PROP, dummies=dummies, original_n=n0
    )


@dataclass(frozen=True)
class Rr3Witness:
    """Agent whose best possible bundle misses its share: ``2n * reachable < total``."""

    agent: int
    reachable: int
    total: int


def rr3(report: KernelReport) -> Optional[Rr3Witness]:
    """Definitive No if some original agent cannot reach its share without the dummies."""
    inst = report.kernel
    n0 = report.original_n
    dummy_mask = mask_of(report.dummies)
    for i in range(n0):
        row = inst.valuations[i]
        reachable = sum(x for v, x in enumerate(row) if not (dummy_mask >> v) & 1)
        total = inst.totals[i]
        if inst.n * reachable < total:
            return Rr3Witness(i, reachable, total)
    return None


# --------------------------------------------------------------------------- driver


def kernelize(
    inst: Instance, notion: FairnessNotion | str, vc_mode: str = "exact-if-small", vc_budget: int = 12
) -> KernelReport:
    """Reduce ``inst`` for ``notion``; the report carries the size bound for the cover used."""
    notion = FairnessNotion(notion)
    cover = choose_cover(inst.graph, vc_mode, vc_budget)
    val, types = distinct_values(inst), len(agent_types(inst))
    if notion.is_envy:
        bound = envy_size_bound(inst.p, len(cover.cover), val, types)
        current, mapping, log, step_cover = inst, tuple(range(inst.m)), [], cover
        while True:
            step = rr1(current, step_cover)
            log.append(
                RuleApplication(
                    "RR1",
                    tuple(mapping[v] for v in step.rule_log[0].removed),
                    note=step.rule_log[0].note,
                )
            )
            mapping = tuple(mapping[v] for v in step.vertex_map)
            done = not step.rule_log[0].removed
            current = step.kernel
            if done:
                break
            step_cover = choose_cover(current.graph, vc_mode, vc_budget)
        return KernelReport(current, tuple(log), cover, bound, mapping, notion, original_n=inst.n)

    pre = preprocess_prop(inst, cover)
    step = rr2(pre, cover)
    log = [
        RuleApplication("PREPROCESS", note=f"dummies={','.join(map(str, pre.dummies))} anchor={pre.anchor} p={pre.instance.p}"),
        *step.rule_log,
    ]
    bound = prop_size_bound(inst.p, len(cover.cover), val, types, inst.n)
    witness = rr3(step)
    if witness is not None:
        log.append(RuleApplication("RR3", note=f"agent={witness.agent} reachable={witness.reachable} total={witness.total}"))
    return KernelReport(
        step.kernel,
        tuple(log),
        cover,
        bound,
        step.vertex_map,
        notion,
        verdict_no=witness is not None,
        dummies=step.dummies,
        original_n=inst.n,
    )


def lift_witness(report: KernelReport, original: Instance, alloc: Allocation) -> Allocation:
    """Turn a fair allocation of the kernel into one of the original instance.

    Envy kernels are induced subgraphs, so bundles map back unchanged. For PROP
    the original agents keep their bundles and then grow along unassigned
    neighbours until ``p`` vertices are used; extra items never hurt PROP.
    """
    if report.notion.is_envy:
        return Allocation.validated(original, [{report.vertex_map[v] for v in b} for b in alloc.bundles])
    bundles = []
    for b in alloc.bundles[: report.original_n]:
        mapped = {report.vertex_map[v] for v in b}
        if None in mapped:
            raise ValidationError("dummy-block", "an original agent received a dummy vertex")
        bundles.append(mapped)
    used = set().union(*bundles)
    adjacency = original.graph.adjacency
    while len(used) < original.p:
        grown = False
        for b in bundles:
            frontier = sorted({u for v in b for u in adjacency[v]} - used)
            if frontier:
                b.add(frontier[0])
                used.add(frontier[0])
                grown = True
                break
        if not grown:
            raise ValidationError("connected", "cannot grow bundles to p vertices in a disconnected graph")
    return Allocation.validated(original, bundles)
