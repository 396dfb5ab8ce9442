"""Core data types for ICFD instances and allocations, plus the text formats.

Two line-oriented UTF-8 formats are supported:

``icfd/1`` (instances)::

    icfd/1
    m=3 n=2 p=2
    edges:
    0 1
    1 2
    end
    valuations:
    1 0 4
    2 2 2
    end

``alloc/1`` (allocations)::

    alloc/1
    n=2
    0: 0 1
    1: 2

``#`` starts a comment running to the end of the line; blank lines are ignored.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence


class IcfdError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(IcfdError):
    def __init__(self, line: int, column: int, reason: str):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class ValidationError(IcfdError):
    """A structural invariant does not hold.

    ``invariant`` names the violated rule (e.g. ``"disjoint"``); ``witness``
    carries the offending data (a vertex, an edge, an agent index...).
    """

    def __init__(self, invariant: str, message: str, witness: object = None):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.witness = witness


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..vertex_count-1``.

    Edges are stored normalized as ``(u, v)`` with ``u < v``.
    """

    vertex_count: int
    edges: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.vertex_count < 0:
            raise ValidationError("vertex-count", "vertex count must be non-negative", self.vertex_count)
        normalized = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValidationError("simple", f"self-loop on vertex {u}", (u, v))
            for x in (u, v):
                if not 0 <= x < self.vertex_count:
                    raise ValidationError("vertex-range", f"vertex {x} outside [0, {self.vertex_count})", (u, v))
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph, rejecting self-loops and duplicate edges."""
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            if u == v:
                raise ValidationError("simple", f"self-loop on vertex {u}", (u, v))
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError("simple", f"duplicate edge {key[0]} {key[1]}", key)
            seen.add(key)
        return cls(vertex_count, frozenset(seen))

    @property
    def m(self) -> int:
        return self.vertex_count

    @cached_property
    def sorted_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def adjacency(self) -> tuple[frozenset, ...]:
        adj: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(a) for a in adj)

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        return tuple(mask_of(a) for a in self.adjacency)

    def neighbors(self, v: int) -> frozenset:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def is_connected_mask(self, mask: int) -> bool:
        """Whether the subgraph induced by ``mask`` is connected (empty counts as connected)."""
        if mask == 0:
            return True
        nbr = self.neighbor_masks
        start = mask & -mask
        seen = start
        frontier = start
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            new = nbr[low.bit_length() - 1] & mask & ~seen
            seen |= new
            frontier |= new
        return seen == mask

    def is_connected(self, vertices: Optional[Iterable[int]] = None) -> bool:
        if vertices is None:
            return self.is_connected_mask((1 << self.vertex_count) - 1)
        return self.is_connected_mask(mask_of(vertices))

    def induced_subgraph(self, vertices: Iterable[int]) -> tuple["Graph", tuple[int, ...]]:
        """Induced subgraph on ``vertices`` relabelled in increasing order.

        Returns the subgraph and the tuple mapping new index -> old index.
        """
        keep = tuple(sorted(set(vertices)))
        index = {old: new for new, old in enumerate(keep)}
        edges = frozenset(
            (index[u], index[v]) for u, v in self.edges if u in index and v in index
        )
        return Graph(len(keep), edges), keep


class FairnessNotion(str, enum.Enum):
    PROP = "prop"
    EF = "ef"
    EF1 = "ef1"
    EFX = "efx"

    @classmethod
    def parse(cls, text: str) -> "FairnessNotion":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown fairness notion {text!r}; expected one of prop, ef, ef1, efx") from None

    @property
    def is_envy(self) -> bool:
        return self is not FairnessNotion.PROP

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Instance:
    """An ICFD instance: item graph, one valuation row per agent, and the target size ``p``."""

    graph: Graph
    valuations: tuple[tuple[int, ...], ...]
    p: int

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(x) for x in row) for row in self.valuations)
        object.__setattr__(self, "valuations", rows)
        m = self.graph.vertex_count
        if not rows:
            raise ValidationError("agent-count", "at least one agent is required", 0)
        for i, row in enumerate(rows):
            if len(row) != m:
                raise ValidationError("matrix-shape", f"valuation row {i} has {len(row)} entries, expected {m}", i)
            for v, x in enumerate(row):
                if x < 0:
                    raise ValidationError("non-negative", f"agent {i} values vertex {v} at {x} < 0", (i, v))
        if not 1 <= self.p <= m:
            raise ValidationError("p-range", f"p={self.p} outside [1, m={m}]", self.p)

    @property
    def n(self) -> int:
        return len(self.valuations)

    @property
    def m(self) -> int:
        return self.graph.vertex_count

    @cached_property
    def totals(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.valuations)

    def value(self, agent: int, vertices: Iterable[int]) -> int:
        row = self.valuations[agent]
        return sum(row[v] for v in vertices)

    def column(self, v: int) -> tuple[int, ...]:
        return tuple(row[v] for row in self.valuations)

    def with_p(self, p: int) -> "Instance":
        return Instance(self.graph, self.valuations, p)

    def restrict(self, vertices: Iterable[int], p: Optional[int] = None) -> tuple["Instance", tuple[int, ...]]:
        """Instance on the induced subgraph; returns it with the new->old vertex map."""
        sub, keep = self.graph.induced_subgraph(vertices)
        rows = tuple(tuple(row[v] for v in keep) for row in self.valuations)
        return Instance(sub, rows, self.p if p is None else p), keep


@dataclass(frozen=True)
class Allocation:
    """One bundle (vertex set) per agent, in agent order.

    Build through :meth:`validated` (or :func:`parse_allocation`) to get the
    four allocation invariants checked against an instance.
    """

    bundles: tuple[frozenset, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundles", tuple(frozenset(b) for b in self.bundles))

    @classmethod
    def validated(cls, inst: Instance, bundles: Sequence[Iterable[int]]) -> "Allocation":
        alloc = cls(tuple(frozenset(b) for b in bundles))
        validate_allocation(inst, alloc)
        return alloc

    @property
    def n(self) -> int:
        return len(self.bundles)

    @property
    def assigned(self) -> frozenset:
        out: set[int] = set()
        for b in self.bundles:
            out |= b
        return frozenset(out)

    def sorted_bundles(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(sorted(b)) for b in self.bundles)

    def relabel(self, mapping: Sequence[int]) -> "Allocation":
        """Apply ``new_index -> old_index`` style vertex mapping to every bundle."""
        return Allocation(tuple(frozenset(mapping[v] for v in b) for b in self.bundles))


def validate_allocation(inst: Instance, alloc: Allocation) -> None:
    """Raise :class:`ValidationError` naming the first violated allocation invariant."""
    if alloc.n != inst.n:
        raise ValidationError("agent-count", f"allocation has {alloc.n} bundles, instance has {inst.n} agents", alloc.n)
    m = inst.m
    owner: dict[int, int] = {}
    for i, bundle in enumerate(alloc.bundles):
        if not bundle:
            raise ValidationError("non-empty", f"bundle of agent {i} is empty", i)
        for v in sorted(bundle):
            if not 0 <= v < m:
                raise ValidationError("vertex-range", f"vertex {v} of agent {i} outside [0, {m})", (i, v))
            if v in owner:
                raise ValidationError(
                    "disjoint", f"vertex {v} assigned to agents {owner[v]} and {i}", (v, owner[v], i)
                )
            owner[v] = i
    for i, bundle in enumerate(alloc.bundles):
        if not inst.graph.is_connected(bundle):
            raise ValidationError("connected", f"bundle of agent {i} induces a disconnected subgraph", i)
    if len(owner) != inst.p:
        raise ValidationError("size", f"{len(owner)} vertices assigned, expected p={inst.p}", len(owner))


# --------------------------------------------------------------------------- text formats


def _clean_lines(text: str) -> list[tuple[int, str, int]]:
    """Non-blank lines with comments stripped, as (line number, content, column offset)."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        stripped = content.strip()
        if stripped:
            out.append((lineno, stripped, len(content) - len(content.lstrip()) + 1))
    return out


def _ints(lineno: int, line: str, col0: int) -> list[int]:
    values = []
    for token in line.split():
        try:
            values.append(int(token, 10))
        except ValueError:
            raise ParseError(lineno, line.find(token) + col0, f"expected an integer, got {token!r}") from None
    return values


def _header_fields(lineno: int, line: str, col0: int, keys: Sequence[str]) -> dict[str, int]:
    out: dict[str, int] = {}
    for token in line.split():
        pos = line.find(token) + col0
        key, sep, value = token.partition("=")
        if not sep or key not in keys:
            raise ParseError(lineno, pos, f"unexpected header field {token!r}")
        if key in out:
            raise ParseError(lineno, pos, f"duplicate header field {key!r}")
        try:
            out[key] = int(value, 10)
        except ValueError:
            raise ParseError(lineno, pos + len(key) + 1, f"expected an integer for {key}, got {value!r}") from None
    for key in keys:
        if key not in out:
            raise ParseError(lineno, 1, f"missing header field {key!r}")
    return out


def parse_instance(text: str | bytes) -> Instance:
    """Parse an ``icfd/1`` document into a validated :class:`Instance`."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(1, exc.start + 1, "input is not valid UTF-8") from None
    lines = _clean_lines(text)
    it = iter(lines)

    def expect(what: str) -> tuple[int, str, int]:
        try:
            return next(it)
        except StopIteration:
            last = lines[-1][0] if lines else 1
            raise ParseError(last, 1, f"unexpected end of input, expected {what}") from None

    lineno, line, col = expect("'icfd/1'")
    if line != "icfd/1":
        raise ParseError(lineno, col, f"expected format tag 'icfd/1', got {line!r}")
    lineno, line, col = expect("header 'm=<int> n=<int> p=<int>'")
    header = _header_fields(lineno, line, col, ("m", "n", "p"))
    m, n, p = header["m"], header["n"], header["p"]
    if m < 0 or n < 1:
        raise ParseError(lineno, col, f"invalid header values m={m} n={n}")

    lineno, line, col = expect("'edges:'")
    if line != "edges:":
        raise ParseError(lineno, col, f"expected 'edges:', got {line!r}")
    edges: list[tuple[int, int]] = []
    while True:
        lineno, line, col = expect("an edge or 'end'")
        if line == "end":
            break
        pair = _ints(lineno, line, col)
        if len(pair) != 2:
            raise ParseError(lineno, col, f"edge line needs exactly two vertices, got {len(pair)}")
        edges.append((pair[0], pair[1]))

    lineno, line, col = expect("'valuations:'")
    if line != "valuations:":
        raise ParseError(lineno, col, f"expected 'valuations:', got {line!r}")
    rows: list[tuple[int, ...]] = []
    while True:
        lineno, line, col = expect("a valuation row or 'end'")
        if line == "end":
            break
        row = _ints(lineno, line, col)
        if len(row) != m:
            raise ValidationError("matrix-shape", f"line {lineno}: valuation row has {len(row)} entries, expected m={m}", lineno)
        rows.append(tuple(row))
    if len(rows) != n:
        raise ValidationError("matrix-shape", f"{len(rows)} valuation rows, expected n={n}", len(rows))
    for lineno, line, col in it:
        raise ParseError(lineno, col, f"trailing content {line!r}")

    graph = Graph.from_edges(m, edges)
    return Instance(graph, tuple(rows), p)


def serialize_instance(inst: Instance, names: Optional[Sequence[str]] = None) -> str:
    """Canonical ``icfd/1`` text. ``names`` are emitted as comments and ignored on parse."""
    out = ["icfd/1", f"m={inst.m} n={inst.n} p={inst.p}"]
    if names is not None:
        out.append("# vertex names: " + " ".join(f"{v}={name}" for v, name in enumerate(names)))
    out.append("edges:")
    out.extend(f"{u} {v}" for u, v in inst.graph.sorted_edges)
    out.append("end")
    out.append("valuations:")
    out.extend(" ".join(str(x) for x in row) for row in inst.valuations)
    out.append("end")
    return "\n".join(out) + "\n"


def parse_allocation(text: str | bytes, inst: Instance) -> Allocation:
    """Parse an ``alloc/1`` document and validate it against ``inst``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = _clean_lines(text)
    if not lines or lines[0][1] != "alloc/1":
        where = lines[0] if lines else (1, "", 1)
        raise ParseError(where[0], where[2], "expected format tag 'alloc/1'")
    if len(lines) < 2:
        raise ParseError(lines[0][0], 1, "missing header 'n=<int>'")
    lineno, line, col = lines[1]
    n = _header_fields(lineno, line, col, ("n",))["n"]
    body = lines[2:]
    if len(body) != n:
        where = body[-1][0] if body else lineno
        raise ParseError(where, 1, f"expected {n} bundle lines, got {len(body)}")
    bundles: list[list[int]] = []
    for expected_agent, (lineno, line, col) in enumerate(body):
        head, sep, rest = line.partition(":")
        if not sep:
            raise ParseError(lineno, col, "bundle line must look like '<agent>: <v> <v> ...'")
        try:
            agent = int(head.strip(), 10)
        except ValueError:
            raise ParseError(lineno, col, f"bad agent index {head.strip()!r}") from None
        if agent != expected_agent:
            raise ParseError(lineno, col, f"expected agent {expected_agent}, got {agent}")
        vertices = _ints(lineno, rest, col + len(head) + 1)
        if len(set(vertices)) != len(vertices):
            dup = next(v for v in vertices if vertices.count(v) > 1)
            raise ValidationError("disjoint", f"vertex {dup} listed twice for agent {agent}", (dup, agent, agent))
        bundles.append(vertices)
    return Allocation.validated(inst, bundles)


def serialize_allocation(alloc: Allocation) -> str:
    out = ["alloc/1", f"n={alloc.n}"]
    for i, bundle in enumerate(alloc.sorted_bundles()):
        out.append(f"{i}: " + " ".join(str(v) for v in bundle))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- statistics


@dataclass(frozen=True)
class StatsReport:
    m: int
    edge_count: int
    n: int
    p: int
    vcn_exact: Optional[int]
    vcn_approx: int
    val: int
    agent_type_count: int
    zero_valuation_agents: tuple[bool, ...] = field(default=())

    def as_dict(self) -> dict[str, object]:
        return {
            "m": self.m,
            "edges": self.edge_count,
            "n": self.n,
            "p": self.p,
            "vcn_exact": self.vcn_exact,
            "vcn_approx": self.vcn_approx,
            "val": self.val,
            "agent_types": self.agent_type_count,
            "zero_valuation_agents": [i for i, flag in enumerate(self.zero_valuation_agents) if flag],
        }


def distinct_values(inst: Instance) -> int:
    return len({x for row in inst.valuations for x in row})


def agent_types(inst: Instance) -> list[list[int]]:
    """Agents grouped by identical valuation rows, in order of first appearance."""
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, row in enumerate(inst.valuations):
        groups.setdefault(row, []).append(i)
    return list(groups.values())


def compute_stats(inst: Instance, vc_mode: str = "exact-if-small", vc_budget: int = 12) -> StatsReport:
    """Summary parameters of an instance: sizes, vertex cover number, val, agent types."""
    from icfd.kernel import vertex_cover_approx, vertex_cover_exact

    if vc_mode not in ("exact-if-small", "approx-only"):
        raise ValueError(f"unknown vc_mode {vc_mode!r}")
    approx = vertex_cover_approx(inst.graph)
    exact = None
    if vc_mode == "exact-if-small":
        found = vertex_cover_exact(inst.graph, vc_budget)
        if found is not None:
            exact = len(found.cover)
    return StatsReport(
        m=inst.m,
        edge_count=len(inst.graph.edges),
        n=inst.n,
        p=inst.p,
        vcn_exact=exact,
        vcn_approx=len(approx.cover),
        val=distinct_values(inst),
        agent_type_count=len(agent_types(inst)),
        zero_valuation_agents=tuple(t == 0 for t in inst.totals),
    )
