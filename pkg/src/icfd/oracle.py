"""Exhaustive decision procedures: the ground truth every other solver is tested against.

The search precomputes every connected vertex subset that could serve as a bundle,
then assigns bundles to agents in order. Entries are sorted lexicographically by
their sorted vertex tuple, so the first witness found is the lexicographically
smallest allocation (compared bundle by bundle in agent order).
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from icfd.fairness import tau_mask
from icfd.model import (
    Allocation,
    FairnessNotion,
    Graph,
    IcfdError,
    Instance,
    iter_bits,
)


class BudgetExceeded(IcfdError):
    def __init__(self, budget: int):
        super().__init__(f"search budget of {budget} nodes exceeded")
        self.budget = budget


class Status(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    NO_WITNESS_FOUND = "NoWitnessFound"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    witness: Optional[Allocation] = None
    nodes: int = 0
    elapsed: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        if (self.status is Status.YES) != (self.witness is not None):
            raise ValueError("a witness is present exactly for Yes outcomes")


# --------------------------------------------------------------------------- connected subsets


def connected_subsets(graph: Graph, max_size: int, min_size: int = 1) -> Iterator[int]:
    """Every connected vertex set with ``min_size <= |S| <= max_size``, as bitmasks.

    Each set is produced exactly once (ESU-style enumeration anchored at its
    lowest vertex).
    """
    if max_size < 1:
        return
    nbr = graph.neighbor_masks

    def extend(sub: int, size: int, ext: int, closed: int, above: int) -> Iterator[int]:
        if size >= min_size:
            yield sub
        if size == max_size:
            return
        while ext:
            low = ext & -ext
            ext ^= low
            w = low.bit_length() - 1
            fresh = nbr[w] & ~closed & above
            yield from extend(sub | low, size + 1, ext | fresh, closed | nbr[w], above)

    full = (1 << graph.vertex_count) - 1
    for v in range(graph.vertex_count):
        above = full & ~((1 << (v + 1)) - 1)
        bit = 1 << v
        yield from extend(bit, 1, nbr[v] & above, bit | nbr[v], above)


def _lex_key(mask: int) -> tuple[int, ...]:
    return tuple(iter_bits(mask))


@dataclass
class _Table:
    """Candidate bundles with per-agent values and comparison thresholds.

    ``thr[e, a]`` is what agent ``a`` must reach with its own bundle to not
    envy entry ``e``: the entry's value minus the allowed removal.
    """

    masks: list[int]
    sizes: np.ndarray
    values: np.ndarray
    thr: np.ndarray
    by_size: dict[int, np.ndarray]


def _build_table(inst: Instance, notion: FairnessNotion, max_size: int) -> _Table:
    masks = sorted(connected_subsets(inst.graph, max_size), key=_lex_key)
    n = inst.n
    biggest = max((t for t in inst.totals), default=0)
    dtype = np.int64 if biggest * max(n, 2) < 2**62 else object
    values = np.zeros((len(masks), n), dtype=dtype)
    thr = np.zeros((len(masks), n), dtype=dtype)
    sizes = np.zeros(len(masks), dtype=np.int64)
    rows = inst.valuations
    for e, mask in enumerate(masks):
        verts = _lex_key(mask)
        sizes[e] = len(verts)
        removable = None
        if notion in (FairnessNotion.EF1, FairnessNotion.EFX):
            removable = list(iter_bits(tau_mask(inst.graph, mask)))
        for a in range(n):
            row = rows[a]
            val = sum(row[v] for v in verts)
            values[e, a] = val
            if removable is None:
                thr[e, a] = val
            elif notion is FairnessNotion.EF1:
                thr[e, a] = val - max(row[v] for v in removable)
            else:
                thr[e, a] = val - min(row[v] for v in removable)
    by_size = {s: np.flatnonzero(sizes == s) for s in range(1, max_size + 1)}
    return _Table(masks, sizes, values, thr, by_size)


# --------------------------------------------------------------------------- exhaustive solver


class _Search:
    def __init__(self, inst: Instance, notion: FairnessNotion, budget: Optional[int]):
        self.inst = inst
        self.notion = notion
        self.budget = budget
        self.nodes = 0
        self.n = inst.n
        self.p = inst.p
        self.table = _build_table(inst, notion, inst.p - inst.n + 1)
        self.mask_arr = np.array(self.table.masks, dtype=object if inst.m > 63 else np.uint64)
        if notion is FairnessNotion.PROP:
            n = self.n
            totals = np.array(inst.totals, dtype=self.table.values.dtype)
            self.allowed = [self.table.values[:, a] * n >= totals[a] for a in range(n)]

    def _charge(self, amount: int) -> None:
        self.nodes += amount
        if self.budget is not None and self.nodes > self.budget:
            raise BudgetExceeded(self.budget)

    def _candidates(
        self, agent: int, used: int, chosen: list[int], max_size: int, exact: bool = False
    ) -> np.ndarray:
        """Entries ``agent`` may take given the bundles already fixed in ``chosen``."""
        t = self.table
        if exact:
            idx = t.by_size.get(max_size, np.empty(0, dtype=np.int64))
        else:
            idx = np.flatnonzero(t.sizes <= max_size)
        if idx.size == 0:
            return idx
        if self.inst.m <= 63:
            idx = idx[(self.mask_arr[idx] & np.uint64(used)) == 0]
        else:
            idx = idx[np.array([(t.masks[e] & used) == 0 for e in idx], dtype=bool)]
        if self.notion is FairnessNotion.PROP:
            return idx[self.allowed[agent][idx]]
        for b, e in enumerate(chosen):
            # agent does not envy b, and b does not envy agent
            keep = (t.values[idx, agent] >= t.thr[e, agent]) & (t.values[e, b] >= t.thr[idx, b])
            idx = idx[keep.astype(bool)]
            if idx.size == 0:
                break
        return idx

    def _pair_join(self, agent: int, used: int, chosen: list[int], remaining: int) -> Optional[tuple[int, int]]:
        """Assign the last two agents at once with a vectorized pairwise check."""
        t = self.table
        first = self._candidates(agent, used, chosen, remaining - 1)
        self._charge(int(first.size))
        if first.size == 0:
            return None
        last = agent + 1
        pool = self._candidates(last, used, chosen, remaining - 1)
        self._charge(int(pool.size))
        if pool.size == 0:
            return None
        ok = (t.sizes[first][:, None] + t.sizes[pool][None, :]) == remaining
        if self.inst.m <= 63:
            ok &= (self.mask_arr[first][:, None] & self.mask_arr[pool][None, :]) == 0
        else:
            pm = [t.masks[e] for e in pool]
            ok &= np.array([[(t.masks[a] & b) == 0 for b in pm] for a in first], dtype=bool)
        if self.notion is not FairnessNotion.PROP:
            mutual = (t.values[first, agent][:, None] >= t.thr[pool, agent][None, :]) & (
                t.values[pool, last][None, :] >= t.thr[first, last][:, None]
            )
            ok &= mutual.astype(bool)
        self._charge(int(first.size) * int(pool.size))
        hits = np.argwhere(ok)
        if hits.size == 0:
            return None
        i, j = hits[0]
        return int(first[i]), int(pool[j])

    def run(self) -> Optional[list[int]]:
        return self._dfs(0, 0, [], self.p)

    def _dfs(self, agent: int, used: int, chosen: list[int], remaining: int) -> Optional[list[int]]:
        if agent == self.n - 2:
            pair = self._pair_join(agent, used, chosen, remaining)
            return None if pair is None else chosen + list(pair)
        if agent == self.n - 1:
            cands = self._candidates(agent, used, chosen, remaining, exact=True)
            self._charge(int(cands.size))
            return chosen + [int(cands[0])] if cands.size else None
        cands = self._candidates(agent, used, chosen, remaining - (self.n - agent - 1))
        self._charge(1)
        t = self.table
        for e in cands:
            e = int(e)
            self._charge(1)
            found = self._dfs(agent + 1, used | t.masks[e], chosen + [e], remaining - int(t.sizes[e]))
            if found is not None:
                return found
        return None


def solve_exhaustive(
    inst: Instance, notion: FairnessNotion | str, budget: Optional[int] = None
) -> SolveOutcome:
    """Definitive Yes/No for ``notion`` on ``inst`` by exhaustive search.

    ``budget`` caps the number of search nodes; exceeding it raises
    :class:`BudgetExceeded` rather than answering No.
    """
    notion = FairnessNotion(notion)
    start = time.perf_counter()
    if inst.n > inst.p:
        return SolveOutcome(Status.NO, None, 0, time.perf_counter() - start)
    search = _Search(inst, notion, budget)
    found = search.run()
    elapsed = time.perf_counter() - start
    if found is None:
        return SolveOutcome(Status.NO, None, search.nodes, elapsed)
    bundles = [frozenset(iter_bits(search.table.masks[e])) for e in found]
    return SolveOutcome(Status.YES, Allocation.validated(inst, bundles), search.nodes, elapsed)


def enumerate_allocations(inst: Instance) -> Iterator[Allocation]:
    """Every valid allocation exactly once, in lexicographic bundle-by-bundle order."""
    n, p = inst.n, inst.p
    if n > p:
        return
    masks = sorted(connected_subsets(inst.graph, p - n + 1), key=_lex_key)
    sizes = [m.bit_count() for m in masks]

    def rec(agent: int, used: int, remaining: int, acc: list[int]) -> Iterator[list[int]]:
        if agent == n:
            if remaining == 0:
                yield acc
            return
        cap = remaining - (n - agent - 1)
        for mask, size in zip(masks, sizes):
            if size > cap or mask & used:
                continue
            if agent == n - 1 and size != remaining:
                continue
            yield from rec(agent + 1, used | mask, remaining - size, acc + [mask])

    for chosen in rec(0, 0, p, []):
        yield Allocation(tuple(frozenset(iter_bits(m)) for m in chosen))


def max_weight_connected_subgraph_exact(
    graph: Graph, weights: Sequence[int], k: int
) -> Optional[tuple[frozenset, int]]:
    """Heaviest connected vertex set of size exactly ``k``; lexicographically smallest on ties."""
    if not 1 <= k <= graph.vertex_count:
        raise ValueError(f"k={k} outside [1, {graph.vertex_count}]")
    best: Optional[tuple[int, tuple[int, ...]]] = None
    for mask in connected_subsets(graph, k, k):
        verts = _lex_key(mask)
        w = sum(weights[v] for v in verts)
        if best is None or w > best[0] or (w == best[0] and verts < best[1]):
            best = (w, verts)
    if best is None:
        return None
    return frozenset(best[1]), best[0]


# --------------------------------------------------------------------------- source-problem oracles


def solve_ksum_brute(ks) -> Optional[tuple[int, ...]]:
    """First (lexicographic) size-k index set whose values sum to the target."""
    for combo in itertools.combinations(range(len(ks.values)), ks.k):
        if sum(ks.values[i] for i in combo) == ks.target:
            return combo
    return None


def solve_rbds_brute(rb) -> Optional[tuple[int, ...]]:
    """Smallest-then-lexicographic set of at most k N-side vertices dominating T.

    Returned entries are N-side indices (``0..|N|-1``).
    """
    need = (1 << rb.t_size) - 1
    reach = [0] * rb.n_size
    for t, nv in rb.edges:
        reach[nv] |= 1 << t
    for size in range(0, min(rb.k, rb.n_size) + 1):
        for combo in itertools.combinations(range(rb.n_size), size):
            covered = 0
            for nv in combo:
                covered |= reach[nv]
            if covered == need:
                return combo
    return None
