"""Fairness checks for a fixed allocation: PROP, EF, EF1, EFX."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from icfd.model import (
    Allocation,
    FairnessNotion,
    Graph,
    Instance,
    ValidationError,
    iter_bits,
    mask_of,
    validate_allocation,
)


@dataclass(frozen=True)
class EnvyViolation:
    """Agent ``envious`` prefers ``envied``'s bundle even after the allowed removal.

    ``removed`` is the extremal removable vertex of the envied bundle (``None`` for EF).
    The violated inequality is ``own_value < other_value - removed_value``.
    """

    envious: int
    envied: int
    own_value: int
    other_value: int
    removed: Optional[int] = None
    removed_value: int = 0


@dataclass(frozen=True)
class PropViolation:
    """``scaled_share = n * u_i(pi_i)`` fell short of ``total = u_i(V)``."""

    agent: int
    scaled_share: int
    total: int


@dataclass(frozen=True)
class FairnessVerdict:
    notion: FairnessNotion
    holds: bool
    violation: EnvyViolation | PropViolation | None = None

    def __post_init__(self) -> None:
        if self.holds != (self.violation is None):
            raise ValueError("a verdict holds exactly when it carries no violation")


def tau_mask(graph: Graph, bundle: int) -> int:
    """Bitmask version of :func:`tau`; assumes ``bundle`` is non-empty and connected."""
    if bundle & (bundle - 1) == 0:
        return bundle
    out = 0
    rest = bundle
    while rest:
        low = rest & -rest
        rest ^= low
        if graph.is_connected_mask(bundle ^ low):
            out |= low
    return out


def tau(graph: Graph, bundle: Iterable[int]) -> frozenset:
    """Vertices of a connected bundle whose removal keeps it connected.

    A singleton bundle counts its own vertex as removable.
    """
    mask = mask_of(bundle)
    if mask == 0:
        raise ValidationError("non-empty", "tau of an empty bundle is undefined")
    if not graph.is_connected_mask(mask):
        raise ValidationError("connected", "tau requires a connected bundle", sorted(frozenset(bundle)))
    return frozenset(iter_bits(tau_mask(graph, mask)))


def _extremal(row: tuple[int, ...], removable: list[int], largest: bool) -> tuple[int, int]:
    """(vertex, value) of the max/min valued removable vertex, lowest index on ties."""
    best = removable[0]
    for v in removable[1:]:
        if (row[v] > row[best]) if largest else (row[v] < row[best]):
            best = v
    return best, row[best]


class _Evaluator:
    """Shared bundle values and tau sets for one (instance, allocation) pair."""

    def __init__(self, inst: Instance, alloc: Allocation):
        self.inst = inst
        self.bundles = [sorted(b) for b in alloc.bundles]
        self.values = [[inst.value(i, b) for b in self.bundles] for i in range(inst.n)]
        self.taus = [sorted(tau(inst.graph, b)) for b in self.bundles]

    def prop(self) -> FairnessVerdict:
        n = self.inst.n
        for i in range(n):
            scaled = n * self.values[i][i]
            total = self.inst.totals[i]
            if scaled < total:
                return FairnessVerdict(FairnessNotion.PROP, False, PropViolation(i, scaled, total))
        return FairnessVerdict(FairnessNotion.PROP, True)

    def envy(self, notion: FairnessNotion) -> FairnessVerdict:
        n = self.inst.n
        for i in range(n):
            row = self.inst.valuations[i]
            own = self.values[i][i]
            for j in range(n):
                if i == j:
                    continue
                other = self.values[i][j]
                if own >= other:
                    continue
                if notion is FairnessNotion.EF:
                    return FairnessVerdict(notion, False, EnvyViolation(i, j, own, other))
                v, x = _extremal(row, self.taus[j], largest=notion is FairnessNotion.EF1)
                if own < other - x:
                    return FairnessVerdict(notion, False, EnvyViolation(i, j, own, other, v, x))
        return FairnessVerdict(notion, True)

    def check(self, notion: FairnessNotion) -> FairnessVerdict:
        return self.prop() if notion is FairnessNotion.PROP else self.envy(notion)


def check(inst: Instance, alloc: Allocation, notion: FairnessNotion) -> FairnessVerdict:
    """Decide whether ``alloc`` satisfies ``notion`` for ``inst``; the allocation is validated first."""
    validate_allocation(inst, alloc)
    return _Evaluator(inst, alloc).check(FairnessNotion(notion))


def check_all(inst: Instance, alloc: Allocation) -> dict[FairnessNotion, FairnessVerdict]:
    validate_allocation(inst, alloc)
    ev = _Evaluator(inst, alloc)
    return {notion: ev.check(notion) for notion in FairnessNotion}


def violation_holds(inst: Instance, alloc: Allocation, verdict: FairnessVerdict) -> bool:
    """Recompute a reported violation from raw data and confirm it is a real one."""
    w = verdict.violation
    if w is None:
        return False
    if isinstance(w, PropViolation):
        own = inst.value(w.agent, alloc.bundles[w.agent])
        return inst.n * own == w.scaled_share and inst.totals[w.agent] == w.total and w.scaled_share < w.total
    own = inst.value(w.envious, alloc.bundles[w.envious])
    other = inst.value(w.envious, alloc.bundles[w.envied])
    if (own, other) != (w.own_value, w.other_value):
        return False
    if verdict.notion is FairnessNotion.EF:
        return own < other
    removable = tau(inst.graph, alloc.bundles[w.envied])
    values = [inst.valuations[w.envious][v] for v in removable]
    expected = max(values) if verdict.notion is FairnessNotion.EF1 else min(values)
    return w.removed in removable and w.removed_value == expected and own < other - expected
