"""Subset dynamic program for the rooted depth-bounded Steiner tree.

``f(S, u, d)`` is the cheapest tree rooted at ``u`` reaching every terminal
of ``S`` within ``d`` edges.  Depth 1 is a star; deeper layers take the
cheaper of

* extend: one edge ``u -> v`` followed by ``f(S - {u}, v, d - 1)``;
* split: ``f(S', u, d) + f(S - S', u, d)`` over non-empty proper ``S'``.

Layers are filled one depth at a time and, within a depth, by popcount of
``S`` so every split reads finished entries.  Each layer is computed with
whole-array numpy operations: one min-plus product for the extend branch
and one grouped reduction per popcount for the split branch.
"""
from __future__ import annotations

import dataclasses
import functools
from collections import deque
from typing import Union

import numpy as np

from .core import (
    MAX_WEIGHT,
    Diameter,
    ProblemInstance,
    SolveOutcome,
    SteinerTree,
    check_solution,
    rooted_depth,
    tree_weight,
)
from .relax import InternalInconsistency, WeightOverflow, interpret, lift_relaxed, relax

DEFAULT_TERMINAL_CAP = 20
# elements per temporary in the extend branch
_CHUNK_ELEMENTS = 1 << 22

@dataclasses.dataclass(frozen=True)
class BaseStar:
    pass


@dataclasses.dataclass(frozen=True)
class Extend:
    v: int


@dataclasses.dataclass(frozen=True)
class Split:
    sprime: int


Choice = Union[BaseStar, Extend, Split]


class DPTable:
    """Filled values of ``f``; backpointers are derived from them on demand.

    ``values[d - 1]`` is a ``(2**k, n)`` array indexed by terminal bitmask
    and vertex.  When the fill stops early because a layer repeated, every
    deeper layer equals the last stored one and lookups are clamped.

    :meth:`choice` re-runs the minimisation for one cell against the stored
    layers, so the fill itself never tracks argmins.  Ties go to the star,
    then extend over split, then the smallest ``v`` or ``S'``.
    """

    def __init__(self, weights: np.ndarray, terminals: tuple[int, ...], d_eff: int):
        self.weights = weights
        self.terminals = terminals
        self.d_eff = d_eff
        self.values: list[np.ndarray] = []
        self.ops = 0
        self._bit = {t: 1 << i for i, t in enumerate(terminals)}

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def full(self) -> int:
        return (1 << len(self.terminals)) - 1

    @property
    def stored_layers(self) -> int:
        return len(self.values)

    def _layer(self, d: int) -> int:
        if not 1 <= d <= self.d_eff:
            raise IndexError(f"depth {d} outside 1..{self.d_eff}")
        return min(d, len(self.values)) - 1

    def value(self, S: int, u: int, d: int) -> int:
        return int(self.values[self._layer(d)][S, u])

    def without(self, S: int, u: int) -> int:
        return S & ~self._bit.get(u, 0)

    def extend_candidates(self, S: int, u: int, d: int) -> np.ndarray:
        """``w[u, v] + f(S - {u}, v, d - 1)`` for every v."""
        return self.weights[u] + self.values[self._layer(d - 1)][self.without(S, u)]

    def split_candidates(self, S: int, u: int, d: int) -> list[tuple[int, int]]:
        """``(S', f(S', u, d) + f(S - S', u, d))`` for each non-empty proper ``S'``."""
        layer = self.values[self._layer(d)]
        return [(a, int(layer[a, u] + layer[S ^ a, u])) for a in _proper_submasks(S, False)]

    def choice(self, S: int, u: int, d: int) -> Choice:
        d = self._layer(d) + 1
        if d == 1 or S == 0:
            return BaseStar()
        target = self.value(S, u, d)
        ext = self.extend_candidates(S, u, d)
        v = int(ext.argmin())
        if ext[v] == target:
            return Extend(v)
        for sprime, cost in self.split_candidates(S, u, d):
            if cost == target:
                return Split(sprime)
        raise InternalInconsistency(f"no branch reproduces f({S}, {u}, {d}) = {target}")

    def mask(self, vertices) -> int:
        return functools.reduce(lambda m, v: m | self._bit[v], vertices, 0)

    def members(self, S: int) -> list[int]:
        return [t for i, t in enumerate(self.terminals) if S >> i & 1]


@functools.lru_cache(maxsize=64)
def _split_plan(k: int, halve: bool) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Per popcount: owners, first halves, second halves, group offsets.

    Every non-empty proper ``S'`` is listed unless ``halve`` is set, in which
    case only halves holding the lowest bit of their owner appear (the other
    orientation gives the same sum).
    """
    by_pop: dict[int, list[int]] = {}
    for S in range(1, 1 << k):
        by_pop.setdefault(S.bit_count(), []).append(S)
    plan = []
    for p in range(2, k + 1):
        owners, first, starts = by_pop[p], [], []
        for S in owners:
            starts.append(len(first))
            first.extend(_proper_submasks(S, halve))
        a = np.array(first, dtype=np.int64)
        s = np.array(owners, dtype=np.int64)
        b = np.repeat(s, np.diff(np.append(starts, len(first)))) ^ a
        plan.append((s, a, b, np.array(starts, dtype=np.int64)))
    return plan


def _proper_submasks(S: int, halve: bool) -> list[int]:
    """Non-empty proper submasks of ``S`` in ascending order."""
    fixed = S & -S if halve else 0
    rest = S ^ fixed
    out = []
    x = 0
    while True:
        sub = fixed | x
        if sub and sub != S:
            out.append(sub)
        x = (x - rest) & rest
        if x == 0:
            return out


def _check_input(inst: ProblemInstance, terminal_cap: int) -> None:
    if not inst.directed:
        raise ValueError("the subset DP needs a directed instance")
    if not inst.graph.is_complete():
        raise ValueError("relax the instance first: the DP needs a complete graph")
    k = len(inst.terminals)
    if k > terminal_cap:
        raise ValueError(f"{k} terminals exceeds the cap of {terminal_cap}")
    top = int(inst.graph.array.max()) if inst.n else 0
    if top and top > MAX_WEIGHT // (2 * k + 2):
        raise WeightOverflow("table sums could exceed the 64-bit range")


def base_layer(inst: ProblemInstance, terminal_cap: int = DEFAULT_TERMINAL_CAP) -> DPTable:
    """Depth-1 layer: ``f(S, u, 1)`` is the star from ``u`` to every member of ``S``."""
    _check_input(inst, terminal_cap)
    w = inst.graph.array
    terms = inst.terminals
    k = len(terms)
    table = DPTable(w, terms, min(inst.constraint.bound, inst.n))
    bits = (np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1
    layer = bits.astype(np.int64) @ w[:, list(terms)].T
    table.values.append(layer)
    table.ops += layer.size * k
    return table


def _extend(w: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """min over v of ``w[u, v] + prev[S, v]`` for every (S, u)."""
    rows, n = prev.shape
    out = np.empty((rows, n), dtype=np.int64)
    step = max(1, _CHUNK_ELEMENTS // max(n * n, 1))
    for lo in range(0, rows, step):
        np.min(w[None, :, :] + prev[lo:lo + step, None, :], axis=2, out=out[lo:lo + step])
    return out


def fill(
    inst: ProblemInstance,
    *,
    early_stop: bool = True,
    halve_splits: bool = False,
    terminal_cap: int = DEFAULT_TERMINAL_CAP,
) -> DPTable:
    """Fill every layer up to ``min(D, n)``.

    With ``early_stop`` the fill ends at the first layer equal to its
    predecessor; all later layers would repeat it exactly.  ``halve_splits``
    visits each unordered split once instead of twice; values are unchanged.
    """
    table = base_layer(inst, terminal_cap)
    w = table.weights
    n = table.n
    k = len(table.terminals)
    rows = 1 << k
    plan = _split_plan(k, halve_splits)
    terms = list(table.terminals)
    # a terminal root already covers itself: its extend reads S without it
    drop = np.arange(rows)[:, None] & ~(1 << np.arange(k))[None, :]
    for _ in range(2, table.d_eff + 1):
        prev = table.values[-1]
        val = _extend(w, prev)
        val[:, terms] = val[drop, terms]
        table.ops += rows * n * n
        for owners, first, second, starts in plan:
            best = np.minimum.reduceat(val[first] + val[second], starts, axis=0)
            np.minimum(val[owners], best, out=best)
            val[owners] = best
            table.ops += len(first) * n
        table.values.append(val)
        if early_stop and np.array_equal(val, prev):
            break
    return table


def reconstruct(table: DPTable, S: int, u: int, d: int) -> SteinerTree:
    """Rebuild a tree achieving ``f(S, u, d)`` by following backpointers.

    Split halves may share vertices; the union is cut back to a tree by
    keeping, for every vertex, a parent on a shortest path from ``u``.
    """
    d = min(d, table.stored_layers, table.d_eff)
    edges: list[tuple[int, int]] = []
    stack = [(S, u, d)]
    while stack:
        s, x, depth = stack.pop()
        if s == 0:
            continue
        c = table.choice(s, x, depth)
        if isinstance(c, BaseStar):
            edges.extend((x, v) for v in table.members(s) if v != x)
        elif isinstance(c, Extend):
            if c.v != x:
                edges.append((x, c.v))
            stack.append((table.without(s, x), c.v, depth - 1))
        else:
            stack.append((c.sprime, x, depth))
            stack.append((s ^ c.sprime, x, depth))
    claimed = sum(int(table.weights[a, b]) for a, b in edges)
    expected = table.value(S, u, d)
    if claimed != expected:
        raise InternalInconsistency(f"backpointers sum to {claimed}, table holds {expected}")

    out: dict[int, list[int]] = {}
    for a, b in edges:
        out.setdefault(a, []).append(b)
    parent = {u: None}
    queue = deque([u])
    while queue:
        a = queue.popleft()
        for b in sorted(set(out.get(a, ()))):
            if b not in parent:
                parent[b] = a
                queue.append(b)
    keep = set(table.members(S)) | {u}
    children: dict[int, int] = {}
    for b, a in parent.items():
        if a is not None:
            children[a] = children.get(a, 0) + 1
    leaves = [v for v in parent if v not in keep and not children.get(v)]
    while leaves:
        v = leaves.pop()
        a = parent.pop(v)
        children[a] -= 1
        if a not in keep and not children[a]:
            leaves.append(a)
    tree = SteinerTree(frozenset(parent), tuple((a, b) for b, a in parent.items() if a is not None), u)
    weight = sum(int(table.weights[a, b]) for a, b in tree.edges)
    if weight != expected or rooted_depth(tree) > d:
        raise InternalInconsistency(f"pruned tree weighs {weight} at depth {rooted_depth(tree)}, table holds {expected}")
    return tree


def solve_ddcst(
    inst: ProblemInstance,
    *,
    early_stop: bool = True,
    terminal_cap: int = DEFAULT_TERMINAL_CAP,
) -> SolveOutcome:
    if not inst.directed or not isinstance(inst.constraint, Diameter):
        raise ValueError("solve_ddcst takes a directed instance with a Diameter constraint")
    relaxed = relax(inst)
    table = fill(relaxed.instance, early_stop=early_stop, terminal_cap=terminal_cap)
    d = table.d_eff
    x = table.value(table.full, inst.root, d)
    if not interpret(x, relaxed.big_m).is_optimal:
        return SolveOutcome.fail()
    tree = reconstruct(table, table.full, inst.root, d)
    outcome = lift_relaxed(SolveOutcome.optimal(x, tree), relaxed, inst)
    if not check_solution(inst, tree) or tree_weight(tree, inst.graph) != x:
        raise InternalInconsistency("reconstructed tree fails the instance it was built for")
    return outcome


def recurrence_violations(table: DPTable) -> list[tuple[str, int, int, int]]:
    """Every ``(branch, S, u, d)`` with ``d >= 2`` where ``f(S, u, d)`` exceeds a candidate of that branch."""
    bad = []
    for d in range(2, table.stored_layers + 1):
        layer = table.values[d - 1]
        for S in range(1, table.full + 1):
            for u in range(table.n):
                f = layer[S, u]
                if (table.extend_candidates(S, u, d) < f).any():
                    bad.append(("extend", S, u, d))
                if any(cost < f for _, cost in table.split_candidates(S, u, d)):
                    bad.append(("split", S, u, d))
    return bad
