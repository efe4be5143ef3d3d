"""Exhaustive reference solvers for small instances.

Every vertex set containing the terminals (and the root, when directed) is
tried, and every spanning tree of the finite edges on that set is checked
against the instance with :func:`cstree.core.check_solution`.  Nothing
here is clever on purpose.
"""
from __future__ import annotations

import dataclasses
import itertools
import time
from collections import deque
from typing import Iterator

from .core import (
    ProblemInstance,
    SolveOutcome,
    SteinerTree,
    check_solution,
    tree_weight,
)
from .reduce import ScstReduction


class BudgetExceeded(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class EnumerationBudget:
    max_vertices: int = 8
    max_trees: int = 5_000_000
    seconds: float | None = None


def spanning_trees(vertices: list[int], edges: list[tuple[int, int]]) -> Iterator[list[tuple[int, int]]]:
    """Yield every spanning tree of ``(vertices, edges)`` by include/exclude recursion."""
    need = len(vertices) - 1
    if need == 0:
        yield []
        return
    index = {v: i for i, v in enumerate(vertices)}
    m = len(edges)

    def connectable(chosen: list[int], start: int) -> bool:
        adj: dict[int, list[int]] = {v: [] for v in vertices}
        for i in itertools.chain(chosen, range(start, m)):
            a, b = edges[i]
            adj[a].append(b)
            adj[b].append(a)
        seen = {vertices[0]}
        queue = deque(seen)
        while queue:
            for w in adj[queue.popleft()]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(vertices)

    def rec(i: int, chosen: list[int], comp: list[int]) -> Iterator[list[tuple[int, int]]]:
        if len(chosen) == need:
            yield [edges[j] for j in chosen]
            return
        if len(chosen) + (m - i) < need:
            return
        a, b = edges[i]
        ca, cb = comp[index[a]], comp[index[b]]
        if ca != cb:
            merged = [ca if c == cb else c for c in comp]
            chosen.append(i)
            yield from rec(i + 1, chosen, merged)
            chosen.pop()
        if connectable(chosen, i + 1):
            yield from rec(i + 1, chosen, comp)

    if connectable([], 0):
        yield from rec(0, [], list(range(len(vertices))))


def _orient(edges: list[tuple[int, int]], root: int) -> list[tuple[int, int]]:
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    out, seen, queue = [], {root}, deque([root])
    while queue:
        a = queue.popleft()
        for b in adj.get(a, ()):
            if b not in seen:
                seen.add(b)
                out.append((a, b))
                queue.append(b)
    return out


class _Meter:
    def __init__(self, budget: EnumerationBudget):
        self.budget = budget
        self.count = 0
        self.start = time.monotonic()

    def tick(self) -> None:
        self.count += 1
        if self.count > self.budget.max_trees:
            raise BudgetExceeded(f"more than {self.budget.max_trees} candidate trees")
        if self.budget.seconds is not None and self.count % 512 == 0:
            if time.monotonic() - self.start > self.budget.seconds:
                raise BudgetExceeded(f"enumeration exceeded {self.budget.seconds}s")


def _vertex_sets(n: int, required: set[int], pool: range) -> Iterator[list[int]]:
    optional = [v for v in pool if v not in required]
    for r in range(len(optional) + 1):
        for extra in itertools.combinations(optional, r):
            yield sorted(required | set(extra))


def enumerate_candidate_trees(inst: ProblemInstance, budget: EnumerationBudget = EnumerationBudget()) -> Iterator[SteinerTree]:
    """Every subtree of the finite-edge graph covering the terminals (and root)."""
    if inst.n > budget.max_vertices:
        raise BudgetExceeded(f"n={inst.n} exceeds max_vertices={budget.max_vertices}")
    g = inst.graph
    required = set(inst.terminals) | ({inst.root} if inst.directed else set())
    meter = _Meter(budget)
    for verts in _vertex_sets(inst.n, required, range(inst.n)):
        edges = [
            (a, b)
            for a, b in itertools.combinations(verts, 2)
            if g.has_edge(a, b) or (inst.directed and g.has_edge(b, a))
        ]
        for tree_edges in spanning_trees(verts, edges):
            meter.tick()
            if inst.directed:
                yield SteinerTree(frozenset(verts), _orient(tree_edges, inst.root), inst.root)
            else:
                yield SteinerTree(frozenset(verts), tree_edges)


def _better(weight: int, edges: tuple, best: tuple | None) -> bool:
    return best is None or (weight, edges) < best[:2]


def brute_solve(inst: ProblemInstance, budget: EnumerationBudget = EnumerationBudget()) -> SolveOutcome:
    """Cheapest feasible candidate; ties go to the lexicographically smallest edge list."""
    best = None
    for tree in enumerate_candidate_trees(inst, budget):
        if not check_solution(inst, tree):
            continue
        w = tree_weight(tree, inst.graph)
        if _better(w, tree.edges, best):
            best = (w, tree.edges, tree)
    return SolveOutcome.fail() if best is None else SolveOutcome.optimal(best[0], best[2])


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def pruned_mcst_solve(
    inst: ProblemInstance,
    red: ScstReduction,
    budget: EnumerationBudget = EnumerationBudget(),
) -> SolveOutcome:
    """Brute force on a reduced degree instance, with the added terminals kept as leaves.

    Trees are enumerated on the original vertices only; the added terminals
    are interchangeable, so only how many hang off each non-terminal is
    varied.  Edges among added terminals or to terminals are missing in the
    reduced graph, so no feasible tree is lost except those routing through
    an added terminal.
    """
    original = red.original
    n0 = original.n
    if n0 > budget.max_vertices:
        raise BudgetExceeded(f"original n={n0} exceeds max_vertices={budget.max_vertices}")
    g = inst.graph
    eta = list(red.eta_ids)
    bound = inst.constraint.bound
    terms = set(original.terminals)
    meter = _Meter(budget)
    best = None
    for verts in _vertex_sets(n0, terms, range(n0)):
        plain = [v for v in verts if v not in terms]
        if eta and not plain:
            continue
        edges = [(a, b) for a, b in itertools.combinations(verts, 2) if g.has_edge(a, b)]
        for tree_edges in spanning_trees(verts, edges):
            weight = sum(g(a, b) for a, b in tree_edges)
            if best is not None and weight > best[0]:
                continue
            deg = dict.fromkeys(verts, 0)
            for a, b in tree_edges:
                deg[a] += 1
                deg[b] += 1
            for counts in _compositions(len(eta), len(plain)) if plain else [()]:
                meter.tick()
                total = dict(deg)
                for v, c in zip(plain, counts):
                    total[v] += c
                if any(2 <= k < bound for k in total.values()):
                    continue
                pool = iter(eta)
                full = list(tree_edges)
                for v, c in zip(plain, counts):
                    full.extend((v, next(pool)) for _ in range(c))
                tree = SteinerTree(frozenset(verts) | set(eta), full)
                if _better(weight, tree.edges, best):
                    best = (weight, tree.edges, tree)
    if best is None:
        return SolveOutcome.fail()
    assert check_solution(inst, best[2])
    return SolveOutcome.optimal(best[0], best[2])
