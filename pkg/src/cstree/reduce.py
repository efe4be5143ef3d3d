"""Instance rewriters between the constrained problems, with solution lifting.

* undirected diameter -> rooted depth: add a root joined to every terminal
  by an edge of weight ``max_weight * |T|`` and allow one extra level;
* size -> minimum internal degree: add ``(zeta - |T|) * 2 * zeta`` new
  terminals hanging off the non-terminals by zero-weight edges and demand
  internal degree ``2 * zeta``.
"""
from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .core import (
    ABSENT,
    Diameter,
    MinDegree,
    ProblemInstance,
    Size,
    SolveOutcome,
    Status,
    SteinerTree,
    WeightMatrix,
    check_solution,
    violations,
)
from .dp import solve_ddcst
from .relax import relax

log = logging.getLogger(__name__)


class RootDegreeViolation(RuntimeError):
    """The rooted optimum used the added root more than once."""


class TrivialInstance(ValueError):
    pass


class NoInternalNode(ValueError):
    pass


class Disconnected(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class DcstReduction:
    reduced: ProblemInstance
    offset: int
    new_root: int
    original: ProblemInstance

    def metadata(self) -> dict:
        return {"offset": self.offset, "new_root": self.new_root}


@dataclasses.dataclass(frozen=True)
class ScstReduction:
    reduced: ProblemInstance
    eta_ids: tuple[int, ...]
    alpha: int
    beta: int
    original: ProblemInstance

    @property
    def zeta(self) -> int:
        return self.original.constraint.bound

    def metadata(self) -> dict:
        return {"eta_ids": list(self.eta_ids), "alpha": self.alpha, "beta": self.beta}


def dcst_to_ddcst(inst: ProblemInstance) -> DcstReduction:
    if inst.directed or not isinstance(inst.constraint, Diameter):
        raise ValueError("expected an undirected instance with a Diameter constraint")
    w = inst.graph.array
    if (w == ABSENT).any():
        raise ValueError("missing edges: relax the instance before reducing")
    n = inst.n
    k = len(inst.terminals)
    offset = int(w.max()) * k
    out = np.full((n + 1, n + 1), ABSENT, dtype=np.int64)
    np.fill_diagonal(out, 0)
    out[:n, :n] = w
    out[n, list(inst.terminals)] = offset
    reduced = ProblemInstance(
        WeightMatrix(out),
        inst.terminals,
        Diameter(inst.constraint.bound + 1),
        directed=True,
        root=n,
    )
    return DcstReduction(reduced, offset, n, inst)


def lift_dcst(x: SolveOutcome, red: DcstReduction) -> SolveOutcome:
    if not x.is_optimal:
        return x
    weight = x.weight - red.offset
    if x.tree is None:
        return SolveOutcome.optimal(weight)
    hanging = [b for a, b in x.tree.edges if a == red.new_root]
    if len(hanging) != 1:
        raise RootDegreeViolation(f"added root has degree {len(hanging)} in the rooted optimum")
    verts = x.tree.vertices - {red.new_root}
    edges = [e for e in x.tree.edges if red.new_root not in e]
    return SolveOutcome.optimal(weight, SteinerTree(verts, edges))


def solve_dcst(inst: ProblemInstance, **fill_options) -> SolveOutcome:
    """Relax, reduce to the rooted problem, solve it exactly, and lift back.

    The lifted tree is re-checked against the original diameter bound.  A
    tree that breaks it comes back as ``Status.DISCREPANCY`` carrying both
    the value and the offending tree instead of being passed off as optimal.
    """
    relaxed = relax(inst)
    red = dcst_to_ddcst(relaxed.instance)
    lifted = lift_dcst(solve_ddcst(red.reduced, **fill_options), red)
    if not lifted.is_optimal or lifted.weight >= relaxed.big_m:
        return SolveOutcome.fail()
    tree = lifted.tree
    if any(not inst.graph.has_edge(a, b) for a, b in tree.edges):
        return SolveOutcome(Status.DISCREPANCY, lifted.weight, tree, "lifted tree uses a relaxed edge")
    bad = violations(inst, tree)
    if bad:
        return SolveOutcome(Status.DISCREPANCY, lifted.weight, tree, ",".join(bad))
    return lifted


def scst_to_mcst(inst: ProblemInstance) -> ScstReduction:
    if inst.directed or not isinstance(inst.constraint, Size):
        raise ValueError("expected an undirected instance with a Size constraint")
    k = len(inst.terminals)
    if k <= 2:
        raise TrivialInstance("the size-to-degree reduction needs at least 3 terminals")
    zeta = inst.constraint.bound
    alpha, beta = zeta - k, 2 * zeta
    n = inst.n
    eta = tuple(range(n, n + alpha * beta))
    total = n + len(eta)
    out = np.full((total, total), ABSENT, dtype=np.int64)
    np.fill_diagonal(out, 0)
    out[:n, :n] = inst.graph.array
    plain = [v for v in range(n) if v not in set(inst.terminals)]
    if eta and plain:
        out[np.ix_(plain, eta)] = 0
        out[np.ix_(eta, plain)] = 0
    reduced = ProblemInstance(WeightMatrix(out), inst.terminals + eta, MinDegree(2 * zeta))
    return ScstReduction(reduced, eta, alpha, beta, inst)


def forward_witness(h: SteinerTree, red: ScstReduction) -> SteinerTree:
    """Pad a size-feasible tree with the new terminals so every internal node reaches degree ``2 * zeta``."""
    original = red.original
    if not check_solution(original, h):
        raise ValueError("witness does not solve the size-constrained instance")
    if h.leaves() != list(original.terminals) and len(h.vertices) > 1:
        raise ValueError("witness leaves must be exactly the terminals")
    internal = h.internal()
    if red.eta_ids and not internal:
        raise NoInternalNode("no internal node to hang the new terminals on")
    pool = iter(red.eta_ids)
    edges = list(h.edges)
    for u in internal:
        edges.extend((u, next(pool)) for _ in range(red.beta))
    if internal:
        edges.extend((internal[0], eta) for eta in pool)
    return SteinerTree(h.vertices | set(red.eta_ids), edges)


def backward_witness(hp: SteinerTree, red: ScstReduction) -> SteinerTree:
    """Strip the new terminals from a degree-feasible tree.

    The result is expected to fit the size bound; when it does not, the
    finding is logged rather than raised so callers can inspect the tree.
    """
    eta = set(red.eta_ids)
    verts = hp.vertices - eta
    edges = [(a, b) for a, b in hp.edges if a not in eta and b not in eta]
    if not verts or len(edges) != len(verts) - 1:
        raise Disconnected("removing the new terminals splits the tree")
    h = SteinerTree(verts, edges)
    if len(h.vertices) > red.zeta:
        log.warning("backward witness has %d vertices, above the size bound %d", len(h.vertices), red.zeta)
    return h


def backward_size_ok(h: SteinerTree, red: ScstReduction) -> bool:
    return len(h.vertices) <= red.zeta


def leaf_bound_check(tree: SteinerTree, delta: int) -> bool:
    """Leaf-count bound: internal degrees all >= delta implies leaves >= (delta - 2) * internal."""
    deg = tree.degrees()
    internal = [k for k in deg.values() if k >= 2]
    if any(k < delta for k in internal):
        return True
    leaves = sum(1 for k in deg.values() if k == 1)
    return leaves >= (delta - 2) * len(internal)
