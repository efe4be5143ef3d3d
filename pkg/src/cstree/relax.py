"""Replace missing edges by a finite big-M so solvers may assume a complete graph.

Any tree built only from real edges weighs at most the sum of all finite
weights, which is strictly below ``big_m``; a relaxed optimum of ``big_m``
or more therefore means the original instance has no feasible tree.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .core import ABSENT, MAX_WEIGHT, ProblemInstance, SolveOutcome, WeightMatrix


class WeightOverflow(OverflowError):
    """The big-M value does not fit in 64 bits; rescale the instance."""


class InternalInconsistency(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class RelaxedInstance:
    instance: ProblemInstance
    big_m: int


def finite_weight_sum(g: WeightMatrix, directed: bool) -> int:
    """Sum of finite weights over ordered pairs (directed) or unordered pairs."""
    w = g.array if directed else np.triu(g.array)
    vals = w[w != ABSENT]
    if vals.size == 0:
        return 0
    if int(vals.max()) <= MAX_WEIGHT // max(vals.size, 1):
        return int(vals.sum())
    return sum(int(x) for x in vals)


def relax(inst: ProblemInstance) -> RelaxedInstance:
    big_m = 1 + finite_weight_sum(inst.graph, inst.directed)
    if big_m > MAX_WEIGHT:
        raise WeightOverflow(f"big-M {big_m} exceeds the 64-bit weight range")
    w = np.array(inst.graph.array)
    w[w == ABSENT] = big_m
    return RelaxedInstance(inst.replace(graph=WeightMatrix(w)), big_m)


def interpret(x: int, big_m: int) -> SolveOutcome:
    return SolveOutcome.optimal(x) if x < big_m else SolveOutcome.fail()


def lift_relaxed(outcome: SolveOutcome, relaxed: RelaxedInstance, original: ProblemInstance) -> SolveOutcome:
    """Map a solver outcome on ``relaxed`` back to ``original``.

    A tree that survives the threshold must use real edges only; anything
    else means the solver and the threshold disagree.
    """
    if not outcome.is_optimal:
        return outcome
    result = interpret(outcome.weight, relaxed.big_m)
    if not result.is_optimal or outcome.tree is None:
        return result
    for a, b in outcome.tree.edges:
        if not original.graph.has_edge(a, b):
            raise InternalInconsistency(
                f"tree of weight {outcome.weight} < big-M {relaxed.big_m} uses relaxed edge ({a}, {b})"
            )
    return SolveOutcome.optimal(outcome.weight, outcome.tree)
