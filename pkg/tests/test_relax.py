import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _util import weight_lists
from cstree.core import (
    ABSENT,
    MAX_WEIGHT,
    Diameter,
    MinDegree,
    ProblemInstance,
    Size,
    SolveOutcome,
    SteinerTree,
    WeightMatrix,
)
from cstree.relax import (
    InternalInconsistency,
    WeightOverflow,
    finite_weight_sum,
    interpret,
    lift_relaxed,
    relax,
)

PATH = [[0, 1, None], [1, 0, 2], [None, 2, 0]]


def test_big_m_counts_each_undirected_edge_once():
    inst = ProblemInstance(WeightMatrix(PATH), (0, 2), Diameter(2))
    r = relax(inst)
    assert r.big_m == 1 + 1 + 2
    assert r.instance.graph.to_lists() == [[0, 1, 4], [1, 0, 2], [4, 2, 0]]


def test_big_m_counts_ordered_pairs_when_directed():
    g = WeightMatrix([[0, 3, None], [4, 0, 1], [None, None, 0]])
    r = relax(ProblemInstance(g, (2,), Diameter(2), True, 0))
    assert r.big_m == 1 + 3 + 4 + 1
    assert r.instance.graph(0, 2) == 9 and r.instance.graph(2, 1) == 9


def test_all_absent():
    inst = ProblemInstance(WeightMatrix([[0, None], [None, 0]]), (0, 1), Size(2))
    assert relax(inst).big_m == 1


def test_interpret_threshold():
    assert interpret(9, 10) == SolveOutcome.optimal(9)
    assert interpret(10, 10) == SolveOutcome.fail()
    assert interpret(11, 10) == SolveOutcome.fail()


def test_overflow():
    big = MAX_WEIGHT // 2
    inst = ProblemInstance(WeightMatrix([[0, big, big], [big, 0, 1], [big, 1, 0]]), (0,), Size(1))
    with pytest.raises(WeightOverflow):
        relax(inst)


def test_finite_sum_uses_exact_integers_near_the_limit():
    big = MAX_WEIGHT // 3
    g = WeightMatrix([[0, big, big], [big, 0, big], [big, big, 0]])
    assert finite_weight_sum(g, directed=False) == 3 * big


def test_lift_rejects_relaxed_edge_below_threshold():
    inst = ProblemInstance(WeightMatrix(PATH), (0, 2), Diameter(2))
    r = relax(inst)
    bogus = SolveOutcome.optimal(3, SteinerTree(frozenset({0, 2}), [(0, 2)]))
    with pytest.raises(InternalInconsistency):
        lift_relaxed(bogus, r, inst)
    real = SolveOutcome.optimal(3, SteinerTree(frozenset({0, 1, 2}), [(0, 1), (1, 2)]))
    assert lift_relaxed(real, r, inst) == real
    assert lift_relaxed(SolveOutcome.optimal(r.big_m), r, inst) == SolveOutcome.fail()


@st.composite
def instances(draw, directed):
    n = draw(st.integers(2, 6))
    w = draw(weight_lists(n, directed))
    if directed:
        root = draw(st.integers(0, n - 1))
        terms = draw(st.sets(st.integers(0, n - 1).filter(lambda v: v != root), min_size=1))
        return ProblemInstance(WeightMatrix(w), tuple(terms), Diameter(draw(st.integers(1, n))), True, root)
    terms = draw(st.sets(st.integers(0, n - 1), min_size=1))
    c = draw(st.sampled_from([Diameter(n), MinDegree(2), Size(n)]))
    return ProblemInstance(WeightMatrix(w), tuple(terms), c)


@given(st.booleans().flatmap(instances))
def test_relax_idempotent_and_preserves_finite_weights(inst):
    once = relax(inst)
    twice = relax(once.instance)
    assert twice.instance == once.instance
    a, b = inst.graph.array, once.instance.graph.array
    assert once.instance.graph.is_complete()
    assert np.array_equal(a[a != ABSENT], b[a != ABSENT])
    assert (b[a == ABSENT] == once.big_m).all()


@settings(max_examples=50)
@given(instances(False))
def test_any_tree_touching_a_relaxed_edge_reaches_big_m(inst):
    r = relax(inst)
    real_total = finite_weight_sum(inst.graph, False)
    assert real_total < r.big_m
    for a, b in itertools.combinations(range(inst.n), 2):
        if not inst.graph.has_edge(a, b):
            assert r.instance.graph(a, b) >= r.big_m
