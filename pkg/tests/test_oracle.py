import itertools

import pytest
from hypothesis import given, settings, strategies as st

from _util import weight_lists
from cstree import oracle, reduce
from cstree.core import Diameter, MinDegree, ProblemInstance, Size, Status, WeightMatrix, check_solution, tree_weight


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_cayley_counts(n):
    edges = list(itertools.combinations(range(n), 2))
    assert sum(1 for _ in oracle.spanning_trees(list(range(n)), edges)) == max(1, n ** (n - 2))


def test_cycle_and_disconnected():
    cycle = [(i, (i + 1) % 5) for i in range(5)]
    assert sum(1 for _ in oracle.spanning_trees(list(range(5)), cycle)) == 5
    assert list(oracle.spanning_trees([0, 1, 2, 3], [(0, 1), (2, 3)])) == []


def test_triangle():
    g = WeightMatrix([[0, 1, 10], [1, 0, 1], [10, 1, 0]])
    two = oracle.brute_solve(ProblemInstance(g, (0, 1, 2), Diameter(2)))
    assert two.weight == 2 and two.tree.edges == ((0, 1), (1, 2))
    assert oracle.brute_solve(ProblemInstance(g, (0, 1, 2), Diameter(1))).status is Status.FAIL
    assert oracle.brute_solve(ProblemInstance(g, (0, 2), Size(2))).weight == 10
    assert oracle.brute_solve(ProblemInstance(g, (0, 2), Size(3))).weight == 2


def test_directed_respects_orientation():
    g = WeightMatrix([[0, None, 7], [1, 0, None], [None, 2, 0]])
    out = oracle.brute_solve(ProblemInstance(g, (1,), Diameter(2), True, 0))
    assert out.weight == 9 and out.tree.edges == ((0, 2), (2, 1))
    assert oracle.brute_solve(ProblemInstance(g, (1,), Diameter(1), True, 0)).status is Status.FAIL


def test_budgets():
    n = 7
    g = WeightMatrix([[0 if i == j else 1 for j in range(n)] for i in range(n)])
    inst = ProblemInstance(g, (0, 6), MinDegree(2))
    with pytest.raises(oracle.BudgetExceeded):
        oracle.brute_solve(inst, oracle.EnumerationBudget(max_trees=50))
    with pytest.raises(oracle.BudgetExceeded):
        oracle.brute_solve(inst, oracle.EnumerationBudget(max_vertices=6))
    with pytest.raises(oracle.BudgetExceeded):
        oracle.brute_solve(inst, oracle.EnumerationBudget(max_trees=10**9, seconds=0.0))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5).flatmap(lambda n: st.tuples(st.just(n), weight_lists(n, False))), st.data())
def test_result_is_feasible_and_no_candidate_is_cheaper(nw, data):
    n, w = nw
    terms = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
    c = data.draw(st.sampled_from([Diameter(data.draw(st.integers(1, n))), MinDegree(3), Size(max(len(terms), n - 1))]))
    inst = ProblemInstance(WeightMatrix(w), tuple(terms), c)
    out = oracle.brute_solve(inst)
    feasible = [t for t in oracle.enumerate_candidate_trees(inst) if check_solution(inst, t)]
    if not feasible:
        assert out.status is Status.FAIL
    else:
        assert check_solution(inst, out.tree)
        assert out.weight == tree_weight(out.tree, inst.graph) == min(tree_weight(t, inst.graph) for t in feasible)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 5).flatmap(lambda n: st.tuples(st.just(n), weight_lists(n, False))))
def test_pruned_search_matches_full_search_without_added_terminals(nw):
    # with size bound |T| no vertices are added, so the reduced instance stays small
    n, w = nw
    inst = ProblemInstance(WeightMatrix(w), (0, 1, 2), Size(3))
    red = reduce.scst_to_mcst(inst)
    assert red.eta_ids == ()
    pruned = oracle.pruned_mcst_solve(red.reduced, red)
    full = oracle.brute_solve(red.reduced)
    assert (pruned.status, pruned.weight) == (full.status, full.weight)


def test_pruned_search_with_added_terminals():
    # star centre 3 can take every added terminal and reach degree 8
    w = [[0, 9, 9, 1], [9, 0, 9, 1], [9, 9, 0, 1], [1, 1, 1, 0]]
    inst = ProblemInstance(WeightMatrix(w), (0, 1, 2), Size(4))
    red = reduce.scst_to_mcst(inst)
    out = oracle.pruned_mcst_solve(red.reduced, red)
    assert out.weight == 3
    assert out.tree.degrees()[3] == 3 + 8
    assert check_solution(red.reduced, out.tree)
