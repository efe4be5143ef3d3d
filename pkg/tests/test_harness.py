import json

import pytest

from cstree import harness, oracle
from cstree.core import ABSENT, Diameter, ProblemInstance


def test_gen_is_deterministic():
    a = harness.gen_random(11, 6, 3, directed=True)
    b = harness.gen_random(11, 6, 3, directed=True)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    assert harness.digest(a) == harness.digest(b)
    assert harness.digest(harness.gen_random(12, 6, 3, directed=True)) != harness.digest(a)


@pytest.mark.parametrize("kind", ["diameter", "min_degree", "size"])
def test_gen_shapes(kind):
    for seed in range(40):
        inst = harness.gen_random(seed, 5, 2, constraint_kind=kind)
        w = inst.graph.array
        assert ((w == ABSENT) | ((w >= 0) & (w <= 9))).all()
        assert inst.constraint.kind == kind
        assert inst.graph.is_symmetric()


def test_gen_extremes():
    empty = harness.gen_random(0, 4, 4, absent_prob=1.0)
    assert (empty.graph.array[~(empty.graph.array == 0)] == ABSENT).all()
    assert empty.terminals == (0, 1, 2, 3)
    with pytest.raises(ValueError):
        harness.gen_random(0, 3, 3, directed=True)
    with pytest.raises(ValueError):
        harness.gen_random(0, 3, 4)


def test_witness_suite_records():
    recs = list(harness.conformance("scst-witness", 20))
    assert all(r["verdict"] == harness.AGREE for r in recs)
    assert all(r["checks"]["round_trip"] for r in recs)


def test_disagreements_embed_a_runnable_witness():
    (fixture, *_rest) = harness.conformance("dcst", 1)
    again = ProblemInstance.from_json(fixture["witness"])
    assert again == harness.k3_probe()


def test_budget_miss_is_a_verdict():
    tight = oracle.EnumerationBudget(max_trees=1)
    recs = list(harness.conformance("ddcst", 10, tight))
    assert any(r["verdict"] == harness.BUDGET for r in recs)
    summary = harness.summarize(recs)
    assert summary["verdicts"].get(harness.BUDGET, 0) + summary["verdicts"].get(harness.AGREE, 0) == 10


def test_worker_pool_matches_serial():
    strip = lambda rs: [{k: v for k, v in r.items() if k != "elapsed_s"} for r in rs]
    assert strip(harness.conformance("relax", 12, workers=2)) == strip(harness.conformance("relax", 12))


def test_relax_suite_forces_missing_edges_and_covers_all_kinds():
    kinds = set()
    for seed in range(40):
        kind, inst = harness.relax_case(seed)
        kinds.add(kind)
        assert (inst.graph.array == ABSENT).any()
    assert kinds == {"ddcst", "dcst", "mcst", "scst"}


def test_summary_counts_flagged_separately():
    recs = [
        {"verdict": "agree"},
        {"verdict": "disagree", "flagged": True},
        {"verdict": "disagree", "flagged": False},
    ]
    s = harness.summarize(recs)
    assert s["flagged_disagreements"] == 1 and s["silent_disagreements"] == 1
    assert s["agreement_rate"] == pytest.approx(1 / 3)


def test_bench_fit_record():
    recs = list(harness.bench([5], range(1, 4), repeats=1))
    assert [r["terminals"] for r in recs[:3]] == [1, 2, 3]
    fit = recs[3]
    assert fit["fit"] and fit["base"] > 0
    assert harness.fit_base(recs) == {5: fit["base"]}


def test_bench_instance_shape():
    inst = harness.bench_instance(0, 8, 3, 8)
    assert inst.directed and inst.root == 0 and inst.terminals == (1, 2, 3)
    assert inst.graph.is_complete() and inst.constraint == Diameter(8)
