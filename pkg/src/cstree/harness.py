"""Random instances, solver-vs-oracle conformance suites, and the DP benchmark.

Every record produced here is a plain dict ready for one line of JSON.
Timing lives only under keys ending in ``_s`` so two runs with the same
seeds differ in nothing else.
"""
from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import random
import time
from typing import Callable, Iterator

import numpy as np

from . import dp, oracle, reduce, relax
from .core import (
    ABSENT,
    CONSTRAINT_KINDS,
    Diameter,
    MinDegree,
    ProblemInstance,
    Size,
    SolveOutcome,
    Status,
    SteinerTree,
    WeightMatrix,
    check_solution,
    tree_weight,
)

AGREE, DISAGREE, BUDGET = "agree", "disagree", "oracle_budget_exceeded"


def gen_random(
    seed: int,
    n: int,
    t_count: int,
    directed: bool = False,
    constraint_kind: str = "diameter",
    value: int | None = None,
    absent_prob: float = 0.2,
    max_weight: int = 9,
) -> ProblemInstance:
    """Deterministic random instance; weights uniform in ``0..max_weight``."""
    if not 1 <= t_count <= n:
        raise ValueError("need 1 <= t_count <= n")
    if directed and t_count == n:
        raise ValueError("a directed instance needs a non-terminal root")
    rng = random.Random(seed)
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n) if directed else range(i + 1, n):
            if i == j:
                continue
            x = None if rng.random() < absent_prob else rng.randint(0, max_weight)
            w[i][j] = x
            if not directed:
                w[j][i] = x
    terminals = tuple(sorted(rng.sample(range(n), t_count)))
    root = rng.choice([v for v in range(n) if v not in terminals]) if directed else None
    if value is None:
        value = {
            "diameter": lambda: rng.randint(1, n),
            "min_degree": lambda: rng.randint(1, 3),
            "size": lambda: rng.randint(t_count, n),
        }[constraint_kind]()
    return ProblemInstance(WeightMatrix(w), terminals, CONSTRAINT_KINDS[constraint_kind](value), directed, root)


def digest(inst: ProblemInstance) -> str:
    return hashlib.sha256(json.dumps(inst.to_json(), sort_keys=True).encode()).hexdigest()[:16]


def _brief(outcome: SolveOutcome) -> dict:
    return {"status": outcome.status.value, "weight": outcome.weight, "detail": outcome.detail}


def _verdict(case: str, inst: ProblemInstance, subject: SolveOutcome, reference: SolveOutcome, **extra) -> dict:
    same = subject.status == reference.status and subject.weight == reference.weight
    record = {
        "case": case,
        "digest": digest(inst),
        "verdict": AGREE if same else DISAGREE,
        "oracle": _brief(reference),
        "subject": _brief(subject),
        "flagged": subject.status is Status.DISCREPANCY,
        **extra,
    }
    if subject.tree is not None:
        record["subject"]["edges"] = [list(e) for e in subject.tree.edges]
    if not same:
        record["witness"] = inst.to_json()
    return record


def _guard(case: str, inst: ProblemInstance, run: Callable[[], dict]) -> dict:
    start = time.perf_counter()
    try:
        record = run()
    except oracle.BudgetExceeded as exc:
        record = {"case": case, "digest": digest(inst), "verdict": BUDGET, "detail": str(exc)}
    record["elapsed_s"] = round(time.perf_counter() - start, 6)
    return record


# --- suites -----------------------------------------------------------------


def ddcst_case(seed: int) -> ProblemInstance:
    rng = random.Random(seed)
    n = rng.randint(2, 6)
    k = rng.randint(1, min(3, n - 1))
    return gen_random(seed, n, k, directed=True, constraint_kind="diameter", value=rng.randint(1, 5))


def run_ddcst(seed: int, budget: oracle.EnumerationBudget) -> dict:
    inst = ddcst_case(seed)
    return _guard(
        f"ddcst/{seed}", inst,
        lambda: _verdict(f"ddcst/{seed}", inst, dp.solve_ddcst(inst), oracle.brute_solve(inst, budget)),
    )


_KINDS = ("ddcst", "dcst", "mcst", "scst")


def relax_case(seed: int) -> tuple[str, ProblemInstance]:
    rng = random.Random(seed)
    kind = _KINDS[seed % 4]
    n = rng.randint(3, 5)
    k = rng.randint(1, min(3, n - 1))
    directed = kind == "ddcst"
    ckind = {"ddcst": "diameter", "dcst": "diameter", "mcst": "min_degree", "scst": "size"}[kind]
    inst = gen_random(seed, n, k, directed=directed, constraint_kind=ckind, absent_prob=0.3)
    w = inst.graph.array
    if not (w == ABSENT).any():
        i, j = rng.sample(range(n), 2)
        arr = np.array(w)
        arr[i, j] = ABSENT
        if not directed:
            arr[j, i] = ABSENT
        inst = inst.replace(graph=WeightMatrix(arr))
    return kind, inst


def relaxed_pipeline(inst: ProblemInstance, budget: oracle.EnumerationBudget) -> SolveOutcome:
    """interpret(solve(relax(inst))): the DP for rooted instances, the oracle otherwise."""
    relaxed = relax.relax(inst)
    if inst.directed:
        inner = dp.solve_ddcst(relaxed.instance)
    else:
        inner = oracle.brute_solve(relaxed.instance, budget)
    return relax.lift_relaxed(inner, relaxed, inst)


def run_relax(seed: int, budget: oracle.EnumerationBudget) -> dict:
    kind, inst = relax_case(seed)
    case = f"relax/{kind}/{seed}"
    return _guard(
        case, inst,
        lambda: _verdict(case, inst, relaxed_pipeline(inst, budget), oracle.brute_solve(inst, budget), kind=kind),
    )


def dcst_case(seed: int) -> ProblemInstance:
    rng = random.Random(seed)
    n = rng.randint(2, 6)
    k = rng.randint(1, min(4, n))
    return gen_random(seed, n, k, constraint_kind="diameter", value=rng.randint(1, 5))


def k3_probe() -> ProblemInstance:
    """Three terminals on a triangle weighted 1, 1, 10 with diameter bound 1."""
    return ProblemInstance(WeightMatrix([[0, 1, 10], [1, 0, 1], [10, 1, 0]]), (0, 1, 2), Diameter(1))


def _dcst_record(case: str, inst: ProblemInstance, budget: oracle.EnumerationBudget) -> dict:
    reference = oracle.brute_solve(inst, budget)
    subject = reduce.solve_dcst(inst)
    sound = (
        not reference.is_optimal
        or (subject.status in (Status.OPTIMAL, Status.DISCREPANCY) and subject.weight <= reference.weight)
    )
    return _verdict(case, inst, subject, reference, forward_sound=sound)


def run_dcst(seed: int, budget: oracle.EnumerationBudget) -> dict:
    inst = dcst_case(seed)
    return _guard(f"dcst/{seed}", inst, lambda: _dcst_record(f"dcst/{seed}", inst, budget))


def dcst_fixtures(budget: oracle.EnumerationBudget) -> list[dict]:
    inst = k3_probe()
    return [_guard("dcst/fixture/k3-d1", inst, lambda: _dcst_record("dcst/fixture/k3-d1", inst, budget))]


def random_witness(seed: int) -> tuple[ProblemInstance, SteinerTree]:
    """A size-constrained instance plus a feasible tree whose leaves are exactly the terminals."""
    rng = random.Random(seed)
    k = rng.randint(3, 5)
    inner = rng.randint(1, 3)
    zeta = k + inner + rng.randint(0, 2)
    n = k + inner + rng.randint(0, 2)
    labels = rng.sample(range(n), k + inner)
    terms, hubs = labels[:k], labels[k:]
    edges = [(hubs[i], hubs[rng.randrange(i)]) for i in range(1, inner)]
    deg = {h: 0 for h in hubs}
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    pending = list(terms)
    rng.shuffle(pending)
    # a hub of internal degree <= 1 needs terminals to stay internal
    for h in hubs:
        need = max(0, 2 - deg[h]) if inner > 1 else 2
        for _ in range(need):
            edges.append((h, pending.pop()))
    for t in pending:
        edges.append((rng.choice(hubs), t))
    w = [[0 if i == j else rng.randint(0, 9) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            w[i][j] = w[j][i]
    inst = ProblemInstance(WeightMatrix(w), tuple(terms), Size(zeta))
    return inst, SteinerTree(frozenset(labels), edges)


def run_scst_witness(seed: int, budget: oracle.EnumerationBudget) -> dict:
    inst, h = random_witness(seed)
    red = reduce.scst_to_mcst(inst)
    start = time.perf_counter()
    hp = reduce.forward_witness(h, red)
    back = reduce.backward_witness(hp, red)
    ok = {
        "weight_preserved": tree_weight(hp, red.reduced.graph) == tree_weight(h, inst.graph),
        "min_degree": check_solution(red.reduced, hp),
        "round_trip": back == h,
    }
    return {
        "case": f"scst-witness/{seed}",
        "digest": digest(inst),
        "verdict": AGREE if all(ok.values()) else DISAGREE,
        "checks": ok,
        **({} if all(ok.values()) else {"witness": inst.to_json(), "tree": h.to_json()}),
        "elapsed_s": round(time.perf_counter() - start, 6),
    }


def scst_e2e_case(seed: int) -> ProblemInstance:
    rng = random.Random(seed)
    n = rng.randint(3, 5)
    return gen_random(seed, n, 3, constraint_kind="size", value=rng.choice([3, 4]))


def run_scst_e2e(seed: int, budget: oracle.EnumerationBudget) -> dict:
    inst = scst_e2e_case(seed)
    case = f"scst-e2e/{seed}"

    def go() -> dict:
        red = reduce.scst_to_mcst(inst)
        reference = oracle.brute_solve(inst, budget)
        subject = oracle.pruned_mcst_solve(red.reduced, red, budget)
        extra = {}
        if reference.is_optimal:
            extra["oracle_internal_terminals"] = sorted(set(reference.tree.internal()) & set(inst.terminals))
        if subject.is_optimal:
            back = reduce.backward_witness(subject.tree, red)
            extra["backward_size_ok"] = reduce.backward_size_ok(back, red)
        return _verdict(case, inst, subject, reference, **extra)

    return _guard(case, inst, go)


def run_recurrence(seed: int, budget: oracle.EnumerationBudget) -> dict:
    rng = random.Random(seed)
    n = rng.randint(3, 7)
    k = rng.randint(1, min(4, n - 1))
    inst = gen_random(seed, n, k, directed=True, constraint_kind="diameter", value=rng.randint(2, n))
    start = time.perf_counter()
    table = dp.fill(relax.relax(inst).instance, early_stop=False)
    bad = dp.recurrence_violations(table)
    return {
        "case": f"recurrence/{seed}",
        "digest": digest(inst),
        "verdict": AGREE if not bad else DISAGREE,
        "cells": table.stored_layers * (table.full + 1) * table.n,
        "violations": [list(v) for v in bad[:20]],
        **({"witness": inst.to_json()} if bad else {}),
        "elapsed_s": round(time.perf_counter() - start, 6),
    }


SUITES: dict[str, Callable[[int, oracle.EnumerationBudget], dict]] = {
    "ddcst": run_ddcst,
    "relax": run_relax,
    "dcst": run_dcst,
    "scst-witness": run_scst_witness,
    "scst-e2e": run_scst_e2e,
    "recurrence": run_recurrence,
}
FIXTURES = {"dcst": dcst_fixtures}


def conformance(
    suite: str,
    seeds: int,
    budget: oracle.EnumerationBudget = oracle.EnumerationBudget(),
    workers: int = 1,
    first_seed: int = 0,
) -> Iterator[dict]:
    """Yield one record per fixture and seed, in seed order."""
    run = SUITES[suite]
    for record in FIXTURES.get(suite, lambda b: [])(budget):
        yield {"suite": suite, **record}
    seed_list = range(first_seed, first_seed + seeds)
    if workers <= 1:
        results = (run(s, budget) for s in seed_list)
        for record in results:
            yield {"suite": suite, **record}
        return
    with concurrent.futures.ProcessPoolExecutor(workers) as pool:
        for record in pool.map(run, seed_list, [budget] * len(seed_list), chunksize=8):
            yield {"suite": suite, **record}


def summarize(records: list[dict]) -> dict:
    counts: dict[str, int] = {}
    for r in records:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    flagged = sum(1 for r in records if r["verdict"] == DISAGREE and r.get("flagged"))
    decided = counts.get(AGREE, 0) + counts.get(DISAGREE, 0)
    return {
        "summary": True,
        "records": len(records),
        "verdicts": counts,
        "agreement_rate": counts.get(AGREE, 0) / decided if decided else None,
        "flagged_disagreements": flagged,
        "silent_disagreements": counts.get(DISAGREE, 0) - flagged,
    }


# --- benchmark --------------------------------------------------------------


def bench_instance(seed: int, n: int, k: int, depth: int) -> ProblemInstance:
    """Complete directed instance with weights 0..9, root 0, terminals 1..k."""
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 10, size=(n, n))
    np.fill_diagonal(w, 0)
    return ProblemInstance(WeightMatrix(w), tuple(range(1, k + 1)), Diameter(depth), True, 0)


def bench(
    n_values: list[int],
    t_range: range,
    depth: int | None = None,
    repeats: int = 3,
    seed: int = 0,
    halve_splits: bool = False,
) -> Iterator[dict]:
    """Time full fills (no early stop) and fit ``log(time) = a + |T| * log(base)`` per n."""
    for n in n_values:
        d = depth or n
        ks, times = [], []
        for k in t_range:
            inst = bench_instance(seed + k, n, k, d)
            best = math.inf
            for _ in range(repeats):
                start = time.perf_counter()
                table = dp.fill(inst, early_stop=False, halve_splits=halve_splits)
                best = min(best, time.perf_counter() - start)
            ks.append(k)
            times.append(best)
            yield {"n": n, "terminals": k, "depth": d, "ops": table.ops, "layers": table.stored_layers, "fill_s": best}
        if len(ks) >= 2:
            slope, intercept = np.polyfit(ks, np.log(times), 1)
            yield {"n": n, "fit": True, "log_slope": float(slope), "base": float(math.exp(slope)),
                   "intercept": float(intercept), "target_log_slope": math.log(3)}


def fit_base(records: list[dict]) -> dict[int, float]:
    return {r["n"]: r["base"] for r in records if r.get("fit")}
