"""Shared generators for the tests; nothing here calls library solvers."""
from __future__ import annotations

import random
from collections import deque

from hypothesis import strategies as st

from cstree.core import SteinerTree


def random_tree(rng: random.Random, n: int, labels: list[int] | None = None) -> SteinerTree:
    """Uniform-ish random labelled tree: vertex i >= 1 attaches to a random earlier vertex."""
    labels = labels or list(range(n))
    order = labels[:]
    rng.shuffle(order)
    edges = [(order[i], order[rng.randrange(i)]) for i in range(1, n)]
    return SteinerTree(frozenset(order), edges)


def tree_with_min_degree(rng: random.Random, internal: int, delta: int) -> SteinerTree:
    """A tree with ``internal`` hubs, each of degree at least ``delta``; leaves fill the gap."""
    edges = [(i, rng.randrange(i)) for i in range(1, internal)]
    deg = [0] * internal
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    nxt = internal
    for h in range(internal):
        for _ in range(max(delta, 2) - deg[h] + rng.randint(0, 2)):
            edges.append((h, nxt))
            nxt += 1
    return SteinerTree(frozenset(range(nxt)), edges)


def all_pairs_hops(tree: SteinerTree) -> dict[tuple[int, int], int]:
    adj = tree.neighbours()
    out = {}
    for s in tree.vertices:
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        out.update({(s, t): d for t, d in dist.items()})
    return out


@st.composite
def trees(draw, min_n: int = 1, max_n: int = 12) -> SteinerTree:
    n = draw(st.integers(min_n, max_n))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    perm = draw(st.permutations(range(n)))
    return SteinerTree(frozenset(range(n)), [(perm[i], perm[p]) for i, p in enumerate(parents, start=1)])


@st.composite
def weight_lists(draw, n: int, directed: bool, absent: bool = True, hi: int = 9) -> list[list[int | None]]:
    cell = st.one_of(st.none(), st.integers(0, hi)) if absent else st.integers(0, hi)
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j or (not directed and j < i):
                continue
            w[i][j] = draw(cell)
            if not directed:
                w[j][i] = w[i][j]
    return w
