"""Exact Euclidean Steiner trees for a handful of points.

Full topologies are embedded with Melzak's merge: two points hanging off
the same Steiner point are replaced by the apex of an equilateral triangle
on them, the smaller problem is solved, and the Steiner point is recovered
where the segment from that apex to the third neighbour crosses the
triangle's circumcircle.  Optimal trees that are not full are assembled
from full trees on terminal subsets glued at shared terminals.
"""
from __future__ import annotations

import dataclasses
import functools
import itertools
import math
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .core import Diameter, ProblemInstance, WeightMatrix

TOL = 1e-9
ANGLE_TOL = 1e-6
GRID_SCALE = 10**6
DEFAULT_GRID_BUDGET = 5 * 10**11


class Point(NamedTuple):
    x: float
    y: float


class DegenerateSegment(ValueError):
    pass


class CapExceeded(ValueError):
    pass


class GeometryError(RuntimeError):
    """A feasible Melzak branch failed its own length identity."""


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _angle(at: Point, p: Point, q: Point) -> float:
    ux, uy = p[0] - at[0], p[1] - at[1]
    vx, vy = q[0] - at[0], q[1] - at[1]
    return math.atan2(abs(ux * vy - uy * vx), ux * vx + uy * vy)


@dataclasses.dataclass(frozen=True)
class FullTopology:
    """Terminals are ``0..N-1``, Steiner points ``N..2N-3``."""

    n_terminals: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = self.n_terminals
        deg = [0] * (2 * n - 2)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        if len(self.edges) != 2 * n - 3 or deg[:n] != [1] * n or deg[n:] != [3] * (n - 2):
            raise ValueError("not a full topology")

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in range(2 * self.n_terminals - 2)}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def splits(self) -> frozenset:
        """Terminal bipartitions cut by internal edges; equal sets mean equal topologies."""
        adj = self.adjacency()
        n = self.n_terminals
        out = set()
        for a, b in self.edges:
            if a < n or b < n:
                continue
            side, stack = {b}, [b]
            while stack:
                for w in adj[stack.pop()]:
                    if w != a and w not in side:
                        side.add(w)
                        stack.append(w)
            terms = frozenset(v for v in side if v < n)
            out.add(terms if 0 not in terms else frozenset(range(n)) - terms)
        return frozenset(out)


@dataclasses.dataclass(frozen=True)
class GeometricTree:
    """Embedded tree; nodes below ``n_terminals`` are the input points."""

    points: tuple[Point, ...]
    edges: tuple[tuple[int, int], ...]
    n_terminals: int

    @property
    def length(self) -> float:
        return math.fsum(dist(self.points[a], self.points[b]) for a, b in self.edges)

    def junction_errors(self) -> list[float]:
        """Deviation from 120 degrees of every angle at every degree-3 Steiner point."""
        adj: dict[int, list[int]] = {}
        for a, b in self.edges:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        out = []
        for s in range(self.n_terminals, len(self.points)):
            nb = adj.get(s, [])
            if len(nb) == 3:
                for p, q in itertools.combinations(nb, 2):
                    out.append(abs(_angle(self.points[s], self.points[p], self.points[q]) - 2 * math.pi / 3))
        return out


def equilateral_third(a: Point, b: Point) -> tuple[Point, Point]:
    """Both apexes of the equilateral triangles on ``ab``; left of a->b first."""
    if a[0] == b[0] and a[1] == b[1]:
        raise DegenerateSegment("segment endpoints coincide")
    mx, my = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
    h = math.sqrt(3) / 2
    px, py = -(b[1] - a[1]) * h, (b[0] - a[0]) * h
    return Point(mx + px, my + py), Point(mx - px, my - py)


def _on_arc(a: Point, b: Point, d: Point, c: Point, tol: float) -> Point | None:
    """Where segment d->c leaves the circle through a, b, d, if that is on arc ab away from d."""
    ox, oy = (a[0] + b[0] + d[0]) / 3, (a[1] + b[1] + d[1]) / 3
    vx, vy = c[0] - d[0], c[1] - d[1]
    length = math.hypot(vx, vy)
    if length <= tol:
        return None
    t = -2 * ((d[0] - ox) * vx + (d[1] - oy) * vy) / (length * length)
    if t * length <= tol or (1 - t) * length <= tol:
        return None
    p = Point(d[0] + t * vx, d[1] + t * vy)
    ab = dist(a, b)
    away = _cross(a, b, p) / ab
    if away * _cross(a, b, d) >= 0 or abs(away) <= tol:
        return None
    return p


def fermat_point(a: Point, b: Point, c: Point) -> tuple[Point, float]:
    """Point minimising the summed distance to a triangle's corners, and that sum."""
    a, b, c = Point(*a), Point(*b), Point(*c)
    corners = (a, b, c)
    tol = TOL * max(1.0, max(dist(p, q) for p, q in itertools.combinations(corners, 2)))

    def total(p: Point) -> float:
        return dist(p, a) + dist(p, b) + dist(p, c)

    for i, p in enumerate(corners):
        q, r = corners[(i + 1) % 3], corners[(i + 2) % 3]
        if dist(p, q) <= tol or dist(p, r) <= tol:
            return p, total(p)
        if _angle(p, q, r) >= 2 * math.pi / 3:
            return p, total(p)
    side = _cross(a, b, c)
    d = next(x for x in equilateral_third(a, b) if _cross(a, b, x) * side < 0)
    p = _on_arc(a, b, d, c, tol)
    if p is None:
        # only reachable within rounding of the 120 degree boundary
        p = min(corners, key=total)
    return p, total(p)


def count_full_topologies(n: int) -> int:
    if n < 3:
        raise ValueError("full topologies need at least 3 terminals")
    return math.factorial(2 * n - 4) // (2 ** (n - 2) * math.factorial(n - 2))


def enumerate_topologies(n: int, cap: int = 8) -> Iterator[FullTopology]:
    """Each full topology on ``n`` labelled terminals exactly once.

    Terminal ``k`` is added by subdividing one edge of a topology on the
    first ``k`` terminals; every topology arises from exactly one sequence
    of such choices.  Canonical split sets double-check uniqueness.
    """
    if n < 3:
        raise ValueError("full topologies need at least 3 terminals")
    if n > cap:
        raise CapExceeded(f"{n} terminals exceeds the topology cap of {cap}")
    seen = set()

    def grow(edges: list[tuple[int, int]], k: int) -> Iterator[list[tuple[int, int]]]:
        if k == n:
            yield edges
            return
        s = n + k - 2
        for i, (a, b) in enumerate(edges):
            yield from grow(edges[:i] + edges[i + 1:] + [(a, s), (s, b), (k, s)], k + 1)

    for edges in grow([(0, n), (1, n), (2, n)], 3):
        topo = FullTopology(n, tuple(sorted((min(a, b), max(a, b)) for a, b in edges)))
        key = topo.splits()
        if key in seen:
            raise AssertionError("duplicate topology generated")
        seen.add(key)
        yield topo


def _normalise(points: Sequence[Point]) -> tuple[list[Point], tuple[float, float], float]:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    scale = max(max(xs) - min(xs), max(ys) - min(ys)) or 1.0
    origin = (min(xs), min(ys))
    return [Point((p[0] - origin[0]) / scale, (p[1] - origin[1]) / scale) for p in points], origin, scale


def _denormalise(p: Point, origin: tuple[float, float], scale: float) -> Point:
    return Point(origin[0] + p[0] * scale, origin[1] + p[1] * scale)


def _merge(pos: dict[int, Point], adj: dict[int, set[int]], pending: frozenset) -> list[dict[int, Point]]:
    if not pending:
        return [dict(pos)]
    s = min(x for x in pending if sum(y in pos for y in adj[x]) >= 2)
    a, b = sorted(y for y in adj[s] if y in pos)[:2]
    (c,) = adj[s] - {a, b}
    inner_adj = {k: set(v) - {a, b} for k, v in adj.items() if k not in (a, b)}
    found = []
    for d in equilateral_third(pos[a], pos[b]):
        inner_pos = {k: v for k, v in pos.items() if k not in (a, b)}
        inner_pos[s] = d
        for emb in _merge(inner_pos, inner_adj, pending - {s}):
            p = _on_arc(pos[a], pos[b], d, emb[c], TOL)
            if p is None:
                continue
            gap = dist(pos[a], p) + dist(pos[b], p) + dist(p, emb[c]) - dist(d, emb[c])
            if abs(gap) > 1e-7:
                raise GeometryError(f"merged length off by {gap:.3g}")
            emb = dict(emb)
            emb.update({s: p, a: pos[a], b: pos[b]})
            found.append(emb)
    return found


def melzak_length(points: Sequence[Point], topo: FullTopology) -> GeometricTree | None:
    """Shortest embedding of ``topo`` over both apex choices at every merge; ``None`` if none embeds."""
    n = topo.n_terminals
    if len(points) != n:
        raise ValueError("topology and point count differ")
    unit, origin, scale = _normalise(points)
    embeddings = _merge({i: unit[i] for i in range(n)}, topo.adjacency(), frozenset(range(n, 2 * n - 2)))
    best = None
    for emb in embeddings:
        tree = GeometricTree(tuple(emb[i] for i in range(2 * n - 2)), topo.edges, n)
        if any(e > ANGLE_TOL for e in tree.junction_errors()):
            continue
        if best is None or tree.length < best.length:
            best = tree
    if best is None:
        return None
    pts = tuple(Point(*points[i]) for i in range(n)) + tuple(
        _denormalise(p, origin, scale) for p in best.points[n:]
    )
    return GeometricTree(pts, best.edges, n)


def mst_length(points: Sequence[Point]) -> float:
    n = len(points)
    inside = {0}
    edge = [dist(points[0], p) for p in points]
    total = 0.0
    while len(inside) < n:
        j = min((i for i in range(n) if i not in inside), key=edge.__getitem__)
        total += edge[j]
        inside.add(j)
        for i in range(n):
            edge[i] = min(edge[i], dist(points[j], points[i]))
    return total


def solve_est(points: Sequence[Point], cap: int = 8) -> GeometricTree:
    """Steiner minimal tree of up to ``cap`` points.

    Full trees are computed for every terminal subset (a bare segment for
    pairs) and the cheapest collection forming a tree over all terminals is
    chosen by dynamic programming over terminal subsets.
    """
    points = [Point(*p) for p in points]
    n = len(points)
    if n < 2:
        raise ValueError("need at least two points")
    if n > cap:
        raise CapExceeded(f"{n} points exceeds the cap of {cap}")
    unit, origin, scale = _normalise(points)

    full: dict[int, GeometricTree] = {}
    for k in range(2, n + 1):
        for subset in itertools.combinations(range(n), k):
            sub_pts = [unit[i] for i in subset]
            if k == 2:
                best = GeometricTree(tuple(sub_pts), ((0, 1),), 2)
            else:
                trees = (melzak_length(sub_pts, t) for t in enumerate_topologies(k, cap))
                best = min((t for t in trees if t is not None), key=lambda t: t.length, default=None)
            if best is not None:
                full[sum(1 << i for i in subset)] = best

    @functools.lru_cache(maxsize=None)
    def span(mask: int) -> tuple[float, tuple[int, ...]]:
        if mask & (mask - 1) == 0:
            return 0.0, ()
        low = mask & -mask
        best = (math.inf, ())
        for comp, tree in full.items():
            if comp & low and comp & ~mask == 0:
                members = [i for i in range(n) if comp >> i & 1]
                cost, parts = hang(tuple(members), mask & ~comp)
                cost += tree.length
                if cost < best[0]:
                    best = (cost, (comp,) + parts)
        return best

    @functools.lru_cache(maxsize=None)
    def hang(anchors: tuple[int, ...], rest: int) -> tuple[float, tuple[int, ...]]:
        if not anchors:
            return (0.0, ()) if rest == 0 else (math.inf, ())
        head = 1 << anchors[0]
        best = (math.inf, ())
        sub = rest
        while True:
            here = span(sub | head)
            there = hang(anchors[1:], rest & ~sub)
            if here[0] + there[0] < best[0]:
                best = (here[0] + there[0], here[1] + there[1])
            if sub == 0:
                return best
            sub = (sub - 1) & rest

    _, comps = span((1 << n) - 1)
    pts = list(points)
    edges = []
    for comp in comps:
        members = [i for i in range(n) if comp >> i & 1]
        tree = full[comp]
        ids = members + list(range(len(pts), len(pts) + len(tree.points) - len(members)))
        pts.extend(_denormalise(p, origin, scale) for p in tree.points[len(members):])
        edges.extend((ids[a], ids[b]) for a, b in tree.edges)
    return GeometricTree(tuple(pts), tuple(edges), n)


def grid_approximate(
    points: Sequence[Point],
    resolution: int,
    budget: float = DEFAULT_GRID_BUDGET,
    with_tree: bool = False,
):
    """Steiner length through a lattice of candidate Steiner points.

    The points are scaled into the unit square, a ``(g+1) x (g+1)`` lattice
    of spacing ``1/g`` is laid over it, and an unconstrained Steiner tree is
    solved exactly on the complete graph with Euclidean weights rounded to
    multiples of ``1e-6``.  Lattices for ``g`` and ``2g`` are nested, so the
    result can only improve as ``g`` doubles (up to that rounding).
    """
    from .reduce import solve_dcst

    if not 1 <= resolution <= 32:
        raise ValueError("resolution must be within 1..32")
    pts = [Point(*p) for p in points]
    unit, origin, scale = _normalise(pts)
    g = resolution
    nodes = [Point(i / g, j / g) for i in range(g + 1) for j in range(g + 1)]
    terminals = []
    for p in unit:
        hit = next((i for i, q in enumerate(nodes) if dist(p, q) <= 1e-12), None)
        if hit is None:
            nodes.append(p)
            hit = len(nodes) - 1
        terminals.append(hit)
    n, k = len(nodes), len(set(terminals))
    if k < len(terminals):
        raise DegenerateSegment("input points must be distinct")
    if 3.0**k * float(n) ** 3 > budget:
        raise CapExceeded(f"3^{k} * {n}^3 exceeds the grid budget {budget:.3g}")
    xy = np.array(nodes)
    w = np.rint(np.hypot(*(xy[:, None, :] - xy[None, :, :]).transpose(2, 0, 1)) * GRID_SCALE).astype(np.int64)
    np.fill_diagonal(w, 0)
    inst = ProblemInstance(WeightMatrix(w), tuple(terminals), Diameter(n))
    outcome = solve_dcst(inst)
    if not outcome.is_optimal:
        raise RuntimeError(f"grid solve returned {outcome.status.value}")
    if not with_tree:
        return outcome.weight / GRID_SCALE * scale
    # inputs first, then the lattice nodes the tree actually uses
    order = list(terminals) + sorted(outcome.tree.vertices - set(terminals))
    ids = {v: i for i, v in enumerate(order)}
    coords = tuple(pts) + tuple(_denormalise(nodes[v], origin, scale) for v in order[len(pts):])
    tree = GeometricTree(coords, tuple((ids[a], ids[b]) for a, b in outcome.tree.edges), len(pts))
    return outcome.weight / GRID_SCALE * scale, tree


def grid_tree(points: Sequence[Point], resolution: int, budget: float = DEFAULT_GRID_BUDGET) -> tuple[float, GeometricTree]:
    """Like :func:`grid_approximate` but also returns the embedded lattice tree."""
    return grid_approximate(points, resolution, budget, with_tree=True)
