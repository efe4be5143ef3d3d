"""Instances, trees, and the constraint validators every solver is judged by.

Vertices are dense integers ``0..n-1``.  Weights are exact non-negative
integers held in an ``int64`` matrix; a missing edge is stored as
:data:`ABSENT` (``-1``) and read back as ``None``.
"""
from __future__ import annotations

import dataclasses
import enum
from collections import deque
from typing import Iterable, Sequence, Union

import numpy as np

ABSENT = -1
MAX_WEIGHT = 2**63 - 1


class InvariantViolation(ValueError):
    """An instance or tree broke one of its structural rules."""


class AbsentEdge(ValueError):
    pass


class NotRooted(ValueError):
    pass


class WeightMatrix:
    """Immutable ``n x n`` matrix of non-negative integer weights.

    Accepts nested lists (``None`` marks a missing edge) or an integer
    array (``ABSENT`` marks a missing edge).  The diagonal must be zero.
    """

    __slots__ = ("_w",)

    def __init__(self, weights):
        if isinstance(weights, WeightMatrix):
            arr = weights._w
        elif isinstance(weights, np.ndarray):
            arr = np.array(weights, dtype=np.int64)
        else:
            rows = [[ABSENT if x is None else x for x in row] for row in weights]
            for row in rows:
                for x in row:
                    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
                        raise InvariantViolation(f"weight {x!r} is not an integer")
                    if x > MAX_WEIGHT:
                        raise InvariantViolation(f"weight {x} exceeds the 64-bit range")
            arr = np.array(rows, dtype=np.int64) if rows else np.zeros((0, 0), np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvariantViolation(f"weight matrix must be square, got shape {arr.shape}")
        if (arr < ABSENT).any():
            raise InvariantViolation("weights must be non-negative")
        if arr.shape[0] and (np.diagonal(arr) != 0).any():
            raise InvariantViolation("diagonal weights must be 0")
        arr = arr.copy()
        arr.setflags(write=False)
        self._w = arr

    @property
    def n(self) -> int:
        return self._w.shape[0]

    @property
    def array(self) -> np.ndarray:
        """Read-only view; missing edges are ``ABSENT``."""
        return self._w

    def __call__(self, i: int, j: int) -> int | None:
        x = int(self._w[i, j])
        return None if x == ABSENT else x

    def has_edge(self, i: int, j: int) -> bool:
        return self._w[i, j] != ABSENT

    def is_symmetric(self) -> bool:
        return bool((self._w == self._w.T).all())

    def is_complete(self) -> bool:
        return not (self._w == ABSENT).any()

    def to_lists(self) -> list[list[int | None]]:
        return [[None if x == ABSENT else int(x) for x in row] for row in self._w]

    def __eq__(self, other):
        return isinstance(other, WeightMatrix) and np.array_equal(self._w, other._w)

    def __hash__(self):
        return hash(self._w.tobytes())

    def __repr__(self):
        return f"WeightMatrix(n={self.n})"


@dataclasses.dataclass(frozen=True)
class Diameter:
    bound: int
    kind = "diameter"


@dataclasses.dataclass(frozen=True)
class MinDegree:
    bound: int
    kind = "min_degree"


@dataclasses.dataclass(frozen=True)
class Size:
    bound: int
    kind = "size"


Constraint = Union[Diameter, MinDegree, Size]
CONSTRAINT_KINDS = {c.kind: c for c in (Diameter, MinDegree, Size)}


@dataclasses.dataclass(frozen=True)
class ProblemInstance:
    graph: WeightMatrix
    terminals: tuple[int, ...]
    constraint: Constraint
    directed: bool = False
    root: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "terminals", tuple(sorted(set(int(t) for t in self.terminals))))
        n = self.graph.n
        if not self.terminals:
            raise InvariantViolation("terminal set must be non-empty")
        if len(self.terminals) != len(set(self.terminals)):
            raise InvariantViolation("duplicate terminals")
        if self.terminals[0] < 0 or self.terminals[-1] >= n:
            raise InvariantViolation("terminal outside 0..n-1")
        if self.directed != (self.root is not None):
            raise InvariantViolation("root must be given exactly when the instance is directed")
        if self.root is not None:
            if not 0 <= self.root < n:
                raise InvariantViolation("root outside 0..n-1")
            if self.root in self.terminals:
                raise InvariantViolation("root must not be a terminal")
        if not self.directed and not self.graph.is_symmetric():
            raise InvariantViolation("undirected instance needs a symmetric weight matrix")
        c = self.constraint
        if not isinstance(c, (Diameter, MinDegree, Size)):
            raise InvariantViolation(f"unknown constraint {c!r}")
        if isinstance(c, (Diameter, MinDegree)) and c.bound < 1:
            raise InvariantViolation(f"{c.kind} bound must be a positive integer")
        if isinstance(c, Size) and c.bound < len(self.terminals):
            raise InvariantViolation("size bound must be at least the number of terminals")

    @property
    def n(self) -> int:
        return self.graph.n

    def replace(self, **changes) -> ProblemInstance:
        return dataclasses.replace(self, **changes)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "directed": self.directed,
            "weights": self.graph.to_lists(),
            "terminals": list(self.terminals),
            "root": self.root,
            "constraint": {"kind": self.constraint.kind, "value": self.constraint.bound},
        }

    @classmethod
    def from_json(cls, obj: dict) -> ProblemInstance:
        """Build from the JSON instance schema; field errors surface as ``KeyError``/``TypeError``."""
        g = WeightMatrix(obj["weights"])
        if g.n != obj["n"]:
            raise InvariantViolation(f"n={obj['n']} but weights are {g.n}x{g.n}")
        kind = obj["constraint"]["kind"]
        if kind not in CONSTRAINT_KINDS:
            raise InvariantViolation(f"constraint kind {kind!r} not one of {sorted(CONSTRAINT_KINDS)}")
        return cls(
            graph=g,
            terminals=tuple(obj["terminals"]),
            constraint=CONSTRAINT_KINDS[kind](int(obj["constraint"]["value"])),
            directed=bool(obj["directed"]),
            root=obj.get("root"),
        )


@dataclasses.dataclass(frozen=True)
class SteinerTree:
    """A tree on ``vertices``.  Rooted trees store edges as ``(parent, child)``."""

    vertices: frozenset
    edges: tuple
    root: int | None = None

    def __post_init__(self):
        verts = frozenset(int(v) for v in self.vertices)
        if self.root is None:
            edges = tuple(sorted((min(a, b), max(a, b)) for a, b in self.edges))
        else:
            edges = tuple(sorted((int(a), int(b)) for a, b in self.edges))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        if not verts:
            raise InvariantViolation("a tree needs at least one vertex")
        for a, b in edges:
            if a not in verts or b not in verts:
                raise InvariantViolation(f"edge ({a}, {b}) leaves the vertex set")
            if a == b:
                raise InvariantViolation("self-loop in tree")
        if len(edges) != len(verts) - 1 or len(set(edges)) != len(edges):
            raise InvariantViolation("edge count must be |vertices| - 1")
        if not _connected(verts, edges):
            raise InvariantViolation("tree edges do not connect the vertex set")
        if self.root is not None:
            if self.root not in verts:
                raise InvariantViolation("root not among tree vertices")
            children = [b for _, b in edges]
            if self.root in children or len(set(children)) != len(children):
                raise InvariantViolation("rooted tree must give each non-root vertex one parent")

    @classmethod
    def single(cls, v: int, root: bool = False) -> SteinerTree:
        return cls(frozenset([v]), (), v if root else None)

    def neighbours(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def degrees(self) -> dict[int, int]:
        deg = dict.fromkeys(self.vertices, 0)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def leaves(self) -> list[int]:
        return sorted(v for v, k in self.degrees().items() if k == 1)

    def internal(self) -> list[int]:
        return sorted(v for v, k in self.degrees().items() if k >= 2)

    def undirected(self) -> SteinerTree:
        return SteinerTree(self.vertices, self.edges) if self.root is not None else self

    def to_json(self) -> dict:
        return {"vertices": sorted(self.vertices), "edges": [list(e) for e in self.edges], "root": self.root}


def _connected(verts: frozenset, edges: Iterable[tuple[int, int]]) -> bool:
    adj: dict[int, list[int]] = {v: [] for v in verts}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(verts)


class Status(enum.Enum):
    OPTIMAL = "optimal"
    FAIL = "fail"
    # a reduction produced a value whose witness breaks the original constraint
    DISCREPANCY = "discrepancy"


@dataclasses.dataclass(frozen=True)
class SolveOutcome:
    status: Status
    weight: int | None = None
    tree: SteinerTree | None = None
    detail: str | None = None

    @classmethod
    def optimal(cls, weight: int, tree: SteinerTree | None = None) -> SolveOutcome:
        return cls(Status.OPTIMAL, int(weight), tree)

    @classmethod
    def fail(cls, detail: str | None = None) -> SolveOutcome:
        return cls(Status.FAIL, detail=detail)

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "weight": self.weight,
            "tree": None if self.tree is None else self.tree.to_json(),
            "detail": self.detail,
        }


def tree_weight(tree: SteinerTree, g: WeightMatrix) -> int:
    total = 0
    for a, b in tree.edges:
        w = g(a, b)
        if w is None:
            raise AbsentEdge(f"edge ({a}, {b}) is absent from the graph")
        total += w
    return total


def _eccentric(adj: dict[int, list[int]], start: int) -> tuple[int, int]:
    dist = {start: 0}
    queue = deque([start])
    far = start
    while queue:
        v = queue.popleft()
        if dist[v] > dist[far]:
            far = v
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return far, dist[far]


def undirected_diameter(tree: SteinerTree) -> int:
    """Longest leaf-to-leaf path, counted in edges; orientation is ignored."""
    adj = tree.neighbours()
    far, _ = _eccentric(adj, min(tree.vertices))
    return _eccentric(adj, far)[1]


def rooted_depth(tree: SteinerTree) -> int:
    if tree.root is None:
        raise NotRooted("depth is defined for rooted trees only")
    return _eccentric(tree.neighbours(), tree.root)[1]


def violations(inst: ProblemInstance, tree: SteinerTree) -> list[str]:
    """Reason codes for every way ``tree`` fails ``inst``; empty means feasible."""
    reasons = []
    if any(not 0 <= v < inst.n for v in tree.vertices):
        return ["vertex-out-of-range"]
    if not set(inst.terminals) <= tree.vertices:
        reasons.append("missing-terminal")
    if any(not inst.graph.has_edge(a, b) for a, b in tree.edges):
        reasons.append("absent-edge")
    if inst.directed:
        if tree.root != inst.root:
            reasons.append("wrong-root")
    elif tree.root is not None:
        reasons.append("unexpected-root")
    c = inst.constraint
    if isinstance(c, Diameter):
        if inst.directed and tree.root is not None:
            if rooted_depth(tree) > c.bound:
                reasons.append("depth")
        elif undirected_diameter(tree) > c.bound:
            reasons.append("diameter")
    elif isinstance(c, MinDegree):
        if any(2 <= k < c.bound for k in tree.degrees().values()):
            reasons.append("min-degree")
    elif len(tree.vertices) > c.bound:
        reasons.append("size")
    return reasons


def check_solution(inst: ProblemInstance, tree: SteinerTree) -> bool:
    return not violations(inst, tree)


def terminal_mask(terminals: Sequence[int], subset: Iterable[int]) -> int:
    """Bitmask of ``subset`` with bit i standing for ``terminals[i]``."""
    pos = {t: i for i, t in enumerate(terminals)}
    mask = 0
    for v in subset:
        mask |= 1 << pos[v]
    return mask
