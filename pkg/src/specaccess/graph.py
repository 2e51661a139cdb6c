"""Directed interference graphs: construction, validation, classification.

Users are 1-indexed. A directed edge (i, j) means user i's transmitter can
degrade user j's reception; an undirected link is stored as both (i, j) and
(j, i). The structural classes recognised here (DAG, directed tree/forest,
undirected, bipartite variants, complete) are exactly the ones that carry
pure-equilibrium guarantees in the game module.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Edge = tuple[int, int]


@dataclass(frozen=True)
class UserPlacement:
    """Transmitter/receiver coordinates (meters) and interference range of one user."""

    tx: tuple[float, float]
    rx: tuple[float, float]
    interference_range: float

    def __post_init__(self) -> None:
        coords = (*self.tx, *self.rx, self.interference_range)
        if not all(math.isfinite(float(c)) for c in coords):
            raise ValueError("placement coordinates and range must be finite")
        if self.interference_range <= 0:
            raise ValueError("interference range must be positive")


@dataclass(frozen=True)
class InterferenceGraph:
    """Immutable directed interference graph on users 1..n_users."""

    n_users: int
    edges: frozenset[Edge]
    _in: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)
    _out: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n_users < 1:
            raise ValueError("graph needs at least one user")
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        ins: list[set[int]] = [set() for _ in range(self.n_users + 1)]
        outs: list[set[int]] = [set() for _ in range(self.n_users + 1)]
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-edge ({i},{j}) not allowed")
            if not (1 <= i <= self.n_users and 1 <= j <= self.n_users):
                raise ValueError(f"edge ({i},{j}) out of range 1..{self.n_users}")
            ins[j].add(i)
            outs[i].add(j)
        object.__setattr__(self, "_in", tuple(frozenset(s) for s in ins))
        object.__setattr__(self, "_out", tuple(frozenset(s) for s in outs))

    @classmethod
    def from_edges(cls, n_users: int, edges: Iterable[Sequence[int]]) -> "InterferenceGraph":
        return cls(n_users=n_users, edges=frozenset((int(i), int(j)) for i, j in edges))

    @classmethod
    def undirected(cls, n_users: int, links: Iterable[Sequence[int]]) -> "InterferenceGraph":
        """Build a graph where every listed link interferes both ways."""
        es: set[Edge] = set()
        for i, j in links:
            es.add((int(i), int(j)))
            es.add((int(j), int(i)))
        return cls(n_users=n_users, edges=frozenset(es))

    def in_neighbors(self, n: int) -> frozenset[int]:
        """Users that can cause interference to user n."""
        self._check_index(n)
        return self._in[n]

    def out_neighbors(self, n: int) -> frozenset[int]:
        self._check_index(n)
        return self._out[n]

    def _check_index(self, n: int) -> None:
        if not (1 <= n <= self.n_users):
            raise ValueError(f"user index {n} out of range 1..{self.n_users}")

    @property
    def is_undirected(self) -> bool:
        return all((j, i) in self.edges for i, j in self.edges)

    def skeleton(self) -> frozenset[frozenset[int]]:
        """Undirected link set obtained by ignoring edge directions."""
        return frozenset(frozenset(e) for e in self.edges)

    @property
    def max_in_degree(self) -> int:
        return max(len(self._in[n]) for n in range(1, self.n_users + 1))


def graph_from_locations(placements: Sequence[UserPlacement]) -> InterferenceGraph:
    """Derive the interference edge set from Tx/Rx geometry.

    Edge (i, j) is present iff the distance from user i's transmitter to user
    j's receiver is within i's interference range. Self-edges are excluded by
    construction.
    """
    if len(placements) < 1:
        raise ValueError("need at least one placement")
    n = len(placements)
    edges: set[Edge] = set()
    for i, pi in enumerate(placements, start=1):
        for j, pj in enumerate(placements, start=1):
            if i == j:
                continue
            d = math.dist(pi.tx, pj.rx)
            if d <= pi.interference_range:
                edges.add((i, j))
    return InterferenceGraph(n_users=n, edges=frozenset(edges))


@dataclass(frozen=True)
class GraphClassification:
    """Full set of structural classes a graph satisfies, with witnesses."""

    directed_acyclic: bool
    topological_order: tuple[int, ...] | None
    directed_tree: bool
    directed_forest: bool
    undirected: bool
    complete_undirected: bool
    complete_bipartite: bool
    regular_bipartite: bool
    bipartition: tuple[tuple[int, ...], tuple[int, ...]] | None
    regular_degree: int | None
    general_directed: bool

    @property
    def classes(self) -> frozenset[str]:
        names = []
        for flag, name in (
            (self.directed_acyclic, "directed_acyclic"),
            (self.directed_tree, "directed_tree"),
            (self.directed_forest, "directed_forest"),
            (self.undirected, "undirected"),
            (self.complete_undirected, "complete_undirected"),
            (self.complete_bipartite, "complete_bipartite"),
            (self.regular_bipartite, "regular_bipartite"),
            (self.general_directed, "general_directed"),
        ):
            if flag:
                names.append(name)
        return frozenset(names)


def _topological_order(g: InterferenceGraph) -> tuple[int, ...] | None:
    """Kahn's algorithm; ties broken by ascending node index. None if cyclic."""
    indeg = {n: len(g.in_neighbors(n)) for n in range(1, g.n_users + 1)}
    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in g.out_neighbors(n):
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != g.n_users:
        return None
    return tuple(order)


def _skeleton_components(g: InterferenceGraph) -> list[set[int]]:
    seen: set[int] = set()
    comps: list[set[int]] = []
    adj = {n: set(g.in_neighbors(n)) | set(g.out_neighbors(n)) for n in range(1, g.n_users + 1)}
    for start in range(1, g.n_users + 1):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        comps.append(comp)
    return comps


def _two_coloring(g: InterferenceGraph) -> dict[int, int] | None:
    """Proper 2-coloring of the skeleton, or None if an odd cycle exists."""
    adj = {n: set(g.in_neighbors(n)) | set(g.out_neighbors(n)) for n in range(1, g.n_users + 1)}
    color: dict[int, int] = {}
    for start in range(1, g.n_users + 1):
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            for v in sorted(adj[u]):
                if v not in color:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    return None
    return color


def classify(g: InterferenceGraph) -> GraphClassification:
    """Report every structural class the graph satisfies.

    Bipartite completeness/regularity is only assessed on fully undirected
    graphs; any graph with at least one one-way edge is tagged
    ``general_directed`` (possibly alongside DAG/tree flags).
    """
    topo = _topological_order(g)
    undirected = g.is_undirected
    skeleton = g.skeleton()
    comps = _skeleton_components(g)
    n_skel_edges = len(skeleton)
    is_forest = n_skel_edges == g.n_users - len(comps)
    is_tree = is_forest and len(comps) == 1

    complete_undirected = False
    complete_bipartite = False
    regular_bipartite = False
    bipartition: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    regular_degree: int | None = None

    if undirected:
        wanted = g.n_users * (g.n_users - 1) // 2
        complete_undirected = n_skel_edges == wanted
        color = _two_coloring(g)
        if color is not None and n_skel_edges > 0:
            v1 = tuple(sorted(n for n, c in color.items() if c == 0))
            v2 = tuple(sorted(n for n, c in color.items() if c == 1))
            if v1 and v2:
                complete_bipartite = all(
                    frozenset((a, b)) in skeleton for a in v1 for b in v2
                )
                degrees = {len(g.in_neighbors(n)) for n in range(1, g.n_users + 1)}
                if len(degrees) == 1:
                    d = degrees.pop()
                    if d >= 1:
                        regular_bipartite = True
                        regular_degree = d
                if complete_bipartite or regular_bipartite:
                    bipartition = (v1, v2)

    return GraphClassification(
        directed_acyclic=topo is not None,
        topological_order=topo,
        directed_tree=is_tree,
        directed_forest=is_forest,
        undirected=undirected,
        complete_undirected=complete_undirected,
        complete_bipartite=complete_bipartite,
        regular_bipartite=regular_bipartite,
        bipartition=bipartition,
        regular_degree=regular_degree,
        general_directed=not undirected,
    )
