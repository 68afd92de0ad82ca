"""Directed acyclic graphs with 1-based vertex labels.

Small, dependency-free graph core: validation, topological order,
reachability, ancestor/descendant sets and exhaustive path enumeration.
Everything downstream (structural models, discovery, evaluation) sits on
top of these primitives, so they favour clarity over asymptotic cleverness;
the graphs in play have at most a few dozen vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Dag:
    """Finite DAG on vertices 1..d.

    Parameters
    ----------
    d : int
        Number of vertices, at least 1.
    edges : frozenset of (int, int)
        Directed edges (i, j), 1-based, no self-loops, acyclic.
    """

    d: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        for i, j in edges:
            if not (1 <= i <= self.d and 1 <= j <= self.d):
                raise ValueError(f"edge ({i}, {j}) outside 1..{self.d}")
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
        # Kahn's algorithm; leftovers mean a cycle.
        indeg = {v: 0 for v in range(1, self.d + 1)}
        for _, j in edges:
            indeg[j] += 1
        queue = [v for v in indeg if indeg[v] == 0]
        seen = 0
        while queue:
            v = queue.pop()
            seen += 1
            for a, b in edges:
                if a == v:
                    indeg[b] -= 1
                    if indeg[b] == 0:
                        queue.append(b)
        if seen != self.d:
            raise ValueError("edge set contains a directed cycle")

    def parents(self, j: int) -> list[int]:
        self._check_vertex(j)
        return sorted(i for i, k in self.edges if k == j)

    def children(self, i: int) -> list[int]:
        self._check_vertex(i)
        return sorted(j for k, j in self.edges if k == i)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def _check_vertex(self, v: int):
        if not (1 <= v <= self.d):
            raise ValueError(f"vertex {v} outside 1..{self.d}")


@dataclass(frozen=True)
class Path:
    """Directed path given by its vertex sequence (at least one edge)."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValueError("a path needs at least two vertices")
        if len(set(verts)) != len(verts):
            raise ValueError("path vertices must be distinct")

    @property
    def source(self) -> int:
        return self.vertices[0]

    @property
    def target(self) -> int:
        return self.vertices[-1]

    def edge_list(self) -> list[tuple[int, int]]:
        v = self.vertices
        return [(v[k], v[k + 1]) for k in range(len(v) - 1)]


def topological_order(dag: Dag) -> list[int]:
    """Return the unique label-minimal topological order.

    Among all topological orders, repeatedly emits the smallest-labelled
    vertex whose parents have all been emitted.
    """
    remaining = set(range(1, dag.d + 1))
    indeg = {v: len(dag.parents(v)) for v in remaining}
    order = []
    while remaining:
        ready = sorted(v for v in remaining if indeg[v] == 0)
        if not ready:
            raise ValueError("cycle detected")  # unreachable for a valid Dag
        v = ready[0]
        order.append(v)
        remaining.remove(v)
        for c in dag.children(v):
            indeg[c] -= 1
    return order


def reachability(dag: Dag) -> np.ndarray:
    """0/1 matrix R with R[i-1, j-1] = 1 iff i == j or a path i -> j exists."""
    r = np.eye(dag.d, dtype=int)
    order = topological_order(dag)
    # Process sinks last; push each vertex's reach set onto its parents.
    for v in reversed(order):
        for c in dag.children(v):
            r[v - 1] |= r[c - 1]
    return r


def ancestors(dag: Dag, j: int, proper: bool = False) -> set[int]:
    """Vertices with a path into j. Includes j itself unless ``proper``."""
    dag._check_vertex(j)
    out = {j}
    frontier = [j]
    while frontier:
        v = frontier.pop()
        for p in dag.parents(v):
            if p not in out:
                out.add(p)
                frontier.append(p)
    if proper:
        out.discard(j)
    return out


def descendants(dag: Dag, i: int, proper: bool = False) -> set[int]:
    """Vertices reachable from i. Includes i itself unless ``proper``."""
    dag._check_vertex(i)
    out = {i}
    frontier = [i]
    while frontier:
        v = frontier.pop()
        for c in dag.children(v):
            if c not in out:
                out.add(c)
                frontier.append(c)
    if proper:
        out.discard(i)
    return out


def enumerate_paths(dag: Dag, i: int, j: int) -> list[Path]:
    """All directed paths i -> j, in lexicographic vertex-sequence order.

    Exhaustive by depth-first search; intended for oracles and small fixtures,
    where the path count is manageable.
    """
    dag._check_vertex(i)
    dag._check_vertex(j)
    if i == j:
        return []
    found = []

    def walk(prefix):
        v = prefix[-1]
        if v == j:
            found.append(Path(tuple(prefix)))
            return
        for c in dag.children(v):  # sorted, so output is lexicographic
            if c not in prefix:
                walk(prefix + [c])

    walk([i])
    return found


def relabel(dag: Dag, mapping: dict[int, int]) -> Dag:
    """Apply a vertex relabelling (a bijection of 1..d) to the edge set."""
    if sorted(mapping) != list(range(1, dag.d + 1)) or sorted(
        mapping.values()
    ) != list(range(1, dag.d + 1)):
        raise ValueError("mapping must be a bijection of 1..d")
    return Dag(dag.d, frozenset((mapping[i], mapping[j]) for i, j in dag.edges))
