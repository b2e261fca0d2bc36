"""Module dependency DAG, topological schedule and hierarchy levels.

An edge ``(u, v)`` means ``v`` depends on ``u``: a parent depends on every
child it instantiates, so children come first in the schedule.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import CycleError, UnknownModule


@dataclass(frozen=True)
class DesignGraph:
    nodes: tuple  # sorted module names
    edges: frozenset  # {(u, v)}: v depends on u
    adjacency: dict  # u -> sorted successors (dependents)
    reverse_adjacency: dict  # v -> sorted predecessors (what it depends on)

    def __contains__(self, name) -> bool:
        return name in self.adjacency

    def successors(self, m: str) -> list:
        return self.adjacency[m]

    def predecessors(self, m: str) -> list:
        return self.reverse_adjacency[m]

    def connected(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def siblings(self, a: str, b: str) -> bool:
        """True when some module instantiates both ``a`` and ``b``."""
        return bool(set(self.adjacency.get(a, ())) & set(self.adjacency.get(b, ())))


@dataclass(frozen=True)
class Schedule:
    order: tuple
    levels: dict

    def index(self, m: str) -> int:
        return self.order.index(m)


def build_graph(hierarchy: Iterable, modules: Optional[Iterable] = None) -> DesignGraph:
    """Build the DAG from ``(parent, child, instance)`` tuples.

    ``modules`` lists extra node names (modules never instantiated and
    instantiating nothing become isolated nodes). Raises CycleError when the
    instantiation relation is cyclic.
    """
    nodes = set(modules or ())
    edges = set()
    for parent, child, _inst in hierarchy:
        nodes.add(parent)
        nodes.add(child)
        edges.add((child, parent))
    adj = {n: [] for n in nodes}
    radj = {n: [] for n in nodes}
    for u, v in edges:
        adj[u].append(v)
        radj[v].append(u)
    for n in nodes:
        adj[n].sort()
        radj[n].sort()
    cycle = _find_cycle(sorted(nodes), radj)
    if cycle:
        raise CycleError(cycle)
    return DesignGraph(tuple(sorted(nodes)), frozenset(edges), adj, radj)


def _find_cycle(nodes, children) -> list:
    """Return one instantiation cycle as ``[a, b, ..., a]`` or ``[]``."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(nodes, WHITE)
    for root in nodes:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(children[root]))]
        path = [root]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
                continue
            if color[nxt] == GREY:
                return path[path.index(nxt):] + [nxt]
            if color[nxt] == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(children[nxt])))
                path.append(nxt)
    return []


def topo_sort(g: DesignGraph) -> Schedule:
    """Kahn's algorithm with ties broken by ascending (ordinal) module name."""
    indeg = {n: len(g.reverse_adjacency[n]) for n in g.nodes}
    heap = [n for n in g.nodes if indeg[n] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for s in g.adjacency[n]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, s)
    levels = {}
    for n in reversed(order):
        succ = g.adjacency[n]
        levels[n] = 0 if not succ else 1 + max(levels[s] for s in succ)
    return Schedule(tuple(order), {n: levels[n] for n in order})


def _closure(g: DesignGraph, m: str, step) -> list:
    if m not in g:
        raise UnknownModule(m)
    seen = set()
    stack = list(step[m])
    while stack:
        n = stack.pop()
        if n not in seen:
            seen.add(n)
            stack.extend(step[n])
    return seen


def ancestors(g: DesignGraph, m: str, schedule: Optional[Schedule] = None) -> list:
    """Transitive predecessors of ``m`` (modules that influence it) in schedule order."""
    found = _closure(g, m, g.reverse_adjacency)
    order = (schedule or topo_sort(g)).order
    return [n for n in order if n in found]


def dependents(g: DesignGraph, m: str, schedule: Optional[Schedule] = None) -> list:
    """Transitive successors of ``m`` in schedule order."""
    found = _closure(g, m, g.adjacency)
    order = (schedule or topo_sort(g)).order
    return [n for n in order if n in found]


def to_json(g: DesignGraph, schedule: Schedule) -> dict:
    return {
        "nodes": list(g.nodes),
        "edges": [list(e) for e in sorted(g.edges)],
        "order": list(schedule.order),
        "levels": {n: schedule.levels[n] for n in schedule.order},
    }


def to_dot(g: DesignGraph, schedule: Schedule, name: str = "design") -> str:
    lines = [f"digraph {json.dumps(name)} {{", "  rankdir=BT;"]
    for n in schedule.order:
        lines.append(f"  {json.dumps(n)} [label={json.dumps(f'{n} (L={schedule.levels[n]})')}];")
    for u, v in sorted(g.edges):
        lines.append(f"  {json.dumps(u)} -> {json.dumps(v)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def adjacency_summary(g: DesignGraph, schedule: Schedule) -> str:
    """Plain-text adjacency list, one ``module -> dependents`` line per module."""
    lines = []
    for n in schedule.order:
        succ = g.adjacency[n]
        lines.append(f"{n} -> {', '.join(succ) if succ else '(none)'}")
    return "\n".join(lines)
