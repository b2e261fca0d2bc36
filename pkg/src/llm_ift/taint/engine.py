"""Net-level taint propagation over an elaborated design.

Signals are elaborated per instance path (``top``, ``top.u_tsc`` ...). Taint
flows along intra-module dependency edges, across instance port connections
according to port direction, and through black-box instances from every
connected net to every net the parent does not drive as an input. The result
is the least fixpoint, computed per tag by breadth-first search.
"""
from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from typing import Optional

from .. import kernels
from ..errors import UnknownSeed
from ..rtl import ast as A
from ..rtl.deps import extract_dependencies
from ..rtl.unit import SourceUnit


@dataclass(frozen=True)
class AssetSeed:
    module: str
    signal: str
    label: str = "asset"

    @classmethod
    def parse(cls, text: str) -> "AssetSeed":
        """Parse ``module:signal[:label]``."""
        parts = text.split(":")
        if len(parts) not in (2, 3) or not all(parts):
            raise ValueError(f"asset must be module:signal[:label], got {text!r}")
        return cls(parts[0], parts[1], parts[2] if len(parts) == 3 else "asset")


@dataclass(frozen=True)
class Hop:
    src: tuple  # (path, signal)
    dst: tuple
    kind: str  # explicit, implicit, port, blackbox
    origin: str = ""

    @property
    def internal(self) -> bool:
        return self.kind != "port"


@dataclass
class Elaboration:
    """Flattened signal graph for a unit."""

    unit: SourceUnit
    paths: dict  # instance path -> module name ('?name' for black boxes)
    nodes: list  # [(path, signal)]
    index: dict  # (path, signal) -> node id
    hops: list  # [Hop], edge id -> hop
    indptr: array
    indices: array
    edge_ids: list  # CSR position -> hop index

    def module_of(self, path: str) -> str:
        return self.paths[path]


def _actual_targets(expr) -> list:
    try:
        written, _ = A.lvalue_parts(expr)
        return written
    except TypeError:
        return A.expr_signals(expr)


def elaborate(unit: SourceUnit, include_clocks: bool = False) -> Elaboration:
    paths: dict = {}
    nodes: list = []
    index: dict = {}
    raw_edges: list = []
    dep_cache: dict = {}

    def visit(path: str, mod: A.ModuleDecl):
        paths[path] = mod.name
        for s in mod.signal_names:
            index[(path, s)] = len(nodes)
            nodes.append((path, s))
        for inst in mod.instances:
            child_path = f"{path}.{inst.instance_name}"
            if inst.module_name in unit:
                visit(child_path, unit.module(inst.module_name))
            else:
                paths[child_path] = "?" + inst.module_name

    roots = unit.roots()
    if unit.top is not None and unit.top not in roots:
        roots = [unit.top] + roots
    for r in roots:
        visit(r, unit.module(r))

    for path, mname in paths.items():
        if mname.startswith("?"):
            continue
        mod = unit.module(mname)
        if mname not in dep_cache:
            dep_cache[mname] = extract_dependencies(mod, include_clocks)
        for e in dep_cache[mname]:
            raw_edges.append(Hop((path, e.from_signal), (path, e.to_signal), e.kind, e.origin or ""))
        declared = set(mod.signal_names)
        inputs = {p.name for p in mod.ports if p.direction == "input"}
        for inst in mod.instances:
            child_path = f"{path}.{inst.instance_name}"
            if inst.module_name in unit:
                child = unit.module(inst.module_name)
                for c in inst.connections:
                    if c.formal is None or c.actual is None:
                        continue
                    port = child.port(c.formal)
                    if port is None:
                        continue
                    origin = f"{inst.instance_name}.{c.formal}"
                    if port.direction in ("input", "inout"):
                        for s in A.expr_signals(c.actual):
                            if s in declared:
                                raw_edges.append(Hop((path, s), (child_path, c.formal), "port", origin))
                    if port.direction in ("output", "inout"):
                        for s in _actual_targets(c.actual):
                            if s in declared:
                                raw_edges.append(Hop((child_path, c.formal), (path, s), "port", origin))
            else:
                sigs = []
                for c in inst.connections:
                    if c.actual is not None:
                        sigs.extend(s for s in A.expr_signals(c.actual) if s in declared)
                sigs = list(dict.fromkeys(sigs))
                sinks = [s for s in sigs if s not in inputs]
                origin = f"{inst.instance_name} ({inst.module_name}, black box)"
                for s in sigs:
                    for d in sinks:
                        if s != d:
                            raw_edges.append(Hop((path, s), (path, d), "blackbox", origin))

    # CSR by source node, stable in creation order
    n = len(nodes)
    buckets = [[] for _ in range(n)]
    for hi, h in enumerate(raw_edges):
        buckets[index[h.src]].append(hi)
    indptr = array("q", [0]) * (n + 1)
    indices = array("q")
    edge_ids = []
    for u in range(n):
        for hi in buckets[u]:
            indices.append(index[raw_edges[hi].dst])
            edge_ids.append(hi)
        indptr[u + 1] = len(indices)
    return Elaboration(unit, paths, nodes, index, raw_edges, indptr, indices, edge_ids)


@dataclass
class TaintState:
    """Result of propagation.

    ``tags`` maps ``(path, signal)`` to the sorted tuple of asset tags it
    carries; ``provenance`` maps ``((path, signal), tag)`` to the list of hops
    from a seed to that signal.
    """

    elaboration: Optional[Elaboration]
    seeds: tuple
    tags: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def unit(self) -> SourceUnit:
        return self.elaboration.unit

    def is_tainted(self, path: str, signal: str) -> bool:
        return (path, signal) in self.tags

    def tainted_signals(self, module: str) -> list:
        """Signals of ``module`` tainted in any of its instances, declaration order."""
        hit = set()
        for (path, sig) in self.tags:
            if self.elaboration.paths.get(path) == module:
                hit.add(sig)
        return [s for s in self.unit.module(module).signal_names if s in hit]

    def instances_of(self, module: str) -> list:
        return [p for p, m in self.elaboration.paths.items() if m == module]

    def chain(self, node: tuple, tag: str) -> list:
        return self.provenance.get((node, tag), [])

    def by_path(self) -> dict:
        out: dict = {}
        for (path, sig), tags in self.tags.items():
            out.setdefault(path, {})[sig] = list(tags)
        return out

    def to_json(self, provenance: bool = False) -> dict:
        doc = {"seeds": [{"module": s.module, "signal": s.signal, "label": s.label} for s in self.seeds],
               "tainted": self.by_path()}
        if provenance:
            chains = []
            for (node, tag), hops in self.provenance.items():
                chain = [f"{node[0]}.{node[1]}"] if not hops else [f"{hops[0].src[0]}.{hops[0].src[1]}"]
                chain += [f"{h.dst[0]}.{h.dst[1]}" for h in hops]
                chains.append({"signal": f"{node[0]}.{node[1]}", "tag": tag, "chain": chain})
            doc["provenance"] = chains
        return doc

    def __eq__(self, other):
        if not isinstance(other, TaintState):
            return NotImplemented
        return self.tags == other.tags and self.provenance == other.provenance


def resolve_seed(unit: SourceUnit, seed: AssetSeed) -> str:
    """Return the declared signal name for ``seed`` (exact, else unique case-insensitive)."""
    if seed.module not in unit:
        raise UnknownSeed(f"unknown module '{seed.module}' in asset {seed.module}:{seed.signal}")
    mod = unit.module(seed.module)
    names = mod.signal_names
    if seed.signal in names:
        return seed.signal
    folded = [n for n in names if n.lower() == seed.signal.lower()]
    if len(folded) == 1:
        return folded[0]
    raise UnknownSeed(f"module '{seed.module}' has no signal '{seed.signal}'")


def propagate(unit: SourceUnit, g=None, seeds=(), initial: Optional[TaintState] = None,
              include_clocks: bool = False, elaboration: Optional[Elaboration] = None) -> TaintState:
    """Least-fixpoint taint propagation from ``seeds``.

    ``g`` is accepted for interface symmetry; the elaboration walks the unit's
    instance tree directly. Passing a previous result as ``initial`` continues
    from it (a fixpoint is returned unchanged).
    """
    elab = elaboration or (initial.elaboration if initial is not None and initial.elaboration else None)
    if elab is None or elab.unit is not unit:
        elab = elaborate(unit, include_clocks)
    seeds = tuple(seeds)
    by_tag: dict = {}
    for s in seeds:
        sig = resolve_seed(unit, s)
        paths = [p for p, m in elab.paths.items() if m == s.module]
        for p in paths:
            by_tag.setdefault(s.label, []).append(elab.index[(p, sig)])
    prior_chain: dict = {}
    if initial is not None:
        seeds = tuple(dict.fromkeys(initial.seeds + seeds))
        for node, tags in initial.tags.items():
            for t in tags:
                by_tag.setdefault(t, []).append(elab.index[node])
                prior_chain[(node, t)] = initial.provenance.get((node, t), [])

    state = TaintState(elab, seeds)
    node_tags: dict = {}
    for tag in sorted(by_tag):
        roots = list(dict.fromkeys(by_tag[tag]))
        via = kernels.propagate_tags(elab.indptr, elab.indices, array("q", roots), len(elab.nodes))
        chains: dict = {}

        def fill(v):
            # walk back to a node with a known chain, then replay forwards
            stack = []
            while v not in chains and via[v] >= 0:
                stack.append(v)
                v = elab.index[elab.hops[elab.edge_ids[via[v]]].src]
            if v not in chains:
                chains[v] = list(prior_chain.get((elab.nodes[v], tag), []))
            while stack:
                u = stack.pop()
                hop = elab.hops[elab.edge_ids[via[u]]]
                chains[u] = chains[elab.index[hop.src]] + [hop]

        for v in range(len(elab.nodes)):
            if via[v] != -1:
                node = elab.nodes[v]
                node_tags.setdefault(v, []).append(tag)
                fill(v)
                state.provenance[(node, tag)] = chains[v]
    for v in sorted(node_tags):
        state.tags[elab.nodes[v]] = tuple(sorted(node_tags[v]))
    # provenance in node order, then tag order
    state.provenance = {
        (elab.nodes[v], t): state.provenance[(elab.nodes[v], t)]
        for v in sorted(node_tags) for t in sorted(node_tags[v])
    }
    return state
