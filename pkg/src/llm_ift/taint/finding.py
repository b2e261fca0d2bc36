"""Turn a taint fixpoint into per-module findings and a whole-design report.

This is what the mock backend answers with, so its output has the same shape
as a model reply.
"""
from __future__ import annotations

from collections import deque

from ..graph import DesignGraph, Schedule, topo_sort
from ..llm.model import Flow, ModuleFinding
from ..report import LeakageReport, Transformation
from ..rtl.ast import expr_signals
from ..rtl.deps import assignments, describe
from .engine import TaintState, resolve_seed

_INTEGRITY_WORDS = ("integrity", "tamper", "write", "control")
_TIMING_WORDS = ("timing", "time", "latency", "cycle")


def _internal_adjacency(state: TaintState, path: str) -> dict:
    adj: dict = {}
    for h in state.elaboration.hops:
        if h.internal and h.src[0] == path:
            adj.setdefault(h.src[1], []).append(h.dst[1])
    return adj


def _reach(adj: dict, start: str) -> set:
    seen = {start}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                q.append(v)
    return seen


def finding_from_taint(m: str, state: TaintState, g: DesignGraph = None) -> ModuleFinding:
    """Finding for module ``m`` summarizing every instance of it in ``state``.

    Sources are the tainted inputs plus any seeds inside ``m``; assets are the
    tainted outputs; transformations are the assignments that move taint; flows
    link entry points to exit points within ``m`` (internal) and ``m``'s nets to
    the ports of its child instances (external).
    """
    unit = state.unit
    decl = unit.module(m)
    seeds = [resolve_seed(unit, s) for s in state.seeds if s.module == m]
    tainted = set(state.tainted_signals(m))
    inputs = [p.name for p in decl.ports if p.direction in ("input", "inout")]
    outputs = [p.name for p in decl.ports if p.direction in ("output", "inout")]

    sources = list(dict.fromkeys(seeds + [p for p in inputs if p in tainted]))
    assets = [p for p in outputs if p in tainted]

    transforms = []
    for asg in assignments(decl):
        readers = asg.rhs_signals + asg.index_signals + asg.guard_signals
        if any(t in tainted for t in asg.targets) and any(s in tainted for s in readers):
            transforms.append(describe(asg))
    transforms = list(dict.fromkeys(transforms))

    flows = []
    for path in state.instances_of(m):
        entries = list(sources)
        exits = list(assets)
        external = []
        for inst in decl.instances:
            child_path = f"{path}.{inst.instance_name}"
            child = unit.module(inst.module_name) if inst.module_name in unit else None
            for c in inst.connections:
                if c.formal is None or c.actual is None:
                    continue
                port = child.port(c.formal) if child is not None else None
                nets = [s for s in expr_signals(c.actual) if state.is_tainted(path, s)]
                if port is None:
                    continue
                label = f"{inst.module_name}.{c.formal}"
                if port.direction in ("input", "inout") and state.is_tainted(child_path, c.formal):
                    for s in nets:
                        exits.append(s)
                        external.append(Flow(s, label, "external"))
                if port.direction in ("output", "inout") and state.is_tainted(child_path, c.formal):
                    for s in nets:
                        entries.append(s)
                        external.append(Flow(label, s, "external"))
        adj = _internal_adjacency(state, path)
        exits = list(dict.fromkeys(exits))
        for a in dict.fromkeys(entries):
            if not state.is_tainted(path, a):
                continue
            reach = _reach(adj, a)
            for b in exits:
                if a != b and b in reach:
                    flows.append(Flow(a, b, "internal"))
        flows.extend(external)
    flows = list(dict.fromkeys(flows))
    return ModuleFinding(m, tuple(sources), tuple(assets), tuple(transforms), tuple(flows))


def _leak_type(tag: str) -> str:
    t = tag.lower()
    if any(w in t for w in _INTEGRITY_WORDS):
        return "integrity"
    if any(w in t for w in _TIMING_WORDS):
        return "timing_side_channel"
    return "confidentiality"


def _runs(chain) -> list:
    """Group consecutive internal hops by instance path: ``[(path, [hops])]``."""
    runs = []
    for h in chain:
        if not h.internal:
            continue
        if runs and runs[-1][0] == h.src[0]:
            runs[-1][1].append(h)
        else:
            runs.append((h.src[0], [h]))
    return runs


def _module_name(state: TaintState, path: str) -> str:
    name = state.elaboration.paths[path]
    return name[1:] if name.startswith("?") else name


def report_from_taint(state: TaintState, g: DesignGraph, schedule: Schedule = None) -> LeakageReport:
    """Verdict: leakage iff some asset tag reaches an output port of the top module.

    The path follows the provenance chain to the first tainted top output
    (declaration order), listing the modules where the data is transformed and
    ending at the top module.
    """
    unit = state.unit
    top = unit.top
    schedule = schedule or topo_sort(g)
    decl = unit.module(top)
    leaks = []
    for p in decl.outputs():
        for tag in state.tags.get((top, p.name), ()):
            leaks.append((p.name, tag))
    if not leaks:
        seeds = ", ".join(f"{s.module}.{s.signal}" for s in state.seeds) or "none"
        return LeakageReport(
            False, (), (), "none",
            f"No asset reaches an output port of {top} (assets: {seeds}).", (),
        )

    def path_of(chain):
        runs = _runs(chain)
        mods = []
        for path, _ in runs:
            name = _module_name(state, path)
            if not mods or mods[-1] != name:
                mods.append(name)
        if not mods or mods[-1] != top:
            mods.append(top)
        return runs, mods

    out_sig, tag = leaks[0]
    chain = state.chain((top, out_sig), tag)
    runs, lam = path_of(chain)

    involved = set()
    for sig, t in leaks:
        _, mods = path_of(state.chain((top, sig), t))
        involved.update(mods)
    vulnerable = tuple(n for n in schedule.order if n in involved)

    transforms = []
    pos = 0
    for path, hops in runs:
        name = _module_name(state, path)
        while lam[pos] != name:
            pos += 1
        nxt = lam[pos + 1] if pos + 1 < len(lam) else name
        transforms.append(Transformation(name, hops[0].src[1], hops[-1].dst[1], nxt))

    steps = []
    for path, hops in runs:
        name = _module_name(state, path)
        for h in hops:
            text = f"{h.origin} ({name})" if h.origin else f"{h.src[1]} -> {h.dst[1]} ({name})"
            if text not in steps:
                steps.append(text)
    origin = chain[0].src if chain else (top, out_sig)
    explanation = (
        f"Asset '{tag}' at {origin[0]}.{origin[1]} reaches output '{out_sig}' of {top} "
        f"through {' -> '.join(lam)}."
    )
    if steps:
        explanation += " Steps: " + "; ".join(steps) + "."
    others = [s for s, _ in leaks[1:] if s != out_sig]
    if others:
        explanation += " Other tainted outputs: " + ", ".join(dict.fromkeys(others)) + "."
    return LeakageReport(True, vulnerable, tuple(lam), _leak_type(tag), explanation, tuple(transforms))
