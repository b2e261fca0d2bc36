"""Intra-module signal dependencies (explicit data flow and implicit control flow)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ast as A


@dataclass(frozen=True)
class DepEdge:
    from_signal: str
    to_signal: str
    kind: str  # explicit | implicit
    # the statement that produced the edge, for human-readable transformations
    origin: Optional[str] = field(default=None, compare=False, hash=False)


@dataclass(frozen=True)
class Assignment:
    """A flattened assignment with the guard expressions dominating it."""

    targets: tuple  # written signals
    index_signals: tuple  # signals used in lvalue selects
    rhs_signals: tuple
    guard_signals: tuple
    target: object
    value: object
    guards: tuple  # guard expressions, outermost first
    blocking: Optional[bool]  # None for continuous assign
    block: int  # index of the always block, -1 for continuous assign
    event_signals: tuple = ()


def _walk(stmt, guards: list, out: list, block: int, events: tuple):
    if isinstance(stmt, A.Nop) or stmt is None:
        return
    if isinstance(stmt, A.Assign):
        written, idx = A.lvalue_parts(stmt.target)
        gsig = []
        for g in guards:
            gsig.extend(A.expr_signals(g))
        out.append(Assignment(
            targets=tuple(dict.fromkeys(written)),
            index_signals=tuple(dict.fromkeys(idx)),
            rhs_signals=tuple(A.expr_signals(stmt.value)),
            guard_signals=tuple(dict.fromkeys(gsig)),
            target=stmt.target,
            value=stmt.value,
            guards=tuple(guards),
            blocking=stmt.blocking,
            block=block,
            event_signals=events,
        ))
    elif isinstance(stmt, A.Block):
        for s in stmt.stmts:
            _walk(s, guards, out, block, events)
    elif isinstance(stmt, A.If):
        # the condition dominates both branches
        _walk(stmt.then, guards + [stmt.cond], out, block, events)
        _walk(stmt.other, guards + [stmt.cond], out, block, events)
    elif isinstance(stmt, A.Case):
        # every label is compared before a later item can be taken, so labels of
        # all items guard every branch; the subject guards all of them too
        all_labels = []
        for item in stmt.items:
            all_labels.extend(item.labels)
        guard = A.Concat((stmt.subject,) + tuple(all_labels)) if all_labels else stmt.subject
        for item in stmt.items:
            _walk(item.body, guards + [guard], out, block, events)
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def assignments(m: A.ModuleDecl) -> list:
    """All assignments of ``m`` (continuous first, then procedural in block order)."""
    out = []
    for a in m.assigns:
        written, idx = A.lvalue_parts(a.target)
        out.append(Assignment(
            targets=tuple(dict.fromkeys(written)),
            index_signals=tuple(dict.fromkeys(idx)),
            rhs_signals=tuple(A.expr_signals(a.value)),
            guard_signals=(),
            target=a.target,
            value=a.value,
            guards=(),
            blocking=None,
            block=-1,
        ))
    for bi, blk in enumerate(m.always_blocks):
        events = tuple(e.signal for e in blk.events)
        _walk(blk.body, [], out, bi, events)
    return out


def describe(asg: Assignment) -> str:
    from .printer import format_expr
    op = "<=" if asg.blocking is False else "="
    text = f"{format_expr(asg.target)} {op} {format_expr(asg.value)}"
    if asg.guards:
        text += " when " + " && ".join(f"({format_expr(g)})" for g in asg.guards)
    return text


def extract_dependencies(m: A.ModuleDecl, include_clocks: bool = False) -> list:
    """Dependency edges of ``m`` in deterministic first-occurrence order.

    Every signal on an assignment's right-hand side (and in its target's index
    expressions) gives an explicit edge to each written signal; every signal in an
    enclosing ``if``/``case`` guard gives an implicit edge. Event-control signals
    (clocks, asynchronous resets) only contribute edges when ``include_clocks``.
    Identifiers that are not declared signals (parameters, undeclared names) are
    skipped.
    """
    declared = set(m.signal_names)
    edges = []
    seen = set()

    def add(src, dst, kind, origin):
        if src not in declared or dst not in declared:
            return
        key = (src, dst, kind)
        if key in seen:
            return
        seen.add(key)
        edges.append(DepEdge(src, dst, kind, origin))

    for asg in assignments(m):
        origin = describe(asg)
        for t in asg.targets:
            for s in asg.rhs_signals:
                add(s, t, "explicit", origin)
            for s in asg.index_signals:
                add(s, t, "explicit", origin)
            for s in asg.guard_signals:
                add(s, t, "implicit", origin)
            if include_clocks:
                for s in asg.event_signals:
                    add(s, t, "implicit", origin)
    return edges
