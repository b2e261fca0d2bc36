"""Syntax tree for the supported Verilog subset.

Nodes are frozen dataclasses. Source locations and verbatim text are
excluded from equality so that structurally identical modules compare
equal regardless of formatting.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Loc:
    line: int
    col: int


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: int
    width: Optional[int] = None  # None for unsized literals
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Index:
    """Bit select ``base[index]``."""

    base: str
    index: "Expr"


@dataclass(frozen=True)
class Slice:
    """Part select ``base[msb:lsb]`` or indexed ``base[start +: width]``."""

    base: str
    msb: "Expr"
    lsb: "Expr"
    mode: str = ":"  # ":", "+:", "-:"


@dataclass(frozen=True)
class Concat:
    parts: tuple


@dataclass(frozen=True)
class Repeat:
    count: "Expr"
    parts: tuple


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Ternary:
    cond: "Expr"
    then: "Expr"
    other: "Expr"


Expr = Union[Number, Ident, Index, Slice, Concat, Repeat, Unary, Binary, Ternary]


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    """Procedural assignment; ``blocking`` distinguishes ``=`` from ``<=``."""

    target: Expr
    value: Expr
    blocking: bool
    loc: Optional[Loc] = field(default=None, compare=False)


@dataclass(frozen=True)
class Block:
    stmts: tuple
    label: Optional[str] = None


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    other: Optional["Stmt"] = None


@dataclass(frozen=True)
class CaseItem:
    labels: tuple  # empty tuple means ``default``
    body: "Stmt"


@dataclass(frozen=True)
class Case:
    kind: str  # case, casez, casex
    subject: Expr
    items: tuple


@dataclass(frozen=True)
class Nop:
    pass


Stmt = Union[Assign, Block, If, Case, Nop]


# -- module items ------------------------------------------------------------

@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # input, output, inout
    width: int = 1
    lsb: int = 0


@dataclass(frozen=True)
class Net:
    name: str
    width: int = 1
    kind: str = "wire"  # wire or reg
    lsb: int = 0
    depth: int = 0  # number of words for memories, 0 for plain vectors


@dataclass(frozen=True)
class AssignStmt:
    """Continuous ``assign`` (also produced for net declaration assignments)."""

    target: Expr
    value: Expr
    loc: Optional[Loc] = field(default=None, compare=False)


@dataclass(frozen=True)
class Event:
    edge: Optional[str]  # posedge, negedge or None (level)
    signal: str


@dataclass(frozen=True)
class ProcBlock:
    """``always`` block. ``events`` is empty for ``@*``."""

    events: tuple
    body: Stmt
    star: bool = False
    loc: Optional[Loc] = field(default=None, compare=False)

    @property
    def clocked(self) -> bool:
        return any(ev.edge for ev in self.events)


@dataclass(frozen=True)
class Connection:
    formal: Optional[str]
    actual: Optional[Expr]
    position: Optional[int] = None  # set only for unresolved positional connections


@dataclass(frozen=True)
class Instance:
    instance_name: str
    module_name: str
    connections: tuple
    params: tuple = ()  # ((name or None, Expr), ...) overrides, kept verbatim
    loc: Optional[Loc] = field(default=None, compare=False)

    @property
    def positional(self) -> bool:
        return any(c.formal is None for c in self.connections)


@dataclass(frozen=True)
class ModuleDecl:
    name: str
    ports: tuple
    nets: tuple
    assigns: tuple
    always_blocks: tuple
    instances: tuple
    params: tuple = ()  # ((name, value), ...) after constant folding
    source_text: str = field(default="", compare=False)
    path: str = field(default="<string>", compare=False)
    line: int = field(default=0, compare=False)

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def net(self, name: str) -> Optional[Net]:
        for n in self.nets:
            if n.name == name:
                return n
        return None

    @property
    def port_names(self) -> list:
        return [p.name for p in self.ports]

    @property
    def signal_names(self) -> list:
        return [p.name for p in self.ports] + [n.name for n in self.nets]

    def width_of(self, name: str) -> int:
        p = self.port(name)
        if p is not None:
            return p.width
        n = self.net(name)
        if n is not None:
            return n.width
        raise KeyError(name)

    def lsb_of(self, name: str) -> int:
        p = self.port(name)
        if p is not None:
            return p.lsb
        n = self.net(name)
        if n is not None:
            return n.lsb
        raise KeyError(name)

    @property
    def param_map(self) -> dict:
        return dict(self.params)

    def inputs(self) -> list:
        return [p for p in self.ports if p.direction == "input"]

    def outputs(self) -> list:
        return [p for p in self.ports if p.direction == "output"]


def expr_signals(expr) -> list:
    """Identifiers referenced by ``expr``, in first-occurrence order."""
    out: list = []
    _collect(expr, out)
    seen = set()
    uniq = []
    for name in out:
        if name not in seen:
            seen.add(name)
            uniq.append(name)
    return uniq


def _collect(e, out):
    if e is None or isinstance(e, Number):
        return
    if isinstance(e, Ident):
        out.append(e.name)
    elif isinstance(e, Index):
        out.append(e.base)
        _collect(e.index, out)
    elif isinstance(e, Slice):
        out.append(e.base)
        _collect(e.msb, out)
        _collect(e.lsb, out)
    elif isinstance(e, Concat):
        for p in e.parts:
            _collect(p, out)
    elif isinstance(e, Repeat):
        _collect(e.count, out)
        for p in e.parts:
            _collect(p, out)
    elif isinstance(e, Unary):
        _collect(e.operand, out)
    elif isinstance(e, Binary):
        _collect(e.left, out)
        _collect(e.right, out)
    elif isinstance(e, Ternary):
        _collect(e.cond, out)
        _collect(e.then, out)
        _collect(e.other, out)
    else:
        raise TypeError(f"not an expression: {e!r}")


def lvalue_parts(target) -> tuple:
    """Split an assignment target into (written signals, index signals)."""
    written: list = []
    index: list = []

    def walk(t):
        if isinstance(t, Ident):
            written.append(t.name)
        elif isinstance(t, Index):
            written.append(t.base)
            index.extend(expr_signals(t.index))
        elif isinstance(t, Slice):
            written.append(t.base)
            index.extend(expr_signals(t.msb))
            index.extend(expr_signals(t.lsb))
        elif isinstance(t, Concat):
            for p in t.parts:
                walk(p)
        else:
            raise TypeError(f"not an lvalue: {t!r}")

    walk(target)
    return written, index
