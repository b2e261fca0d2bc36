"""Exhaustive-simulation influence oracle for small combinational modules.

A module is compiled to a stack program (``llm_ift.opcodes``) and evaluated
for every input assignment by ``kernels.influence_scan``. Expressions use
self-determined widths capped at 64 bits; x/z literal bits read as 0.
"""
from __future__ import annotations

from array import array
from dataclasses import dataclass

from .. import kernels
from ..errors import IFTError, OracleScopeExceeded
from ..opcodes import *  # noqa: F401,F403
from ..rtl import ast as A
from ..rtl.parser import const_eval

MAX_INPUT_BITS = 16

_BINOPS = {
    "+": ADD, "-": SUB, "*": MUL, "/": DIV, "%": MOD, "&": AND, "|": OR, "^": XOR,
    "~^": XNOR, "<<": SHL, ">>": SHR, "<<<": SHL, ">>>": SHR, "==": EQ, "!=": NE,
    "===": EQ, "!==": NE, "<": LT, "<=": LE, ">": GT, ">=": GE, "&&": LAND, "||": LOR,
    "**": POW,
}
_BOOL_BINOPS = {"==", "!=", "===", "!==", "<", "<=", ">", ">=", "&&", "||"}
_REDUCTIONS = {"&": RAND, "|": ROR, "^": RXOR, "~&": RNAND, "~|": RNOR, "~^": RXNOR}


@dataclass
class Program:
    ops: array
    args: array
    slots: dict  # signal name -> slot
    n_slots: int
    widths: dict  # signal name -> width


class _Compiler:
    def __init__(self, m: A.ModuleDecl):
        self.m = m
        self.params = m.param_map
        self.slots = {name: i for i, name in enumerate(m.signal_names)}
        self.n_slots = len(self.slots)
        self.widths = {name: m.width_of(name) for name in m.signal_names}
        self.ops: list = []
        self.args: list = []

    def emit(self, op, arg=0):
        self.ops.append(op)
        self.args.append(arg)
        return len(self.ops) - 1

    def temp(self) -> int:
        s = self.n_slots
        self.n_slots += 1
        return s

    def const(self, e) -> int:
        try:
            return const_eval(e, self.params, self.m.path)
        except IFTError:
            return None

    # -- widths ----------------------------------------------------------

    def width(self, e) -> int:
        if isinstance(e, A.Number):
            return min(e.width or 32, 64)
        if isinstance(e, A.Ident):
            if e.name in self.widths:
                return self.widths[e.name]
            return 32
        if isinstance(e, A.Index):
            return 1
        if isinstance(e, A.Slice):
            return self._slice_width(e)
        if isinstance(e, A.Concat):
            return sum(self.width(p) for p in e.parts)
        if isinstance(e, A.Repeat):
            n = self.const(e.count)
            if n is None:
                raise OracleScopeExceeded("non-constant replication count")
            return n * sum(self.width(p) for p in e.parts)
        if isinstance(e, A.Unary):
            return self.width(e.operand) if e.op in ("~", "-", "+") else 1
        if isinstance(e, A.Binary):
            if e.op in _BOOL_BINOPS:
                return 1
            if e.op in ("<<", ">>", "<<<", ">>>", "**"):
                return self.width(e.left)
            return max(self.width(e.left), self.width(e.right))
        if isinstance(e, A.Ternary):
            return max(self.width(e.then), self.width(e.other))
        raise TypeError(e)

    def _slice_width(self, e: A.Slice) -> int:
        if e.mode == ":":
            msb, lsb = self.const(e.msb), self.const(e.lsb)
            if msb is None or lsb is None:
                raise OracleScopeExceeded("non-constant part select")
            return abs(msb - lsb) + 1
        w = self.const(e.lsb)
        if w is None:
            raise OracleScopeExceeded("non-constant indexed part-select width")
        return w

    def _base_lsb(self, name):
        return self.m.lsb_of(name) if name in self.slots else 0

    # -- expressions -----------------------------------------------------

    def expr(self, e):
        w = self.width(e)
        if w > 64:
            raise OracleScopeExceeded(f"expression wider than 64 bits in {self.m.name}")
        if isinstance(e, A.Number):
            self.emit(PUSH, e.value & MASK64)
        elif isinstance(e, A.Ident):
            if e.name in self.slots:
                self.emit(LOAD, self.slots[e.name])
            elif e.name in self.params:
                self.emit(PUSH, self.params[e.name] & MASK64)
            else:
                raise OracleScopeExceeded(f"undeclared identifier '{e.name}'")
        elif isinstance(e, A.Index):
            self.load_base(e.base)
            idx = self.const(e.index)
            if idx is not None:
                lo = idx - self._base_lsb(e.base)
                if 0 <= lo < 64:
                    self.emit(SLICE, (lo << 7) | 1)
                else:
                    self.emit(POP)
                    self.emit(PUSH, 0)
            else:
                self.offset(e.index, e.base)
                self.emit(DSLICE, 1)
        elif isinstance(e, A.Slice):
            self.load_base(e.base)
            width = self._slice_width(e)
            lo = self.slice_lo(e)
            if lo is not None:
                if 0 <= lo < 64:
                    self.emit(SLICE, (lo << 7) | min(width, 64))
                else:
                    self.emit(POP)
                    self.emit(PUSH, 0)
            else:
                self.dyn_lo(e)
                self.emit(DSLICE, min(width, 64))
        elif isinstance(e, (A.Concat, A.Repeat)):
            parts = list(e.parts)
            if isinstance(e, A.Repeat):
                parts = parts * self.const(e.count)
            first = True
            for p in parts:
                pw = self.width(p)
                if not first:
                    self.emit(PUSH, pw)
                    self.emit(SHL)
                self.expr(p)
                self.emit(MASK, pw)
                if not first:
                    self.emit(OR)
                first = False
            if not parts:
                self.emit(PUSH, 0)
        elif isinstance(e, A.Unary):
            self.expr(e.operand)
            ow = self.width(e.operand)
            if e.op == "~":
                self.emit(NOT)
                self.emit(MASK, ow)
            elif e.op == "-":
                self.emit(NEG)
                self.emit(MASK, ow)
            elif e.op == "+":
                pass
            elif e.op == "!":
                self.emit(LNOT)
            else:
                self.emit(_REDUCTIONS[e.op], ow)
        elif isinstance(e, A.Binary):
            self.expr(e.left)
            self.expr(e.right)
            self.emit(_BINOPS[e.op])
            self.emit(MASK, w)
        elif isinstance(e, A.Ternary):
            self.expr(e.cond)
            jz = self.emit(JZ)
            self.expr(e.then)
            jmp = self.emit(JMP)
            self.args[jz] = len(self.ops)
            self.expr(e.other)
            self.args[jmp] = len(self.ops)
        else:
            raise TypeError(e)

    def load_base(self, name):
        if name not in self.slots:
            raise OracleScopeExceeded(f"undeclared identifier '{name}'")
        self.emit(LOAD, self.slots[name])

    def offset(self, idx_expr, base):
        """Push a dynamic bit offset ``idx - lsb(base)``."""
        self.expr(idx_expr)
        lsb = self._base_lsb(base)
        if lsb:
            self.emit(PUSH, lsb)
            self.emit(SUB)

    def slice_lo(self, e: A.Slice):
        lsb = self._base_lsb(e.base)
        if e.mode == ":":
            lo = min(self.const(e.msb), self.const(e.lsb))
            return lo - lsb
        start = self.const(e.msb)
        if start is None:
            return None
        if e.mode == "+:":
            return start - lsb
        return start - self.const(e.lsb) + 1 - lsb

    def dyn_lo(self, e: A.Slice):
        self.offset(e.msb, e.base)
        if e.mode == "-:":
            self.emit(PUSH, self.const(e.lsb) - 1)
            self.emit(SUB)

    # -- statements ------------------------------------------------------

    def store(self, target):
        """Pop the value on the stack into ``target``."""
        if isinstance(target, A.Ident):
            s = self.slots[target.name]
            self.emit(MASK, self.widths[target.name])
            self.emit(STORE, s)
        elif isinstance(target, A.Index):
            s = self.slots[target.base]
            idx = self.const(target.index)
            if idx is not None:
                lo = idx - self._base_lsb(target.base)
                if 0 <= lo < 64:
                    self.emit(STORE_SLICE, (s << 14) | (lo << 7) | 1)
                else:
                    self.emit(POP)
            else:
                self.offset(target.index, target.base)
                self.emit(DSTORE, (s << 7) | 1)
        elif isinstance(target, A.Slice):
            s = self.slots[target.base]
            width = min(self._slice_width(target), 64)
            lo = self.slice_lo(target)
            if lo is not None:
                if 0 <= lo < 64:
                    self.emit(STORE_SLICE, (s << 14) | (lo << 7) | width)
                else:
                    self.emit(POP)
            else:
                self.dyn_lo(target)
                self.emit(DSTORE, (s << 7) | width)
        elif isinstance(target, A.Concat):
            tmp = self.temp()
            self.emit(STORE, tmp)
            lo = 0
            for part in reversed(target.parts):
                pw = self.width(part)
                self.emit(LOAD, tmp)
                if lo < 64:
                    self.emit(SLICE, (lo << 7) | min(pw, 64))
                else:
                    self.emit(POP)
                    self.emit(PUSH, 0)
                self.store(part)
                lo += pw
        else:
            raise TypeError(target)

    def stmt(self, s):
        if isinstance(s, A.Nop) or s is None:
            return
        if isinstance(s, A.Assign):
            self.expr(s.value)
            self.store(s.target)
        elif isinstance(s, A.Block):
            for st in s.stmts:
                self.stmt(st)
        elif isinstance(s, A.If):
            self.expr(s.cond)
            jz = self.emit(JZ)
            self.stmt(s.then)
            if s.other is not None:
                jmp = self.emit(JMP)
                self.args[jz] = len(self.ops)
                self.stmt(s.other)
                self.args[jmp] = len(self.ops)
            else:
                self.args[jz] = len(self.ops)
        elif isinstance(s, A.Case):
            tmp = self.temp()
            self.expr(s.subject)
            self.emit(STORE, tmp)
            ends = []
            default = None
            for item in s.items:
                if not item.labels:
                    default = item
                    continue
                for k, lab in enumerate(item.labels):
                    self.emit(LOAD, tmp)
                    self.expr(lab)
                    self.emit(EQ)
                    if k:
                        self.emit(LOR)
                jz = self.emit(JZ)
                self.stmt(item.body)
                ends.append(self.emit(JMP))
                self.args[jz] = len(self.ops)
            if default is not None:
                self.stmt(default.body)
            for j in ends:
                self.args[j] = len(self.ops)
        else:
            raise TypeError(s)


def _units(m: A.ModuleDecl) -> list:
    """Continuous assigns and combinational blocks as (stmt, reads, writes)."""
    from ..rtl.deps import assignments
    units = []
    for a in m.assigns:
        written, idx = A.lvalue_parts(a.target)
        units.append((("assign", a), set(A.expr_signals(a.value)) | set(idx), set(written)))
    by_block: dict = {}
    for asg in assignments(m):
        if asg.block < 0:
            continue
        reads, writes = by_block.setdefault(asg.block, (set(), set()))
        reads.update(asg.rhs_signals, asg.index_signals, asg.guard_signals)
        writes.update(asg.targets)
    for bi, blk in enumerate(m.always_blocks):
        reads, writes = by_block.get(bi, (set(), set()))
        units.append((("always", blk), reads, writes))
    return units


def check_scope(m: A.ModuleDecl, max_input_bits: int = MAX_INPUT_BITS):
    if m.instances:
        raise OracleScopeExceeded(f"module '{m.name}' instantiates submodules")
    for blk in m.always_blocks:
        if blk.clocked:
            raise OracleScopeExceeded(f"module '{m.name}' has clocked (stateful) logic")
    for n in m.nets:
        if n.depth:
            raise OracleScopeExceeded(f"memory '{n.name}' in module '{m.name}'")
    for name in m.signal_names:
        if m.width_of(name) > 64:
            raise OracleScopeExceeded(f"signal '{name}' wider than 64 bits")
    bits = sum(p.width for p in m.ports if p.direction in ("input", "inout"))
    if bits > max_input_bits:
        raise OracleScopeExceeded(
            f"module '{m.name}' has {bits} input bits (limit {max_input_bits})"
        )


def compile_module(m: A.ModuleDecl) -> Program:
    """Compile the combinational logic of ``m`` into one straight-line pass."""
    for blk in m.always_blocks:
        if blk.clocked:
            raise OracleScopeExceeded(f"module '{m.name}' has clocked (stateful) logic")
    if m.instances:
        raise OracleScopeExceeded(f"module '{m.name}' instantiates submodules")
    units = _units(m)
    # order units so writers precede readers
    n = len(units)
    succ = {i: set() for i in range(n)}
    indeg = [0] * n
    for i, (_, _, wi) in enumerate(units):
        for j, (_, rj, _) in enumerate(units):
            if i != j and wi & rj and j not in succ[i]:
                succ[i].add(j)
                indeg[j] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    order = []
    while ready:
        ready.sort()
        i = ready.pop(0)
        order.append(i)
        for j in sorted(succ[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    if len(order) != n:
        raise OracleScopeExceeded(f"combinational loop in module '{m.name}'")
    c = _Compiler(m)
    for i in order:
        (kind, node), _, _ = units[i]
        if kind == "assign":
            c.expr(node.value)
            c.store(node.target)
        else:
            c.stmt(node.body)
    return Program(array("i", c.ops), array("Q", c.args), c.slots, c.n_slots, c.widths)


def simulate(m: A.ModuleDecl, inputs: dict) -> dict:
    """Evaluate combinational module ``m`` once; returns every signal's value."""
    prog = compile_module(m)
    assignment = {}
    for name, value in inputs.items():
        if m.port(name) is None or m.port(name).direction == "output":
            raise KeyError(f"'{name}' is not an input of {m.name}")
        assignment[prog.slots[name]] = value & ((1 << prog.widths[name]) - 1)
    vals = kernels.evaluate(prog.ops, prog.args, prog.n_slots, assignment)
    return {name: int(vals[s]) for name, s in prog.slots.items()}


def influence_bits(m: A.ModuleDecl, seed_signal: str, max_input_bits: int = MAX_INPUT_BITS,
                   impl=None) -> dict:
    """Per-signal bit masks of the bits whose value depends on ``seed_signal``."""
    check_scope(m, max_input_bits)
    port = m.port(seed_signal)
    if port is None or port.direction == "output":
        raise OracleScopeExceeded(f"seed '{seed_signal}' is not an input of '{m.name}'")
    prog = compile_module(m)
    ins = [p for p in m.ports if p.direction in ("input", "inout")]
    in_slots = array("q", [prog.slots[p.name] for p in ins])
    in_widths = array("q", [p.width for p in ins])
    seed_pos = [p.name for p in ins].index(seed_signal)
    scan = (impl or kernels).influence_scan
    diff = scan(prog.ops, prog.args, prog.n_slots, in_slots, in_widths, seed_pos)
    return {
        name: int(diff[s]) for name, s in prog.slots.items()
        if name != seed_signal and diff[s]
    }


def influence_oracle(m: A.ModuleDecl, seed_signal: str, max_input_bits: int = MAX_INPUT_BITS) -> set:
    """Signals whose value changes for some pair of inputs differing only in the seed."""
    return set(influence_bits(m, seed_signal, max_input_bits))
