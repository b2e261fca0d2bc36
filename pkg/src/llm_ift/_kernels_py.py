"""Pure-Python kernels. ``_kernels.pyx`` implements the same functions.

Both kernels operate on flat ``array.array`` buffers so the compiled version
can take typed memoryviews without copies.

``propagate_tags``
    Breadth-first reachability from a seed set over a CSR graph. Returns, per
    node, the index of the edge that first reached it (-2 for seeds, -1 when
    unreached). Edges are visited in CSR order, so the result is deterministic
    and each node's provenance is a shortest chain back to a seed.

``influence_scan``
    Runs a straight-line stack program (see ``opcodes``) for every assignment of
    the input slots and ORs together, per slot, the XOR of its value under each
    seed assignment against its value with the seed at zero. Non-zero result
    bits are exactly the bits whose value depends on the seed input.
"""
from __future__ import annotations

from array import array
from collections import deque

from .opcodes import *  # noqa: F401,F403
from .opcodes import MASK64

IMPLEMENTATION = "python"


def propagate_tags(indptr, indices, seeds, n_nodes):
    via = array("q", [-1]) * n_nodes
    queue = deque()
    for s in seeds:
        if via[s] == -1:
            via[s] = -2
            queue.append(s)
    while queue:
        u = queue.popleft()
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if via[v] == -1:
                via[v] = e
                queue.append(v)
    return via


def _mask(w):
    return MASK64 if w >= 64 else (1 << w) - 1


def run_program(ops, args, slots):
    """Execute one pass of the program over ``slots`` (a mutable list of ints)."""
    stack = []
    push = stack.append
    pop = stack.pop
    pc = 0
    n = len(ops)
    while pc < n:
        op = ops[pc]
        arg = args[pc]
        pc += 1
        if op == PUSH:
            push(arg)
        elif op == LOAD:
            push(slots[arg])
        elif op == STORE:
            slots[arg] = pop()
        elif op == STORE_SLICE:
            w = arg & 127
            lo = (arg >> 7) & 127
            s = arg >> 14
            m = _mask(w) << lo & MASK64
            slots[s] = (slots[s] & ~m & MASK64) | ((pop() << lo) & m)
        elif op == DSTORE:
            w = arg & 127
            s = arg >> 7
            lo = pop()
            v = pop()
            if lo < 64:
                m = _mask(w) << lo & MASK64
                slots[s] = (slots[s] & ~m & MASK64) | ((v << lo) & m)
        elif op == MASK:
            push(pop() & _mask(arg))
        elif op == SLICE:
            w = arg & 127
            lo = arg >> 7
            push((pop() >> lo) & _mask(w))
        elif op == DSLICE:
            lo = pop()
            v = pop()
            push((v >> lo) & _mask(arg) if lo < 64 else 0)
        elif op == JZ:
            if pop() == 0:
                pc = arg
        elif op == JMP:
            pc = arg
        elif op == POP:
            pop()
        elif op >= ADD and op <= POW:
            b = pop()
            a = pop()
            if op == ADD:
                r = (a + b) & MASK64
            elif op == SUB:
                r = (a - b) & MASK64
            elif op == MUL:
                r = (a * b) & MASK64
            elif op == DIV:
                r = a // b if b else 0
            elif op == MOD:
                r = a % b if b else 0
            elif op == AND:
                r = a & b
            elif op == OR:
                r = a | b
            elif op == XOR:
                r = a ^ b
            elif op == XNOR:
                r = ~(a ^ b) & MASK64
            elif op == SHL:
                r = (a << b) & MASK64 if b < 64 else 0
            elif op == SHR:
                r = a >> b if b < 64 else 0
            elif op == EQ:
                r = int(a == b)
            elif op == NE:
                r = int(a != b)
            elif op == LT:
                r = int(a < b)
            elif op == LE:
                r = int(a <= b)
            elif op == GT:
                r = int(a > b)
            elif op == GE:
                r = int(a >= b)
            elif op == LAND:
                r = int(bool(a) and bool(b))
            elif op == LOR:
                r = int(bool(a) or bool(b))
            else:  # POW
                r = 1
                base = a
                e = b
                while e:
                    if e & 1:
                        r = (r * base) & MASK64
                    base = (base * base) & MASK64
                    e >>= 1
            push(r)
        else:
            a = pop()
            if op == NOT:
                r = ~a & MASK64
            elif op == LNOT:
                r = int(a == 0)
            elif op == NEG:
                r = (-a) & MASK64
            elif op == RAND:
                r = int(a & _mask(arg) == _mask(arg))
            elif op == ROR:
                r = int(a != 0)
            elif op == RXOR:
                r = bin(a).count("1") & 1
            elif op == RNAND:
                r = int(a & _mask(arg) != _mask(arg))
            elif op == RNOR:
                r = int(a == 0)
            elif op == RXNOR:
                r = (bin(a).count("1") & 1) ^ 1
            else:
                raise ValueError(f"bad opcode {op}")
            push(r)
    return slots


def influence_scan(ops, args, n_slots, in_slots, in_widths, seed_pos):
    ops = list(ops)
    args = list(args)
    others = [(in_slots[i], in_widths[i]) for i in range(len(in_slots)) if i != seed_pos]
    seed_slot = in_slots[seed_pos]
    seed_w = in_widths[seed_pos]
    other_bits = sum(w for _, w in others)
    diff = [0] * n_slots
    for base in range(1 << other_bits):
        ref = None
        for sv in range(1 << seed_w):
            slots = [0] * n_slots
            rest = base
            for s, w in others:
                slots[s] = rest & _mask(w)
                rest >>= w
            slots[seed_slot] = sv
            run_program(ops, args, slots)
            if ref is None:
                ref = slots
            else:
                for k in range(n_slots):
                    diff[k] |= slots[k] ^ ref[k]
    return array("Q", diff)


def evaluate(ops, args, n_slots, assignment):
    """Run the program once with ``assignment`` (``{slot: value}``); return all slots."""
    slots = [0] * n_slots
    for s, v in assignment.items():
        slots[s] = v
    return run_program(list(ops), list(args), slots)
