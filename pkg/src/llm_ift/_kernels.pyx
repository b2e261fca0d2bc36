# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""
from array import array

from libc.stdint cimport int64_t, uint64_t, int32_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy

IMPLEMENTATION = "cython"

cdef enum:
    PUSH = 1
    LOAD = 2
    STORE = 3
    STORE_SLICE = 4
    DSTORE = 5
    MASK = 6
    SLICE = 7
    DSLICE = 8
    JZ = 9
    JMP = 10
    POP = 11
    ADD = 20
    SUB = 21
    MUL = 22
    DIV = 23
    MOD = 24
    AND = 25
    OR = 26
    XOR = 27
    XNOR = 28
    SHL = 29
    SHR = 30
    EQ = 31
    NE = 32
    LT = 33
    LE = 34
    GT = 35
    GE = 36
    LAND = 37
    LOR = 38
    POW = 39
    NOT = 50
    LNOT = 51
    NEG = 52
    RAND = 53
    ROR = 54
    RXOR = 55
    RNAND = 56
    RNOR = 57
    RXNOR = 58


def propagate_tags(const int64_t[:] indptr, const int64_t[:] indices, seeds, Py_ssize_t n_nodes):
    result = array("q", [-1]) * n_nodes
    cdef int64_t[:] via = result
    cdef int64_t *queue = <int64_t *> malloc(max(n_nodes, 1) * sizeof(int64_t))
    cdef Py_ssize_t head = 0, tail = 0
    cdef int64_t u, v, e, s
    if queue == NULL:
        raise MemoryError()
    try:
        for s in seeds:
            if via[s] == -1:
                via[s] = -2
                queue[tail] = s
                tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if via[v] == -1:
                    via[v] = e
                    queue[tail] = v
                    tail += 1
    finally:
        free(queue)
    return result


cdef inline uint64_t _mask(uint64_t w) nogil:
    if w >= 64:
        return 0xFFFFFFFFFFFFFFFFULL
    return (1ULL << w) - 1


cdef inline int _popcount(uint64_t x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef int _run(const int32_t[:] ops, const uint64_t[:] args, uint64_t *slots,
              uint64_t *stack) nogil:
    cdef Py_ssize_t pc = 0, n = ops.shape[0], sp = 0
    cdef int op
    cdef uint64_t arg, a, b, r, m, w, lo, base, ex
    cdef int64_t s
    while pc < n:
        op = ops[pc]
        arg = args[pc]
        pc += 1
        if op == PUSH:
            stack[sp] = arg
            sp += 1
        elif op == LOAD:
            stack[sp] = slots[arg]
            sp += 1
        elif op == STORE:
            sp -= 1
            slots[arg] = stack[sp]
        elif op == STORE_SLICE:
            w = arg & 127
            lo = (arg >> 7) & 127
            s = <int64_t> (arg >> 14)
            m = _mask(w) << lo
            sp -= 1
            slots[s] = (slots[s] & ~m) | ((stack[sp] << lo) & m)
        elif op == DSTORE:
            w = arg & 127
            s = <int64_t> (arg >> 7)
            sp -= 1
            lo = stack[sp]
            sp -= 1
            a = stack[sp]
            if lo < 64:
                m = _mask(w) << lo
                slots[s] = (slots[s] & ~m) | ((a << lo) & m)
        elif op == MASK:
            stack[sp - 1] &= _mask(arg)
        elif op == SLICE:
            w = arg & 127
            lo = arg >> 7
            stack[sp - 1] = (stack[sp - 1] >> lo) & _mask(w)
        elif op == DSLICE:
            sp -= 1
            lo = stack[sp]
            if lo < 64:
                stack[sp - 1] = (stack[sp - 1] >> lo) & _mask(arg)
            else:
                stack[sp - 1] = 0
        elif op == JZ:
            sp -= 1
            if stack[sp] == 0:
                pc = <Py_ssize_t> arg
        elif op == JMP:
            pc = <Py_ssize_t> arg
        elif op == POP:
            sp -= 1
        elif op >= ADD and op <= POW:
            sp -= 1
            b = stack[sp]
            a = stack[sp - 1]
            if op == ADD:
                r = a + b
            elif op == SUB:
                r = a - b
            elif op == MUL:
                r = a * b
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
                r = ~(a ^ b)
            elif op == SHL:
                r = (a << b) if b < 64 else 0
            elif op == SHR:
                r = (a >> b) if b < 64 else 0
            elif op == EQ:
                r = a == b
            elif op == NE:
                r = a != b
            elif op == LT:
                r = a < b
            elif op == LE:
                r = a <= b
            elif op == GT:
                r = a > b
            elif op == GE:
                r = a >= b
            elif op == LAND:
                r = (a != 0) and (b != 0)
            elif op == LOR:
                r = (a != 0) or (b != 0)
            else:
                r = 1
                base = a
                ex = b
                while ex:
                    if ex & 1:
                        r = r * base
                    base = base * base
                    ex >>= 1
            stack[sp - 1] = r
        else:
            a = stack[sp - 1]
            if op == NOT:
                r = ~a
            elif op == LNOT:
                r = a == 0
            elif op == NEG:
                r = 0 - a
            elif op == RAND:
                r = (a & _mask(arg)) == _mask(arg)
            elif op == ROR:
                r = a != 0
            elif op == RXOR:
                r = _popcount(a) & 1
            elif op == RNAND:
                r = (a & _mask(arg)) != _mask(arg)
            elif op == RNOR:
                r = a == 0
            elif op == RXNOR:
                r = (_popcount(a) & 1) ^ 1
            else:
                return -1
            stack[sp - 1] = r
    return 0


def influence_scan(ops, args, Py_ssize_t n_slots, in_slots, in_widths, Py_ssize_t seed_pos):
    cdef const int32_t[:] ops_v = ops
    cdef const uint64_t[:] args_v = args
    cdef Py_ssize_t n_in = len(in_slots)
    cdef Py_ssize_t k, i, j, n_other = 0
    cdef uint64_t other_bits = 0, base, sv, rest
    cdef int64_t oslot[64]
    cdef uint64_t owidth[64]
    cdef int64_t seed_slot = in_slots[seed_pos]
    cdef uint64_t seed_w = in_widths[seed_pos]
    cdef int rc = 0
    if n_in > 64:
        raise ValueError("too many input slots")
    for i in range(n_in):
        if i != seed_pos:
            oslot[n_other] = in_slots[i]
            owidth[n_other] = in_widths[i]
            other_bits += owidth[n_other]
            n_other += 1
    if other_bits >= 63 or seed_w >= 63:
        raise ValueError("input space too large")
    result = array("Q", [0]) * n_slots
    cdef uint64_t[:] diff = result
    cdef size_t nbytes = max(n_slots, 1) * sizeof(uint64_t)
    cdef uint64_t *slots = <uint64_t *> malloc(nbytes)
    cdef uint64_t *ref = <uint64_t *> malloc(nbytes)
    cdef uint64_t *stack = <uint64_t *> malloc((ops_v.shape[0] + 1) * sizeof(uint64_t))
    if slots == NULL or ref == NULL or stack == NULL:
        free(slots); free(ref); free(stack)
        raise MemoryError()
    try:
        with nogil:
            base = 0
            while base < (1ULL << other_bits):
                sv = 0
                while sv < (1ULL << seed_w):
                    memset(slots, 0, nbytes)
                    rest = base
                    for j in range(n_other):
                        slots[oslot[j]] = rest & _mask(owidth[j])
                        rest >>= owidth[j]
                    slots[seed_slot] = sv
                    rc = _run(ops_v, args_v, slots, stack)
                    if rc != 0:
                        break
                    if sv == 0:
                        memcpy(ref, slots, nbytes)
                    else:
                        for k in range(n_slots):
                            diff[k] |= slots[k] ^ ref[k]
                    sv += 1
                if rc != 0:
                    break
                base += 1
        if rc != 0:
            raise ValueError("bad opcode")
    finally:
        free(slots)
        free(ref)
        free(stack)
    return result


def evaluate(ops, args, Py_ssize_t n_slots, assignment):
    cdef const int32_t[:] ops_v = ops
    cdef const uint64_t[:] args_v = args
    cdef uint64_t *slots = <uint64_t *> malloc(max(n_slots, 1) * sizeof(uint64_t))
    cdef uint64_t *stack = <uint64_t *> malloc((ops_v.shape[0] + 1) * sizeof(uint64_t))
    cdef Py_ssize_t k
    if slots == NULL or stack == NULL:
        free(slots); free(stack)
        raise MemoryError()
    try:
        memset(slots, 0, max(n_slots, 1) * sizeof(uint64_t))
        for s, v in assignment.items():
            slots[<Py_ssize_t> s] = <uint64_t> v
        if _run(ops_v, args_v, slots, stack) != 0:
            raise ValueError("bad opcode")
        return [slots[k] for k in range(n_slots)]
    finally:
        free(slots)
        free(stack)
