"""Opcodes for the expression VM shared by both kernel implementations.

Argument packing:
  STORE_SLICE  arg = slot << 14 | lo << 7 | width
  DSTORE       arg = slot << 7 | width        (pops bit offset, then value)
  SLICE        arg = lo << 7 | width
  DSLICE       arg = width                    (pops bit offset, then value)
  RAND/RNAND   arg = operand width
"""

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

MASK64 = (1 << 64) - 1

__all__ = [
    "PUSH", "LOAD", "STORE", "STORE_SLICE", "DSTORE", "MASK", "SLICE", "DSLICE", "JZ",
    "JMP", "POP", "ADD", "SUB", "MUL", "DIV", "MOD", "AND", "OR", "XOR", "XNOR", "SHL",
    "SHR", "EQ", "NE", "LT", "LE", "GT", "GE", "LAND", "LOR", "POW", "NOT", "LNOT", "NEG",
    "RAND", "ROR", "RXOR", "RNAND", "RNOR", "RXNOR", "MASK64",
]
