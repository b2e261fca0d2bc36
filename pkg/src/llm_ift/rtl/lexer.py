"""Tokenizer for the Verilog subset."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError, UnsupportedConstruct

KEYWORDS = {
    "module", "endmodule", "input", "output", "inout", "wire", "reg", "integer",
    "signed", "assign", "always", "begin", "end", "if", "else", "case", "casez",
    "casex", "endcase", "default", "posedge", "negedge", "or", "parameter",
    "localparam", "initial", "generate", "endgenerate", "function", "endfunction",
    "task", "endtask", "for", "while", "repeat", "forever", "genvar", "tri",
    "supply0", "supply1", "wand", "wor", "real", "time", "specify", "primitive",
}

# operators, longest first
OPERATORS = [
    "<<<", ">>>", "===", "!==", "~^", "^~", "~&", "~|", "+:", "-:",
    "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "**",
    "+", "-", "*", "/", "%", "<", ">", "!", "~", "&", "|", "^",
    "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}", "=", "@", "#",
]

_BASED = re.compile(r"(\d[\d_]*)?[ \t]*'[ \t]*([sS]?)([bBoOdDhH])[ \t]*([0-9a-fA-FxXzZ?_]+)")
_DECIMAL = re.compile(r"\d[\d_]*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_SYSTEM = re.compile(r"\$[A-Za-z_][A-Za-z0-9_$]*")
_WS = re.compile(r"[ \t\r\f\v]+")


@dataclass(frozen=True)
class Token:
    kind: str  # id, kw, num, op, eof
    text: str
    line: int
    col: int
    pos: int
    value: int = 0
    width: int = -1  # -1 for unsized


def _based_value(digits: str, base: str) -> int:
    radix = {"b": 2, "o": 8, "d": 10, "h": 16}[base.lower()]
    digits = digits.replace("_", "")
    # x/z/? bits evaluate as 0 in this tool
    digits = re.sub(r"[xXzZ?]", "0", digits)
    return int(digits, radix)


def tokenize(text: str, path: str = "<string>") -> list:
    toks = []
    i = 0
    line = 1
    line_start = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        m = _WS.match(text, i)
        if m:
            i = m.end()
            continue
        col = i - line_start + 1
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise ParseError("unterminated block comment", path, line, col)
            line += text.count("\n", i, j)
            k = text.rfind("\n", i, j)
            if k >= 0:
                line_start = k + 1
            i = j + 2
            continue
        if c == "`":
            m = _IDENT.match(text, i + 1)
            name = m.group(0) if m else ""
            if name in ("timescale", "default_nettype", "resetall", "celldefine", "endcelldefine"):
                j = text.find("\n", i)
                i = n if j < 0 else j
                continue
            raise UnsupportedConstruct("`" + name, path, line, col)
        if c == '"':
            raise UnsupportedConstruct("string literal", path, line, col)
        m = _BASED.match(text, i)
        if m and (m.group(1) is not None or text[i] == "'"):
            size = int(m.group(1).replace("_", "")) if m.group(1) else -1
            value = _based_value(m.group(4), m.group(3))
            if size > 0:
                value &= (1 << size) - 1
            toks.append(Token("num", m.group(0), line, col, i, value, size))
            i = m.end()
            continue
        m = _DECIMAL.match(text, i)
        if m:
            toks.append(Token("num", m.group(0), line, col, i, int(m.group(0).replace("_", "")), -1))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            toks.append(Token("kw" if word in KEYWORDS else "id", word, line, col, i))
            i = m.end()
            continue
        if c == "\\":
            raise UnsupportedConstruct("escaped identifier", path, line, col)
        m = _SYSTEM.match(text, i)
        if m:
            raise UnsupportedConstruct("system task " + m.group(0), path, line, col)
        for op in OPERATORS:
            if text.startswith(op, i):
                toks.append(Token("op", op, line, col, i))
                i += len(op)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", path, line, col)
    col = i - line_start + 1
    toks.append(Token("eof", "", line, col, n))
    return toks
