"""Debug pretty-printer: emits Verilog that re-parses to an equal tree."""
from __future__ import annotations

from . import ast as A

# mirrors the parser's precedence table; unary/primary bind tightest
_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "~^": 4, "&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "<<<": 8, ">>>": 8,
    "+": 9, "-": 9, "*": 10, "/": 10, "%": 10, "**": 11,
}


def format_number(n: A.Number) -> str:
    if n.width is None:
        return str(n.value)
    return f"{n.width}'h{n.value:x}"


def format_expr(e, prec: int = 0) -> str:
    if isinstance(e, A.Number):
        return format_number(e)
    if isinstance(e, A.Ident):
        return e.name
    if isinstance(e, A.Index):
        return f"{e.base}[{format_expr(e.index)}]"
    if isinstance(e, A.Slice):
        return f"{e.base}[{format_expr(e.msb)}{e.mode}{format_expr(e.lsb)}]"
    if isinstance(e, A.Concat):
        return "{" + ", ".join(format_expr(p) for p in e.parts) + "}"
    if isinstance(e, A.Repeat):
        return "{" + format_expr(e.count) + "{" + ", ".join(format_expr(p) for p in e.parts) + "}}"
    if isinstance(e, A.Unary):
        inner = format_expr(e.operand, 99)
        # keep "- -a" and "& &a" from fusing into other tokens
        sep = " " if inner[:1] in "+-!~&|^" else ""
        return f"{e.op}{sep}{inner}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        if e.op == "**":
            text = f"{format_expr(e.left, p + 1)} ** {format_expr(e.right, p)}"
        else:
            text = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    if isinstance(e, A.Ternary):
        text = f"{format_expr(e.cond, 1)} ? {format_expr(e.then)} : {format_expr(e.other)}"
        return f"({text})" if prec > 0 else text
    raise TypeError(f"not an expression: {e!r}")


def _range(width: int, lsb: int) -> str:
    if width == 1 and lsb == 0:
        return ""
    return f"[{lsb + width - 1}:{lsb}] "


def format_stmt(s, indent: int = 1) -> list:
    pad = "    " * indent
    if isinstance(s, A.Nop):
        return [pad + ";"]
    if isinstance(s, A.Assign):
        op = "=" if s.blocking else "<="
        return [f"{pad}{format_expr(s.target)} {op} {format_expr(s.value)};"]
    if isinstance(s, A.Block):
        head = pad + "begin" + (f" : {s.label}" if s.label else "")
        lines = [head]
        for st in s.stmts:
            lines.extend(format_stmt(st, indent + 1))
        lines.append(pad + "end")
        return lines
    if isinstance(s, A.If):
        lines = [f"{pad}if ({format_expr(s.cond)})"]
        lines.extend(format_stmt(s.then, indent + 1))
        if s.other is not None:
            lines.append(pad + "else")
            lines.extend(format_stmt(s.other, indent + 1))
        return lines
    if isinstance(s, A.Case):
        lines = [f"{pad}{s.kind} ({format_expr(s.subject)})"]
        for item in s.items:
            label = "default" if not item.labels else ", ".join(format_expr(x) for x in item.labels)
            lines.append(f"{pad}    {label}:")
            lines.extend(format_stmt(item.body, indent + 2))
        lines.append(pad + "endcase")
        return lines
    raise TypeError(f"not a statement: {s!r}")


def format_module(m: A.ModuleDecl) -> str:
    lines = []
    header = f"module {m.name}"
    if m.params:
        header += " #(" + ", ".join(f"parameter {n} = {v}" for n, v in m.params) + ")"
    if m.ports:
        lines.append(header + " (")
        decls = [f"    {p.direction} {_range(p.width, p.lsb)}{p.name}" for p in m.ports]
        lines.append(",\n".join(decls))
        lines.append(");")
    else:
        lines.append(header + ";")
    for n in m.nets:
        mem = f" [0:{n.depth - 1}]" if n.depth else ""
        lines.append(f"    {n.kind} {_range(n.width, n.lsb)}{n.name}{mem};")
    for a in m.assigns:
        lines.append(f"    assign {format_expr(a.target)} = {format_expr(a.value)};")
    for blk in m.always_blocks:
        if blk.star:
            ev = "*"
        else:
            ev = "(" + " or ".join(
                (f"{e.edge} " if e.edge else "") + e.signal for e in blk.events
            ) + ")"
        lines.append(f"    always @{ev}")
        lines.extend(format_stmt(blk.body, 2))
    for inst in m.instances:
        params = ""
        if inst.params:
            params = " #(" + ", ".join(
                (f".{n}({format_expr(v)})" if n else format_expr(v)) for n, v in inst.params
            ) + ")"
        if inst.positional:
            conns = ", ".join("" if c.actual is None else format_expr(c.actual) for c in inst.connections)
        else:
            conns = ", ".join(
                f".{c.formal}({'' if c.actual is None else format_expr(c.actual)})" for c in inst.connections
            )
        lines.append(f"    {inst.module_name}{params} {inst.instance_name} ({conns});")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def format_assignment(target, value, blocking=None) -> str:
    """One-line rendering used in transformation descriptions."""
    op = "<=" if blocking is False else "="
    return f"{format_expr(target)} {op} {format_expr(value)}"
