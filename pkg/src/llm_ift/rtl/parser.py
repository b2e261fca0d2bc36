"""Recursive-descent parser for a synthesizable Verilog-2001 subset."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import ParseError, UnsupportedConstruct
from . import ast as A
from .lexer import Token, tokenize

DIRECTIONS = ("input", "output", "inout")
NET_KINDS = ("wire", "reg", "integer", "tri", "supply0", "supply1", "wand", "wor")
UNSUPPORTED_ITEMS = {
    "initial", "generate", "function", "task", "genvar", "specify", "primitive",
    "real", "time", "endgenerate",
}
UNSUPPORTED_STMTS = {"for", "while", "repeat", "forever"}

# binary operator precedence, higher binds tighter
BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4, "~^": 4, "^~": 4,
    "&": 5,
    "==": 6, "!=": 6, "===": 6, "!==": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "<<<": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
    "**": 11,
}
UNARY_OPS = {"+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~"}


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    col: int
    severity: str  # error, warning, note
    message: str

    def __str__(self):
        return f"{self.path}:{self.line}:{self.col}: {self.severity}: {self.message}"


def const_eval(expr, params: dict, path="<string>", tok: Optional[Token] = None) -> int:
    """Fold a constant expression, substituting known parameters."""
    line, col = (tok.line, tok.col) if tok else (0, 0)

    def ev(e):
        if isinstance(e, A.Number):
            return e.value
        if isinstance(e, A.Ident):
            if e.name in params:
                return params[e.name]
            raise ParseError(f"'{e.name}' is not a constant", path, line, col)
        if isinstance(e, A.Unary):
            v = ev(e.operand)
            if e.op == "-":
                return -v
            if e.op == "+":
                return v
            if e.op == "~":
                return ~v
            if e.op == "!":
                return int(not v)
        if isinstance(e, A.Binary):
            a, b = ev(e.left), ev(e.right)
            ops = {
                "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "/": lambda: a // b if b else 0, "%": lambda: a % b if b else 0,
                "<<": lambda: a << b, ">>": lambda: a >> b, "**": lambda: a ** b,
                "&": lambda: a & b, "|": lambda: a | b, "^": lambda: a ^ b,
            }
            if e.op in ops:
                return ops[e.op]()
        if isinstance(e, A.Ternary):
            return ev(e.then) if ev(e.cond) else ev(e.other)
        raise UnsupportedConstruct("parameter arithmetic", path, line, col)

    return ev(expr)


class _ModuleBuilder:
    def __init__(self, name, tok):
        self.name = name
        self.tok = tok
        self.header_names: list = []
        self.ansi = False
        self.port_decl: dict = {}  # name -> (direction, width, lsb)
        self.nets: list = []
        self.net_names: set = set()
        self.assigns: list = []
        self.always: list = []
        self.instances: list = []
        self.params: dict = {}
        self.param_order: list = []
        self.refs: list = []  # (name, token) for undeclared-identifier checks
        self.conn_refs: list = []

    def declared(self, name):
        return name in self.port_decl or name in self.net_names


class Parser:
    def __init__(self, text: str, path: str = "<string>", diagnostics: Optional[list] = None):
        self.text = text
        self.path = path
        self.toks = tokenize(text, path)
        self.i = 0
        self.diagnostics = diagnostics if diagnostics is not None else []
        self.mod: Optional[_ModuleBuilder] = None
        self._conn = False  # parsing an instance connection actual

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def accept(self, text) -> Optional[Token]:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def error(self, expected, tok=None) -> ParseError:
        t = tok or self.tok
        found = "end of input" if t.kind == "eof" else f"'{t.text}'"
        return ParseError(f"expected {expected}, found {found}", self.path, t.line, t.col)

    def expect(self, text, what=None) -> Token:
        t = self.accept(text)
        if t is None:
            raise self.error(what or f"'{text}'")
        return t

    def ident(self, what="identifier") -> Token:
        t = self.tok
        if t.kind != "id":
            if t.kind == "kw" and t.text in UNSUPPORTED_ITEMS | UNSUPPORTED_STMTS:
                raise UnsupportedConstruct(t.text, self.path, t.line, t.col)
            raise self.error(what)
        self.i += 1
        return t

    def unsupported(self, what, tok=None):
        t = tok or self.tok
        return UnsupportedConstruct(what, self.path, t.line, t.col)

    # -- top level -------------------------------------------------------

    def parse(self) -> list:
        modules = []
        while self.tok.kind != "eof":
            if self.at("module"):
                modules.append(self.module())
            elif self.tok.kind == "kw" and self.tok.text in ("primitive", "function", "task"):
                raise self.unsupported(self.tok.text)
            else:
                raise self.error("'module'")
        names = set()
        for m in modules:
            if m.name in names:
                raise ParseError(f"duplicate module '{m.name}'", self.path, m.line, 1)
            names.add(m.name)
        return _normalize_positional(modules, {m.name: m for m in modules}, self.diagnostics)

    def module(self) -> A.ModuleDecl:
        start = self.expect("module")
        name = self.ident("module name")
        mb = self.mod = _ModuleBuilder(name.text, start)
        if self.accept("#"):
            self.expect("(", "'(' after '#'")
            self.param_port_list()
        if self.at("("):
            open_tok = self.tok
            self.i += 1
            self.port_list(open_tok)
        self.expect(";", "';' after module header")
        while not self.at("endmodule"):
            if self.tok.kind == "eof":
                raise self.error("'endmodule'")
            self.module_item()
        end = self.expect("endmodule")
        return self.finish_module(start, end)

    def finish_module(self, start: Token, end: Token) -> A.ModuleDecl:
        mb = self.mod
        ports = []
        names = mb.header_names if not mb.ansi else list(mb.port_decl)
        for pname in names:
            if pname not in mb.port_decl:
                raise ParseError(
                    f"port '{pname}' has no direction declaration", self.path, mb.tok.line, mb.tok.col
                )
            d, w, lsb = mb.port_decl[pname]
            ports.append(A.Port(pname, d, w, lsb))
        for pname in mb.port_decl:
            if not mb.ansi and pname not in mb.header_names:
                raise ParseError(
                    f"'{pname}' declared as port but missing from the port list",
                    self.path, mb.tok.line, mb.tok.col,
                )
        known = set(mb.port_decl) | mb.net_names | set(mb.params)
        for ident, tok in mb.conn_refs:
            if ident not in known:
                # implicit 1-bit net, as Verilog does for port connections
                self.diagnostics.append(Diagnostic(
                    self.path, tok.line, tok.col, "warning",
                    f"implicit net '{ident}' in module '{mb.name}'",
                ))
                mb.nets.append(A.Net(ident, 1, "wire"))
                mb.net_names.add(ident)
                known.add(ident)
        for ident, tok in mb.refs:
            if ident not in known:
                self.diagnostics.append(Diagnostic(
                    self.path, tok.line, tok.col, "error",
                    f"undeclared identifier '{ident}' in module '{mb.name}'",
                ))
                known.add(ident)
        src = self.text[start.pos:end.pos + len("endmodule")]
        self.mod = None
        return A.ModuleDecl(
            name=mb.name,
            ports=tuple(ports),
            nets=tuple(mb.nets),
            assigns=tuple(mb.assigns),
            always_blocks=tuple(mb.always),
            instances=tuple(mb.instances),
            params=tuple((n, mb.params[n]) for n in mb.param_order),
            source_text=src,
            path=self.path,
            line=start.line,
        )

    # -- header ----------------------------------------------------------

    def param_port_list(self):
        while True:
            self.accept("parameter") or self.accept("localparam")
            self.param_assignment()
            if self.accept(")"):
                return
            self.expect(",", "',' or ')' in parameter list")

    def param_assignment(self):
        self.accept("signed")
        self.accept("integer")
        if self.at("["):
            self.range_()
        name = self.ident("parameter name")
        self.expect("=", "'=' in parameter declaration")
        vtok = self.tok
        value = const_eval(self.expr(), self.mod.params, self.path, vtok)
        if name.text not in self.mod.params:
            self.mod.param_order.append(name.text)
        self.mod.params[name.text] = value

    def port_list(self, open_tok):
        mb = self.mod
        if self.accept(")"):
            return
        if self.tok.kind == "kw" and self.tok.text in DIRECTIONS:
            mb.ansi = True
            direction = None
            width, lsb = 1, 0
            while True:
                if self.tok.kind == "kw" and self.tok.text in DIRECTIONS:
                    direction = self.tok.text
                    self.i += 1
                    if self.tok.kind == "kw" and self.tok.text in ("wire", "reg", "tri"):
                        self.i += 1
                    self.accept("signed")
                    width, lsb = self.range_() if self.at("[") else (1, 0)
                elif direction is None:
                    raise self.error("port direction")
                name = self.ident("port name")
                if name.text in mb.port_decl:
                    raise ParseError(f"duplicate port '{name.text}'", self.path, name.line, name.col)
                mb.port_decl[name.text] = (direction, width, lsb)
                if self.accept(")"):
                    return
                if self.tok.kind == "eof":
                    raise ParseError(
                        "unterminated port list (expected ',' or ')')",
                        self.path, open_tok.line, open_tok.col,
                    )
                self.expect(",", "',' or ')' in port list")
        while True:
            if self.tok.kind == "eof":
                raise ParseError(
                    "unterminated port list (expected ',' or ')')", self.path, open_tok.line, open_tok.col
                )
            name = self.ident("port name")
            mb.header_names.append(name.text)
            if self.accept(")"):
                return
            if self.tok.kind == "eof":
                raise ParseError(
                    "unterminated port list (expected ',' or ')')", self.path, open_tok.line, open_tok.col
                )
            self.expect(",", "',' or ')' in port list")

    def range_(self) -> tuple:
        lb = self.expect("[")
        msb = const_eval(self.expr(), self.mod.params, self.path, lb)
        self.expect(":", "':' in range")
        lsb = const_eval(self.expr(), self.mod.params, self.path, lb)
        self.expect("]")
        return abs(msb - lsb) + 1, min(msb, lsb)

    # -- module items ----------------------------------------------------

    def module_item(self):
        t = self.tok
        mb = self.mod
        if t.kind == "op" and t.text == ";":
            self.i += 1
        elif t.kind == "kw" and t.text in DIRECTIONS:
            if mb.ansi:
                raise ParseError(
                    "port declaration in body of module with ANSI header", self.path, t.line, t.col
                )
            self.port_declaration()
        elif t.kind == "kw" and t.text in NET_KINDS:
            self.net_declaration()
        elif t.kind == "kw" and t.text in ("parameter", "localparam"):
            self.i += 1
            while True:
                self.param_assignment()
                if self.accept(";"):
                    break
                self.expect(",", "',' or ';' in parameter declaration")
        elif t.kind == "kw" and t.text == "assign":
            self.i += 1
            while True:
                loc = A.Loc(self.tok.line, self.tok.col)
                target = self.lvalue()
                self.expect("=", "'=' in continuous assignment")
                value = self.expr()
                mb.assigns.append(A.AssignStmt(target, value, loc))
                if self.accept(";"):
                    break
                self.expect(",", "',' or ';' after assignment")
        elif t.kind == "kw" and t.text == "always":
            self.always_block()
        elif t.kind == "kw" and t.text in UNSUPPORTED_ITEMS:
            raise self.unsupported(t.text)
        elif t.kind == "id":
            self.instantiation()
        else:
            raise self.error("module item")

    def port_declaration(self):
        mb = self.mod
        direction = self.tok.text
        self.i += 1
        if self.tok.kind == "kw" and self.tok.text in ("wire", "reg", "tri"):
            self.i += 1
        self.accept("signed")
        width, lsb = self.range_() if self.at("[") else (1, 0)
        while True:
            name = self.ident("port name")
            if name.text in mb.port_decl:
                raise ParseError(f"duplicate port '{name.text}'", self.path, name.line, name.col)
            if name.text in mb.net_names:
                # "wire [7:0] a; input [7:0] a;" ordering: promote to port
                mb.nets = [n for n in mb.nets if n.name != name.text]
                mb.net_names.discard(name.text)
            mb.port_decl[name.text] = (direction, width, lsb)
            if self.accept(";"):
                return
            self.expect(",", "',' or ';' in port declaration")

    def net_declaration(self):
        mb = self.mod
        kw = self.tok.text
        self.i += 1
        kind = "reg" if kw in ("reg", "integer") else "wire"
        self.accept("signed")
        if kw == "integer":
            width, lsb = 32, 0
        else:
            width, lsb = self.range_() if self.at("[") else (1, 0)
        while True:
            name = self.ident("net name")
            depth = 0
            if self.at("["):
                w, _ = self.range_()
                depth = w
            if name.text in mb.port_decl:
                # "output [7:0] q; reg [7:0] q;" only sets the port's kind
                pass
            elif name.text in mb.net_names:
                raise ParseError(f"duplicate declaration of '{name.text}'", self.path, name.line, name.col)
            else:
                mb.nets.append(A.Net(name.text, width, kind, lsb, depth))
                mb.net_names.add(name.text)
            if self.accept("="):
                value = self.expr()
                if kind == "wire":
                    mb.assigns.append(A.AssignStmt(A.Ident(name.text), value, A.Loc(name.line, name.col)))
                # reg initialisers are simulation-only and dropped
            if self.accept(";"):
                return
            self.expect(",", "',' or ';' in declaration")

    def always_block(self):
        start = self.expect("always")
        at = self.accept("@")
        if at is None:
            raise self.unsupported("always without event control")
        events = []
        star = False
        if self.accept("*"):
            star = True
        else:
            self.expect("(", "'(' or '*' after '@'")
            if self.accept("*"):
                star = True
                self.expect(")")
            else:
                while True:
                    edge = None
                    if self.tok.kind == "kw" and self.tok.text in ("posedge", "negedge"):
                        edge = self.tok.text
                        self.i += 1
                    sig = self.ident("event signal")
                    self.mod.refs.append((sig.text, sig))
                    events.append(A.Event(edge, sig.text))
                    if self.accept(")"):
                        break
                    if not (self.accept("or") or self.accept(",")):
                        raise self.error("'or', ',' or ')' in event list")
        body = self.statement()
        self.mod.always.append(A.ProcBlock(tuple(events), body, star, A.Loc(start.line, start.col)))

    def instantiation(self):
        mb = self.mod
        mod_tok = self.ident("module name")
        params = []
        if self.accept("#"):
            self.expect("(", "'(' after '#'")
            if not self.accept(")"):
                while True:
                    if self.accept("."):
                        pname = self.ident("parameter name").text
                        self.expect("(")
                        params.append((pname, self.expr()))
                        self.expect(")")
                    else:
                        params.append((None, self.expr()))
                    if self.accept(")"):
                        break
                    self.expect(",", "',' or ')' in parameter overrides")
        while True:
            inst_tok = self.ident("instance name")
            if self.at("["):
                raise self.unsupported("instance array")
            self.expect("(", "'(' after instance name")
            conns = self.connection_list()
            mb.instances.append(A.Instance(
                inst_tok.text, mod_tok.text, tuple(conns), tuple(params),
                A.Loc(mod_tok.line, mod_tok.col),
            ))
            if self.accept(";"):
                return
            self.expect(",", "',' or ';' after instance")

    def connection_list(self) -> list:
        conns = []
        if self.accept(")"):
            return conns
        named = self.at(".")
        pos = 0
        seen = set()
        while True:
            if named:
                dot = self.expect(".", "named connection")
                if self.accept("*"):
                    raise self.unsupported("implicit .* connection", dot)
                formal = self.ident("port name")
                if formal.text in seen:
                    raise ParseError(
                        f"port '{formal.text}' connected twice", self.path, formal.line, formal.col
                    )
                seen.add(formal.text)
                self.expect("(")
                actual = None
                if not self.at(")"):
                    actual = self.expr(conn=True)
                self.expect(")")
                conns.append(A.Connection(formal.text, actual))
            else:
                actual = None
                if not (self.at(",") or self.at(")")):
                    actual = self.expr(conn=True)
                conns.append(A.Connection(None, actual, pos))
                pos += 1
            if self.accept(")"):
                return conns
            self.expect(",", "',' or ')' in connection list")

    # -- statements ------------------------------------------------------

    def statement(self):
        t = self.tok
        if self.accept(";"):
            return A.Nop()
        if self.accept("begin"):
            label = None
            if self.accept(":"):
                label = self.ident("block name").text
            stmts = []
            while not self.accept("end"):
                if self.tok.kind == "eof":
                    raise self.error("'end'")
                stmts.append(self.statement())
            return A.Block(tuple(stmts), label)
        if self.accept("if"):
            self.expect("(", "'(' after 'if'")
            cond = self.expr()
            self.expect(")")
            then = self.statement()
            other = self.statement() if self.accept("else") else None
            return A.If(cond, then, other)
        if t.kind == "kw" and t.text in ("case", "casez", "casex"):
            self.i += 1
            self.expect("(", f"'(' after '{t.text}'")
            subject = self.expr()
            self.expect(")")
            items = []
            while not self.accept("endcase"):
                if self.tok.kind == "eof":
                    raise self.error("'endcase'")
                if self.accept("default"):
                    self.accept(":")
                    items.append(A.CaseItem((), self.statement()))
                    continue
                labels = [self.expr()]
                while self.accept(","):
                    labels.append(self.expr())
                self.expect(":", "':' after case label")
                items.append(A.CaseItem(tuple(labels), self.statement()))
            return A.Case(t.text, subject, tuple(items))
        if t.kind == "kw" and t.text in UNSUPPORTED_STMTS:
            raise self.unsupported(t.text)
        if t.kind == "op" and t.text == "#":
            raise self.unsupported("delay control")
        if t.kind == "id" and self.peek().kind == "op" and self.peek().text in ("(", ";"):
            raise self.unsupported("task call")
        loc = A.Loc(t.line, t.col)
        target = self.lvalue()
        if self.accept("="):
            blocking = True
        elif self.accept("<="):
            blocking = False
        else:
            raise self.error("'=' or '<=' in procedural assignment")
        if self.at("#"):
            raise self.unsupported("intra-assignment delay")
        value = self.expr()
        self.expect(";", "';' after assignment")
        return A.Assign(target, value, blocking, loc)

    def lvalue(self):
        self._conn = False
        if self.accept("{"):
            parts = [self.lvalue()]
            while self.accept(","):
                parts.append(self.lvalue())
            self.expect("}")
            return A.Concat(tuple(parts))
        name = self.ident("assignment target")
        self.mod.refs.append((name.text, name))
        if self.at("["):
            return self.select(name.text)
        return A.Ident(name.text)

    # -- expressions -----------------------------------------------------

    def expr(self, conn=False):
        self._conn = conn
        return self.ternary()

    def ternary(self):
        cond = self.binary(1)
        if self.accept("?"):
            then = self.ternary()
            self.expect(":", "':' in conditional expression")
            other = self.ternary()
            return A.Ternary(cond, then, other)
        return cond

    def binary(self, min_prec):
        left = self.unary()
        while True:
            t = self.tok
            if t.kind != "op" or t.text not in BINARY_PREC:
                return left
            prec = BINARY_PREC[t.text]
            if prec < min_prec:
                return left
            self.i += 1
            # ** is right associative
            right = self.binary(prec if t.text == "**" else prec + 1)
            op = "~^" if t.text == "^~" else t.text
            left = A.Binary(op, left, right)

    def unary(self):
        t = self.tok
        if t.kind == "op" and t.text in UNARY_OPS:
            self.i += 1
            op = "~^" if t.text == "^~" else t.text
            return A.Unary(op, self.unary())
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return A.Number(t.value, None if t.width < 0 else t.width, t.text)
        if t.kind == "id":
            self.i += 1
            if self.at("("):
                raise self.unsupported("function call", t)
            if self.mod is not None:
                (self.mod.conn_refs if self._conn else self.mod.refs).append((t.text, t))
            if self.at("["):
                return self.select(t.text)
            return A.Ident(t.text)
        if self.accept("("):
            e = self.ternary()
            self.expect(")")
            return e
        if self.accept("{"):
            first = self.ternary()
            if self.at("{"):
                self.i += 1
                parts = [self.ternary()]
                while self.accept(","):
                    parts.append(self.ternary())
                self.expect("}")
                self.expect("}")
                return A.Repeat(first, tuple(parts))
            parts = [first]
            while self.accept(","):
                parts.append(self.ternary())
            self.expect("}", "'}' or ',' in concatenation")
            return A.Concat(tuple(parts))
        raise self.error("expression")

    def select(self, base):
        self.expect("[")
        first = self.ternary()
        if self.accept("]"):
            if self.at("["):
                raise self.unsupported("multi-dimensional select")
            return A.Index(base, first)
        for mode in (":", "+:", "-:"):
            if self.accept(mode):
                second = self.ternary()
                self.expect("]")
                return A.Slice(base, first, second, mode)
        raise self.error("']', ':', '+:' or '-:' in select")


def _normalize_positional(modules, lookup, diagnostics) -> list:
    """Rewrite positional instance connections to named ones where the target is known."""
    out = []
    for m in modules:
        new_insts = []
        changed = False
        for inst in m.instances:
            target = lookup.get(inst.module_name)
            if inst.positional and target is not None:
                inst = normalize_instance(inst, target, m, diagnostics)
                changed = True
            new_insts.append(inst)
        if changed:
            m = _replace(m, instances=tuple(new_insts))
        out.append(m)
    return out


def normalize_instance(inst, target, parent, diagnostics):
    names = target.port_names
    conns = []
    for c in inst.connections:
        if c.formal is not None:
            conns.append(c)
            continue
        if c.position >= len(names):
            loc = inst.loc or A.Loc(0, 0)
            diagnostics.append(Diagnostic(
                parent.path, loc.line, loc.col, "error",
                f"instance '{inst.instance_name}' has more connections than '{target.name}' has ports",
            ))
            continue
        if c.actual is None:
            continue
        conns.append(A.Connection(names[c.position], c.actual))
    return _replace(inst, connections=tuple(conns))


def _replace(obj, **changes):
    import dataclasses
    return dataclasses.replace(obj, **changes)


def parse_source(text: str, path: str = "<string>", diagnostics: Optional[list] = None) -> list:
    """Parse every module in ``text``.

    Positional connections to modules defined in the same text are converted to
    named form; the rest stay positional until the unit-level resolution pass.
    Non-fatal findings (undeclared identifiers, implicit nets) are appended to
    ``diagnostics`` when given.
    """
    return Parser(text, path, diagnostics).parse()
