import pytest

from llm_ift.errors import ParseError, UnsupportedConstruct
from llm_ift.rtl import (DepEdge, build_unit, extract_dependencies, format_module, parse_source,
                         resolve_hierarchy)
from llm_ift.rtl import ast as A

from conftest import DESIGNS, load


def one(text):
    mods = parse_source(text, "t.v")
    assert len(mods) == 1
    return mods[0]


def test_minimal_module():
    m = one("module m(input a, output b); assign b = a; endmodule")
    assert m.name == "m"
    assert [(p.name, p.direction, p.width) for p in m.ports] == [("a", "input", 1), ("b", "output", 1)]
    assert len(m.assigns) == 1
    assert extract_dependencies(m) == [DepEdge("a", "b", "explicit")]


def test_aes_fixture_structure(aes):
    assert aes.module_names == ["top", "TSC", "lfsr_counter"]
    top = aes.module("top")
    assert [p.name for p in top.ports] == ["clk", "rst", "KEY", "DATA", "OUT", "capacitance"]
    assert [i.module_name for i in top.instances] == ["TSC", "lfsr_counter"]
    assert top.width_of("KEY") == 128


def test_unterminated_port_list():
    with pytest.raises(ParseError) as exc:
        parse_source("module m(", "m.v")
    err = exc.value
    assert (err.path, err.line) == ("m.v", 1)
    assert "unterminated port list" in str(err)
    assert str(err).startswith("m.v:1:")


@pytest.mark.parametrize("body,construct", [
    ("generate endgenerate", "generate"),
    ("function f; endfunction", "function"),
    ("task t; endtask", "task"),
    ("initial b = 0;", "initial"),
])
def test_unsupported_constructs(body, construct):
    with pytest.raises(UnsupportedConstruct) as exc:
        parse_source(f"module m(input a, output reg b); {body} endmodule", "u.v")
    assert exc.value.construct == construct


def test_numeric_literals_all_bases():
    m = one("module m(output [15:0] y); assign y = 8'hff + 3'o7 + 4'b1010 + 10'd12 + 5; endmodule")
    nums = []

    def walk(e):
        if isinstance(e, A.Number):
            nums.append((e.value, e.width))
        for v in vars(e).values():
            if hasattr(v, "__dataclass_fields__"):
                walk(v)

    walk(m.assigns[0].value)
    assert nums == [(255, 8), (7, 3), (10, 4), (12, 10), (5, None)]


def test_undeclared_identifier_is_diagnosed():
    diags = []
    parse_source("module m(input a, output b); assign b = c; endmodule", "d.v", diags)
    assert len(diags) == 1
    assert str(diags[0]) == "d.v:1:41: error: undeclared identifier 'c' in module 'm'"


def test_duplicate_formal_rejected():
    with pytest.raises(ParseError, match="connected twice"):
        parse_source("module c(input a, output b); endmodule "
                     "module m(input a, output b); c u(.a(a), .a(a)); endmodule", "d.v")


def test_positional_connections_normalized():
    unit = load("rsa_debug_leak.v")
    inst = unit.module("rsa_top").instances[0]
    assert inst.module_name == "trigger_counter"
    assert [c.formal for c in inst.connections] == ["clk", "rst", "event_in", "fire"]


def test_unknown_formal_flagged():
    unit = build_unit([("x.v", "module c(input a, output b); endmodule "
                               "module m(input a, output b); c u(.z(a)); endmodule")])
    assert any("unknown port 'z'" in str(d) for d in unit.errors())


def test_dependencies_guarded_register():
    m = one("module m(input clk, input sel, input d, output reg q);"
            " always @(posedge clk) if (sel) q <= d; endmodule")
    assert set(extract_dependencies(m)) == {DepEdge("d", "q", "explicit"), DepEdge("sel", "q", "implicit")}
    with_clk = set(extract_dependencies(m, include_clocks=True))
    assert DepEdge("clk", "q", "implicit") in with_clk


def test_dependencies_and_gate():
    m = one("module m(input a, input b, output y); assign y = a & b; endmodule")
    assert extract_dependencies(m) == [DepEdge("a", "y", "explicit"), DepEdge("b", "y", "explicit")]


def test_tsc_xor_edges(aes):
    edges = set(extract_dependencies(aes.module("TSC")))
    assert edges == {DepEdge("key", "load", "explicit"), DepEdge("lfsr_stream", "load", "explicit")}


def test_else_branch_is_guarded():
    m = one("module m(input s, input a, input b, output reg y);"
            " always @* if (s) y = a; else y = b; endmodule")
    assert DepEdge("s", "y", "implicit") in extract_dependencies(m)


def test_case_guards_every_item():
    m = one("module m(input [1:0] s, input a, output reg y);"
            " always @* case (s) 2'd0: y = a; default: y = 1'b0; endcase endmodule")
    edges = extract_dependencies(m)
    assert DepEdge("s", "y", "implicit") in edges
    assert DepEdge("a", "y", "explicit") in edges


def test_resolve_hierarchy_aes(aes):
    assert resolve_hierarchy(aes) == [("top", "TSC", "u_tsc"), ("top", "lfsr_counter", "u_lfsr")]


def test_resolve_hierarchy_leaf():
    unit = build_unit([("l.v", "module leaf(input a, output b); assign b = a; endmodule")])
    assert resolve_hierarchy(unit) == []


def test_resolve_hierarchy_blackbox():
    unit = build_unit([("bb.v", "module top(input a, output b); ext_phy u(.x(a), .y(b)); endmodule")])
    assert resolve_hierarchy(unit) == []
    notes = [d for d in unit.diagnostics if "ext_phy" in d.message]
    assert len(notes) == 1 and notes[0].severity == "warning"
    assert unit.blackboxes() == ["ext_phy"]


CORPUS = sorted(p.name for p in DESIGNS.glob("*.v"))


@pytest.mark.parametrize("name", CORPUS)
def test_round_trip(name):
    unit = load(name)
    for m in unit.modules:
        again = parse_source(format_module(m), "rt.v")
        assert again == [m]
    # source_text is verbatim: re-parsing the module texts rebuilds the same unit
    again = build_unit([("src.v", "\n".join(m.source_text for m in unit.modules))], unit.top)
    assert again.modules == unit.modules


@pytest.mark.parametrize("name", CORPUS)
def test_edges_reference_declared_signals(name):
    unit = load(name)
    for m in unit.modules:
        declared = set(m.signal_names)
        edges = extract_dependencies(m)
        assert edges == extract_dependencies(m)
        for e in edges:
            assert e.from_signal in declared and e.to_signal in declared
            assert e.kind in ("explicit", "implicit")


@pytest.mark.parametrize("name", CORPUS)
def test_ports_disjoint_from_nets(name):
    for m in load(name).modules:
        ports = {p.name for p in m.ports}
        assert ports.isdisjoint(n.name for n in m.nets)
