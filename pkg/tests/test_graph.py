import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from llm_ift.errors import CycleError, UnknownModule
from llm_ift.graph import ancestors, build_graph, dependents, to_dot, to_json, topo_sort

from graph_corpus import check_graph, longest_to_sink, random_graph


def test_two_children():
    g = build_graph([("top", "a", "u1"), ("top", "b", "u2")])
    assert set(g.nodes) == {"top", "a", "b"}
    assert g.edges == {("a", "top"), ("b", "top")}


def test_aes_graph(aes):
    from llm_ift.rtl import resolve_hierarchy
    g = build_graph(resolve_hierarchy(aes), aes.module_names)
    assert g.edges == {("TSC", "top"), ("lfsr_counter", "top")}
    s = topo_sort(g)
    assert s.order == ("TSC", "lfsr_counter", "top")
    assert s.levels == {"TSC": 1, "lfsr_counter": 1, "top": 0}
    assert ancestors(g, "top") == ["TSC", "lfsr_counter"]
    assert ancestors(g, "TSC") == []
    assert dependents(g, "TSC") == ["top"]
    assert dependents(g, "top") == []


def test_cycle_reported():
    with pytest.raises(CycleError) as exc:
        build_graph([("a", "b", "u1"), ("b", "a", "u2")])
    assert exc.value.cycle == ["a", "b", "a"]


def test_duplicate_instances_collapse():
    g = build_graph([("top", "a", "u1"), ("top", "a", "u2")])
    assert g.edges == {("a", "top")}


def test_isolated_nodes():
    g = build_graph([], ["m"])
    s = topo_sort(g)
    assert s.order == ("m",) and s.levels == {"m": 0}


def test_chain_levels():
    # a depends on b depends on c
    g = build_graph([("a", "b", "u"), ("b", "c", "v")])
    s = topo_sort(g)
    assert s.order == ("c", "b", "a")
    assert s.levels == {"a": 0, "b": 1, "c": 2}
    assert ancestors(g, "a") == ["c", "b"]
    assert dependents(g, "c") == ["b", "a"]


def test_unknown_module():
    g = build_graph([("a", "b", "u")])
    with pytest.raises(UnknownModule):
        ancestors(g, "zz")
    with pytest.raises(UnknownModule):
        dependents(g, "zz")


def test_transposes():
    g = random_graph(random.Random(7), 30)
    for u, succ in g.adjacency.items():
        for v in succ:
            assert u in g.reverse_adjacency[v]
    assert sum(map(len, g.adjacency.values())) == sum(map(len, g.reverse_adjacency.values())) == len(g.edges)


def test_exports(aes):
    from llm_ift.rtl import resolve_hierarchy
    g = build_graph(resolve_hierarchy(aes), aes.module_names)
    s = topo_sort(g)
    doc = to_json(g, s)
    assert doc == {"nodes": ["TSC", "lfsr_counter", "top"], "edges": [["TSC", "top"], ["lfsr_counter", "top"]],
                   "order": ["TSC", "lfsr_counter", "top"], "levels": {"TSC": 1, "lfsr_counter": 1, "top": 0}}
    json.dumps(doc)
    dot = to_dot(g, s)
    assert '"top" [label="top (L=0)"]' in dot and '"TSC" -> "top";' in dot


@st.composite
def hierarchies(draw):
    n = draw(st.integers(1, 12))
    names = [f"n{i}" for i in range(n)]
    perm = draw(st.permutations(names))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=40))
    tuples = [(perm[min(a, b)], perm[max(a, b)], f"u{k}") for k, (a, b) in enumerate(pairs) if a != b]
    return names, tuples


@settings(max_examples=200, deadline=None)
@given(hierarchies())
def test_schedule_properties(h):
    names, tuples = h
    g = build_graph(tuples, names)
    s = topo_sort(g)
    assert check_graph(g, s) == []


@settings(max_examples=100, deadline=None)
@given(hierarchies())
def test_schedule_deterministic(h):
    names, tuples = h
    a = topo_sort(build_graph(tuples, names))
    b = topo_sort(build_graph(list(reversed(tuples)), list(reversed(names))))
    assert a == b


def test_level_bruteforce_small():
    rng = random.Random(3)
    for _ in range(200):
        g = random_graph(rng, 10)
        s = topo_sort(g)
        for n in g.nodes:
            assert s.levels[n] == longest_to_sink(g, n)
