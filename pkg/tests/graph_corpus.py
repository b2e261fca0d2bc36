"""Random DAG corpus and brute-force references shared by graph tests."""
import random

from llm_ift.graph import build_graph


def random_hierarchy(rng: random.Random, max_nodes: int = 50):
    """Random acyclic instantiation relation over names that differ in case and length."""
    n = rng.randint(1, max_nodes)
    names = [f"{rng.choice('mMqQ')}{i}" for i in range(n)]
    density = rng.random()
    tuples = []
    # parent index < child index keeps it acyclic; shuffling names hides that order
    rng.shuffle(names)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density * 0.3:
                tuples.append((names[i], names[j], f"u_{i}_{j}"))
    return names, tuples


def random_graph(rng, max_nodes=50):
    names, tuples = random_hierarchy(rng, max_nodes)
    return build_graph(tuples, names)


def longest_to_sink(g, m):
    """Longest path length from ``m`` to any sink, by enumerating every path."""
    best = 0
    stack = [(m, 0)]
    while stack:
        node, depth = stack.pop()
        best = max(best, depth)
        for s in g.adjacency[node]:
            stack.append((s, depth + 1))
    return best


def reachable(g, m, step):
    seen = set()
    stack = list(step[m])
    while stack:
        n = stack.pop()
        if n not in seen:
            seen.add(n)
            stack.extend(step[n])
    return seen


def check_graph(g, schedule):
    """Every property the schedule must satisfy; returns a list of failures."""
    from llm_ift.graph import ancestors, dependents

    bad = []
    if sorted(schedule.order) != sorted(g.nodes):
        bad.append("order is not a permutation of nodes")
    pos = {n: i for i, n in enumerate(schedule.order)}
    for u, v in g.edges:
        if pos[u] >= pos[v]:
            bad.append(f"edge {u}->{v} violates order")
    if len(g.nodes) <= 10:
        for n in g.nodes:
            if schedule.levels[n] != longest_to_sink(g, n):
                bad.append(f"level of {n}")
    anc = {n: set(ancestors(g, n, schedule)) for n in g.nodes}
    dep = {n: set(dependents(g, n, schedule)) for n in g.nodes}
    for m in g.nodes:
        for n in g.nodes:
            if (m in anc[n]) != (n in dep[m]):
                bad.append(f"duality {m},{n}")
    for n in g.nodes:
        if anc[n] != reachable(g, n, g.reverse_adjacency) or dep[n] != reachable(g, n, g.adjacency):
            bad.append(f"closure of {n}")
    return bad
