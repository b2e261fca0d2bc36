"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--nodes N]
"""
import argparse
import random
import sys
import timeit
from array import array
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from llm_ift import kernels  # noqa: E402
from llm_ift.rtl import build_unit  # noqa: E402
from llm_ift.taint.oracle import compile_module  # noqa: E402

from circuit_corpus import random_module  # noqa: E402


def random_csr(rng, n, degree):
    indptr = array("q", [0])
    indices = array("q")
    for _ in range(n):
        indices.extend(rng.randrange(n) for _ in range(rng.randint(0, 2 * degree)))
        indptr.append(len(indices))
    seeds = array("q", rng.sample(range(n), min(n, 8)))
    return indptr, indices, seeds, n


def scan_inputs(rng, max_bits):
    # keep drawing until the circuit is near the bit budget so the scan is not trivial
    while True:
        text, _ = random_module(rng, "b", max_input_bits=max_bits)
        m = build_unit([("b.v", text)]).modules[0]
        ins = [p for p in m.ports if p.direction == "input"]
        if sum(p.width for p in ins) >= max_bits - 1:
            break
    prog = compile_module(m)
    return (prog.ops, prog.args, prog.n_slots, array("q", [prog.slots[p.name] for p in ins]),
            array("q", [p.width for p in ins]), 0)


def bench(fn, args, repeat):
    t = timeit.Timer(lambda: fn(*args))
    number, _ = t.autorange()
    return min(t.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--nodes", type=int, default=200000)
    ap.add_argument("--bits", type=int, default=10, help="input bits of the scanned circuit")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    impls = kernels.available()
    if "cython" not in impls:
        print("compiled kernels not built; only the fallback is timed", file=sys.stderr)
    rng = random.Random(args.seed)
    cases = {
        "propagate_tags": random_csr(rng, args.nodes, 3),
        "influence_scan": scan_inputs(rng, args.bits),
    }
    print(f"{'kernel':<16} {'impl':<8} {'seconds':>12} {'speedup':>8}")
    for name, call_args in cases.items():
        base = None
        results = [list(getattr(impl, name)(*call_args)) for impl in impls.values()]
        if any(r != results[0] for r in results):
            print(f"{name}: implementations disagree", file=sys.stderr)
            return 1
        for label, impl in impls.items():
            secs = bench(getattr(impl, name), call_args, args.repeat)
            base = base or secs
            print(f"{name:<16} {label:<8} {secs:12.6f} {base / secs:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
