"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import json
import random
import shutil
import time

import jsonschema
import pytest

from llm_ift.bench import BUNDLED_SUITE, emit_metrics, load_manifest, run_benchmarks
from llm_ift.cli import main
from llm_ift.config import ToolConfig
from llm_ift.errors import SchemaError
from llm_ift.graph import build_graph, topo_sort
from llm_ift.llm.backends import MockTaintBackend, ReplayBackend
from llm_ift.llm.parsing import FINDING_SCHEMA, parse_finding
from llm_ift.llm.prompts import load_techniques
from llm_ift.llm.pipeline import analyze
from llm_ift.report import LeakageReport, Violation, validate_report

from circuit_corpus import soundness_case
from conftest import AES_SEEDS, DESIGNS, FIXTURES, SOC_SEEDS, graph_of
from graph_corpus import check_graph, random_graph
from test_llm import MALFORMED, VALID


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        assert ok, detail
    return emit


def test_suite_rates(report):
    t0 = time.perf_counter()
    m = run_benchmarks(load_manifest(BUNDLED_SUITE), ToolConfig(), "divide-and-conquer")
    secs = time.perf_counter() - t0
    row = emit_metrics(m, "table").splitlines()[2]
    ok = m.total == 16 and m.negatives == 8 and row == "with divide and conquer | 100.00% | 0.00%" and secs < 10
    report("bundled suite success/false-positive rates", ok, f"{row.strip()} in {secs:.2f}s")


def test_path_fidelity(report, aes, soc):
    r_aes = analyze(aes, AES_SEEDS, MockTaintBackend(aes, AES_SEEDS), load_techniques())
    r_soc = analyze(soc, SOC_SEEDS, MockTaintBackend(soc, SOC_SEEDS), load_techniques())
    steps = {(t.from_module, t.source, t.sink) for t in r_aes.report.transformations}
    ok = (not r_aes.violations and not r_soc.violations
          and r_aes.report.leakage_path[-1] == aes.top
          and ("TSC", "key", "load") in steps and ("top", "load", "capacitance") in steps
          and "key[0] ^ lfsr_stream[0]" in r_aes.report.explanation
          and list(r_soc.report.leakage_path) == ["config_mem_unit", "status_transmitter_unit",
                                                   "soc_integration_top"])
    report("leakage path fidelity", ok,
           f"aes {list(r_aes.report.leakage_path)}, soc {list(r_soc.report.leakage_path)}")


def test_taint_soundness(report):
    rng = random.Random(7)
    unsound = []
    ratios = []
    n = 150
    for i in range(n):
        text, seed, oracle, taint = soundness_case(rng, i)
        if not oracle <= taint:
            unsound.append((seed, sorted(oracle - taint)))
        if taint:
            ratios.append(len(taint - oracle) / len(taint))
    mean = sum(ratios) / len(ratios)
    report("taint soundness against exhaustive oracle", not unsound,
           f"{n} circuits, {len(unsound)} false negatives, mean overtaint {mean:.3f}")


def test_graph_properties(report):
    rng = random.Random(11)
    failures = []
    small = 0
    for i in range(1000):
        g = random_graph(rng, 50 if i % 2 else 10)
        small += len(g.nodes) <= 10
        bad = check_graph(g, topo_sort(g))
        if bad:
            failures.append((i, bad[:3]))
    report("graph order, levels and ancestor/dependent duality", not failures,
           f"1000 DAGs ({small} brute-forced), {len(failures)} failing")


def test_determinism(report, tmp_path, capsys):
    aes = str(DESIGNS / "aes_trojan_leak.v")
    outs = []
    for i in range(2):
        for args in (["analyze", aes, "--assets", "top:KEY:key"],
                     ["bench", "--mode", "both"],
                     ["analyze", aes, "--assets", "top:KEY:key", "--backend", "replay",
                      "--replay-dir", str(FIXTURES / "replay_aes_repair")]):
            path = tmp_path / f"{i}-{args[0]}-{len(outs)}.out"
            main(args + ["--out", str(path)])
            outs.append(path.read_bytes())
    capsys.readouterr()
    ok = outs[:3] == outs[3:] and all(outs)
    report("byte-identical analyze and bench output across runs", ok, f"{len(outs) // 2} artifacts compared")


def test_robust_parsing(report, aes):
    partial = []
    accepted = 0
    wrapped = [f"```json\n{VALID}\n```", f"Analysis:\n{VALID}\nDone.", VALID]
    for raw in MALFORMED + wrapped:
        try:
            f = parse_finding(raw, "m")
        except SchemaError:
            continue
        accepted += 1
        doc = f.to_json(with_module=False)
        if list(jsonschema.Draft7Validator(FINDING_SCHEMA).iter_errors(doc)) or not f.flows:
            partial.append(raw)
    result = analyze(aes, AES_SEEDS, ReplayBackend(FIXTURES / "replay_aes_repair"), load_techniques())
    repaired = [s.module for s in result.stats if s.attempts == 2]
    ok = (len(MALFORMED) >= 20 and accepted == len(wrapped) and not partial and repaired == ["TSC"]
          and result.report.vulnerability_found)
    report("malformed replies rejected, repair prompt replayed", ok,
           f"{len(MALFORMED)} malformed rejected, {accepted} wrapped accepted, repaired {repaired}")


def test_report_validation(report, aes, tmp_path, capsys):
    g, _ = graph_of(aes)
    cases = [
        (LeakageReport(True, (), ("TSC", "ghost", "top"), "confidentiality"), "UnknownModule"),
        (LeakageReport(False, (), ("TSC",), "none"), "InconsistentVerdict"),
    ]
    chain = build_graph([("a", "b", "u0"), ("c", "d", "u1")])
    got = [{v.kind for v in validate_report(r, g)} == {k} for r, k in cases]
    got.append(validate_report(LeakageReport(True, (), ("b", "c"), "integrity"), chain)
               == [Violation("DisconnectedPath", "b -> c")])
    fx = tmp_path / "fx"
    shutil.copytree(FIXTURES / "replay_aes_repair", fx)
    for p in fx.glob("*.txt"):
        if '"vulnerability_found"' in p.read_text():
            doc = json.loads(p.read_text())
            doc["vulnerability_found"] = False
            p.write_text(json.dumps(doc))
    code = main(["analyze", str(DESIGNS / "aes_trojan_leak.v"), "--assets", "top:KEY:key",
                 "--backend", "replay", "--replay-dir", str(fx), "--out", str(tmp_path / "r.json")])
    capsys.readouterr()
    ok = all(got) and code == 4 and (tmp_path / "r.json").exists()
    report("invalid reports flagged, exit code 4", ok, f"violation checks {got}, exit {code}")
