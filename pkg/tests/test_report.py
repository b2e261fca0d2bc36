import json

import pytest

from llm_ift.errors import IncompleteContext, SchemaError
from llm_ift.graph import build_graph
from llm_ift.llm.model import AnalysisContext, ModuleFinding
from llm_ift.report import (LeakageReport, Transformation, Violation, dumps_report,
                            formulate_final_prompt, parse_report, validate_report)

from conftest import graph_of

LEAK = {
    "vulnerability_found": True,
    "vulnerable_modules": ["TSC", "top"],
    "leakage_path": ["TSC", "top"],
    "leakage_type": "confidentiality",
    "explanation": "key modulates load",
    "transformations": [{"from_module": "TSC", "source": "key", "sink": "load", "to_module": "top"}],
}


def test_parse_full():
    r = parse_report("Result:\n```json\n" + json.dumps(LEAK) + "\n```")
    assert r.vulnerability_found
    assert r.leakage_path == ("TSC", "top")
    assert r.transformations == (Transformation("TSC", "key", "load", "top"),)


def test_parse_minimal_defaults():
    r = parse_report('{"vulnerability_found": false}')
    assert r == LeakageReport(False)
    assert parse_report('{"vulnerability_found": true}').leakage_type == "other"


def test_unknown_type_mapped_to_other():
    doc = dict(LEAK, leakage_type="power side channel")
    r = parse_report(json.dumps(doc))
    assert r.leakage_type == "other"
    assert r.explanation.endswith("(reported leakage type: power side channel)")
    assert parse_report(json.dumps(dict(LEAK, leakage_type="Timing side-channel"))).leakage_type \
        == "timing_side_channel"


@pytest.mark.parametrize("raw", [
    "", "{}", '{"vulnerability_found": "yes"}', '{"vulnerability_found": true, "leakage_path": "TSC"}',
    '{"vulnerability_found": true, "transformations": [{"source": "a"}]}',
])
def test_parse_rejects(raw):
    with pytest.raises(SchemaError):
        parse_report(raw)


def test_canonical_bytes():
    r = parse_report(json.dumps(dict(reversed(list(LEAK.items())))))
    text = dumps_report(r)
    assert text.endswith("}\n")
    assert list(json.loads(text)) == ["vulnerability_found", "vulnerable_modules", "leakage_path",
                                      "leakage_type", "explanation", "transformations"]
    assert dumps_report(parse_report(text)) == text


def test_valid_report_has_no_violations(aes):
    g, _ = graph_of(aes)
    assert validate_report(parse_report(json.dumps(LEAK)), g) == []
    assert validate_report(LeakageReport(False), g) == []


def test_unknown_module(aes):
    g, _ = graph_of(aes)
    r = parse_report(json.dumps(dict(LEAK, leakage_path=["TSC", "ghost", "top"])))
    assert Violation("UnknownModule", "ghost") in validate_report(r, g)


def test_disconnected_path():
    g = build_graph([("a", "b", "u0"), ("c", "d", "u1")])
    r = LeakageReport(True, ("a", "c"), ("b", "c"), "confidentiality")
    assert validate_report(r, g) == [Violation("DisconnectedPath", "b -> c")]


def test_siblings_connected(aes):
    g, _ = graph_of(aes)
    r = LeakageReport(True, (), ("lfsr_counter", "TSC", "top"), "confidentiality")
    assert validate_report(r, g) == []


def test_inconsistent_verdict(aes):
    g, _ = graph_of(aes)
    r = LeakageReport(False, ("TSC",), ("TSC",), "confidentiality")
    kinds = {(v.kind, v.element) for v in validate_report(r, g)}
    assert kinds == {("InconsistentVerdict", "vulnerable_modules"),
                     ("InconsistentVerdict", "leakage_path"),
                     ("InconsistentVerdict", "leakage_type")}
    assert {v.element for v in validate_report(LeakageReport(True), g)} == {"leakage_path", "leakage_type"}


def test_final_prompt_needs_all_findings(aes):
    g, s = graph_of(aes)
    ctx = AnalysisContext()
    ctx.add(ModuleFinding("TSC"))
    with pytest.raises(IncompleteContext) as e:
        formulate_final_prompt(ctx, g, s)
    assert e.value.missing == ["lfsr_counter", "top"]
    ctx.add(ModuleFinding("lfsr_counter"))
    ctx.add(ModuleFinding("top"))
    b = formulate_final_prompt(ctx, g, s, top="top")
    assert b.expected_schema == "report"
    assert b.user_text.index("- TSC:") < b.user_text.index("- lfsr_counter:") < b.user_text.index("- top:")


def test_violation_str():
    assert str(Violation("UnknownModule", "x", "in leakage_path")) == "UnknownModule: x (in leakage_path)"
