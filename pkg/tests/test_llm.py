import json
import random
import socket

import pytest
from hypothesis import given, settings, strategies as st

from llm_ift.errors import (FixtureMiss, MissingAncestorFinding, PipelineError, SchemaError,
                            TransportError)
from llm_ift.graph import topo_sort
from llm_ift.llm.backends import (HttpBackend, MockTaintBackend, RecordingBackend, ReplayBackend,
                                  fixture_key)
from llm_ift.llm.model import AnalysisContext, BackendConfig, Flow, ModuleFinding, PromptBundle
from llm_ift.llm.parsing import parse_finding
from llm_ift.llm.pipeline import analyze, ask, run_pipeline
from llm_ift.llm.prompts import (formulate_module_prompt, load_techniques, render,
                                 serialize_findings)
from llm_ift.errors import ConfigError
from llm_ift.report import parse_report

from conftest import AES_SEEDS, FIXTURES, SOC_SEEDS, graph_of
from httpfake import FakeChat

VALID = '{"sensitive_sources": ["key"], "influenced_assets": ["load"], "transformations": ["xor"],' \
        ' "flows": [{"source": "key", "sink": "load", "scope": "internal"}]}'


def finding(m, n=0):
    return ModuleFinding(m, ("s%d" % n,), ("o%d" % n,), ("x",), (Flow("s%d" % n, "o%d" % n),))


# prompts

def test_tsc_prompt_snapshot(aes):
    g, s = graph_of(aes)
    ctx = AnalysisContext(techniques=load_techniques())
    b = formulate_module_prompt("TSC", ctx, g, aes.module("TSC"), s, None, AES_SEEDS)
    assert b.user_text == (FIXTURES / "tsc_prompt.txt").read_text()
    assert b.expected_schema == "finding" and b.subject == "TSC"


def test_overview_only_first(aes):
    g, s = graph_of(aes)
    ctx = AnalysisContext(techniques=load_techniques())
    ctx.add(finding("TSC"))
    b = formulate_module_prompt("lfsr_counter", ctx, g, aes.module("lfsr_counter"), s)
    assert "Modules in analysis order" not in b.user_text
    assert "(given with the first module)" in b.user_text
    # lfsr_counter has no ancestors, so TSC's finding is not in its context
    assert "- TSC:" not in b.user_text


def test_context_holds_ancestors_in_order(aes):
    g, s = graph_of(aes)
    ctx = AnalysisContext()
    ctx.add(finding("TSC", 1))
    ctx.add(finding("lfsr_counter", 2))
    text = formulate_module_prompt("top", ctx, g, aes.module("top"), s).user_text
    assert text.index("- TSC:") < text.index("- lfsr_counter:")


def test_missing_ancestor(aes):
    g, s = graph_of(aes)
    ctx = AnalysisContext()
    ctx.add(finding("TSC"))
    with pytest.raises(MissingAncestorFinding) as e:
        formulate_module_prompt("top", ctx, g, aes.module("top"), s)
    assert e.value.missing == ["lfsr_counter"]


def test_elision_drops_oldest():
    fs = [finding(f"m{i}", i) for i in range(10)]
    full = serialize_findings(fs, 10 ** 6)
    assert "elided" not in full and full.count("\n") == 9
    one = len(full.splitlines()[0])
    cut = serialize_findings(fs, one * 3 + 40)
    lines = cut.splitlines()
    assert lines[0] == "[elided 7 findings]"
    assert [l.split(":")[0] for l in lines[1:]] == ["- m7", "- m8", "- m9"]
    assert serialize_findings([], 100) == "(none)"


def test_render_unknown_placeholder():
    assert render("a {{x}} b", {"x": "1"}) == "a 1 b"
    with pytest.raises(ConfigError):
        render("{{y}}", {})


# parsing

def test_parse_plain_fenced_prose():
    for raw in (VALID, f"```json\n{VALID}\n```", f"Here you go:\n{VALID}\nHope this helps {{"):
        f = parse_finding(raw, "TSC")
        assert f.sensitive_sources == ("key",)
        assert f.flows == (Flow("key", "load", "internal"),)


def test_parse_normalizes_declared_case():
    f = parse_finding('{"sensitive_sources": ["KEY"], "flows": [{"source": "Key", "sink": "LOAD"}]}',
                      "TSC", ["key", "load"])
    assert f.sensitive_sources == ("key",)
    assert f.flows == (Flow("key", "load", "internal"),)


def test_parse_ambiguous_case_kept():
    f = parse_finding('{"sensitive_sources": ["KEY"]}', "m", ["key", "Key"])
    assert f.sensitive_sources == ("KEY",)


MALFORMED = [
    "",
    "no json here",
    "{",
    "{\"sensitive_sources\": [\"a\"]",
    "```json\n{\"flows\": [}\n```",
    "[1, 2, 3]",
    "{\"sensitive_sources\": \"key\"}",
    "{\"sensitive_sources\": [1]}",
    "{\"influenced_assets\": [null]}",
    "{\"transformations\": {\"a\": 1}}",
    "{\"flows\": [{\"source\": \"a\"}]}",
    "{\"flows\": [{\"sink\": \"a\"}]}",
    "{\"flows\": [{\"source\": \"a\", \"sink\": \"b\", \"scope\": \"sideways\"}]}",
    "{\"flows\": [{\"source\": \"   \", \"sink\": \"b\"}]}",
    "{\"flows\": [{\"source\": \"a\", \"sink\": \"\"}]}",
    "{\"flows\": \"a->b\"}",
    "{\"flows\": [\"a->b\"]}",
    "Sure! ```\n{'sensitive_sources': ['key']}\n```",
    "{sensitive_sources: [key]}",
    "The answer is {\"flows\": [{\"source\": 3, \"sink\": \"b\"}]} done",
    "{\"sensitive_sources\": [\"a\"],}",
    "null",
]


@pytest.mark.parametrize("raw", MALFORMED)
def test_malformed_rejected(raw):
    with pytest.raises(SchemaError):
        parse_finding(raw, "m")


def test_malformed_corpus_size():
    assert len(MALFORMED) >= 20


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=200))
def test_parse_total(raw):
    try:
        f = parse_finding(raw, "m")
    except SchemaError:
        return
    assert isinstance(f, ModuleFinding)
    assert all(isinstance(x, str) for x in f.sensitive_sources + f.influenced_assets)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_parse_mutations(seed):
    rng = random.Random(seed)
    text = list(f"```json\n{VALID}\n```")
    for _ in range(rng.randint(1, 4)):
        i = rng.randrange(len(text))
        op = rng.random()
        if op < 0.4:
            del text[i]
        elif op < 0.8:
            text.insert(i, rng.choice('{}[]",: xa'))
        else:
            text[i] = rng.choice('{}[]",: xa')
    raw = "".join(text)
    try:
        f = parse_finding(raw, "m")
    except SchemaError:
        return
    # anything accepted is a complete, schema-valid finding
    for fl in f.flows:
        assert fl.source.strip() and fl.sink.strip() and fl.scope in ("internal", "external")


# backends and pipeline

def test_fixture_key_stable():
    b = PromptBundle("sys", "user", "finding", subject="A")
    assert fixture_key(b) == fixture_key(PromptBundle("sys", "user", "finding", subject="B"))
    assert fixture_key(b) != fixture_key(PromptBundle("sy", "suser", "finding"))
    assert len(fixture_key(b)) == 64


def test_replay_miss(tmp_path):
    with pytest.raises(FixtureMiss):
        ReplayBackend(tmp_path).complete(PromptBundle("s", "u", "finding"))


def test_replay_repair_fixture(aes):
    backend = ReplayBackend(FIXTURES / "replay_aes_repair")
    runs = [analyze(aes, AES_SEEDS, backend, load_techniques()) for _ in range(2)]
    assert runs[0].report == runs[1].report
    assert runs[0].report.vulnerability_found
    assert list(runs[0].report.leakage_path) == ["TSC", "top"]
    attempts = {s.module: s.attempts for s in runs[0].stats}
    assert attempts["TSC"] == 2
    assert all(a == 1 for m, a in attempts.items() if m != "TSC")


class Scripted:
    def __init__(self, replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, bundle):
        self.prompts.append(bundle)
        return self.replies.pop(0)


def test_ask_repair_then_fail():
    bundle = PromptBundle("s", "u", "finding", subject="m")
    ok = Scripted(["nope", VALID])
    f, reply_chars, _, attempts = ask(ok, bundle, lambda r: parse_finding(r, "m"))
    assert attempts == 2 and f.sensitive_sources == ("key",)
    assert ok.prompts[1].user_text.startswith('Your previous reply was not valid JSON for schema "finding"')
    assert "nope" in ok.prompts[1].user_text
    bad = Scripted(["nope", "still nope", VALID])
    with pytest.raises(PipelineError) as e:
        ask(bad, bundle, lambda r: parse_finding(r, "m"))
    assert e.value.module == "m" and len(bad.prompts) == 2


def test_pipeline_aes(aes):
    g, s = graph_of(aes)
    backend = MockTaintBackend(aes, AES_SEEDS, g, s)
    ctx = run_pipeline(aes, g, s, AES_SEEDS, backend, AnalysisContext(techniques=load_techniques()))
    assert ctx.modules() == ["TSC", "lfsr_counter", "top"]
    assert ctx.finding("lfsr_counter").empty
    r = analyze(aes, AES_SEEDS, backend, load_techniques())
    assert r.report.vulnerability_found and r.violations == []
    assert r.report.leakage_type == "confidentiality"


def test_pipeline_soc(soc):
    backend = MockTaintBackend(soc, SOC_SEEDS)
    r = analyze(soc, SOC_SEEDS, backend, load_techniques())
    assert list(r.report.leakage_path) == ["config_mem_unit", "status_transmitter_unit", "soc_integration_top"]
    assert r.violations == []
    mono = analyze(soc, SOC_SEEDS, backend, load_techniques(), mode="monolithic")
    assert mono.report == r.report
    assert [s.module for s in mono.stats] == ["soc_integration_top"]


def test_pipeline_clean(aes_clean):
    r = analyze(aes_clean, AES_SEEDS, MockTaintBackend(aes_clean, AES_SEEDS), load_techniques())
    assert not r.report.vulnerability_found and r.violations == []


def test_recording_roundtrip(aes, tmp_path):
    rec = RecordingBackend(MockTaintBackend(aes, AES_SEEDS), tmp_path)
    first = analyze(aes, AES_SEEDS, rec, load_techniques())
    assert len(rec.written) == 4
    again = analyze(aes, AES_SEEDS, ReplayBackend(tmp_path), load_techniques())
    assert again.report == first.report


# http

def chat_config(url, **kw):
    return BackendConfig(kind="http", endpoint=url, model="m-1", **kw)


def test_http_payload_and_auth(monkeypatch):
    monkeypatch.setenv("LLM_IFT_API_KEY", "sekret")
    with FakeChat(lambda body: "hello") as fake:
        out = HttpBackend(chat_config(fake.url, temperature=0.25)).complete(PromptBundle("S", "U", "finding"))
    assert out == "hello"
    req = fake.requests[0]
    assert req["path"] == "/v1/chat/completions"
    assert req["headers"]["Authorization"] == "Bearer sekret"
    assert req["body"] == {"model": "m-1", "temperature": 0.25,
                           "messages": [{"role": "system", "content": "S"}, {"role": "user", "content": "U"}]}


def test_http_no_key_no_header(monkeypatch):
    monkeypatch.delenv("LLM_IFT_API_KEY", raising=False)
    with FakeChat(lambda body: "x") as fake:
        HttpBackend(chat_config(fake.url + "/chat/completions")).complete(PromptBundle("S", "U", "finding"))
    assert "Authorization" not in fake.requests[0]["headers"]
    assert fake.requests[0]["path"] == "/v1/chat/completions"


def test_http_retry_backoff_then_fail():
    delays = []
    with FakeChat() as fake:
        fake.queue = [(503, "")] * 5
        backend = HttpBackend(chat_config(fake.url, max_retries=2), sleep=delays.append)
        with pytest.raises(TransportError) as e:
            backend.complete(PromptBundle("S", "U", "finding"))
    assert len(fake.requests) == 3
    assert delays == [1.0, 2.0]
    assert e.value.attempts == 3 and e.value.status == 503


def test_http_retry_recovers():
    delays = []
    with FakeChat(lambda body: "ok") as fake:
        fake.queue = [(429, "")]
        assert HttpBackend(chat_config(fake.url), sleep=delays.append).complete(
            PromptBundle("S", "U", "finding")) == "ok"
    assert delays == [1.0]


def test_http_client_error_not_retried():
    with FakeChat() as fake:
        fake.queue = [(400, "")] * 3
        with pytest.raises(TransportError):
            HttpBackend(chat_config(fake.url), sleep=lambda d: None).complete(PromptBundle("S", "U", "finding"))
    assert len(fake.requests) == 1


def test_http_unreachable():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    delays = []
    backend = HttpBackend(chat_config(f"http://127.0.0.1:{port}", max_retries=1, timeout=2.0), sleep=delays.append)
    with pytest.raises(TransportError) as e:
        backend.complete(PromptBundle("S", "U", "finding"))
    assert e.value.attempts == 2 and delays == [1.0]


def test_http_pipeline_end_to_end(aes):
    mock = MockTaintBackend(aes, AES_SEEDS)
    bundles = {}

    def respond(body):
        msgs = body["messages"]
        b = bundles[(msgs[0]["content"], msgs[1]["content"])]
        return mock.complete(b)

    class Spy:
        def __init__(self, inner):
            self.inner = inner

        def complete(self, b):
            bundles[(b.system_text, b.user_text)] = b
            return self.inner.complete(b)

    with FakeChat(respond) as fake:
        r = analyze(aes, AES_SEEDS, Spy(HttpBackend(chat_config(fake.url))), load_techniques())
    assert r.report == analyze(aes, AES_SEEDS, mock, load_techniques()).report
    assert len(fake.requests) == 4


def test_backend_config_validation():
    with pytest.raises(ConfigError):
        BackendConfig(kind="http")
    with pytest.raises(ConfigError):
        BackendConfig(kind="replay")
    with pytest.raises(ConfigError):
        BackendConfig.from_json({"kind": "mock-taint", "bogus": 1})
    cfg = BackendConfig(kind="http", endpoint="http://x", model="m")
    assert BackendConfig.from_json(cfg.to_json()) == cfg
