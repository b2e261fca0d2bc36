import json
import shutil

import pytest

from llm_ift.cli import main
from llm_ift.llm.backends import MockTaintBackend
from llm_ift.llm.model import PromptBundle

from conftest import AES_SEEDS, DESIGNS, load
from httpfake import FakeChat

AES = str(DESIGNS / "aes_trojan_leak.v")
AES_CLEAN = str(DESIGNS / "aes_trojan_clean.v")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_leak_and_clean(capsys):
    code, out, err = run(capsys, "analyze", AES, "--assets", "top:KEY:key")
    assert code == 1
    assert json.loads(out)["leakage_path"] == ["TSC", "top"]
    assert "leakage found" in err
    code, out, _ = run(capsys, "analyze", AES_CLEAN, "--assets", "top:KEY:key")
    assert code == 0 and json.loads(out)["vulnerability_found"] is False


def test_analyze_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert run(capsys, "analyze", AES, "--assets", "top:KEY", "--out", str(out))[0] == 1
    assert json.loads(out.read_text())["vulnerability_found"] is True


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "analyze", AES)[0] == 2
    assert run(capsys, "analyze", str(tmp_path / "none.v"), "--assets", "top:KEY")[0] == 2
    assert run(capsys, "analyze", AES, "--assets", "top")[0] == 2
    assert run(capsys, "analyze", AES, "--assets", "top:NOPE")[0] == 2
    assert run(capsys, "analyze", AES, "--assets", "top:KEY", "--budget", "10")[0] == 2
    bad = tmp_path / "bad.v"
    bad.write_text("module m(input a, output y); assign y = ; endmodule\n")
    code, _, err = run(capsys, "analyze", str(bad), "--assets", "m:a")
    assert code == 2 and "bad.v:1:" in err
    with pytest.raises(SystemExit) as e:
        main(["analyze"])
    assert e.value.code == 2


def test_cyclic_design(capsys, tmp_path):
    p = tmp_path / "cyc.v"
    p.write_text("module a(input x, output y); b u(.x(x), .y(y)); endmodule\n"
                 "module b(input x, output y); a u(.x(x), .y(y)); endmodule\n")
    code, _, err = run(capsys, "graph", str(p), "--top", "a")
    assert code == 2 and "cycle" in err


def test_graph_json_and_dot(capsys):
    code, out, _ = run(capsys, "graph", AES)
    doc = json.loads(out)
    assert code == 0
    assert doc["order"] == ["TSC", "lfsr_counter", "top"]
    code, out, _ = run(capsys, "graph", AES, "--dot")
    assert out.startswith("digraph")


def test_taint_command(capsys):
    code, out, _ = run(capsys, "taint", AES, "--assets", "top:KEY:key", "--provenance")
    assert code == 0
    assert "capacitance" in out


def test_bench_table(capsys):
    code, out, _ = run(capsys, "bench", "--format", "table", "--mode", "both")
    assert code == 0
    lines = out.splitlines()
    assert "with divide and conquer | 100.00% | 0.00%" in lines
    assert any(l.startswith("w/o divide and conquer") for l in lines)


def test_bench_bad_manifest(capsys, tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"benchmarks": [{"name": "x"}]}')
    code, _, err = run(capsys, "bench", "--manifest", str(p))
    assert code == 2 and "entry 0" in err
    p.write_text('{"benchmarks": []}')
    assert run(capsys, "bench", "--manifest", str(p))[0] == 2


def test_bench_byte_stable(capsys):
    a = run(capsys, "bench")[1]
    b = run(capsys, "bench", "--workers", "3")[1]
    assert a == b


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"context_budget_chars": 5000, "techniques": ["net-level"]}))
    assert run(capsys, "analyze", AES, "--assets", "top:KEY", "--config", str(cfg))[0] == 1
    cfg.write_text(json.dumps({"surprise": 1}))
    assert run(capsys, "analyze", AES, "--assets", "top:KEY", "--config", str(cfg))[0] == 2


def test_record_requires_http(capsys, tmp_path):
    code, _, err = run(capsys, "record", AES, "--assets", "top:KEY", "--fixtures-dir", str(tmp_path / "fx"))
    assert code == 2 and "http" in err


def record_server():
    unit = load("aes_trojan_leak.v", "top")
    mock = MockTaintBackend(unit, AES_SEEDS)
    # the server only sees the text; recover the subject from the module heading
    def respond(body):
        system, user = (m["content"] for m in body["messages"])
        if "## Module under analysis" in user:
            subject = user.split("## Module under analysis\n", 1)[1].split("\n", 1)[0]
            return mock.complete(PromptBundle(system, user, "finding", subject))
        return mock.complete(PromptBundle(system, user, "report", "top"))
    return FakeChat(respond)


def test_record_then_replay(capsys, tmp_path):
    fx = tmp_path / "fx"
    with record_server() as fake:
        args = ["record", AES, "--assets", "top:KEY:key", "--backend", "http", "--endpoint", fake.url,
                "--model", "m", "--fixtures-dir", str(fx)]
        code, recorded, err = run(capsys, *args)
        assert code == 0 and "recorded 4 response(s)" in err
        assert run(capsys, *args)[0] == 2
        assert run(capsys, *args, "--force")[0] == 0
    assert len(list(fx.glob("*.txt"))) == 4
    code, replayed, _ = run(capsys, "analyze", AES, "--assets", "top:KEY:key", "--backend", "replay",
                            "--replay-dir", str(fx))
    assert code == 1 and replayed == recorded


def test_replay_miss_is_backend_error(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", AES, "--assets", "top:KEY", "--backend", "replay",
                       "--replay-dir", str(tmp_path))
    assert code == 3 and "no replay fixture" in err


def test_invalid_report_exit_4(capsys, tmp_path):
    fx = tmp_path / "fx"
    shutil.copytree(__import__("conftest").FIXTURES / "replay_aes_repair", fx)
    for p in fx.glob("*.txt"):
        text = p.read_text()
        if '"vulnerability_found"' in text:
            doc = json.loads(text)
            doc["leakage_path"] = ["TSC", "phantom", "top"]
            p.write_text(json.dumps(doc))
    code, out, err = run(capsys, "analyze", AES, "--assets", "top:KEY:key", "--backend", "replay",
                         "--replay-dir", str(fx))
    assert code == 4
    assert "UnknownModule: phantom" in err
    assert json.loads(out)["leakage_path"] == ["TSC", "phantom", "top"]
