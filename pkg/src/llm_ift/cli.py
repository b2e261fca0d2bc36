"""Command-line entry point.

Exit codes:
  0  analyzed, no leakage (or command completed)
  1  analyzed, leakage found
  2  usage, parse, manifest or configuration error
  3  backend failure
  4  report failed validation
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import BUNDLED_SUITE, emit_metrics, load_manifest, run_benchmarks
from .config import ToolConfig, load_config
from .errors import BackendError, ConfigError, IFTError, PipelineError
from .graph import build_graph, to_dot, to_json, topo_sort
from .llm.backends import HttpBackend, RecordingBackend, make_backend
from .llm.model import BackendConfig
from .llm.pipeline import MODES, analyze
from .report import dumps_report
from .rtl.unit import load_unit, require_top, resolve_hierarchy
from .taint.engine import AssetSeed, propagate

EXIT_OK = 0
EXIT_LEAK = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_INVALID = 4

log = logging.getLogger("llm_ift")


class UsageError(IFTError):
    pass


def _err(msg: str):
    print(f"llm-ift: error: {msg}", file=sys.stderr)


def _write(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _load(sources, top=None):
    try:
        unit = load_unit(sources, top)
    except OSError as exc:
        raise UsageError(f"cannot read {exc.filename}: {exc.strerror}") from None
    for d in unit.diagnostics:
        print(d, file=sys.stderr)
    if unit.errors():
        raise UsageError(f"{len(unit.errors())} error(s) in design sources")
    return unit


def _seeds(args) -> list:
    out = []
    for text in args.assets or []:
        try:
            out.append(AssetSeed.parse(text))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return out


def _config(args) -> ToolConfig:
    cfg = load_config(getattr(args, "config", None))
    backend = cfg.backend.to_json()
    for key, attr in (("kind", "backend"), ("endpoint", "endpoint"), ("model", "model"),
                      ("fixtures_dir", "replay_dir")):
        val = getattr(args, attr, None)
        if val is not None:
            backend[key] = val
    cfg = cfg.replace(
        backend=BackendConfig.from_json(backend),
        prompt_dir=getattr(args, "prompt_dir", None),
        context_budget_chars=getattr(args, "budget", None),
        workers=getattr(args, "workers", None),
        include_clocks=True if getattr(args, "include_clocks", False) else None,
    )
    if getattr(args, "verbose", False):
        print("effective config: " + json.dumps(cfg.to_json(), sort_keys=True), file=sys.stderr)
    return cfg


def _analysis(args, cfg: ToolConfig, backend_factory=None):
    unit = _load(args.sources, args.top)
    require_top(unit)
    seeds = _seeds(args)
    if not seeds:
        raise UsageError("no asset seeds given; pass --assets module:signal[:label]")
    g = build_graph(resolve_hierarchy(unit), unit.module_names)
    schedule = topo_sort(g)
    if backend_factory is None:
        backend = make_backend(cfg.backend, unit=unit, seeds=seeds, g=g, schedule=schedule,
                               include_clocks=cfg.include_clocks)
    else:
        backend = backend_factory()
    result = analyze(unit, seeds, backend, cfg.technique_defs(), cfg.context_budget_chars,
                     args.mode, cfg.templates(), g, schedule)
    return unit, result


def _finish(unit, result, out) -> int:
    r = result.report
    _write(dumps_report(r), out)
    for s in result.stats:
        log.info("%s: %.3fs, %d prompt chars, %d reply chars, %d attempt(s)",
                 s.module, s.seconds, s.prompt_chars, s.reply_chars, s.attempts)
    if result.violations:
        for v in result.violations:
            print(f"llm-ift: invalid report: {v}", file=sys.stderr)
        print(f"{unit.top}: report failed validation ({len(result.violations)} violation(s))", file=sys.stderr)
        return EXIT_INVALID
    if r.vulnerability_found:
        print(f"{unit.top}: leakage found ({r.leakage_type}) via {' -> '.join(r.leakage_path)}",
              file=sys.stderr)
        return EXIT_LEAK
    print(f"{unit.top}: no leakage found", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    unit, result = _analysis(args, cfg)
    return _finish(unit, result, args.out)


def cmd_graph(args) -> int:
    unit = _load(args.sources, args.top)
    g = build_graph(resolve_hierarchy(unit), unit.module_names)
    schedule = topo_sort(g)
    if args.dot:
        _write(to_dot(g, schedule), args.out)
    else:
        _write(json.dumps(to_json(g, schedule), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_taint(args) -> int:
    unit = _load(args.sources, args.top)
    seeds = _seeds(args)
    if not seeds:
        raise UsageError("no asset seeds given; pass --assets module:signal[:label]")
    g = build_graph(resolve_hierarchy(unit), unit.module_names)
    state = propagate(unit, g, seeds, include_clocks=args.include_clocks)
    _write(json.dumps(state.to_json(provenance=args.provenance), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(args.manifest or BUNDLED_SUITE)
    modes = list(MODES) if args.mode == "both" else [args.mode]
    runs = [run_benchmarks(manifest, cfg, m, cfg.workers) for m in modes]
    _write(emit_metrics(runs, args.format, timings=args.timings), args.out)
    for m in runs:
        print(f"{m.mode}: {m.correct}/{m.total} correct, {m.false_positives}/{m.negatives} false positives",
              file=sys.stderr)
    return EXIT_OK


def cmd_record(args) -> int:
    cfg = _config(args)
    if cfg.backend.kind != "http":
        raise UsageError(f"record needs an http backend (configured: {cfg.backend.kind}); nothing to record")
    target = Path(args.fixtures_dir)
    if target.exists() and not target.is_dir():
        raise UsageError(f"{target} is not a directory")
    if target.is_dir() and any(target.glob("*.txt")) and not args.force:
        raise UsageError(f"{target} already holds fixtures; pass --force to overwrite")
    recorder = []

    def factory():
        recorder.append(RecordingBackend(HttpBackend(cfg.backend), target))
        return recorder[0]

    unit, result = _analysis(args, cfg, factory)
    code = _finish(unit, result, args.out)
    print(f"recorded {len(recorder[0].written)} response(s) in {target}", file=sys.stderr)
    return EXIT_INVALID if code == EXIT_INVALID else EXIT_OK


def _design_args(p, assets=True):
    p.add_argument("sources", nargs="+", help="Verilog source files")
    p.add_argument("--top", help="top module (default: the unique uninstantiated module)")
    if assets:
        p.add_argument("--assets", nargs="+", action="extend", metavar="MODULE:SIGNAL[:LABEL]",
                       help="security assets to track")


def _config_args(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--backend", choices=["http", "replay", "mock-taint"], help="backend kind")
    p.add_argument("--endpoint", help="chat-completions endpoint (http backend)")
    p.add_argument("--model", help="model name (http backend)")
    p.add_argument("--prompt-dir", help="directory with prompt templates and technique texts")
    p.add_argument("--budget", type=int, help="context budget in characters")
    p.add_argument("--include-clocks", action="store_true", help="let clock/reset events carry taint")
    p.add_argument("-v", "--verbose", action="store_true", help="echo the effective config and timings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llm-ift", description="Information flow tracking for Verilog RTL.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze a design and write a leakage report")
    _design_args(p)
    _config_args(p)
    p.add_argument("--replay-dir", help="fixture directory (replay backend)")
    p.add_argument("--mode", choices=MODES, default="divide-and-conquer")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("graph", help="print the module dependency graph")
    _design_args(p, assets=False)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--dot", action="store_true", help="Graphviz DOT output")
    fmt.add_argument("--json", action="store_true", help="JSON output (default)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("taint", help="run net-level taint propagation")
    _design_args(p)
    p.add_argument("--provenance", action="store_true", help="include provenance chains")
    p.add_argument("--include-clocks", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_taint)

    p = sub.add_parser("bench", help="run a benchmark manifest")
    p.add_argument("--manifest", help="manifest JSON (default: the bundled suite)")
    _config_args(p)
    p.add_argument("--replay-dir", help="fixture directory (replay backend)")
    p.add_argument("--mode", choices=list(MODES) + ["both"], default="divide-and-conquer")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--workers", type=int)
    p.add_argument("--timings", action="store_true", help="include wall times (output no longer byte-stable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("record", help="analyze with a live backend and save replay fixtures")
    _design_args(p)
    _config_args(p)
    p.add_argument("--fixtures-dir", required=True, help="where to write <hash>.txt fixtures")
    p.add_argument("--force", action="store_true", help="overwrite existing fixtures")
    p.add_argument("--mode", choices=MODES, default="divide-and-conquer")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_record)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (PipelineError, BackendError) as exc:
        _err(str(exc))
        return EXIT_BACKEND
    except (UsageError, ConfigError, IFTError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
