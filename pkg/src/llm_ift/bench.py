"""Benchmark sweeps over labeled designs: success rate and false-positive rate."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import EmptyBenchmark, IFTError, ManifestError
from .llm.backends import make_backend
from .llm.pipeline import MODES, analyze
from .rtl.unit import load_unit, require_top
from .taint.engine import AssetSeed

LABELS = ("leakage", "clean")
APPROACH = {"divide-and-conquer": "with divide and conquer", "monolithic": "w/o divide and conquer"}
BUNDLED_SUITE = Path(__file__).resolve().parent / "data" / "designs" / "suite.json"


@dataclass(frozen=True)
class BenchmarkEntry:
    name: str
    sources: tuple
    top: Optional[str]
    assets: tuple  # of AssetSeed
    label: str
    expected_path: Optional[tuple] = None


@dataclass(frozen=True)
class BenchmarkManifest:
    path: str
    entries: tuple


def _field(entry: dict, i: int, key: str, kind, required=True):
    if key not in entry:
        if required:
            raise ManifestError("missing field", i, key)
        return None
    val = entry[key]
    if not isinstance(val, kind):
        raise ManifestError(f"expected {kind.__name__}", i, key)
    return val


def load_manifest(path) -> BenchmarkManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("benchmarks"), list):
        raise ManifestError("manifest must be an object with a 'benchmarks' list")
    base = path.parent
    entries = []
    names = set()
    for i, e in enumerate(doc["benchmarks"]):
        if not isinstance(e, dict):
            raise ManifestError("entry must be an object", i)
        name = _field(e, i, "name", str)
        if name in names:
            raise ManifestError(f"duplicate name '{name}'", i, "name")
        names.add(name)
        sources = _field(e, i, "sources", list)
        if not sources or not all(isinstance(s, str) for s in sources):
            raise ManifestError("expected a nonempty list of paths", i, "sources")
        resolved = []
        for s in sources:
            p = Path(s) if Path(s).is_absolute() else base / s
            if not p.is_file():
                raise ManifestError(f"source file not found: {p}", i, "sources")
            resolved.append(str(p))
        top = _field(e, i, "top", str, required=False)
        assets = []
        for a in _field(e, i, "assets", list):
            if not isinstance(a, dict) or not isinstance(a.get("module"), str) \
                    or not isinstance(a.get("signal"), str):
                raise ManifestError("asset needs string 'module' and 'signal'", i, "assets")
            assets.append(AssetSeed(a["module"], a["signal"], str(a.get("label", "asset"))))
        label = _field(e, i, "label", str)
        if label not in LABELS:
            raise ManifestError(f"label must be 'leakage' or 'clean', got '{label}'", i, "label")
        expected = _field(e, i, "expected_path", list, required=False)
        if expected is not None and not all(isinstance(x, str) for x in expected):
            raise ManifestError("expected a list of module names", i, "expected_path")
        entries.append(BenchmarkEntry(name, tuple(resolved), top, tuple(assets), label,
                                      tuple(expected) if expected is not None else None))
    return BenchmarkManifest(str(path), tuple(entries))


def subsequence(needle, hay) -> bool:
    """True when ``needle`` appears in ``hay`` in order (gaps allowed)."""
    it = iter(hay)
    return all(x in it for x in needle)


@dataclass
class EntryResult:
    name: str
    label: str
    verdict: Optional[bool]
    correct: bool
    path: tuple = ()
    path_match: Optional[bool] = None
    error: Optional[str] = None
    seconds: float = 0.0

    def to_json(self, timings: bool = False) -> dict:
        doc = {
            "name": self.name,
            "label": self.label,
            "verdict": self.verdict,
            "correct": self.correct,
            "leakage_path": list(self.path),
            "path_match": self.path_match,
            "error": self.error,
        }
        if timings:
            doc["seconds"] = round(self.seconds, 6)
        return doc


@dataclass
class Metrics:
    mode: str
    total: int
    correct: int
    negatives: int
    false_positives: int
    entries: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def success_rate(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def false_positive_rate(self) -> float:
        return self.false_positives / self.negatives if self.negatives else 0.0

    @classmethod
    def from_entries(cls, mode: str, entries: list, seconds: float = 0.0) -> "Metrics":
        negatives = sum(1 for e in entries if e.label == "clean")
        fps = sum(1 for e in entries if e.label == "clean" and e.verdict is True)
        return cls(mode, len(entries), sum(1 for e in entries if e.correct), negatives, fps,
                   list(entries), seconds)

    def to_json(self, timings: bool = False) -> dict:
        doc = {
            "mode": self.mode,
            "total": self.total,
            "correct": self.correct,
            "success_rate": round(self.success_rate, 6),
            "negatives": self.negatives,
            "false_positives": self.false_positives,
            "false_positive_rate": round(self.false_positive_rate, 6),
            "path_matches": sum(1 for e in self.entries if e.path_match),
            "entries": [e.to_json(timings) for e in self.entries],
        }
        if timings:
            doc["seconds"] = round(self.seconds, 6)
        return doc


def run_entry(entry: BenchmarkEntry, config, mode: str) -> EntryResult:
    """Analyze one design; any failure is recorded on the result, never raised."""
    t0 = time.perf_counter()
    try:
        unit = load_unit(entry.sources, entry.top)
        errs = unit.errors()
        if errs:
            raise IFTError(str(errs[0]))
        require_top(unit)
        backend = make_backend(config.backend, unit=unit, seeds=entry.assets,
                               include_clocks=config.include_clocks)
        result = analyze(unit, entry.assets, backend, config.technique_defs(),
                         config.context_budget_chars, mode, config.templates())
    except (IFTError, OSError) as exc:
        return EntryResult(entry.name, entry.label, None, False,
                           error=f"{type(exc).__name__}: {exc}", seconds=time.perf_counter() - t0)
    r = result.report
    verdict = r.vulnerability_found
    error = None
    if result.violations:
        error = "report failed validation: " + "; ".join(str(v) for v in result.violations)
    correct = verdict == (entry.label == "leakage")
    match = None
    if entry.expected_path is not None:
        match = subsequence(entry.expected_path, r.leakage_path)
    return EntryResult(entry.name, entry.label, verdict, correct, tuple(r.leakage_path), match,
                       error, time.perf_counter() - t0)


def run_benchmarks(manifest: BenchmarkManifest, config, mode: str = "divide-and-conquer",
                   workers: Optional[int] = None) -> Metrics:
    if mode not in MODES:
        raise ValueError(f"unknown mode '{mode}'")
    if not manifest.entries:
        raise EmptyBenchmark(f"manifest {manifest.path} has no entries")
    workers = workers or config.workers
    t0 = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda e: run_entry(e, config, mode), manifest.entries))
    else:
        results = [run_entry(e, config, mode) for e in manifest.entries]
    return Metrics.from_entries(mode, results, time.perf_counter() - t0)


def percent(x: float) -> str:
    return f"{100.0 * x:.2f}%"


def emit_metrics(metrics, fmt: str = "json", timings: bool = False) -> str:
    """Render one Metrics or a list of them as canonical JSON or a text table."""
    runs = metrics if isinstance(metrics, (list, tuple)) else [metrics]
    if fmt == "json":
        return json.dumps({"runs": [m.to_json(timings) for m in runs]}, indent=2) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown format '{fmt}'")
    names = [APPROACH.get(m.mode, m.mode) for m in runs]
    width = max([len("Approach")] + [len(n) for n in names])
    lines = [f"{'Approach'.ljust(width)} | Success Rate | False Positive Rate",
             f"{'-' * width}-+-{'-' * 12}-+-{'-' * 19}"]
    for n, m in zip(names, runs):
        lines.append(f"{n.ljust(width)} | {percent(m.success_rate)} | {percent(m.false_positive_rate)}")
    return "\n".join(lines) + "\n"
