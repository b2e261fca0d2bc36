"""Module-by-module analysis in schedule order, followed by the design verdict."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

from ..errors import BackendError, PipelineError, SchemaError
from ..graph import DesignGraph, Schedule, build_graph, topo_sort
from ..report import LeakageReport, parse_report, validate_report
from ..rtl.unit import SourceUnit, resolve_hierarchy
from .model import AnalysisContext, ModuleStats, PromptBundle
from .parsing import parse_finding
from .prompts import (Templates, default_templates, formulate_final_prompt, formulate_module_prompt,
                      formulate_monolithic_prompt, repair_prompt)

log = logging.getLogger(__name__)

MODES = ("divide-and-conquer", "monolithic")


def ask(backend, bundle: PromptBundle, parse, templates: Optional[Templates] = None):
    """Send ``bundle``; on a schema failure send one repair prompt.

    Returns ``(parsed, reply_chars, prompt_chars, attempts)``. A second schema
    failure, or any backend failure, raises PipelineError naming the subject.
    """
    try:
        reply = backend.complete(bundle)
    except BackendError as exc:
        raise PipelineError(bundle.subject, exc) from exc
    prompt_chars = bundle.chars()
    try:
        return parse(reply), len(reply), prompt_chars, 1
    except SchemaError as exc:
        log.warning("%s: reply rejected (%s); sending repair prompt", bundle.subject, exc.reason)
        fix = repair_prompt(bundle, reply, exc.reason, templates)
    try:
        reply2 = backend.complete(fix)
    except BackendError as exc:
        raise PipelineError(bundle.subject, exc) from exc
    try:
        return parse(reply2), len(reply) + len(reply2), prompt_chars + fix.chars(), 2
    except SchemaError as exc:
        raise PipelineError(bundle.subject, exc) from exc


def run_pipeline(unit: SourceUnit, g: DesignGraph, schedule: Schedule, seeds, backend,
                 ctx0: Optional[AnalysisContext] = None,
                 templates: Optional[Templates] = None) -> AnalysisContext:
    """Analyze every module of ``schedule`` in order, accumulating findings."""
    templates = templates or default_templates()
    ctx = ctx0.copy() if ctx0 is not None else AnalysisContext()
    seeds = tuple(seeds)
    for m in schedule.order:
        if ctx.finding(m) is not None:
            continue
        decl = unit.module(m)
        bundle = formulate_module_prompt(m, ctx, g, decl, schedule, templates, seeds)
        t0 = time.perf_counter()
        finding, reply_chars, prompt_chars, attempts = ask(
            backend, bundle, lambda raw: parse_finding(raw, m, decl.signal_names), templates)
        ctx.add(finding)
        ctx.stats.append(ModuleStats(m, time.perf_counter() - t0, prompt_chars, reply_chars, attempts))
    return ctx


@dataclass
class AnalysisResult:
    report: LeakageReport
    violations: list
    context: Optional[AnalysisContext] = None
    graph: Optional[DesignGraph] = None
    schedule: Optional[Schedule] = None
    stats: list = field(default_factory=list)


def analyze(unit: SourceUnit, seeds, backend, techniques=(), budget: int = 24000,
            mode: str = "divide-and-conquer", templates: Optional[Templates] = None,
            g: Optional[DesignGraph] = None, schedule: Optional[Schedule] = None) -> AnalysisResult:
    """Full run on one design: findings per module then the report, validated."""
    if mode not in MODES:
        raise ValueError(f"unknown mode '{mode}'")
    templates = templates or default_templates()
    g = g if g is not None else build_graph(resolve_hierarchy(unit), unit.module_names)
    schedule = schedule or topo_sort(g)
    seeds = tuple(seeds)
    if mode == "monolithic":
        bundle = formulate_monolithic_prompt(unit, list(techniques), templates, seeds)
        t0 = time.perf_counter()
        report, reply_chars, prompt_chars, attempts = ask(backend, bundle, parse_report, templates)
        stats = [ModuleStats(bundle.subject, time.perf_counter() - t0, prompt_chars, reply_chars, attempts)]
        return AnalysisResult(report, validate_report(report, g), None, g, schedule, stats)
    ctx = run_pipeline(unit, g, schedule, seeds, backend,
                       AnalysisContext(techniques=list(techniques), budget=budget), templates)
    bundle = formulate_final_prompt(ctx, g, schedule, templates, seeds, unit.top)
    t0 = time.perf_counter()
    report, reply_chars, prompt_chars, attempts = ask(backend, bundle, parse_report, templates)
    stats = list(ctx.stats) + [
        ModuleStats("(report)", time.perf_counter() - t0, prompt_chars, reply_chars, attempts)]
    return AnalysisResult(report, validate_report(report, g), ctx, g, schedule, stats)
