"""Prompt construction from the text templates shipped in ``data/templates``."""
from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Optional

from ..errors import ConfigError, IncompleteContext, MissingAncestorFinding
from ..graph import DesignGraph, Schedule, adjacency_summary, ancestors, dependents, topo_sort
from .model import AnalysisContext, PromptBundle, Technique

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
TEMPLATE_DIR = DATA_DIR / "templates"
TECHNIQUE_DIR = DATA_DIR / "techniques"
TECHNIQUE_NAMES = ("net-level", "gate-level")

FINDING_SHAPE = {
    "sensitive_sources": ["<signal>"],
    "influenced_assets": ["<signal>"],
    "transformations": ["<description of logic applied to sensitive data>"],
    "flows": [{"source": "<signal>", "sink": "<signal>", "scope": "internal | external"}],
}
REPORT_SHAPE = {
    "vulnerability_found": "<true | false>",
    "vulnerable_modules": ["<module>"],
    "leakage_path": ["<module>"],
    "leakage_type": "confidentiality | integrity | timing_side_channel | none | other",
    "explanation": "<text>",
    "transformations": [{"from_module": "<module>", "source": "<signal>", "sink": "<signal>",
                         "to_module": "<module>"}],
}

_PLACEHOLDER = re.compile(r"\{\{\s*([a-z_]+)\s*\}\}")


def render(template: str, values: dict) -> str:
    """Substitute ``{{name}}`` placeholders in one pass; unknown names are an error."""
    def sub(m):
        key = m.group(1)
        if key not in values:
            raise ConfigError(f"template placeholder '{{{{{key}}}}}' has no value")
        return values[key]
    return _PLACEHOLDER.sub(sub, template)


class Templates:
    """Template texts loaded from a directory (``<name>.txt``)."""

    NAMES = ("system", "module", "final", "monolithic", "repair")

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory else TEMPLATE_DIR
        if not self.directory.is_dir():
            raise ConfigError(f"prompt directory not found: {self.directory}")
        self._cache = {}

    def get(self, name: str) -> str:
        if name not in self._cache:
            path = self.directory / f"{name}.txt"
            if not path.is_file():
                # fall back to the bundled copy so partial overrides work
                path = TEMPLATE_DIR / f"{name}.txt"
            self._cache[name] = path.read_text(encoding="utf-8").rstrip("\n")
        return self._cache[name]


_default_templates = None


def default_templates() -> Templates:
    global _default_templates
    if _default_templates is None:
        _default_templates = Templates()
    return _default_templates


def load_techniques(names=TECHNIQUE_NAMES, directory=None) -> list:
    directory = Path(directory) if directory else TECHNIQUE_DIR
    out = []
    for n in names:
        path = directory / f"{n}.txt"
        if not path.is_file():
            path = TECHNIQUE_DIR / f"{n}.txt"
        if not path.is_file():
            raise ConfigError(f"unknown technique '{n}'")
        out.append(Technique(n, path.read_text(encoding="utf-8").strip()))
    return out


def format_techniques(techniques) -> str:
    if not techniques:
        return "(none)"
    return "\n\n".join(f"{t.name}: {t.definition}" for t in techniques)


def format_assets(seeds) -> str:
    if not seeds:
        return "(none designated)"
    return "\n".join(f"- {s.module}.{s.signal} (asset tag '{s.label}')" for s in seeds)


def format_names(names) -> str:
    return ", ".join(names) if names else "(none)"


def overview(g: DesignGraph, schedule: Schedule) -> str:
    return ("Modules in analysis order: " + format_names(schedule.order)
            + "\nAdjacency (module -> modules that depend on it):\n"
            + adjacency_summary(g, schedule))


def serialize_findings(findings, budget: int) -> str:
    """Findings oldest first, one per entry, dropping the oldest to fit ``budget``."""
    entries = [f"- {f.module}: {f.dumps(with_module=False)}" for f in findings]
    kept = list(entries)
    elided = 0

    def text():
        body = "\n".join(kept)
        if elided:
            body = f"[elided {elided} findings]" + ("\n" + body if body else "")
        return body

    while kept and len(text()) > budget:
        kept.pop(0)
        elided += 1
    if not entries:
        return "(none)"
    return text()


def schema_text(kind: str) -> str:
    return json.dumps(FINDING_SHAPE if kind == "finding" else REPORT_SHAPE, indent=2)


def formulate_module_prompt(m: str, ctx: AnalysisContext, g: DesignGraph, decl,
                            schedule: Optional[Schedule] = None,
                            templates: Optional[Templates] = None, seeds=()) -> PromptBundle:
    """Build the analysis prompt for module ``m``.

    The design overview is included only for the first module (empty context).
    Raises MissingAncestorFinding when an ancestor has not been analyzed yet.
    """
    schedule = schedule or topo_sort(g)
    templates = templates or default_templates()
    anc = ancestors(g, m, schedule)
    done = set(ctx.modules())
    missing = [a for a in anc if a not in done]
    if missing:
        raise MissingAncestorFinding(m, missing)
    prior = [f for f in ctx.findings if f.module in set(anc)]
    first = not ctx.findings
    values = {
        "overview": overview(g, schedule) if first else "(given with the first module)",
        "module_name": m,
        "module_source": decl.source_text.strip("\n"),
        "ancestors": format_names(anc),
        "dependents": format_names(dependents(g, m, schedule)),
        "assets": format_assets(seeds),
        "techniques": format_techniques(ctx.techniques),
        "context": serialize_findings(prior, ctx.budget),
        "schema": schema_text("finding"),
    }
    return PromptBundle(templates.get("system"), render(templates.get("module"), values),
                        "finding", subject=m)


def formulate_final_prompt(ctx: AnalysisContext, g: DesignGraph, schedule: Optional[Schedule] = None,
                           templates: Optional[Templates] = None, seeds=(),
                           top: Optional[str] = None) -> PromptBundle:
    """Build the whole-design assessment prompt; every module needs a finding."""
    schedule = schedule or topo_sort(g)
    templates = templates or default_templates()
    done = set(ctx.modules())
    missing = [n for n in schedule.order if n not in done]
    if missing:
        raise IncompleteContext(missing)
    top = top or (schedule.order[-1] if schedule.order else "")
    ordered = [ctx.finding(n) for n in schedule.order]
    values = {
        "overview": overview(g, schedule),
        "assets": format_assets(seeds),
        "techniques": format_techniques(ctx.techniques),
        "context": serialize_findings(ordered, ctx.budget),
        "top": top,
        "schema": schema_text("report"),
    }
    return PromptBundle(templates.get("system"), render(templates.get("final"), values),
                        "report", subject=top)


def formulate_monolithic_prompt(unit, techniques, templates: Optional[Templates] = None,
                                seeds=()) -> PromptBundle:
    """One prompt with every module's source concatenated in file order."""
    templates = templates or default_templates()
    source = "\n\n".join(m.source_text.strip("\n") for m in unit.modules)
    values = {
        "design_source": source,
        "assets": format_assets(seeds),
        "techniques": format_techniques(techniques),
        "top": unit.top or "",
        "schema": schema_text("report"),
    }
    return PromptBundle(templates.get("system"), render(templates.get("monolithic"), values),
                        "report", subject=unit.top or "")


def repair_prompt(original: PromptBundle, previous_reply: str, error: str,
                  templates: Optional[Templates] = None) -> PromptBundle:
    templates = templates or default_templates()
    values = {
        "schema_name": original.expected_schema,
        "error": error,
        "previous_reply": previous_reply,
        "original_prompt": original.user_text,
    }
    return PromptBundle(original.system_text, render(templates.get("repair"), values),
                        original.expected_schema, subject=original.subject)

