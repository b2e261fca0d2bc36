"""Whole-design leakage report: parsing, validation against the DAG, serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .graph import DesignGraph
from .llm.parsing import check_schema, extract_json
from .llm.prompts import formulate_final_prompt

LEAKAGE_TYPES = ("confidentiality", "integrity", "timing_side_channel", "none", "other")

_STR_LIST = {"type": "array", "items": {"type": "string"}}

REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "vulnerability_found": {"type": "boolean"},
        "vulnerable_modules": _STR_LIST,
        "leakage_path": _STR_LIST,
        "leakage_type": {"type": "string"},
        "explanation": {"type": "string"},
        "transformations": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {k: {"type": "string"} for k in ("from_module", "source", "sink", "to_module")},
                "required": ["from_module", "source", "sink", "to_module"],
            },
        },
    },
    "required": ["vulnerability_found"],
}


@dataclass(frozen=True)
class Transformation:
    from_module: str
    source: str
    sink: str
    to_module: str

    def to_json(self) -> dict:
        return {"from_module": self.from_module, "source": self.source,
                "sink": self.sink, "to_module": self.to_module}


@dataclass(frozen=True)
class LeakageReport:
    vulnerability_found: bool
    vulnerable_modules: tuple = ()
    leakage_path: tuple = ()
    leakage_type: str = "none"
    explanation: str = ""
    transformations: tuple = ()  # of Transformation

    def to_json(self) -> dict:
        return {
            "vulnerability_found": self.vulnerability_found,
            "vulnerable_modules": list(self.vulnerable_modules),
            "leakage_path": list(self.leakage_path),
            "leakage_type": self.leakage_type,
            "explanation": self.explanation,
            "transformations": [t.to_json() for t in self.transformations],
        }


def dumps_report(r: LeakageReport) -> str:
    """Canonical text: fixed key order, two-space indent, trailing newline."""
    return json.dumps(r.to_json(), indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class Violation:
    kind: str  # UnknownModule | DisconnectedPath | InconsistentVerdict
    element: str
    detail: str = field(default="", compare=False)

    def __str__(self):
        return f"{self.kind}: {self.element}" + (f" ({self.detail})" if self.detail else "")


def parse_report(raw: str) -> LeakageReport:
    """Parse a reply into a LeakageReport or raise SchemaError.

    A leakage type outside the known vocabulary becomes ``other`` and the
    original wording is kept at the end of the explanation.
    """
    doc = extract_json(raw)
    check_schema(doc, REPORT_SCHEMA, raw)
    ltype = doc.get("leakage_type", "none" if not doc["vulnerability_found"] else "other")
    explanation = doc.get("explanation", "")
    norm = ltype.strip().lower().replace(" ", "_").replace("-", "_")
    if norm not in LEAKAGE_TYPES:
        note = f"(reported leakage type: {ltype})"
        explanation = f"{explanation} {note}" if explanation else note
        norm = "other"
    return LeakageReport(
        vulnerability_found=doc["vulnerability_found"],
        vulnerable_modules=tuple(doc.get("vulnerable_modules", [])),
        leakage_path=tuple(doc.get("leakage_path", [])),
        leakage_type=norm,
        explanation=explanation,
        transformations=tuple(Transformation(t["from_module"], t["source"], t["sink"], t["to_module"])
                              for t in doc.get("transformations", [])),
    )


def validate_report(r: LeakageReport, g: DesignGraph) -> list:
    """Every broken report invariant as a Violation; empty when the report is sound.

    Consecutive path modules must share an edge (either direction) or be
    instantiated by a common parent, since data can move between siblings over
    a net of that parent.
    """
    out = []
    if not r.vulnerability_found:
        if r.vulnerable_modules:
            out.append(Violation("InconsistentVerdict", "vulnerable_modules",
                                 "no vulnerability reported but vulnerable modules listed"))
        if r.leakage_path:
            out.append(Violation("InconsistentVerdict", "leakage_path",
                                 "no vulnerability reported but a leakage path is given"))
        if r.transformations:
            out.append(Violation("InconsistentVerdict", "transformations",
                                 "no vulnerability reported but transformations listed"))
        if r.leakage_type != "none":
            out.append(Violation("InconsistentVerdict", "leakage_type",
                                 f"expected 'none', got '{r.leakage_type}'"))
    else:
        if not r.leakage_path:
            out.append(Violation("InconsistentVerdict", "leakage_path",
                                 "vulnerability reported without a leakage path"))
        if r.leakage_type == "none":
            out.append(Violation("InconsistentVerdict", "leakage_type",
                                 "vulnerability reported with leakage type 'none'"))
    seen = set()

    def known(name, where):
        if name not in g and (name, where) not in seen:
            seen.add((name, where))
            out.append(Violation("UnknownModule", name, f"in {where}"))

    for m in r.vulnerable_modules:
        known(m, "vulnerable_modules")
    for m in r.leakage_path:
        known(m, "leakage_path")
    for t in r.transformations:
        known(t.from_module, "transformations")
        known(t.to_module, "transformations")
    path = r.leakage_path
    for a, b in zip(path, path[1:]):
        if a not in g or b not in g or a == b:
            continue
        if not (g.connected(a, b) or g.siblings(a, b)):
            out.append(Violation("DisconnectedPath", f"{a} -> {b}",
                                 "no instantiation edge or common parent"))
    return out


__all__ = [
    "LEAKAGE_TYPES", "LeakageReport", "REPORT_SCHEMA", "Transformation", "Violation",
    "dumps_report", "formulate_final_prompt", "parse_report", "validate_report",
]
