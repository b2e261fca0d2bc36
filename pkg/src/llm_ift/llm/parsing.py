"""Recover structured JSON from free-form model replies."""
from __future__ import annotations

import json
from typing import Optional

import jsonschema

from ..errors import SchemaError
from .model import Flow, ModuleFinding

_STR_LIST = {"type": "array", "items": {"type": "string"}}

FINDING_SCHEMA = {
    "type": "object",
    "properties": {
        "sensitive_sources": _STR_LIST,
        "influenced_assets": _STR_LIST,
        "transformations": _STR_LIST,
        "flows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "source": {"type": "string", "pattern": "\\S"},
                    "sink": {"type": "string", "pattern": "\\S"},
                    "scope": {"enum": ["internal", "external"]},
                },
                "required": ["source", "sink"],
            },
        },
    },
}


def _balanced_end(text: str, start: int) -> int:
    """Index just past the object opening at ``start``, or -1 if it never closes."""
    depth = 0
    in_str = False
    esc = False
    for i in range(start, len(text)):
        c = text[i]
        if in_str:
            if esc:
                esc = False
            elif c == "\\":
                esc = True
            elif c == '"':
                in_str = False
        elif c == '"':
            in_str = True
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return -1


def extract_json(raw: str) -> dict:
    """Return the first balanced ``{...}`` in ``raw`` that decodes as a JSON object.

    Prose and code fences around the object are ignored. Raises SchemaError when
    nothing decodes.
    """
    if not isinstance(raw, str):
        raise SchemaError("reply is not text", raw)
    pos = raw.find("{")
    while pos != -1:
        end = _balanced_end(raw, pos)
        if end == -1:
            break
        try:
            doc = json.loads(raw[pos:end])
        except ValueError:
            pos = raw.find("{", pos + 1)
            continue
        return doc
    raise SchemaError("no JSON object found in reply", raw)


def check_schema(doc: dict, schema: dict, raw: str):
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.path), e.message))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.path) or "<root>"
        raise SchemaError(f"{where}: {err.message}", raw)


def _declared_case(name: str, folded: dict) -> str:
    return folded.get(name.lower(), name)


def parse_finding(raw: str, module: str, declared: Optional[list] = None) -> ModuleFinding:
    """Parse a reply into a ModuleFinding or raise SchemaError.

    ``declared`` lists the module's signal names; plain signal names that match
    one of them case-insensitively (and unambiguously) are rewritten to the
    declared spelling.
    """
    doc = extract_json(raw)
    check_schema(doc, FINDING_SCHEMA, raw)
    folded = {}
    if declared:
        counts = {}
        for n in declared:
            counts[n.lower()] = counts.get(n.lower(), 0) + 1
        folded = {n.lower(): n for n in declared if counts[n.lower()] == 1}
    norm = lambda s: _declared_case(s.strip(), folded)
    flows = tuple(
        Flow(norm(f["source"]), norm(f["sink"]), f.get("scope", "internal"))
        for f in doc.get("flows", [])
    )
    return ModuleFinding(
        module=module,
        sensitive_sources=tuple(norm(s) for s in doc.get("sensitive_sources", [])),
        influenced_assets=tuple(norm(s) for s in doc.get("influenced_assets", [])),
        transformations=tuple(doc.get("transformations", [])),
        flows=flows,
    )
