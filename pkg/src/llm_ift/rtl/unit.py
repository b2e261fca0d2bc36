"""Multi-file design units and instance resolution."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import IFTError, ParseError
from . import ast as A
from .parser import Diagnostic, normalize_instance, parse_source


@dataclass
class SourceUnit:
    files: list  # [(path, text)]
    modules: list  # [ModuleDecl] in file then declaration order
    top: Optional[str] = None
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        self._by_name = {m.name: m for m in self.modules}

    def module(self, name: str) -> A.ModuleDecl:
        return self._by_name[name]

    def __contains__(self, name) -> bool:
        return name in self._by_name

    @property
    def module_names(self) -> list:
        return [m.name for m in self.modules]

    def blackboxes(self) -> list:
        """Instantiated module names with no definition, in first-use order."""
        out = []
        for m in self.modules:
            for inst in m.instances:
                if inst.module_name not in self._by_name and inst.module_name not in out:
                    out.append(inst.module_name)
        return out

    def roots(self) -> list:
        used = {inst.module_name for m in self.modules for inst in m.instances}
        return [m.name for m in self.modules if m.name not in used]

    def errors(self) -> list:
        return [d for d in self.diagnostics if d.severity == "error"]


class AmbiguousTop(IFTError):
    pass


def build_unit(files, top: Optional[str] = None) -> SourceUnit:
    """Parse ``files`` (``[(path, text)]``) into a resolved unit.

    Raises ParseError/UnsupportedConstruct from the parser; duplicate module
    names across files are parse errors too.
    """
    diagnostics: list = []
    modules = []
    where = {}
    for path, text in files:
        for m in parse_source(text, path, diagnostics):
            if m.name in where:
                raise ParseError(
                    f"module '{m.name}' already defined in {where[m.name]}", path, m.line, 1
                )
            where[m.name] = path
            modules.append(m)
    lookup = {m.name: m for m in modules}
    resolved = []
    for m in modules:
        insts = []
        for inst in m.instances:
            target = lookup.get(inst.module_name)
            if target is not None and inst.positional:
                inst = normalize_instance(inst, target, m, diagnostics)
            if target is not None:
                for c in inst.connections:
                    if c.formal is not None and target.port(c.formal) is None:
                        loc = inst.loc or A.Loc(0, 0)
                        diagnostics.append(Diagnostic(
                            m.path, loc.line, loc.col, "error",
                            f"instance '{inst.instance_name}' connects unknown port "
                            f"'{c.formal}' of module '{target.name}'",
                        ))
            elif inst.positional:
                loc = inst.loc or A.Loc(0, 0)
                diagnostics.append(Diagnostic(
                    m.path, loc.line, loc.col, "warning",
                    f"positional connections of '{inst.instance_name}' kept unresolved "
                    f"(module '{inst.module_name}' not found)",
                ))
            insts.append(inst)
        resolved.append(dataclasses.replace(m, instances=tuple(insts)))
    unit = SourceUnit(list(files), resolved, None, diagnostics)
    for m in unit.modules:
        for inst in m.instances:
            if inst.module_name not in unit:
                loc = inst.loc or A.Loc(0, 0)
                diagnostics.append(Diagnostic(
                    m.path, loc.line, loc.col, "warning",
                    f"module '{inst.module_name}' (instance '{inst.instance_name}') "
                    f"not found; treated as a black box",
                ))
    if top is not None:
        if top not in unit:
            raise AmbiguousTop(f"top module '{top}' not found")
        unit.top = top
    else:
        roots = unit.roots()
        if len(roots) == 1:
            unit.top = roots[0]
    return unit


def load_unit(paths, top: Optional[str] = None) -> SourceUnit:
    files = []
    for p in paths:
        p = Path(p)
        files.append((str(p), p.read_text(encoding="utf-8")))
    return build_unit(files, top)


def require_top(unit: SourceUnit) -> str:
    if unit.top is not None:
        return unit.top
    roots = unit.roots()
    if not roots:
        raise AmbiguousTop("no top-level module found")
    raise AmbiguousTop("ambiguous top module; candidates: " + ", ".join(roots) + " (use --top)")


def resolve_hierarchy(unit: SourceUnit) -> list:
    """``(parent, child, instance)`` for every instance whose target is defined.

    Ordering follows file order, then declaration order. Black-box instances are
    skipped (they are reported in ``unit.diagnostics``).
    """
    out = []
    for m in unit.modules:
        for inst in m.instances:
            if inst.module_name in unit:
                out.append((m.name, inst.module_name, inst.instance_name))
    return out
